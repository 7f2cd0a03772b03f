//! Three-stage pipeline orchestration (decompose → tune → train/evaluate)
//! and the six-model benchmark, plus the CLI and file emitters around them.

pub mod cli;
pub mod config;
pub mod render;
pub mod report;

pub use config::{DataSource, PipelineConfig, ProposedModel};

use std::path::PathBuf;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::data::{self, DataError, Dataset};
use crate::metrics::{self, CorrelationMatrix, MetricsError, MetricsRow};
use crate::pso::{self, EvalRecord, PsoError, PsoResult, SearchSpace};
use crate::regressors::baselines::BaselineConfig;
use crate::regressors::bilstm::{BilstmConfig, BilstmRegressor, SeqLayout};
use crate::regressors::gbt::{GbtConfig, GbtModel};
use crate::regressors::model_io::SavedModel;
use crate::regressors::{ModelError, Regressor};
use crate::seeds;
use crate::vmd::{self, VmdError};
use config::fnv64;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("data stage: {source}")]
    Data {
        #[from]
        source: DataError,
    },
    #[error("decomposition stage: {source}")]
    Vmd {
        #[from]
        source: VmdError,
    },
    #[error("tuning stage: {source}")]
    Pso {
        #[from]
        source: PsoError,
    },
    #[error("model stage: {source}")]
    Model {
        #[from]
        source: ModelError,
    },
    #[error("metrics stage: {source}")]
    Metrics {
        #[from]
        source: MetricsError,
    },
    #[error("model io: {source}")]
    ModelIo {
        #[from]
        source: crate::regressors::model_io::ModelIoError,
    },
    #[error("failed to write `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("report: {0}")]
    Report(String),
    #[error("render: {0}")]
    Render(String),
}

/// One model's line in the benchmark report.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub model: String,
    /// Metrics, or the failure reason for this model.
    pub outcome: Result<MetricsRow, String>,
    pub wall: Duration,
}

/// The benchmark result set plus its reproducibility metadata.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    pub seed: u64,
    pub train_size: usize,
    pub validation_size: usize,
    pub split_digest: String,
    pub config_digest: String,
}

/// Output of the full decompose → tune → train pipeline.
#[derive(Debug, Clone)]
pub struct ProposedRun {
    pub label: &'static str,
    pub model: SavedModel,
    pub pso: PsoResult,
    pub records: Vec<EvalRecord>,
    pub metrics: MetricsRow,
}

/// Everything `benchmark` needs to emit its files.
#[derive(Debug)]
pub struct BenchmarkOutcome {
    pub report: EvalReport,
    /// The trained proposed model, absent when its row failed.
    pub proposed: Option<ProposedRun>,
    pub correlation: Result<CorrelationMatrix, MetricsError>,
}

/// Train and validation feature rows, in that order.
type SplitRows = (Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Shared front of every pipeline run: load, correlate, standardize,
/// split.
struct Prepared {
    standardized: Dataset,
    correlation: Result<CorrelationMatrix, MetricsError>,
    train_idx: Vec<usize>,
    val_idx: Vec<usize>,
    raw_train: Vec<Vec<f64>>,
    raw_val: Vec<Vec<f64>>,
    y_train: Vec<f64>,
    y_val: Vec<f64>,
    split_digest: String,
}

fn load_source(cfg: &PipelineConfig) -> Result<Dataset, DataError> {
    match &cfg.source {
        DataSource::Path(p) => data::load_csv(p),
        DataSource::Embedded => Ok(data::embedded_sample()),
        DataSource::Synthetic(n) => data::synthesize(*n, seeds::derive(cfg.seed, "pipeline/data")),
    }
}

fn prepare(cfg: &PipelineConfig) -> Result<Prepared, PipelineError> {
    cfg.validate()?;
    let ds = load_source(cfg)?;
    log::info!("loaded {} rows", ds.row_count());
    if ds.targets().is_none() {
        return Err(DataError::Argument("dataset has no answer_quality column".into()).into());
    }
    let correlation = metrics::correlation_matrix(&ds);
    let (standardized, _) = data::standardize(&ds)?;
    let split = data::split(
        &ds,
        cfg.split_fraction,
        seeds::derive(cfg.seed, "pipeline/split"),
    )?;
    if split.adjusted {
        log::warn!(
            "split fraction {} adjusted to keep both sides non-empty",
            cfg.split_fraction
        );
    }
    let mut digest_text = String::from("train:");
    for i in &split.train {
        digest_text.push_str(&format!("{i},"));
    }
    digest_text.push_str("val:");
    for i in &split.validation {
        digest_text.push_str(&format!("{i},"));
    }
    let targets = ds.targets().expect("checked above");
    let rows = standardized.feature_rows();
    let pick_rows = |idx: &[usize]| idx.iter().map(|&i| rows[i].clone()).collect::<Vec<_>>();
    let pick_y = |idx: &[usize]| idx.iter().map(|&i| targets[i]).collect::<Vec<_>>();
    log::info!(
        "split: {} train / {} validation rows",
        split.train.len(),
        split.validation.len()
    );
    Ok(Prepared {
        raw_train: pick_rows(&split.train),
        raw_val: pick_rows(&split.validation),
        y_train: pick_y(&split.train),
        y_val: pick_y(&split.validation),
        split_digest: format!("{:016x}", fnv64(digest_text.as_bytes())),
        train_idx: split.train,
        val_idx: split.validation,
        standardized,
        correlation,
    })
}

/// VMD-expands the standardized columns and splits the result with the
/// already-fixed indices.
fn expand_split(cfg: &PipelineConfig, prep: &Prepared) -> Result<SplitRows, PipelineError> {
    let expanded = vmd::expand_features(&prep.standardized, &cfg.vmd)?;
    log::info!(
        "expanded 7 features into {} mode columns",
        expanded.column_names().len()
    );
    let rows = expanded.rows();
    Ok((
        prep.train_idx.iter().map(|&i| rows[i].clone()).collect(),
        prep.val_idx.iter().map(|&i| rows[i].clone()).collect(),
    ))
}

/// Search box for the chosen model; the hidden-unit dimension honors the
/// configured cap.
fn search_space_for(cfg: &PipelineConfig) -> SearchSpace {
    match cfg.model {
        ProposedModel::Bilstm => {
            let mut space = pso::bilstm_search_space();
            space.upper[2] = cfg.max_hidden_units as f64;
            space
        }
        ProposedModel::Gbt => pso::gbt_search_space(),
    }
}

/// Epoch after which the learning rate drops: the reference schedule's
/// 350-of-500 point, kept proportional for shorter budgets.
fn drop_epoch(epochs: usize) -> usize {
    ((epochs * 7) / 10).max(1)
}

/// Trains the proposed model at one hyperparameter position and predicts
/// the validation rows.
fn fit_predict_proposed(
    model: ProposedModel,
    pos: &[f64],
    seed: u64,
    epochs: usize,
    x_train: &[Vec<f64>],
    y_train: &[f64],
    x_val: &[Vec<f64>],
) -> Result<(Vec<f64>, SavedModel), ModelError> {
    match model {
        ProposedModel::Bilstm => {
            let cfg = BilstmConfig {
                hidden_units: pos[2].round() as usize,
                initial_lr: pos[1],
                l2_coefficient: pos[0],
                max_epochs: epochs,
                lr_drop_epoch: drop_epoch(epochs),
                seq_layout: SeqLayout::PerFeatureSteps,
                seed,
                ..BilstmConfig::default()
            };
            let mut m = BilstmRegressor::new(cfg);
            m.fit(x_train, y_train)?;
            let preds = m.predict(x_val)?;
            Ok((preds, SavedModel::Bilstm(m)))
        }
        ProposedModel::Gbt => {
            let cfg = GbtConfig {
                learning_rate: pos[0],
                max_depth: pos[1].round() as usize,
                leaf_l2: pos[2],
                seed,
                ..GbtConfig::default()
            };
            let mut m = GbtModel::new(cfg);
            m.fit(x_train, y_train)?;
            let preds = m.predict(x_val)?;
            Ok((preds, SavedModel::Gbt(m)))
        }
    }
}

/// PSO over the model's hyperparameters, maximizing validation R².
fn tune_hyperparameters(
    cfg: &PipelineConfig,
    x_train: &[Vec<f64>],
    y_train: &[f64],
    x_val: &[Vec<f64>],
    y_val: &[f64],
) -> Result<(PsoResult, Vec<EvalRecord>), PipelineError> {
    let space = search_space_for(cfg);
    let fitness = |pos: &[f64], eval_seed: u64| -> Option<f64> {
        let (preds, _) = fit_predict_proposed(
            cfg.model,
            pos,
            eval_seed,
            cfg.tuning_epochs,
            x_train,
            y_train,
            x_val,
        )
        .ok()?;
        metrics::regression_metrics_partial(y_val, &preds).ok()?.r2
    };
    let (result, records) = pso::optimize_recorded(
        &space,
        fitness,
        &cfg.swarm,
        seeds::derive(cfg.seed, "pipeline/pso"),
    )?;
    log::info!(
        "tuning done: best validation R² {:.4} at {:?}",
        result.best_fitness,
        result.best_position
    );
    Ok((result, records))
}

/// Runs decompose → tune → final train → evaluate for the proposed model.
pub fn run_full_pipeline(cfg: &PipelineConfig) -> Result<ProposedRun, PipelineError> {
    let prepared = prepare(cfg)?;
    proposed_run(cfg, &prepared)
}

fn proposed_run(cfg: &PipelineConfig, prepared: &Prepared) -> Result<ProposedRun, PipelineError> {
    let (x_train, x_val) = expand_split(cfg, prepared)?;
    let (pso_result, records) =
        tune_hyperparameters(cfg, &x_train, &prepared.y_train, &x_val, &prepared.y_val)?;
    let (preds, model) = fit_predict_proposed(
        cfg.model,
        &pso_result.best_position,
        seeds::derive(cfg.seed, "pipeline/final-model"),
        cfg.final_epochs,
        &x_train,
        &prepared.y_train,
        &x_val,
    )?;
    let metrics_row = metrics::regression_metrics(&prepared.y_val, &preds)?;
    Ok(ProposedRun {
        label: cfg.model.label(),
        model,
        pso: pso_result,
        records,
        metrics: metrics_row,
    })
}

fn baseline_label(cfg: &BaselineConfig) -> &'static str {
    match cfg {
        BaselineConfig::DecisionTree { .. } => "DecisionTrees",
        BaselineConfig::AdaBoostR2 { .. } => "AdaBoost",
        BaselineConfig::Gbdt => "GBDT",
        BaselineConfig::ExtraTrees { .. } => "ExtraTrees",
        BaselineConfig::Knn { .. } => "KNN",
    }
}

fn baseline_row(
    bcfg: &BaselineConfig,
    x_train: &[Vec<f64>],
    y_train: &[f64],
    x_val: &[Vec<f64>],
    y_val: &[f64],
) -> ReportRow {
    let start = Instant::now();
    let outcome = (|| -> Result<MetricsRow, String> {
        let mut model = bcfg.build().map_err(|e| e.to_string())?;
        model.fit(x_train, y_train).map_err(|e| e.to_string())?;
        let preds = model.predict(x_val).map_err(|e| e.to_string())?;
        metrics::regression_metrics(y_val, &preds).map_err(|e| e.to_string())
    })();
    if let Err(reason) = &outcome {
        log::warn!("{} failed: {reason}", baseline_label(bcfg));
    }
    ReportRow {
        model: baseline_label(bcfg).to_string(),
        outcome,
        wall: start.elapsed(),
    }
}

/// Six-model benchmark with the default baselines.
pub fn run_benchmark(cfg: &PipelineConfig) -> Result<BenchmarkOutcome, PipelineError> {
    run_benchmark_with(
        cfg,
        &BaselineConfig::all_default(seeds::derive(cfg.seed, "pipeline/baselines")),
    )
}

/// Benchmark with caller-chosen baselines (used for ablations and
/// failure-path tests). Baselines see the standardized 7 features (or the
/// expanded ones when configured); the proposed model always sees the
/// expanded features. Every model shares one split.
pub fn run_benchmark_with(
    cfg: &PipelineConfig,
    baseline_cfgs: &[BaselineConfig],
) -> Result<BenchmarkOutcome, PipelineError> {
    let prepared = prepare(cfg)?;
    let expanded = if cfg.baselines_on_expanded {
        Some(expand_split(cfg, &prepared)?)
    } else {
        None
    };
    let mut rows = Vec::with_capacity(baseline_cfgs.len() + 1);
    for bcfg in baseline_cfgs {
        let (x_train, x_val) = match &expanded {
            Some((t, v)) => (t, v),
            None => (&prepared.raw_train, &prepared.raw_val),
        };
        rows.push(baseline_row(
            bcfg,
            x_train,
            &prepared.y_train,
            x_val,
            &prepared.y_val,
        ));
    }

    let start = Instant::now();
    let proposed = match proposed_run(cfg, &prepared) {
        Ok(run) => {
            rows.push(ReportRow {
                model: run.label.to_string(),
                outcome: Ok(run.metrics),
                wall: start.elapsed(),
            });
            Some(run)
        }
        Err(e) => {
            log::warn!("{} failed: {e}", cfg.model.label());
            rows.push(ReportRow {
                model: cfg.model.label().to_string(),
                outcome: Err(e.to_string()),
                wall: start.elapsed(),
            });
            None
        }
    };

    Ok(BenchmarkOutcome {
        report: EvalReport {
            rows,
            seed: cfg.seed,
            train_size: prepared.y_train.len(),
            validation_size: prepared.y_val.len(),
            split_digest: prepared.split_digest,
            config_digest: cfg.digest(),
        },
        proposed,
        correlation: prepared.correlation,
    })
}

/// Load → standardize → expand → split → PSO, without the final retrain;
/// what the `tune` subcommand runs.
pub fn run_tuning(cfg: &PipelineConfig) -> Result<(PsoResult, Vec<EvalRecord>), PipelineError> {
    let prepared = prepare(cfg)?;
    let (x_train, x_val) = expand_split(cfg, &prepared)?;
    tune_hyperparameters(cfg, &x_train, &prepared.y_train, &x_val, &prepared.y_val)
}
