//! Command-line entry point: argument parsing, logging setup, subcommand
//! dispatch, and exit-code mapping.

use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use super::report::format_cell;
use super::{render, report, DataSource, PipelineConfig, PipelineError};
use crate::regressors::model_io::save_model;
use crate::{data, metrics, pso, seeds};

#[derive(Debug, Parser)]
#[command(
    name = "ragq",
    version,
    about = "Benchmark pipeline predicting retrieval answer quality from tabular retrieval features"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Input dataset CSV; overrides the configured data source.
    #[arg(long, global = true, value_name = "FILE")]
    data: Option<PathBuf>,
    /// Output directory (analyze/tune/benchmark) or file (decompose/synth).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Master random seed; every stage derives its own stream from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// `section.key = value` config file, applied before the other flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Reduced swarm and epochs for quick runs; output schema is unchanged.
    #[arg(long, global = true)]
    fast: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the feature/target correlation matrix and render its heatmap.
    Analyze,
    /// VMD-expand a dataset into mode columns and write them as CSV.
    Decompose,
    /// Run the PSO hyperparameter search and print the best position.
    Tune,
    /// Run the six-model benchmark: report CSV, bar charts, heatmap, run log.
    Benchmark,
    /// Write a synthetic dataset CSV.
    Synth {
        /// Number of rows to generate.
        #[arg(long, default_value_t = 500)]
        rows: usize,
    },
}

fn init_logging() {
    let level = std::env::var("RAGQ_LOG").unwrap_or_default();
    let filter = match level.as_str() {
        "" | "error" => "error",
        "info" => "info",
        "debug" => "debug",
        other => {
            eprintln!("notice: RAGQ_LOG=`{other}` is not error|info|debug; using error");
            "error"
        }
    };
    let _ = env_logger::Builder::new()
        .parse_filters(filter)
        .format_timestamp(None)
        .try_init();
}

/// Runs the CLI against the process arguments and returns the exit code:
/// 0 success, 1 usage error, 2 data error, 3 runtime failure.
pub fn run() -> i32 {
    init_logging();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            // Every error display embeds its source chain already.
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &PipelineError) -> i32 {
    match e {
        PipelineError::Config(_) => 1,
        PipelineError::Data { .. } => 2,
        _ => 3,
    }
}

/// Layered configuration: defaults, then the config file, then flags.
fn effective_config(cli: &Cli) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = PipelineConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    if cli.fast {
        cfg.apply_fast();
    }
    if let Some(data) = &cli.data {
        cfg.source = DataSource::Path(data.clone());
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> Result<(), PipelineError> {
    let cfg = effective_config(cli)?;
    match cli.command {
        Command::Analyze => cmd_analyze(&cfg),
        Command::Decompose => cmd_decompose(&cfg, cli.out.as_deref()),
        Command::Tune => cmd_tune(&cfg),
        Command::Benchmark => cmd_benchmark(&cfg),
        Command::Synth { rows } => cmd_synth(&cfg, rows, cli.out.as_deref()),
    }
}

fn ensure_dir(dir: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn cmd_synth(cfg: &PipelineConfig, rows: usize, out: Option<&Path>) -> Result<(), PipelineError> {
    // Same derivation as the pipeline's synthetic source, so `synth`
    // followed by `benchmark --data` matches an in-process synthetic run.
    let ds = data::synthesize(rows, seeds::derive(cfg.seed, "pipeline/data"))?;
    let path = out.unwrap_or(Path::new("synthetic.csv"));
    data::save_csv(&ds, path)?;
    println!("wrote {} rows to {}", ds.row_count(), path.display());
    Ok(())
}

fn cmd_analyze(cfg: &PipelineConfig) -> Result<(), PipelineError> {
    let ds = super::load_source(cfg)?;
    let matrix = metrics::correlation_matrix(&ds)?;
    ensure_dir(&cfg.out_dir)?;
    let svg_path = cfg.out_dir.join("correlation.svg");
    render::render_heatmap(&matrix, &svg_path)?;
    print!("{}", matrix.to_csv_string());
    println!("wrote {}", svg_path.display());
    println!("wrote {}", svg_path.with_extension("csv").display());
    Ok(())
}

fn cmd_decompose(cfg: &PipelineConfig, out: Option<&Path>) -> Result<(), PipelineError> {
    let ds = super::load_source(cfg)?;
    let (standardized, _) = data::standardize(&ds)?;
    let expanded = crate::vmd::expand_features(&standardized, &cfg.vmd)?;
    let path = out.unwrap_or(Path::new("expanded.csv"));
    expanded.save_csv(path)?;
    println!(
        "wrote {} feature columns x {} rows to {}",
        expanded.column_names().len(),
        ds.row_count(),
        path.display()
    );
    Ok(())
}

fn cmd_tune(cfg: &PipelineConfig) -> Result<(), PipelineError> {
    let (result, records) = super::run_tuning(cfg)?;
    ensure_dir(&cfg.out_dir)?;
    let trace_path = cfg.out_dir.join("pso_trace.csv");
    pso::write_eval_log(&records, &cfg.model.dim_names(), &trace_path)?;
    for (name, value) in cfg.model.dim_names().iter().zip(&result.best_position) {
        println!("{name} = {value}");
    }
    println!("best validation R2 = {}", format_cell(result.best_fitness));
    println!("wrote {}", trace_path.display());
    Ok(())
}

fn cmd_benchmark(cfg: &PipelineConfig) -> Result<(), PipelineError> {
    let outcome = super::run_benchmark(cfg)?;
    ensure_dir(&cfg.out_dir)?;
    render::render_bar_charts(&outcome.report, &cfg.out_dir)?;
    match &outcome.correlation {
        Ok(matrix) => render::render_heatmap(matrix, &cfg.out_dir.join("heatmap.svg"))?,
        Err(e) => log::warn!("skipping heatmap: {e}"),
    }
    report::write_run_log(&outcome.report, &cfg.out_dir.join("run_log.txt"))?;
    if let Some(run) = &outcome.proposed {
        save_model(&run.model, &cfg.out_dir.join("model.ragq"))?;
    }

    println!(
        "{:<16}{:>10}{:>10}{:>10}{:>10}{:>10}",
        "Model", "MSE", "RMSE", "MAE", "MAPE", "R2"
    );
    for row in &outcome.report.rows {
        match &row.outcome {
            Ok(m) => println!(
                "{:<16}{:>10}{:>10}{:>10}{:>10}{:>10}",
                row.model,
                format_cell(m.mse),
                format_cell(m.rmse),
                format_cell(m.mae),
                format_cell(m.mape),
                format_cell(m.r2)
            ),
            Err(_) => println!(
                "{:<16}{:>10}{:>10}{:>10}{:>10}{:>10}",
                row.model, "failed", "failed", "failed", "failed", "failed"
            ),
        }
    }
    println!("results in {}", cfg.out_dir.display());
    Ok(())
}
