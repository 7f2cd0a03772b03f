//! Pipeline configuration: defaults, the `--fast` preset, and the flat
//! `section.key = value` config-file format.

use std::path::{Path, PathBuf};

use super::PipelineError;
use crate::pso::SwarmConfig;
use crate::vmd::{OmegaInit, VmdConfig};

/// Where the benchmark rows come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataSource {
    Path(PathBuf),
    Embedded,
    Synthetic(usize),
}

/// Which tuned model the pipeline carries through PSO and final training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProposedModel {
    Bilstm,
    Gbt,
}

impl ProposedModel {
    /// Report row label for the full pipeline.
    pub fn label(self) -> &'static str {
        match self {
            ProposedModel::Bilstm => "VMD-PSO-BiLSTM",
            ProposedModel::Gbt => "VMD-PSO-GBT",
        }
    }

    /// Hyperparameter names in search-space dimension order.
    pub fn dim_names(self) -> [&'static str; 3] {
        match self {
            ProposedModel::Bilstm => ["l2_coefficient", "initial_lr", "hidden_units"],
            ProposedModel::Gbt => ["learning_rate", "max_depth", "leaf_l2"],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub source: DataSource,
    pub vmd: VmdConfig,
    pub swarm: SwarmConfig,
    pub model: ProposedModel,
    /// Training fraction of the train/validation split.
    pub split_fraction: f64,
    /// BiLSTM epochs inside each PSO fitness evaluation.
    pub tuning_epochs: usize,
    /// BiLSTM epochs for the final retrain at the best hyperparameters.
    pub final_epochs: usize,
    /// Upper bound of the hidden-unit search dimension.
    pub max_hidden_units: usize,
    /// Ablation switch: feed baselines the VMD-expanded features too.
    pub baselines_on_expanded: bool,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            source: DataSource::Synthetic(500),
            vmd: VmdConfig::default(),
            swarm: SwarmConfig::default(),
            model: ProposedModel::Bilstm,
            split_fraction: 0.8,
            tuning_epochs: 100,
            final_epochs: 500,
            max_hidden_units: 100,
            baselines_on_expanded: false,
            seed: 42,
            out_dir: PathBuf::from("results"),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(PipelineError::Config(format!(
                "split_fraction must lie in (0, 1), got {}",
                self.split_fraction
            )));
        }
        if self.tuning_epochs < 1 || self.final_epochs < 1 {
            return Err(PipelineError::Config(
                "tuning_epochs and final_epochs must be at least 1".into(),
            ));
        }
        if self.tuning_epochs > self.final_epochs {
            return Err(PipelineError::Config(format!(
                "tuning_epochs {} exceeds final_epochs {}",
                self.tuning_epochs, self.final_epochs
            )));
        }
        if self.max_hidden_units < 2 {
            return Err(PipelineError::Config(
                "max_hidden_units must be at least 2".into(),
            ));
        }
        if let DataSource::Synthetic(n) = self.source {
            if n < 10 {
                return Err(PipelineError::Config(format!(
                    "synthetic source needs at least 10 rows, got {n}"
                )));
            }
        }
        self.vmd
            .validate()
            .map_err(|e| PipelineError::Config(format!("vmd: {e}")))?;
        self.swarm
            .validate()
            .map_err(|e| PipelineError::Config(format!("pso: {e}")))?;
        Ok(())
    }

    /// Reduced settings for quick runs: a 6×5 swarm, short training, and a
    /// capped hidden-unit search. Schema and outputs are unchanged.
    ///
    /// Training is full-batch, so epochs are update steps; far below ~60
    /// tuning epochs every fitness value degenerates to the mean predictor
    /// and the search cannot rank candidates. The swarm stays large enough
    /// to reach the narrow small-l2 region where the network learns, and
    /// tuning and final budgets match so the selected hyperparameters
    /// transfer to the final retrain.
    pub fn apply_fast(&mut self) {
        self.swarm.population = 6;
        self.swarm.iterations = 5;
        self.tuning_epochs = 60;
        self.final_epochs = 60;
        self.max_hidden_units = 24;
    }

    /// Applies every `section.key = value` line of a config file.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            PipelineError::Config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                PipelineError::Config(format!(
                    "{}:{}: expected `section.key = value`",
                    path.display(),
                    lineno + 1
                ))
            })?;
            self.apply_key(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Sets one configuration field by its flat key.
    pub fn apply_key(&mut self, key: &str, value: &str) -> Result<(), PipelineError> {
        let bad = |what: &str| {
            PipelineError::Config(format!("config key {key}: invalid {what} `{value}`"))
        };
        match key {
            "data.source" => {
                self.source = match value {
                    "embedded" => DataSource::Embedded,
                    "synthetic" => DataSource::Synthetic(match self.source {
                        DataSource::Synthetic(n) => n,
                        _ => 500,
                    }),
                    other => {
                        return Err(PipelineError::Config(format!(
                            "config key data.source: `{other}` is not embedded|synthetic (use data.path for files)"
                        )))
                    }
                }
            }
            "data.path" => self.source = DataSource::Path(PathBuf::from(value)),
            "data.rows" => {
                self.source = DataSource::Synthetic(value.parse().map_err(|_| bad("count"))?)
            }
            "vmd.alpha" => self.vmd.alpha = value.parse().map_err(|_| bad("number"))?,
            "vmd.tau" => self.vmd.tau = value.parse().map_err(|_| bad("number"))?,
            "vmd.n_modes" => self.vmd.n_modes = value.parse().map_err(|_| bad("count"))?,
            "vmd.dc_component" => {
                self.vmd.dc_component = value.parse().map_err(|_| bad("boolean"))?
            }
            "vmd.tolerance" => self.vmd.tolerance = value.parse().map_err(|_| bad("number"))?,
            "vmd.max_iterations" => {
                self.vmd.max_iterations = value.parse().map_err(|_| bad("count"))?
            }
            "vmd.omega_init" => {
                self.vmd.omega_init = if value == "uniform" {
                    OmegaInit::UniformSpread
                } else if value == "zero" {
                    OmegaInit::Zero
                } else if let Some(seed) = value.strip_prefix("random:") {
                    OmegaInit::Random {
                        seed: seed.parse().map_err(|_| bad("seed"))?,
                    }
                } else {
                    return Err(bad("omega init (uniform|zero|random:<seed>)"));
                }
            }
            "pso.population" => self.swarm.population = value.parse().map_err(|_| bad("count"))?,
            "pso.iterations" => self.swarm.iterations = value.parse().map_err(|_| bad("count"))?,
            "pso.inertia" => self.swarm.inertia = value.parse().map_err(|_| bad("number"))?,
            "pso.cognitive" => self.swarm.cognitive = value.parse().map_err(|_| bad("number"))?,
            "pso.social" => self.swarm.social = value.parse().map_err(|_| bad("number"))?,
            "pso.vmax_fraction" => {
                self.swarm.vmax_fraction = value.parse().map_err(|_| bad("number"))?
            }
            "pipeline.model" => {
                self.model = match value {
                    "bilstm" => ProposedModel::Bilstm,
                    "gbt" => ProposedModel::Gbt,
                    _ => return Err(bad("model (bilstm|gbt)")),
                }
            }
            "pipeline.split_fraction" => {
                self.split_fraction = value.parse().map_err(|_| bad("number"))?
            }
            "pipeline.tuning_epochs" => {
                self.tuning_epochs = value.parse().map_err(|_| bad("count"))?
            }
            "pipeline.final_epochs" => {
                self.final_epochs = value.parse().map_err(|_| bad("count"))?
            }
            "pipeline.max_hidden_units" => {
                self.max_hidden_units = value.parse().map_err(|_| bad("count"))?
            }
            "pipeline.baselines_on_expanded" => {
                self.baselines_on_expanded = value.parse().map_err(|_| bad("boolean"))?
            }
            "pipeline.seed" => self.seed = value.parse().map_err(|_| bad("seed"))?,
            "pipeline.out_dir" => self.out_dir = PathBuf::from(value),
            other => {
                return Err(PipelineError::Config(format!(
                    "unknown config key `{other}`"
                )))
            }
        }
        Ok(())
    }

    /// Canonical flat listing of every field, parseable by
    /// [`PipelineConfig::apply_key`].
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let mut kv: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| kv.push((k.to_string(), v));
        match &self.source {
            DataSource::Embedded => push("data.source", "embedded".into()),
            DataSource::Synthetic(n) => {
                push("data.source", "synthetic".into());
                push("data.rows", n.to_string());
            }
            DataSource::Path(p) => push("data.path", p.display().to_string()),
        }
        push("vmd.alpha", format!("{}", self.vmd.alpha));
        push("vmd.tau", format!("{}", self.vmd.tau));
        push("vmd.n_modes", self.vmd.n_modes.to_string());
        push("vmd.dc_component", self.vmd.dc_component.to_string());
        push("vmd.tolerance", format!("{}", self.vmd.tolerance));
        push("vmd.max_iterations", self.vmd.max_iterations.to_string());
        push(
            "vmd.omega_init",
            match self.vmd.omega_init {
                OmegaInit::UniformSpread => "uniform".into(),
                OmegaInit::Zero => "zero".into(),
                OmegaInit::Random { seed } => format!("random:{seed}"),
            },
        );
        push("pso.population", self.swarm.population.to_string());
        push("pso.iterations", self.swarm.iterations.to_string());
        push("pso.inertia", format!("{}", self.swarm.inertia));
        push("pso.cognitive", format!("{}", self.swarm.cognitive));
        push("pso.social", format!("{}", self.swarm.social));
        push("pso.vmax_fraction", format!("{}", self.swarm.vmax_fraction));
        push(
            "pipeline.model",
            match self.model {
                ProposedModel::Bilstm => "bilstm".into(),
                ProposedModel::Gbt => "gbt".into(),
            },
        );
        push(
            "pipeline.split_fraction",
            format!("{}", self.split_fraction),
        );
        push("pipeline.tuning_epochs", self.tuning_epochs.to_string());
        push("pipeline.final_epochs", self.final_epochs.to_string());
        push(
            "pipeline.max_hidden_units",
            self.max_hidden_units.to_string(),
        );
        push(
            "pipeline.baselines_on_expanded",
            self.baselines_on_expanded.to_string(),
        );
        push("pipeline.seed", self.seed.to_string());
        push("pipeline.out_dir", self.out_dir.display().to_string());
        kv
    }

    /// Stable hex digest over the canonical field listing, for report
    /// metadata.
    pub fn digest(&self) -> String {
        let mut text = String::new();
        for (k, v) in self.to_key_values() {
            text.push_str(&k);
            text.push('=');
            text.push_str(&v);
            text.push('\n');
        }
        format!("{:016x}", fnv64(text.as_bytes()))
    }
}

/// FNV-1a 64-bit over raw bytes; used for config and split digests.
pub(crate) fn fnv64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_digest_is_stable() {
        let cfg = PipelineConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.digest(), cfg.digest());
        let mut other = cfg.clone();
        other.seed = 43;
        assert_ne!(cfg.digest(), other.digest());
    }

    #[test]
    fn fast_preset_shrinks_the_run() {
        let mut cfg = PipelineConfig::default();
        cfg.apply_fast();
        cfg.validate().unwrap();
        assert!(cfg.swarm.population < 10);
        assert!(cfg.swarm.iterations < 15);
        assert!(cfg.tuning_epochs < 100 && cfg.final_epochs < 500);
        assert!(cfg.max_hidden_units < 100);
    }

    #[test]
    fn key_values_round_trip_through_apply_key() {
        let mut cfg = PipelineConfig {
            source: DataSource::Path(PathBuf::from("data/x.csv")),
            model: ProposedModel::Gbt,
            split_fraction: 0.75,
            baselines_on_expanded: true,
            ..PipelineConfig::default()
        };
        cfg.vmd.dc_component = true;
        cfg.vmd.omega_init = OmegaInit::Random { seed: 7 };

        let mut rebuilt = PipelineConfig::default();
        for (k, v) in cfg.to_key_values() {
            rebuilt.apply_key(&k, &v).unwrap();
        }
        assert_eq!(rebuilt, cfg);
    }

    #[test]
    fn config_file_is_parsed_with_comments() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(
            &path,
            "# benchmark tweaks\n\npso.population = 6\nvmd.alpha = 200.5\npipeline.model = gbt\ndata.rows = 50\n",
        )
        .unwrap();
        let mut cfg = PipelineConfig::default();
        cfg.apply_file(&path).unwrap();
        assert_eq!(cfg.swarm.population, 6);
        assert_eq!(cfg.vmd.alpha, 200.5);
        assert_eq!(cfg.model, ProposedModel::Gbt);
        assert_eq!(cfg.source, DataSource::Synthetic(50));
    }

    #[test]
    fn bad_keys_and_values_are_config_errors() {
        let mut cfg = PipelineConfig::default();
        assert!(cfg.apply_key("nope.key", "1").is_err());
        assert!(cfg.apply_key("pso.population", "many").is_err());
        assert!(cfg.apply_key("pipeline.model", "transformer").is_err());

        cfg.split_fraction = 1.0;
        assert!(cfg.validate().is_err());
        cfg.split_fraction = 0.8;
        cfg.tuning_epochs = 900;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn missing_config_file_is_a_config_error() {
        let mut cfg = PipelineConfig::default();
        let err = cfg
            .apply_file(Path::new("/nonexistent/run.conf"))
            .unwrap_err();
        assert!(matches!(err, PipelineError::Config(_)));
    }
}
