//! Run configuration: a single versioned JSON document.
//!
//! Command-line flags (`--seed`, `--out`) override the corresponding
//! config keys, so a config file plus its overrides fully determines a
//! run.

use std::path::PathBuf;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use randcast_core::{
    CsvSchema, DiversityStrategy, ForecastModel, RandNNConfig, SynthParams, WeekdayPairing,
};

use crate::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub data: DataSource,
    /// Text file with one ISO date per line; those dates are dropped from
    /// the series as whole cycles.
    #[serde(default)]
    pub exclusions_path: Option<PathBuf>,
    pub test_start: NaiveDate,
    pub test_end: NaiveDate,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default)]
    pub weekday_pairing: WeekdayPairing,
    pub model: ModelSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub collect_member_forecasts: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Grids for the `sweep` command; ignored by `forecast`.
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

fn default_horizon() -> usize {
    1
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Csv {
        path: PathBuf,
        #[serde(flatten)]
        schema: CsvSchema,
    },
    Synth(SynthSpec),
}

/// Synthetic-series parameters; omitted fields fall back to the library
/// defaults, and an omitted seed falls back to the run seed.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub days: usize,
    #[serde(default)]
    pub start_date: Option<NaiveDate>,
    #[serde(default)]
    pub cycle_len: Option<usize>,
    #[serde(default)]
    pub base_level: Option<f64>,
    #[serde(default)]
    pub weekday_amplitudes: Option<[f64; 7]>,
    #[serde(default)]
    pub daily_shape: Option<Vec<f64>>,
    #[serde(default)]
    pub yearly_amplitude: Option<f64>,
    #[serde(default)]
    pub noise_sd: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl SynthSpec {
    pub fn to_params(&self, default_seed: u64) -> SynthParams {
        let defaults = SynthParams::default();
        SynthParams {
            days: self.days,
            start_date: self.start_date.unwrap_or(defaults.start_date),
            cycle_len: self.cycle_len.unwrap_or(defaults.cycle_len),
            base_level: self.base_level.unwrap_or(defaults.base_level),
            weekday_amplitudes: self
                .weekday_amplitudes
                .unwrap_or(defaults.weekday_amplitudes),
            daily_shape: self.daily_shape.clone(),
            yearly_amplitude: self.yearly_amplitude.unwrap_or(defaults.yearly_amplitude),
            noise_sd: self.noise_sd.unwrap_or(defaults.noise_sd),
            seed: self.seed.unwrap_or(default_seed),
        }
    }
}

/// Model selection: `kind` plus the strategy's diversity parameter.
///
/// Kinds: `naive`, `randomized-params`, `training-subsets`,
/// `feature-subsets`, `node-pruning`, `weight-pruning`, `data-noising`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: String,
    /// Diversity parameter of the chosen strategy; for
    /// `randomized-params` it is the member angle bound and defaults to
    /// `alpha_max`.
    #[serde(default)]
    pub parameter: Option<f64>,
    /// Feature-subset strategy only: keep the template biases instead of
    /// recomputing them on restricted anchors.
    #[serde(default)]
    pub reuse_template_biases: bool,
    #[serde(default = "default_members")]
    pub members: usize,
    #[serde(default = "default_hidden_nodes")]
    pub hidden_nodes: usize,
    /// Template angle bound in degrees.
    #[serde(default = "default_alpha_max")]
    pub alpha_max: f64,
}

fn default_members() -> usize {
    100
}

fn default_hidden_nodes() -> usize {
    40
}

fn default_alpha_max() -> f64 {
    70.0
}

impl ModelSpec {
    pub fn strategy(&self) -> Result<Option<DiversityStrategy>, CliError> {
        let need = |name: &str| {
            self.parameter.ok_or_else(|| {
                CliError::Config(format!("model kind `{}` needs `parameter` ({name})", self.kind))
            })
        };
        let strategy = match self.kind.as_str() {
            "naive" => return Ok(None),
            "randomized-params" => DiversityStrategy::RandomizedParams {
                alpha_max: self.parameter.unwrap_or(self.alpha_max),
            },
            "training-subsets" => DiversityStrategy::TrainingSubsets { eta: need("eta")? },
            "feature-subsets" => DiversityStrategy::FeatureSubsets {
                kappa: need("kappa")?,
                reuse_template_biases: self.reuse_template_biases,
            },
            "node-pruning" => DiversityStrategy::NodePruning { rho: need("rho")? },
            "weight-pruning" => DiversityStrategy::WeightPruning {
                lambda: need("lambda")?,
            },
            "data-noising" => DiversityStrategy::DataNoising {
                sigma: need("sigma")?,
            },
            other => {
                return Err(CliError::Config(format!(
                    "unknown model kind `{other}` (expected naive, randomized-params, \
                     training-subsets, feature-subsets, node-pruning, weight-pruning \
                     or data-noising)"
                )))
            }
        };
        Ok(Some(strategy))
    }

    pub fn to_model(&self, seed: u64) -> Result<ForecastModel, CliError> {
        match self.strategy()? {
            None => Ok(ForecastModel::Naive),
            Some(strategy) => {
                strategy.validate().map_err(CliError::from_core)?;
                Ok(ForecastModel::Ensemble {
                    strategy,
                    members: self.members,
                    base: RandNNConfig::new(self.hidden_nodes, self.alpha_max, seed),
                })
            }
        }
    }
}

/// Grids for the `sweep` command.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Values the strategy's diversity parameter sweeps over.
    pub parameter_values: Vec<f64>,
    /// Optional grid over the hidden node count; defaults to the model's.
    #[serde(default)]
    pub hidden_nodes_values: Option<Vec<usize>>,
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.version != CONFIG_VERSION {
            return Err(CliError::Config(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if self.test_end < self.test_start {
            return Err(CliError::Config(format!(
                "test_end {} precedes test_start {}",
                self.test_end, self.test_start
            )));
        }
        if self.horizon == 0 {
            return Err(CliError::Config("horizon must be at least 1".into()));
        }
        // Surface strategy/parameter problems before any data is touched.
        self.model.to_model(self.seed)?;
        Ok(())
    }
}
