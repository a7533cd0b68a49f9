//! Experiment configuration files: JSON schema, defaults and validation.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use qst_core::{Model, OptCount, Parameterization, PivotConfig, ScheduleConfig, MIN_GAP};

use crate::CliError;

/// What a config file asks the tool to do; must match the CLI verb.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Build,
    Evolve,
    Spectrum,
    Optimize,
    Schedule,
    Sweep,
    Snapshots,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Build => "build",
            Task::Evolve => "evolve",
            Task::Spectrum => "spectrum",
            Task::Optimize => "optimize",
            Task::Schedule => "schedule",
            Task::Sweep => "sweep",
            Task::Snapshots => "snapshots",
        }
    }

    /// Stochastic tasks require a seed, in the config or on the command line.
    pub fn is_stochastic(self) -> bool {
        matches!(self, Task::Optimize | Task::Schedule | Task::Sweep | Task::Snapshots)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A time given either as a number or as one of the expressions the figures
/// use: `"N"`, `"2*N"`, `"T"`, `"1.5*T"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeExpr {
    Number(f64),
    Expr(String),
}

impl TimeExpr {
    /// Evaluate against the chain length and, when already known, the
    /// arrival time.
    pub fn resolve(&self, n: usize, arrival: Option<f64>) -> Result<f64, CliError> {
        let value = match self {
            TimeExpr::Number(x) => *x,
            TimeExpr::Expr(text) => {
                let text = text.trim();
                let (prefix, base) = if let Some(p) = text.strip_suffix('N') {
                    (p, n as f64)
                } else if let Some(p) = text.strip_suffix('T') {
                    let t = arrival.ok_or_else(|| {
                        CliError::config(format!("'{text}': no arrival time in scope for T"))
                    })?;
                    (p, t)
                } else {
                    return text.parse::<f64>().map_err(|_| {
                        CliError::config(format!(
                            "cannot parse time '{text}': expected a number, c*N or c*T"
                        ))
                    });
                };
                let prefix = prefix.strip_suffix('*').unwrap_or(prefix).trim();
                let factor = if prefix.is_empty() {
                    1.0
                } else {
                    prefix.parse::<f64>().map_err(|_| {
                        CliError::config(format!("cannot parse coefficient in time '{text}'"))
                    })?
                };
                factor * base
            }
        };
        if !value.is_finite() || value <= 0.0 {
            return Err(CliError::config(format!("time must be positive, got {value}")));
        }
        Ok(value)
    }
}

/// Extra scaled-time column for evolve output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScaledTime {
    #[serde(rename = "t_over_T")]
    OverArrival,
    #[serde(rename = "t_over_N")]
    OverLength,
}

impl ScaledTime {
    pub fn column_name(self) -> &'static str {
        match self {
            ScaledTime::OverArrival => "t_over_T",
            ScaledTime::OverLength => "t_over_N",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub t_max: TimeExpr,
    pub points: usize,
    pub observables: Vec<String>,
    #[serde(default)]
    pub scaled_time: Option<ScaledTime>,
}

/// Pivot knobs as they appear in config files. The box is optional: chains
/// default to couplings in [0.01, N] and gaps in [MIN_GAP, 3]. The RNG seed
/// lives at the top level of the config, not here.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerBlock {
    #[serde(default = "default_population")]
    pub population: usize,
    #[serde(default)]
    pub box_low: Option<f64>,
    #[serde(default)]
    pub box_high: Option<f64>,
    #[serde(default = "default_perturbation")]
    pub perturbation_scale: f64,
    #[serde(default = "default_shrink")]
    pub shrink: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_stall_window")]
    pub stall_window: usize,
    #[serde(default = "default_stall_tol")]
    pub stall_tol: f64,
    #[serde(default = "default_target_epsilon")]
    pub target_epsilon: f64,
}

fn default_population() -> usize {
    64
}

fn default_perturbation() -> f64 {
    0.25
}

fn default_shrink() -> f64 {
    0.95
}

fn default_max_iterations() -> usize {
    2000
}

fn default_stall_window() -> usize {
    200
}

fn default_stall_tol() -> f64 {
    1e-8
}

fn default_target_epsilon() -> f64 {
    1e-4
}

impl Default for OptimizerBlock {
    fn default() -> Self {
        OptimizerBlock {
            population: default_population(),
            box_low: None,
            box_high: None,
            perturbation_scale: default_perturbation(),
            shrink: default_shrink(),
            max_iterations: default_max_iterations(),
            stall_window: default_stall_window(),
            stall_tol: default_stall_tol(),
            target_epsilon: default_target_epsilon(),
        }
    }
}

pub fn default_box(model: Model, n: usize) -> (f64, f64) {
    match model {
        Model::ShortRange => (0.01, n as f64),
        Model::LongRange => (MIN_GAP, 3.0),
    }
}

impl OptimizerBlock {
    pub fn to_pivot_config(&self, model: Model, n: usize, seed: u64) -> PivotConfig {
        let (lo, hi) = default_box(model, n);
        PivotConfig {
            population: self.population,
            box_low: self.box_low.unwrap_or(lo),
            box_high: self.box_high.unwrap_or(hi),
            perturbation_scale: self.perturbation_scale,
            shrink: self.shrink,
            max_iterations: self.max_iterations,
            stall_window: self.stall_window,
            stall_tol: self.stall_tol,
            target_epsilon: self.target_epsilon,
            rng_seed: seed,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub lengths: Vec<usize>,
    pub opt_counts: Vec<OptCount>,
    pub models: Vec<Model>,
    pub arrival_factor: f64,
    #[serde(default)]
    pub persist_chains: bool,
    /// Per-model box overrides as [low, high].
    #[serde(default)]
    pub short_range_box: Option<[f64; 2]>,
    #[serde(default)]
    pub long_range_box: Option<[f64; 2]>,
}

impl SweepBlock {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.lengths.is_empty() || self.opt_counts.is_empty() || self.models.is_empty() {
            return Err(CliError::config("sweep lengths, opt_counts and models must be non-empty"));
        }
        if !(self.arrival_factor > 0.0) {
            return Err(CliError::config("sweep arrival_factor must be positive"));
        }
        // Ascending opt counts let each cell seed the next; "all" only fits
        // at the end.
        for pair in self.opt_counts.windows(2) {
            match (pair[0], pair[1]) {
                (OptCount::Count(a), OptCount::Count(b)) if a < b => {}
                (OptCount::Count(_), OptCount::All) => {}
                _ => {
                    return Err(CliError::config(
                        "sweep opt_counts must be strictly ascending, with \"all\" last",
                    ))
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotsBlock {
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumBlock {
    /// Defaults to 0.05 (in units of π/T).
    #[serde(default)]
    pub gap_tol: Option<f64>,
    /// Defaults to 2/N, twice the extended-state level.
    #[serde(default)]
    pub weight_floor: Option<f64>,
}

/// One experiment: a chain (or a parameterization of chains to optimize),
/// the arrival time and task-specific blocks.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub chain: Option<qst_core::ChainSpec>,
    #[serde(default)]
    pub parameterization: Option<Parameterization>,
    #[serde(default)]
    pub arrival_time: Option<TimeExpr>,
    #[serde(default)]
    pub grid: Option<GridBlock>,
    #[serde(default)]
    pub optimizer: Option<OptimizerBlock>,
    #[serde(default)]
    pub schedule: Option<ScheduleConfig>,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub snapshots: Option<SnapshotsBlock>,
    #[serde(default)]
    pub spectrum: Option<SpectrumBlock>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::config(format!("cannot read config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text).map_err(|e| {
            // serde_json errors carry line and column positions.
            CliError::config(format!("invalid config {}: {e}", path.display()))
        })
    }

    /// Check that this config drives the given CLI verb and that every block
    /// the task needs is present.
    pub fn validate_for(&self, verb: Task, seed_override: Option<u64>) -> Result<(), CliError> {
        if self.task != verb {
            return Err(CliError::config(format!(
                "config declares task '{}' but the '{verb}' command was invoked",
                self.task
            )));
        }
        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(CliError::config(format!("task '{verb}' requires {what}")))
            }
        };
        match self.task {
            Task::Build => need(self.chain.is_some(), "a chain block")?,
            Task::Evolve => {
                need(self.chain.is_some(), "a chain block")?;
                need(self.grid.is_some(), "a grid block")?;
            }
            Task::Spectrum => {
                need(self.chain.is_some(), "a chain block")?;
                need(self.arrival_time.is_some(), "an arrival_time")?;
            }
            Task::Optimize | Task::Schedule | Task::Snapshots => {
                need(self.parameterization.is_some(), "a parameterization block")?;
                need(self.arrival_time.is_some(), "an arrival_time")?;
                if self.task == Task::Schedule {
                    need(self.schedule.is_some(), "a schedule block")?;
                }
                if self.task == Task::Snapshots {
                    need(self.snapshots.is_some(), "a snapshots block")?;
                }
            }
            Task::Sweep => {
                need(self.sweep.is_some(), "a sweep block")?;
                if let Some(sweep) = &self.sweep {
                    sweep.validate()?;
                }
            }
        }
        if self.task.is_stochastic() && self.seed.is_none() && seed_override.is_none() {
            return Err(CliError::config(format!(
                "task '{verb}' is stochastic: set \"seed\" in the config or pass --seed"
            )));
        }
        Ok(())
    }

    pub fn resolved_seed(&self, seed_override: Option<u64>) -> u64 {
        seed_override.or(self.seed).unwrap_or(0)
    }
}
