//! Declarative run configuration, stored as TOML.
//!
//! ```toml
//! master_seed = 7
//! eps_list = [0.1, 0.0464, 0.0215, 0.01]
//! n_replicates = 500
//!
//! [model]
//! x0 = 1.0
//! horizon = 3.0
//! growth_k = 1.0
//! sigma2_bound = 1.0
//! theta = { family = "trig", a = 1.0, b = 0.5, omega = 2.0, bound = 1.5, k = 1 }
//! sigma1 = { family = "one" }
//! sigma2 = { family = "one" }
//! y = { family = "const", c = 0.0 }
//!
//! [kernel]
//! family = "epanechnikov"
//! order = 1
//! ```
//!
//! Any key can be replaced from the command line with a dotted path, e.g.
//! `model.theta.k=2` or `eps_list=[0.1, 0.01]`.

use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{EstimatorKind, StateDivisor};
use crate::experiments::{BandwidthRule, EvalWindow, MonteCarlo, StepPolicy};
use crate::kernels::{make_kernel, Kernel, KernelFamily};
use crate::model::{ModelSpec, PathGrid};

pub const DEFAULT_REPLICATES: usize = 100;
pub const DEFAULT_OUTPUT: &str = "out";
/// ε used by single-ε commands when neither `epsilon` nor `eps_list` is set.
pub const DEFAULT_EPSILON: f64 = 0.005;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    #[serde(flatten)]
    pub family: KernelFamily,
    #[serde(default = "one")]
    pub order: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            family: KernelFamily::Epanechnikov,
            order: 1,
        }
    }
}

impl KernelConfig {
    pub fn build(&self) -> Result<Kernel> {
        make_kernel(self.family.clone(), self.order)
    }
}

fn one() -> usize {
    1
}

/// Explicit grid for commands that simulate at a fixed resolution. When
/// `n_steps` is absent the step policy decides.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Required; there is no clock-derived default.
    pub master_seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_replicates")]
    pub n_replicates: usize,
    /// ε values for sweeps, strictly decreasing.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eps_list: Vec<f64>,
    /// ε for single-ε commands.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default = "default_estimator")]
    pub estimator: EstimatorKind,
    #[serde(default)]
    pub divisor: StateDivisor,
    /// Evaluation time for `normality`; the window midpoint when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_time: Option<f64>,
    /// Bandwidth rule; the estimator's own rate-optimal rule when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<BandwidthRule>,
    pub model: ModelSpec,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default)]
    pub grid: GridConfig,
    /// `[0.2T, 0.8T]` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<EvalWindow>,
    #[serde(default)]
    pub steps: StepPolicy,
}

fn default_output() -> PathBuf {
    PathBuf::from(DEFAULT_OUTPUT)
}
fn default_replicates() -> usize {
    DEFAULT_REPLICATES
}
fn default_estimator() -> EstimatorKind {
    EstimatorKind::Main
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Reads `path`, applies `overrides` (`key=value` with a dotted key and a
    /// TOML value; bare words are taken as strings) and then `seed`.
    pub fn load(path: &FsPath, overrides: &[String], seed: Option<u64>) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_with(&text, overrides, seed)
    }

    pub fn from_toml_with(text: &str, overrides: &[String], seed: Option<u64>) -> Result<Self> {
        if overrides.is_empty() && seed.is_none() {
            // keeps line numbers in error messages
            return Self::from_toml(text);
        }
        let mut table: toml::Table = toml::from_str(text)?;
        apply_overrides(&mut table, overrides)?;
        if let Some(s) = seed {
            let v = i64::try_from(s).map_err(|_| Error::Config(format!("seed {s} exceeds the TOML integer range")))?;
            table.insert("master_seed".into(), toml::Value::Integer(v));
        }
        Ok(toml::Value::Table(table).try_into()?)
    }

    pub fn window(&self) -> EvalWindow {
        self.window
            .unwrap_or_else(|| EvalWindow::default_for(self.model.horizon))
    }

    pub fn monte_carlo(&self) -> MonteCarlo {
        MonteCarlo {
            n_replicates: self.n_replicates,
            master_seed: self.master_seed,
            steps: self.steps,
        }
    }

    /// `epsilon`, else the last (smallest) of `eps_list`, else [`DEFAULT_EPSILON`].
    pub fn single_epsilon(&self) -> f64 {
        self.epsilon
            .or_else(|| self.eps_list.last().copied())
            .unwrap_or(DEFAULT_EPSILON)
    }

    /// Explicit grid if configured, otherwise the step policy for `bandwidth`.
    pub fn grid_for(&self, bandwidth: Option<f64>, kernel: &Kernel) -> Result<PathGrid> {
        match (self.grid.n_steps, bandwidth) {
            (Some(n), _) => PathGrid::new(self.model.horizon, n),
            (None, Some(bw)) => Ok(self.steps.grid_for(self.model.horizon, bw, kernel)),
            (None, None) => Ok(self.steps.floor_grid(self.model.horizon)),
        }
    }

    /// The configured rule, or the rate-optimal one for the estimator.
    pub fn bandwidth_rule(&self) -> BandwidthRule {
        self.bandwidth.unwrap_or(match self.estimator {
            EstimatorKind::Main => BandwidthRule::Main { k: self.model.theta.k },
            EstimatorKind::Alternate => BandwidthRule::Alt {
                rho: self.model.theta.rho(),
            },
        })
    }
}

/// Parses the right-hand side of an override as a TOML value.
fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Sets each dotted `key=value` in `table`, creating intermediate tables.
pub fn apply_overrides(table: &mut toml::Table, overrides: &[String]) -> Result<()> {
    for o in overrides {
        let (key, raw) = o
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{o}` is not of the form key=value")))?;
        let parts: Vec<&str> = key.trim().split('.').collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(Error::Config(format!("override `{o}` has an empty key segment")));
        }
        let mut cur = &mut *table;
        for p in &parts[..parts.len() - 1] {
            let entry = cur
                .entry(p.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            cur = entry
                .as_table_mut()
                .ok_or_else(|| Error::Config(format!("override `{o}`: `{p}` is not a table")))?;
        }
        cur.insert(parts[parts.len() - 1].to_string(), parse_value(raw.trim()));
    }
    Ok(())
}
