use std::collections::BTreeMap;
use std::path::Path;

use opgrowth::{CouplingSpec, ModelParams, WeightDistribution};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// One experiment description, read from TOML or JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gf: Option<GfConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub qubits: usize,
    pub kappa: f64,
    pub r: f64,
    /// Keys `a2`, `a3`, ...
    pub couplings: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(usize),
    Many(Vec<usize>),
}

/// Either `weight` (one value or a sweep) or an explicit `b` starting at `w = 1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<OneOrMany>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(default)]
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GfConfig {
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default)]
    pub snapshots: Vec<f64>,
    /// Series truncation order.
    #[serde(default = "default_top")]
    pub top: i32,
}

fn default_order() -> usize {
    2
}

fn default_top() -> i32 {
    160
}

impl Default for GfConfig {
    fn default() -> Self {
        Self { order: default_order(), snapshots: Vec::new(), top: default_top() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub sizes: Vec<usize>,
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default = "default_fit_degree")]
    pub fit_degree: usize,
}

fn default_modes() -> usize {
    3
}

fn default_fit_degree() -> usize {
    2
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepperName {
    #[default]
    Rotations,
    Exact,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub realizations: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
    /// Pauli label such as `"XIII"`; defaults to `X` on the first `w0` qubits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub string: Option<String>,
    #[serde(default)]
    pub stepper: StepperName,
}

fn default_dt() -> f64 {
    1e-3
}

/// A labelled initial distribution.
pub struct Initial {
    pub label: String,
    pub w0: Option<usize>,
    pub b: WeightDistribution,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display()))),
            Some("json") => {
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
            }
            _ => Err(CliError::Config(format!("{}: expected a .toml or .json file", path.display()))),
        }
    }

    /// The config as TOML, for echoing into output headers.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        let m = &self.model;
        if m.couplings.is_empty() {
            return Err(CliError::Config("missing key `model.couplings.a<n>`: at least one coupling is required".into()));
        }
        let mut couplings = Vec::new();
        for (key, &a) in &m.couplings {
            let order = key
                .strip_prefix('a')
                .and_then(|n| n.parse::<usize>().ok())
                .ok_or_else(|| CliError::Config(format!("coupling key `model.couplings.{key}` is not of the form a<n>")))?;
            couplings.push(CouplingSpec::new(order, a)?);
        }
        Ok(ModelParams::new(m.qubits, m.kappa, m.r, couplings)?)
    }

    pub fn initial_states(&self) -> Result<Vec<Initial>, CliError> {
        let init = require(&self.initial, "initial")?;
        let n = self.model.qubits;
        match (&init.weight, &init.b) {
            (Some(w), None) => {
                let ws = match w {
                    OneOrMany::One(w) => vec![*w],
                    OneOrMany::Many(ws) => ws.clone(),
                };
                if ws.is_empty() {
                    return Err(CliError::Config("`initial.weight` is empty".into()));
                }
                ws.into_iter()
                    .map(|w0| {
                        if w0 == 0 || w0 > n {
                            return Err(CliError::Config(format!("`initial.weight` = {w0} outside 1..={n}")));
                        }
                        Ok(Initial { label: format!("w{w0}"), w0: Some(w0), b: WeightDistribution::delta(w0, n)? })
                    })
                    .collect()
            }
            (None, Some(b)) => {
                if b.len() > n {
                    return Err(CliError::Config(format!("`initial.b` has {} entries for {n} qubits", b.len())));
                }
                let mut full = b.clone();
                full.resize(n, 0.0);
                Ok(vec![Initial { label: "b".into(), w0: None, b: WeightDistribution::new(full)? }])
            }
            _ => Err(CliError::Config("`initial` needs exactly one of `weight` or `b`".into())),
        }
    }

    pub fn times(&self) -> Result<Vec<f64>, CliError> {
        let t = require(&self.time, "time")?;
        if t.count == 0 {
            return Err(CliError::Config("`time.count` must be at least 1".into()));
        }
        if !(t.start >= 0.0) || !(t.stop >= t.start) || !t.stop.is_finite() {
            return Err(CliError::Config(format!("need 0 <= time.start <= time.stop, got {} and {}", t.start, t.stop)));
        }
        if t.count == 1 {
            return Ok(vec![t.start]);
        }
        let m = (t.count - 1) as f64;
        let grid: Vec<f64> = match t.spacing {
            Spacing::Linear => (0..t.count).map(|i| t.start + (t.stop - t.start) * i as f64 / m).collect(),
            Spacing::Log => {
                if t.start <= 0.0 {
                    return Err(CliError::Config("log spacing needs `time.start` > 0".into()));
                }
                let (a, b) = (t.start.ln(), t.stop.ln());
                (0..t.count).map(|i| (a + (b - a) * i as f64 / m).exp()).collect()
            }
        };
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CliError::Config("time grid is not strictly increasing".into()));
        }
        Ok(grid)
    }
}

pub fn require<'a, T>(section: &'a Option<T>, key: &str) -> Result<&'a T, CliError> {
    section.as_ref().ok_or_else(|| CliError::Config(format!("missing key `{key}`")))
}
