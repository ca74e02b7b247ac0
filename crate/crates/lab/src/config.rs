//! Flat key-value experiment configuration.
//!
//! The same keys are accepted from a TOML file (`--config`) and from
//! `--key value` flags; flags win. Unknown keys, and keys the chosen
//! subcommand does not read, are rejected before any compute starts.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use hva_core::{InitStrategy, ModelKind};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Optimize,
    SpectrumSample,
    SpectrumDynamics,
    EntropyDynamics,
    Overparam,
    GradVariance,
    SweepOrder,
    Mhs,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Optimize,
        Experiment::SpectrumSample,
        Experiment::SpectrumDynamics,
        Experiment::EntropyDynamics,
        Experiment::Overparam,
        Experiment::GradVariance,
        Experiment::SweepOrder,
        Experiment::Mhs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Optimize => "optimize",
            Experiment::SpectrumSample => "spectrum-sample",
            Experiment::SpectrumDynamics => "spectrum-dynamics",
            Experiment::EntropyDynamics => "entropy-dynamics",
            Experiment::Overparam => "overparam",
            Experiment::GradVariance => "grad-variance",
            Experiment::SweepOrder => "sweep-order",
            Experiment::Mhs => "mhs",
        }
    }

    /// Keys this subcommand reads.
    pub fn keys(self) -> &'static [&'static str] {
        match self {
            Experiment::Optimize => &[
                "model", "n", "p", "order", "init", "jitter", "seed", "cache_dir",
                "learning_rate", "max_iter", "tol", "stop",
            ],
            Experiment::SpectrumSample => &[
                "model", "n", "p_list", "order", "samples", "haar_samples", "seed", "cache_dir",
            ],
            Experiment::SpectrumDynamics => &[
                "model", "n", "p", "order", "init", "jitter", "seed", "milestones", "cache_dir",
                "learning_rate", "max_iter", "tol", "stop",
            ],
            Experiment::EntropyDynamics => &[
                "model", "n", "p", "order", "init", "jitter", "seed", "cache_dir",
                "learning_rate", "max_iter", "tol", "stop",
            ],
            Experiment::Overparam => &[
                "model", "n_list", "p_list", "order", "num_inits", "seed", "cache_dir",
                "learning_rate", "max_iter", "tol",
            ],
            Experiment::GradVariance => &[
                "model", "n_list", "p_list", "samples", "seed", "init", "jitter",
            ],
            Experiment::SweepOrder => &[
                "model", "n_list", "grid_start", "grid_stop", "grid_step", "init", "jitter", "seed",
                "cache_dir", "learning_rate", "max_iter", "tol", "stop",
            ],
            Experiment::Mhs => &[
                "n_list", "init", "jitter", "seed", "cache_dir", "learning_rate", "max_iter", "tol", "stop",
            ],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| anyhow!("unknown experiment `{s}`"))
    }
}

/// Every recognized key. Missing keys fall back to per-experiment defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// `tfim`, `xxz`, `mhs`, or `rqc` (grad-variance only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_list: Option<Vec<usize>>,
    /// `g` for TFIM, `Delta` for XXZ.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<f64>,
    /// `identity`, `random` or `near_identity`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jitter: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub haar_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_inits: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub milestones: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_stop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// `energy_delta` or `residual`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<String>,
    /// Directory for cached oracle solutions.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<String>,
}

/// Turns `--some-key value` pairs into a TOML table. Values are read as TOML
/// literals when possible, comma-separated values become arrays, and anything
/// else is kept as a string.
pub fn parse_overrides(args: &[String]) -> Result<toml::Table> {
    let mut table = toml::Table::new();
    let mut it = args.iter();
    while let Some(flag) = it.next() {
        let key = flag
            .strip_prefix("--")
            .ok_or_else(|| anyhow!("expected `--key value`, found `{flag}`"))?;
        let (key, value) = match key.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| anyhow!("flag `{flag}` is missing a value"))?;
                (key.to_string(), v.clone())
            }
        };
        table.insert(key.replace('-', "_"), parse_value(&value));
    }
    Ok(table)
}

fn parse_scalar(s: &str) -> toml::Value {
    let s = s.trim();
    let doc = format!("v = {s}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(s.to_string()),
    }
}

fn parse_value(s: &str) -> toml::Value {
    if s.contains(',') && !s.trim_start().starts_with('[') {
        toml::Value::Array(s.split(',').filter(|x| !x.trim().is_empty()).map(parse_scalar).collect())
    } else {
        parse_scalar(s)
    }
}

/// Reads `file` (if any), applies `overrides`, rejects keys `experiment` does
/// not use, and deserializes.
pub fn load(experiment: Experiment, file: Option<&Path>, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut table = match file {
        Some(path) => std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?
            .parse::<toml::Table>()
            .with_context(|| format!("parsing {}", path.display()))?,
        None => toml::Table::new(),
    };
    for (k, v) in parse_overrides(overrides)? {
        table.insert(k, v);
    }
    from_table(experiment, table)
}

pub fn from_table(experiment: Experiment, mut table: toml::Table) -> Result<ExperimentConfig> {
    for key in ["n_list", "p_list", "milestones"] {
        if let Some(v) = table.get_mut(key) {
            if !v.is_array() {
                *v = toml::Value::Array(vec![v.clone()]);
            }
        }
    }
    let allowed = experiment.keys();
    let stray: Vec<&String> = table.keys().filter(|k| !allowed.contains(&k.as_str())).collect();
    let config: ExperimentConfig = toml::Value::Table(table.clone())
        .try_into()
        .map_err(|e| anyhow!("invalid configuration: {e}"))?;
    if !stray.is_empty() {
        bail!(
            "keys not used by `{experiment}`: {}; accepted keys are {}",
            stray.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", "),
            allowed.join(", ")
        );
    }
    Ok(config)
}

pub fn parse_model(s: &str) -> Result<ModelKind> {
    s.parse::<ModelKind>().map_err(|e| anyhow!("{e}"))
}

pub fn parse_init(s: &str, jitter: Option<f64>) -> Result<InitStrategy> {
    let init = s.parse::<InitStrategy>().map_err(|e| anyhow!("{e}"))?;
    Ok(match (init, jitter) {
        (InitStrategy::NearIdentity { .. }, Some(j)) => InitStrategy::NearIdentity { jitter: j },
        (other, _) => other,
    })
}
