use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tula_core::{zoo_by_name, InitialPoint, RadialTransform, SamplerConfig, TransformedPotential};

use crate::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
}

/// `auto` takes the transform paired with the zoo entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransformSpec {
    #[default]
    Auto,
    Exponential {
        b: f64,
        beta: f64,
    },
    WarmUp {
        knot: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub target: TargetSpec,
    #[serde(default)]
    pub transform: TransformSpec,
    pub sampler: SamplerConfig,
    /// Extra reports written by `sample`: `lsi`, `assumptions`.
    #[serde(default)]
    pub analyses: Vec<String>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Recorded iterates dropped per chain; default a tenth of them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default)]
    pub moments: Vec<f64>,
    #[serde(default)]
    pub thresholds: Vec<f64>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("tula_out")
}

impl ExperimentConfig {
    pub fn new(target: TargetSpec) -> Self {
        Self {
            target,
            transform: TransformSpec::Auto,
            sampler: SamplerConfig::new(0.01, 1000, 0),
            analyses: Vec::new(),
            output_dir: default_output_dir(),
            burn_in: None,
            moments: Vec::new(),
            thresholds: Vec::new(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    #[cfg(test)]
    pub fn from_toml(s: &str) -> Result<Self, Failure> {
        toml::from_str(s).map_err(|e| Failure::Usage(format!("invalid config: {e}")))
    }
}

/// Partial config as read from a file; every section is optional so that
/// flags can supply the rest.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct PartialConfig {
    pub target: Option<PartialTarget>,
    pub transform: Option<TransformSpec>,
    pub sampler: Option<PartialSampler>,
    pub analyses: Option<Vec<String>>,
    pub output_dir: Option<PathBuf>,
    pub burn_in: Option<usize>,
    pub moments: Option<Vec<f64>>,
    pub thresholds: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct PartialSampler {
    pub step_size: Option<f64>,
    pub num_steps: Option<usize>,
    pub seed: Option<u64>,
    pub initial: Option<InitialPoint>,
    pub thin: Option<usize>,
    pub num_chains: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct PartialTarget {
    pub name: Option<String>,
    pub d: Option<usize>,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
}

pub fn read_partial(path: &Path) -> Result<PartialConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| Failure::Usage(format!("invalid config {}: {e}", path.display())))
}

pub fn build_potential(
    target: &TargetSpec,
    transform: &TransformSpec,
) -> Result<TransformedPotential, Failure> {
    let entry = zoo_by_name(&target.name, target.d, &target.parameters)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let d = entry.potential.dimension();
    let t = match *transform {
        TransformSpec::Auto => Ok(entry.transform),
        TransformSpec::Exponential { b, beta } => RadialTransform::exponential(b, beta, d),
        TransformSpec::WarmUp { knot } => RadialTransform::warm_up(d, knot),
    }
    .map_err(|e| Failure::Usage(e.to_string()))?;
    TransformedPotential::new(entry.potential, t).map_err(|e| Failure::Usage(e.to_string()))
}
