//! Experiment configuration: TOML schema and construction of core objects.
//!
//! The full schema is documented in `docs/formats.md` at the repository
//! root. Coordinate indices in files are 1-based.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use koopman_sid::dynamics::{builtin_system, DynamicalSystem, SystemSpec};
use koopman_sid::observables::{build_dictionary, custom_dictionary, BasisFn, Dictionary};
use koopman_sid::sampling::critical_period;
use koopman_sid::linalg::Spectrum;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemRef,
    #[serde(default)]
    pub dictionaries: Vec<DictSpec>,
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub prediction: PredictionConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemRef {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub params: Option<HashMap<String, f64>>,
    #[serde(default)]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictSpec {
    #[serde(default)]
    pub degree: Option<u32>,
    #[serde(default)]
    pub include_constant: Option<bool>,
    #[serde(default)]
    pub rational_power_cap: Option<u32>,
    #[serde(default)]
    pub custom: Option<Vec<BasisFn>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub n_traj: usize,
    pub n_snap: usize,
    pub seed: u64,
    pub init_box: Vec<[f64; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub start: Option<f64>,
    #[serde(default)]
    pub stop: Option<f64>,
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default)]
    pub list: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionConfig {
    #[serde(default = "default_x0")]
    pub x0: Vec<f64>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_fs")]
    pub fs: f64,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
}

fn default_x0() -> Vec<f64> {
    vec![0.5, 0.5]
}
fn default_horizon() -> f64 {
    5.0
}
fn default_fs() -> f64 {
    100.0
}
fn default_n_samples() -> usize {
    500
}

impl Default for PredictionConfig {
    fn default() -> Self {
        Self {
            x0: default_x0(),
            horizon: default_horizon(),
            fs: default_fs(),
            n_samples: default_n_samples(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn build_system(&self) -> Result<DynamicalSystem, CliError> {
        self.system.build()
    }

    pub fn build_dictionaries(&self, dim: usize) -> Result<Vec<Dictionary>, CliError> {
        if self.dictionaries.is_empty() {
            return Err(CliError::Config(
                "config needs at least one [[dictionaries]] entry".into(),
            ));
        }
        self.dictionaries.iter().map(|d| d.build(dim)).collect()
    }

    pub fn grid_values(&self) -> Result<Vec<f64>, CliError> {
        self.grid.values()
    }

    /// Theoretical critical period from the system's recorded principal
    /// eigenvalues, when available.
    pub fn t_gamma(&self, sys: &DynamicalSystem) -> Option<f64> {
        sys.known_principal_eigenvalues()
            .map(|e| critical_period(&Spectrum::new(e.to_vec())).t_gamma)
    }
}

impl SystemRef {
    pub fn build(&self) -> Result<DynamicalSystem, CliError> {
        match (&self.name, &self.file) {
            (Some(name), None) => {
                let params = self.params.clone().unwrap_or_default();
                builtin_system(name, &params).map_err(CliError::from)
            }
            (None, Some(path)) => load_system_file(path),
            _ => Err(CliError::Config(
                "specify exactly one of system.name or system.file".into(),
            )),
        }
    }
}

pub fn load_system_file(path: &Path) -> Result<DynamicalSystem, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let spec: SystemSpec = toml::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    spec.into_system().map_err(CliError::from)
}

impl DictSpec {
    pub fn build(&self, dim: usize) -> Result<Dictionary, CliError> {
        match (&self.custom, self.degree) {
            (Some(list), None) => custom_dictionary(dim, list.clone()).map_err(CliError::from),
            (None, Some(m)) => Ok(build_dictionary(
                dim,
                m,
                self.include_constant.unwrap_or(false),
                self.rational_power_cap,
            )),
            _ => Err(CliError::Config(
                "each dictionary needs either `degree` or `custom`".into(),
            )),
        }
    }
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        let values = match (&self.list, self.start, self.stop, self.step) {
            (Some(list), None, None, None) => list.clone(),
            (None, Some(start), Some(stop), Some(step)) => {
                if step <= 0.0 {
                    return Err(CliError::Config("grid step must be positive".into()));
                }
                let mut v = Vec::new();
                let mut k = 0u32;
                loop {
                    let t = start + k as f64 * step;
                    if t > stop + 1e-9 * step {
                        break;
                    }
                    v.push(t);
                    k += 1;
                }
                v
            }
            _ => {
                return Err(CliError::Config(
                    "grid needs either `list` or `start`/`stop`/`step`".into(),
                ))
            }
        };
        if values.is_empty() {
            return Err(CliError::Config("grid is empty".into()));
        }
        if values.iter().any(|&t| t <= 0.0) {
            return Err(CliError::Config("grid values must be positive".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Config("grid must be strictly increasing".into()));
        }
        Ok(values)
    }
}

/// Parse `key=value` command-line parameter pairs.
pub fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let value: f64 = v.parse().map_err(|e| format!("bad value in `{s}`: {e}"))?;
    Ok((k.to_string(), value))
}

/// Parse a comma-separated state vector, e.g. `0.5,0.5`.
pub fn parse_state(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{s}`: {e}")))
        .collect()
}
