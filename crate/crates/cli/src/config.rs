//! The JSON run configuration.

use std::path::{Path, PathBuf};

use bvarch::model::{default_roles, CovariateRole, ModelSpec, ParameterValues, PriorConfig, Variant};
use bvarch::sampler::SamplerConfig;
use bvarch::simulate::{MissingScheme, DEMO_DAYS};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub data: Option<DataConfig>,
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub priors: PriorConfig,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub output: OutputConfig,
    pub simulate: Option<SimulateConfig>,
    pub ingest: Option<IngestConfig>,
    pub compare: Option<CompareConfig>,
    pub diagnose: Option<DiagnoseConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Dataset CSV.
    pub path: PathBuf,
    /// Site metadata; defaults to the `<stem>.sites.csv` sidecar.
    pub sites: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub variant: Variant,
    #[serde(default = "default_roles")]
    pub covariate_roles: Vec<CovariateRole>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Seed of the forecast sampler; the sampler seed when absent.
    pub forecast_seed: Option<u64>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out"), forecast_seed: None }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub variant: Variant,
    pub n_time: usize,
    pub seed: u64,
    /// Parameters for the seven demo sites; the documented demo values when absent.
    pub params: Option<ParameterValues>,
    pub missing: Option<MissingScheme>,
    /// Also write raw turbidity, wind, operations and site files for `ingest`.
    pub raw: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig { variant: Variant::Varch, n_time: DEMO_DAYS, seed: 1, params: None, missing: None, raw: false }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestConfig {
    pub raw: PathBuf,
    pub wind: PathBuf,
    pub operations: PathBuf,
    pub sites: PathBuf,
    #[serde(default = "one")]
    pub min_readings: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    /// Output directories of `fit` runs.
    pub runs: Vec<PathBuf>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseConfig {
    /// Saved draws; `draws.csv` in the output directory when absent.
    pub draws: Option<PathBuf>,
}

/// A parsed config with its raw bytes and the directory relative paths
/// resolve against.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub config: Config,
    pub bytes: Vec<u8>,
    pub base: PathBuf,
}

impl Loaded {
    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let config: Config = serde_json::from_slice(&bytes).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Loaded { config, bytes, base })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        let m = self.config.model.as_ref().ok_or_else(|| CliError::Config("missing model section".into()))?;
        Ok(ModelSpec { variant: m.variant, priors: self.config.priors.clone(), covariate_roles: m.covariate_roles.clone() })
    }

    pub fn section<'a, T>(&self, s: &'a Option<T>, name: &str) -> Result<&'a T> {
        s.as_ref().ok_or_else(|| CliError::Config(format!("missing {name} section")))
    }
}
