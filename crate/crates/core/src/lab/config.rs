use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::flow::FlowConfig;
use crate::kahler::snapshot::read_snapshot;
use crate::kahler::Background;
use crate::spectral::{build_grid, SymField, MIN_NODES};

use super::LabError;

pub const SCHEMA_VERSION: u32 = 1;

/// One Legendre mode `amplitude * P_degree(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub degree: usize,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub n_nodes: usize,
    #[serde(default)]
    pub background_modes: Vec<Mode>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default)]
    pub modes: Vec<Mode>,
    /// Snapshot CSV; relative paths resolve against the config file's directory.
    pub snapshot: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: Option<PathBuf>,
    /// Overrides `flow.sample_every` when present.
    pub sample_every: Option<f64>,
    pub snapshot_every: Option<f64>,
}

/// Cartesian sweep axes. Each axis overrides one dotted path of the config,
/// e.g. `flow.dt_init` or `initial.modes.0.amplitude`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub axes: Vec<SweepAxis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub path: String,
    pub values: Vec<toml::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub flow: FlowConfig<f64>,
    #[serde(default)]
    pub output: OutputConfig,
    pub sweep: Option<SweepConfig>,
    /// Directory relative paths are resolved against; not part of the file.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, LabError> {
        let value: toml::Value = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        Self::from_value(value, base_dir)
    }

    pub fn from_value(value: toml::Value, base_dir: impl Into<PathBuf>) -> Result<Self, LabError> {
        let mut cfg: Self = value.try_into().map_err(|e: toml::de::Error| LabError::Config(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::from_toml_str(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// The flow settings with the output cadence folded in.
    pub fn flow_config(&self) -> FlowConfig<f64> {
        let mut f = self.flow;
        if let Some(s) = self.output.sample_every {
            f.sample_every = s;
        }
        f
    }

    pub fn validate(&self) -> Result<(), LabError> {
        let err = |m: String| Err(LabError::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return err(format!("schema_version {} unsupported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        let n = self.geometry.n_nodes;
        if n < MIN_NODES {
            return err(format!("geometry.n_nodes = {n} is below the minimum {MIN_NODES}"));
        }
        for m in self.geometry.background_modes.iter().chain(&self.initial.modes) {
            if m.degree > n - 1 {
                return err(format!("mode degree {} exceeds max degree {}", m.degree, n - 1));
            }
            if !m.amplitude.is_finite() {
                return err(format!("mode degree {} has non-finite amplitude", m.degree));
            }
        }
        if let Some(p) = self.snapshot_path() {
            if !p.is_file() {
                return err(format!("initial.snapshot {} does not exist", p.display()));
            }
            if !self.initial.modes.is_empty() {
                return err("initial.modes and initial.snapshot are mutually exclusive".into());
            }
        }
        if let Some(s) = self.output.snapshot_every {
            if !(s > 0.0) {
                return err("output.snapshot_every must be positive".into());
            }
        }
        self.flow_config().validate().map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn snapshot_path(&self) -> Option<PathBuf> {
        self.initial.snapshot.as_ref().map(|p| if p.is_absolute() { p.clone() } else { self.base_dir.join(p) })
    }

    pub fn build_background(&self) -> Result<Background<f64>, LabError> {
        let grid = Arc::new(build_grid(self.geometry.n_nodes)?);
        let modes: Vec<(usize, f64)> = self.geometry.background_modes.iter().map(|m| (m.degree, m.amplitude)).collect();
        Ok(Background::from_modes(grid, &modes)?)
    }

    pub fn initial_potential(&self, bg: &Background<f64>) -> Result<SymField<f64>, LabError> {
        if let Some(path) = self.snapshot_path() {
            let file = std::fs::File::open(&path).map_err(|e| LabError::io(&path, e))?;
            return Ok(read_snapshot(file)?.to_field(&bg.grid)?);
        }
        let modes: Vec<(usize, f64)> = self.initial.modes.iter().map(|m| (m.degree, m.amplitude)).collect();
        Ok(SymField::from_modes(&bg.grid, &modes)?)
    }
}
