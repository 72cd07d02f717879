//! Experiment configuration, read from a TOML document.
//!
//! Every table rejects unknown keys. Omitted sections take the defaults
//! shown by `tvta demo --print-config`.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tvta_core::designspace::{table1_grid, Constraint, ConstraintSet, Feature, FeatureGrid, GuidanceParams};
use tvta_core::gbt::GbtParams;
use tvta_core::schedspace::{builtin, ConvWorkload};
use tvta_core::tuner::{Optimizer, TunerParams};
use tvta_core::vhw::DeviceModel;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment_id: String,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub constraints: ConstraintSet,
    #[serde(default)]
    pub device: DeviceConfig,
    /// Built-in workload names (`fig7`, `toy`, `resnet18`).
    #[serde(default = "default_workloads")]
    pub workloads: Vec<String>,
    /// Extra layers given inline.
    #[serde(default)]
    pub layers: Vec<ConvWorkload>,
    #[serde(default = "default_precisions")]
    pub precisions: Vec<u32>,
    #[serde(default)]
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub gbt: GbtConfig,
    #[serde(default)]
    pub guidance: GuidanceParams,
    #[serde(default)]
    pub tuner: TunerParams,
    #[serde(default = "Method::all")]
    pub methods: Vec<Method>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_workloads() -> Vec<String> {
    vec!["fig7".into()]
}

fn default_precisions() -> Vec<u32> {
    vec![8, 4, 2, 1]
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2, 3, 4]
}

/// Either a built-in grid or an explicit feature list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub builtin: Option<String>,
    pub features: Option<Vec<Feature>>,
    pub precisions: Option<Vec<u32>>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { builtin: Some("table1".into()), features: None, precisions: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceConfig {
    pub profile: Option<String>,
    pub custom: Option<DeviceModel>,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        Self { profile: Some("pynq-z1".into()), custom: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    /// Sample cap. The whole constrained grid is used when it is no
    /// larger; otherwise this many distinct points are drawn uniformly.
    pub samples: usize,
    /// Schedules per precision whose best delivered GOPs is the GOPs target.
    pub probe_schedules: usize,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self { samples: 1500, probe_schedules: 32, seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbtConfig {
    /// Parameter sets compared by cross-validation.
    pub candidates: Vec<GbtParams>,
    pub seed: u64,
}

impl Default for GbtConfig {
    fn default() -> Self {
        Self {
            candidates: vec![
                GbtParams::default(),
                GbtParams { max_depth: 6, learning_rate: 0.05, num_trees: 200, ..GbtParams::default() },
            ],
            seed: 11,
        }
    }
}

/// Overlay source for a tuning run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlaySource {
    /// The single vendor-default overlay.
    Vta,
    /// The importance-guided overlay pool.
    Tau,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Method {
    pub overlays: OverlaySource,
    pub optimizer: Optimizer,
}

impl Method {
    pub fn all() -> Vec<Method> {
        let mut v = Vec::new();
        for overlays in [OverlaySource::Vta, OverlaySource::Tau] {
            for optimizer in [Optimizer::Random, Optimizer::Surrogate] {
                v.push(Method { overlays, optimizer });
            }
        }
        v
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let o = match self.overlays {
            OverlaySource::Vta => "vta",
            OverlaySource::Tau => "tau",
        };
        write!(f, "{o}-{}", self.optimizer.as_str())
    }
}

impl TryFrom<String> for Method {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        Method::all()
            .into_iter()
            .find(|m| m.to_string() == s)
            .ok_or_else(|| format!("unknown method `{s}` (expected vta-random, vta-surrogate, tau-random or tau-surrogate)"))
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.to_string()
    }
}

/// A config with every reference resolved.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub grid: FeatureGrid,
    pub constraints: Vec<Constraint>,
    pub device: DeviceModel,
    pub workloads: Vec<ConvWorkload>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => CliError::Config(format!("config file {} not found", path.display())),
            _ => CliError::io(path, e),
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Checks cross-field rules and builds the concrete objects.
    pub fn resolve(self) -> Result<Experiment> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.experiment_id.is_empty() || !self.experiment_id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            return bad(format!("experiment_id `{}` must be non-empty [A-Za-z0-9._-]", self.experiment_id));
        }
        let grid = match (&self.grid.builtin, &self.grid.features) {
            (Some(_), Some(_)) => return bad("grid: give either `builtin` or `features`, not both".into()),
            (Some(name), None) if name == "table1" => table1_grid(),
            (Some(name), None) => return bad(format!("grid.builtin: unknown grid `{name}` (expected table1)")),
            (None, Some(f)) => FeatureGrid::new(f.clone(), self.grid.precisions.clone().unwrap_or_else(default_precisions))
                .map_err(|e| CliError::Config(format!("grid: {e}")))?,
            (None, None) => return bad("grid: `builtin` or `features` is required".into()),
        };
        let grid = match (&self.grid.builtin, &self.grid.precisions) {
            (Some(_), Some(p)) => grid.with_precisions(p.clone()).map_err(|e| CliError::Config(format!("grid.precisions: {e}")))?,
            _ => grid,
        };
        if self.precisions.is_empty() {
            return bad("precisions: at least one is required".into());
        }
        for p in &self.precisions {
            if !grid.precisions().contains(p) {
                return bad(format!("precisions: {p} is not a precision of the grid"));
            }
        }
        let device = match (&self.device.profile, &self.device.custom) {
            (Some(_), Some(_)) => return bad("device: give either `profile` or `custom`, not both".into()),
            (Some(name), None) => DeviceModel::by_name(name)
                .ok_or_else(|| CliError::Config(format!("device.profile: unknown profile `{name}` (expected pynq-z1 or small)")))?,
            (None, Some(d)) => d.clone(),
            (None, None) => return bad("device: `profile` or `custom` is required".into()),
        };
        device.validate().map_err(|e| CliError::Config(format!("device: {e}")))?;
        let mut workloads = Vec::new();
        for name in &self.workloads {
            workloads.extend(builtin(name).ok_or_else(|| {
                CliError::Config(format!("workloads: unknown built-in `{name}` (expected fig7, toy or resnet18)"))
            })?);
        }
        for (i, l) in self.layers.iter().enumerate() {
            l.validate().map_err(|e| CliError::Config(format!("layers[{i}]: {e}")))?;
            workloads.push(l.clone());
        }
        if workloads.is_empty() {
            return bad("workloads: at least one layer is required".into());
        }
        let mut names = std::collections::BTreeSet::new();
        for w in &workloads {
            if w.name.is_empty() || !names.insert(w.name.clone()) {
                return bad(format!("layers: names must be non-empty and unique (`{}`)", w.name));
            }
        }
        self.tuner.validate().map_err(|e| CliError::Config(format!("tuner: {e}")))?;
        if self.gbt.candidates.is_empty() {
            return bad("gbt.candidates: at least one parameter set is required".into());
        }
        for (i, c) in self.gbt.candidates.iter().enumerate() {
            c.validate().map_err(|e| CliError::Config(format!("gbt.candidates[{i}]: {e}")))?;
        }
        for name in self.guidance.defaults.keys() {
            if grid.feature_index(name).is_none() {
                return bad(format!("guidance.defaults: unknown feature `{name}`"));
            }
        }
        // the pinned base point must exist
        grid.point_from_levels(self.precisions[0], &[], &self.guidance.defaults)
            .map_err(|e| CliError::Config(format!("guidance.defaults: {e}")))?;
        if self.methods.is_empty() {
            return bad("methods: at least one is required".into());
        }
        if self.seeds.is_empty() {
            return bad("seeds: at least one is required".into());
        }
        let constraints = self.constraints.build();
        Ok(Experiment { config: self, grid, constraints, device, workloads })
    }
}
