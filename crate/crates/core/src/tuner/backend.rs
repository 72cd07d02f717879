use alloc::vec::Vec;

use crate::designspace::{ColumnLayout, Constraint, DesignPoint, FeatureGrid, PointScorer};
use crate::gbt::GbtModel;
use crate::schedspace::{ConvWorkload, SchedError, ScheduleConfig, ScheduleSpace};
use crate::vhw::{implement, latency_in, DeviceModel, ImplementationResult, OverlayArch, VhwError};

/// Toolchain plus device the tuner drives. Must be pure: equal inputs give
/// equal outputs.
pub trait Backend: Sync {
    fn grid(&self) -> &FeatureGrid;
    fn constraints(&self) -> &[Constraint];
    fn workload(&self) -> &ConvWorkload;
    fn arch(&self, precision: u32) -> OverlayArch;
    fn implement(&self, point: &DesignPoint) -> Result<ImplementationResult, VhwError>;

    fn space(&self, precision: u32) -> Result<ScheduleSpace, SchedError> {
        ScheduleSpace::new(self.workload().clone(), self.arch(precision))
    }

    /// Noise-free latency in seconds.
    fn latency(&self, space: &ScheduleSpace, imp: &ImplementationResult, cfg: &ScheduleConfig) -> Result<f64, VhwError> {
        latency_in(space, imp, cfg)
    }
}

/// The modeled toolchain on a modeled device, with the default intrinsic
/// shape per precision.
#[derive(Debug, Clone)]
pub struct VirtualBackend {
    pub grid: FeatureGrid,
    pub constraints: Vec<Constraint>,
    pub device: DeviceModel,
    pub workload: ConvWorkload,
}

impl Backend for VirtualBackend {
    fn grid(&self) -> &FeatureGrid {
        &self.grid
    }

    fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    fn workload(&self) -> &ConvWorkload {
        &self.workload
    }

    fn arch(&self, precision: u32) -> OverlayArch {
        OverlayArch::vta_default(precision)
    }

    fn implement(&self, point: &DesignPoint) -> Result<ImplementationResult, VhwError> {
        implement(point, &self.grid, &self.arch(point.precision), &self.device)
    }
}

/// Ranks overlay candidates by a boosted-tree prediction.
#[derive(Debug, Clone)]
pub struct GbtScorer {
    pub model: GbtModel,
    pub layout: ColumnLayout,
}

impl PointScorer for GbtScorer {
    fn score(&self, grid: &FeatureGrid, point: &DesignPoint) -> f64 {
        self.layout
            .encode(grid, point)
            .ok()
            .and_then(|x| self.model.predict_value(&x).ok())
            .unwrap_or(f64::NEG_INFINITY)
    }
}
