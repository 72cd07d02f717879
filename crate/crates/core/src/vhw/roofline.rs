use serde::{Deserialize, Serialize};

use super::VhwError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RooflinePoint {
    /// Ops per DRAM byte.
    pub arithmetic_intensity: f64,
    pub attainable_gops: f64,
    pub measured_gops: Option<f64>,
}

impl RooflinePoint {
    pub fn new(ai: f64, peak_gops: f64, bandwidth_gbps: f64) -> Self {
        Self { arithmetic_intensity: ai, attainable_gops: roofline_attainable(ai, peak_gops, bandwidth_gbps), measured_gops: None }
    }

    pub fn with_measured(mut self, gops: f64) -> Self {
        self.measured_gops = Some(gops);
        self
    }

    /// The measured performance when present, else the attainable one.
    pub fn gops(&self) -> f64 {
        self.measured_gops.unwrap_or(self.attainable_gops)
    }

    /// The compute/bandwidth balance point of a roofline.
    pub fn ridge(peak_gops: f64, bandwidth_gbps: f64) -> Self {
        Self { arithmetic_intensity: peak_gops / bandwidth_gbps, attainable_gops: peak_gops, measured_gops: None }
    }
}

/// `min(peak, ai * bandwidth)`.
pub fn roofline_attainable(arith_intensity: f64, peak_gops: f64, bandwidth_gbps: f64) -> f64 {
    peak_gops.min(arith_intensity * bandwidth_gbps)
}

/// Sum of log2-space Euclidean distances from each point to the ridge.
/// Points use their measured performance when available.
pub fn l2_to_optimal(points: &[RooflinePoint], ridge: &RooflinePoint) -> Result<f64, VhwError> {
    if points.is_empty() {
        return Err(VhwError::Domain("no points".into()));
    }
    let lg = |v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(libm::log2(v))
        } else {
            Err(VhwError::Domain(alloc::format!("coordinate {v} is not positive")))
        }
    };
    let (rx, ry) = (lg(ridge.arithmetic_intensity)?, lg(ridge.gops())?);
    points.iter().try_fold(0.0, |acc, p| {
        let dx = lg(p.arithmetic_intensity)? - rx;
        let dy = lg(p.gops())? - ry;
        Ok(acc + libm::sqrt(dx * dx + dy * dy))
    })
}
