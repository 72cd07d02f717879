use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{ImplementationResult, OverlayArch, VhwError, GEMM_DEPTH};
use crate::schedspace::{lower_to_macro_ops, ConvWorkload, MacroOps, ScheduleConfig, ScheduleSpace};

/// Issue cycles per macro-op without pipelining, for an unroll of 1.
pub const UNPIPELINED_ISSUE: u64 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleBreakdown {
    pub ops: MacroOps,
    pub compute_cycles: f64,
    /// Traffic over the on-chip buffer ports alone.
    pub onchip_cycles: f64,
    /// Traffic over DRAM alone.
    pub dram_cycles: f64,
    /// Each stream at the slower of its buffer and DRAM.
    pub mem_cycles: f64,
    pub total_cycles: f64,
}

/// Cycle model of one schedule on an implemented overlay.
pub fn cycle_breakdown(
    space: &ScheduleSpace,
    imp: &ImplementationResult,
    cfg: &ScheduleConfig,
) -> Result<CycleBreakdown, VhwError> {
    if !imp.is_ok() || imp.achieved_freq_mhz <= 0.0 {
        return Err(VhwError::Precondition(alloc::format!("overlay status is {}", imp.status.as_str())));
    }
    let ops = lower_to_macro_ops(cfg, space).map_err(|e| VhwError::IllegalSchedule(alloc::format!("{e}")))?;
    let dp = &imp.datapath;
    let mut compute = ops.gemm_calls + GEMM_DEPTH - 1;
    if !dp.pipeline {
        compute += ops.gemm_calls * UNPIPELINED_ISSUE.div_ceil(dp.unroll.max(1));
    }
    let dram_bpc = dp.dram_bytes_per_s / (imp.achieved_freq_mhz * 1e6);
    let streams = [
        (ops.input_bytes as f64, dp.input_bytes_per_cycle),
        (ops.weight_bytes as f64, dp.weight_bytes_per_cycle),
        ((ops.output_bytes + ops.acc_spill_bytes + ops.acc_reload_bytes) as f64, dp.acc_bytes_per_cycle),
    ];
    let onchip: f64 = streams.iter().map(|(b, bpc)| b / bpc).sum();
    let dram: f64 = streams.iter().map(|(b, _)| b / dram_bpc).sum();
    let mem: f64 = streams.iter().map(|(b, bpc)| b / bpc.min(dram_bpc)).sum();
    let compute = compute as f64;
    let total = if dp.dataflow && dp.pipeline { compute.max(mem) } else { compute + mem };
    Ok(CycleBreakdown {
        ops,
        compute_cycles: compute,
        onchip_cycles: onchip,
        dram_cycles: dram,
        mem_cycles: mem,
        total_cycles: total,
    })
}

/// Noise-free latency in seconds.
pub fn measure_runtime(
    arch: &OverlayArch,
    imp: &ImplementationResult,
    schedule: &ScheduleConfig,
    workload: &ConvWorkload,
) -> Result<f64, VhwError> {
    let space = ScheduleSpace::new(workload.clone(), arch.clone()).map_err(|e| VhwError::IllegalSchedule(alloc::format!("{e}")))?;
    latency_in(&space, imp, schedule)
}

/// As [`measure_runtime`] with a prebuilt space.
pub fn latency_in(space: &ScheduleSpace, imp: &ImplementationResult, cfg: &ScheduleConfig) -> Result<f64, VhwError> {
    let c = cycle_breakdown(space, imp, cfg)?;
    Ok(c.total_cycles / (imp.achieved_freq_mhz * 1e6))
}

/// Optional multiplicative measurement noise. It only ever slows a run
/// down, by `sigma * |z|` with `z` standard normal.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub sigma: f64,
}

impl NoiseModel {
    pub fn apply<R: Rng + ?Sized>(&self, latency: f64, rng: &mut R) -> f64 {
        if self.sigma <= 0.0 {
            return latency;
        }
        let z: f64 = StandardNormal.sample(rng);
        latency * (1.0 + self.sigma * z.abs())
    }
}

/// Delivered GOPs of a layer run.
pub fn delivered_gops(workload: &ConvWorkload, latency_s: f64) -> f64 {
    if latency_s > 0.0 {
        workload.total_ops() as f64 / latency_s * 1e-9
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedspace::{fig7_layer, BatchMapping, Loop, LoopOrder};
    use crate::vhw::{implement_knobs, DeviceModel, Directive, Knobs};

    fn imp(arch: &OverlayArch, k: Knobs) -> ImplementationResult {
        implement_knobs(&k, arch, &DeviceModel::pynq_z1_like()).unwrap()
    }

    #[test]
    fn single_tile_costs_pipeline_depth() {
        let wl = ConvWorkload::new("unit", 16, 16, 1, 1, 1, 1, 0).unwrap();
        let arch = OverlayArch::vta_default(8);
        let space = ScheduleSpace::new(wl, arch.clone()).unwrap();
        let i = imp(&arch, Knobs::default());
        let c = cycle_breakdown(&space, &i, &space.catalog()[0]).unwrap();
        assert_eq!(c.compute_cycles, GEMM_DEPTH as f64);
    }

    #[test]
    fn half_precision_halves_memory_when_dram_bound() {
        let k = |bits| Knobs { precision: bits, reshape: Directive::cyclic(1, 32), ..Knobs::default() };
        let a8 = OverlayArch::vta_default(8);
        let a4 = OverlayArch { precision: 4, ..a8.clone() };
        let cfg = ScheduleConfig {
            tiles: [1, 2, 16, 6, 12],
            order: LoopOrder([Loop::Oc, Loop::Spatial, Loop::Ic]),
            mapping: BatchMapping::Batch,
        };
        let s8 = ScheduleSpace::new(fig7_layer(), a8.clone()).unwrap();
        let s4 = ScheduleSpace::new(fig7_layer(), a4.clone()).unwrap();
        let c8 = cycle_breakdown(&s8, &imp(&a8, k(8)), &cfg).unwrap();
        let c4 = cycle_breakdown(&s4, &imp(&a4, k(4)), &cfg).unwrap();
        assert_eq!(c8.ops.acc_spill_bytes, 0);
        assert_eq!(c4.compute_cycles, c8.compute_cycles);
        assert!((c4.mem_cycles - c8.mem_cycles / 2.0).abs() < 1e-9 * c8.mem_cycles);
    }

    #[test]
    fn noise_only_slows_down() {
        let mut rng = crate::rng::seeded(1);
        let n = NoiseModel { sigma: 0.1 };
        for _ in 0..100 {
            assert!(n.apply(1.0, &mut rng) >= 1.0);
        }
        assert_eq!(NoiseModel::default().apply(2.0, &mut rng), 2.0);
    }

    #[test]
    fn failed_overlay_cannot_run() {
        let arch = OverlayArch::vta_default(8);
        let k = Knobs { impl_freq_mhz: 500.0, hls_freq_mhz: 500.0, ..Knobs::default() };
        let i = imp(&arch, k);
        let wl = fig7_layer();
        let s = ScheduleSpace::new(wl.clone(), arch.clone()).unwrap();
        assert!(measure_runtime(&arch, &i, &s.catalog()[0], &wl).is_err());
    }
}
