use alloc::string::String;

use serde::{Deserialize, Serialize};

use super::bram::{bram_cost, Directive, DirectiveMode};
use super::{peak_gops, DeviceModel, OverlayArch, VhwError, ACC_BITS};
use crate::designspace::{names, DesignPoint, FeatureGrid, Level};
use crate::rng::mix;

/// Congestion cost per doubling of the partition factor.
pub const C1_PARTITION: f64 = 0.06;
/// Congestion cost per unit of the worst resource utilization.
pub const C2_UTILIZATION: f64 = 0.4;
/// Timing slack gained per 400 MHz of HLS target above the implementation clock.
pub const HLS_SLACK_GAIN: f64 = 0.08;
/// Pipeline depth of the GEMM core in cycles.
pub const GEMM_DEPTH: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unroll {
    Factor(u64),
    Complete,
}

impl Unroll {
    /// Numeric factor; complete unrolling spans the intrinsic's inner dim.
    pub fn resolve(&self, arch: &OverlayArch) -> u64 {
        match *self {
            Unroll::Factor(f) => f.max(1),
            Unroll::Complete => arch.gemm_block_in,
        }
    }
}

/// Typed view of a design point. Knobs absent from the grid keep their
/// toolchain defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knobs {
    pub hls_freq_mhz: f64,
    pub inline: bool,
    pub unroll: Unroll,
    pub pipeline: bool,
    pub dataflow: bool,
    pub partition: Directive,
    pub reshape: Directive,
    pub impl_freq_mhz: f64,
    pub syn_strategy: usize,
    pub imp_strategy: usize,
    pub precision: u32,
}

impl Default for Knobs {
    fn default() -> Self {
        Self {
            hls_freq_mhz: 100.0,
            inline: false,
            unroll: Unroll::Factor(1),
            pipeline: true,
            dataflow: false,
            partition: Directive::none(),
            reshape: Directive::none(),
            impl_freq_mhz: 100.0,
            syn_strategy: 0,
            imp_strategy: 0,
            precision: 8,
        }
    }
}

fn bad(name: &str, l: &Level) -> VhwError {
    VhwError::Precondition(alloc::format!("value `{l}` of `{name}` is not understood"))
}

impl Knobs {
    pub fn from_point(grid: &FeatureGrid, point: &DesignPoint) -> Result<Self, VhwError> {
        grid.validate_point(point).map_err(|e| VhwError::Precondition(alloc::format!("{e}")))?;
        let mut k = Knobs { precision: point.precision, ..Knobs::default() };
        let int = |name: &str| -> Result<Option<i64>, VhwError> {
            match grid.level(point, name) {
                None => Ok(None),
                Some(l) => l.as_int().map(Some).ok_or_else(|| bad(name, l)),
            }
        };
        let flag = |name: &str| -> Result<Option<bool>, VhwError> {
            match grid.level(point, name) {
                None => Ok(None),
                Some(l) => l.as_bool().map(Some).ok_or_else(|| bad(name, l)),
            }
        };
        let directive = |mode: &str, dim: &str, factor: &str| -> Result<Directive, VhwError> {
            let m = match grid.level(point, mode) {
                None => DirectiveMode::None,
                Some(l) => l.as_sym().and_then(DirectiveMode::parse).ok_or_else(|| bad(mode, l))?,
            };
            Ok(Directive {
                mode: m,
                dim: int(dim)?.unwrap_or(1) as u32,
                factor: int(factor)?.unwrap_or(1).max(0) as u64,
            })
        };
        if let Some(v) = int(names::HLS_FREQ)? {
            k.hls_freq_mhz = v as f64;
        }
        if let Some(v) = flag(names::INLINE)? {
            k.inline = v;
        }
        if let Some(l) = grid.level(point, names::UNROLL) {
            k.unroll = match l {
                Level::Int(v) if *v >= 1 => Unroll::Factor(*v as u64),
                Level::Sym(s) if s == "complete" => Unroll::Complete,
                _ => return Err(bad(names::UNROLL, l)),
            };
        }
        if let Some(v) = flag(names::PIPELINE)? {
            k.pipeline = v;
        }
        if let Some(v) = flag(names::DATAFLOW)? {
            k.dataflow = v;
        }
        k.partition = directive(names::PARTITION_MODE, names::PARTITION_DIM, names::PARTITION_FACTOR)?;
        k.reshape = directive(names::RESHAPE_MODE, names::RESHAPE_DIM, names::RESHAPE_FACTOR)?;
        if let Some(v) = int(names::IMPL_FREQ)? {
            k.impl_freq_mhz = v as f64;
        }
        for (name, slot) in [(names::SYN_STRATEGY, &mut k.syn_strategy), (names::IMP_STRATEGY, &mut k.imp_strategy)] {
            if let Some(i) = grid.feature_index(name) {
                *slot = point.choices[i];
            }
        }
        Ok(k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    TimingFailure,
    ResourceOverflow,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::TimingFailure => "timing_failure",
            Status::ResourceOverflow => "resource_overflow",
        }
    }
}

/// The quantity that made an implementation fail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub quantity: String,
    pub required: f64,
    pub available: f64,
}

/// What the runtime model needs to know about the implemented datapath.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Datapath {
    pub input_bytes_per_cycle: f64,
    pub weight_bytes_per_cycle: f64,
    pub acc_bytes_per_cycle: f64,
    pub pipeline: bool,
    pub dataflow: bool,
    pub unroll: u64,
    pub dram_bytes_per_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplementationResult {
    pub status: Status,
    pub achieved_freq_mhz: f64,
    pub fmax_mhz: f64,
    pub brams: u64,
    pub dsps: u64,
    pub luts: u64,
    pub ffs: u64,
    pub peak_gops: f64,
    pub violation: Option<Violation>,
    pub datapath: Datapath,
}

impl ImplementationResult {
    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resources {
    pub brams: u64,
    pub dsps: u64,
    pub luts: u64,
    pub ffs: u64,
}

impl Resources {
    /// Largest utilization fraction across the four resource kinds.
    pub fn max_utilization(&self, d: &DeviceModel) -> f64 {
        [
            self.brams as f64 / d.bram_count as f64,
            self.dsps as f64 / d.dsp_count as f64,
            self.luts as f64 / d.lut_count as f64,
            self.ffs as f64 / d.ff_count as f64,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Multipliers packed per DSP slice at `bits`; `None` when LUT-mapped.
pub fn dsp_packing(bits: u32) -> Option<u64> {
    match bits {
        1 => None,
        2..=8 => Some(16 / bits as u64),
        _ => Some(1),
    }
}

/// Deterministic timing effect of a tool strategy, within a few percent.
/// Index 0 is the neutral default.
pub fn strategy_factor(kind: u64, index: usize, spread: f64) -> f64 {
    if index == 0 {
        return 1.0;
    }
    let u = (mix(&[kind, index as u64]) % 1001) as f64 / 1000.0;
    1.0 + (u - 0.5) * 2.0 * spread
}

struct Buffers {
    brams: u64,
    input_bpc: f64,
    weight_bpc: f64,
    acc_bpc: f64,
}

fn buffers(arch: &OverlayArch, k: &Knobs, d: &DeviceModel) -> Result<Buffers, VhwError> {
    let bits = arch.precision;
    let elems = |bytes: u64, b: u32| bytes * 8 / b as u64;
    let input = bram_cost(elems(arch.input_buffer_bytes, bits), bits, k.partition, k.reshape, d)?;
    let weight = bram_cost(elems(arch.weight_buffer_bytes, bits), bits, k.partition, k.reshape, d)?;
    let acc = bram_cost(elems(arch.acc_buffer_bytes, ACC_BITS), ACC_BITS, k.partition, k.reshape, d)?;
    Ok(Buffers {
        brams: input.brams + weight.brams + acc.brams,
        input_bpc: input.bytes_per_cycle,
        weight_bpc: weight.bytes_per_cycle,
        acc_bpc: acc.bytes_per_cycle,
    })
}

/// Resource estimate of the overlay with the given knobs.
pub fn estimate_resources(arch: &OverlayArch, k: &Knobs, d: &DeviceModel) -> Result<Resources, VhwError> {
    let bits = arch.precision;
    let mults = arch.multipliers();
    let buf = buffers(arch, k, d)?;
    let f = k.partition.effective();
    let r = k.reshape.effective();
    let u = k.unroll.resolve(arch);

    let dsps = dsp_packing(bits).map_or(0, |p| mults.div_ceil(p));
    let mut luts = 12_000.0 + mults as f64 * (2 * bits.min(16) + 4) as f64 / 2.0;
    if dsp_packing(bits).is_none() {
        luts += 3.0 * mults as f64;
    }
    let mut ffs = 15_000.0 + mults as f64 * 4.0;
    luts += 600.0 * u as f64 + 120.0 * f as f64 + 20.0 * r as f64;
    ffs += 900.0 * u as f64 + 90.0 * f as f64 + 40.0 * r as f64;
    if k.pipeline {
        luts += 1_000.0;
        ffs += 4_000.0;
    }
    if k.dataflow {
        luts += 2_500.0;
        ffs += 3_000.0;
    }
    ffs += 20.0 * (k.hls_freq_mhz - 100.0).max(0.0);
    if k.inline {
        luts *= 0.92;
        ffs *= 1.02;
    }
    let brams = buf.brams + 2 + if k.dataflow { 4 } else { 0 };
    Ok(Resources { brams, dsps, luts: libm::ceil(luts) as u64, ffs: libm::ceil(ffs) as u64 })
}

/// Highest clock the placed design closes at, in MHz.
pub fn fmax_eff(k: &Knobs, res: &Resources, d: &DeviceModel) -> f64 {
    let part = libm::log2(k.partition.effective().max(1) as f64);
    let pressure = res.max_utilization(d);
    let hls = 1.0 + HLS_SLACK_GAIN * (k.hls_freq_mhz - k.impl_freq_mhz) / 400.0;
    let strat = strategy_factor(1, k.syn_strategy, 0.03) * strategy_factor(2, k.imp_strategy, 0.04);
    let inline = if k.inline { 0.98 } else { 1.0 };
    let congestion = (1.0 - C1_PARTITION * part - C2_UTILIZATION * pressure).max(0.01);
    d.fmax_base_mhz * strat * hls * inline * congestion
}

/// Runs the virtual synthesis and implementation flow.
pub fn implement(point: &DesignPoint, grid: &FeatureGrid, arch: &OverlayArch, d: &DeviceModel) -> Result<ImplementationResult, VhwError> {
    let k = Knobs::from_point(grid, point)?;
    implement_knobs(&k, arch, d)
}

pub fn implement_knobs(k: &Knobs, arch: &OverlayArch, d: &DeviceModel) -> Result<ImplementationResult, VhwError> {
    arch.validate()?;
    d.validate()?;
    if k.precision != arch.precision {
        return Err(VhwError::Precondition(alloc::format!(
            "point precision {} does not match overlay precision {}",
            k.precision,
            arch.precision
        )));
    }
    if !(k.impl_freq_mhz > 0.0 && k.hls_freq_mhz > 0.0) {
        return Err(VhwError::Precondition("frequencies must be positive".into()));
    }
    let res = estimate_resources(arch, k, d)?;
    let buf = buffers(arch, k, d)?;
    let fmax = fmax_eff(k, &res, d);
    let datapath = Datapath {
        input_bytes_per_cycle: buf.input_bpc,
        weight_bytes_per_cycle: buf.weight_bpc,
        acc_bytes_per_cycle: buf.acc_bpc,
        pipeline: k.pipeline,
        dataflow: k.dataflow,
        unroll: k.unroll.resolve(arch),
        dram_bytes_per_s: d.dram_bandwidth_bytes_per_s,
    };
    let checks = [
        ("bram", res.brams, d.bram_count),
        ("dsp", res.dsps, d.dsp_count),
        ("lut", res.luts, d.lut_count),
        ("ff", res.ffs, d.ff_count),
    ];
    let over = checks.iter().find(|(_, used, cap)| used > cap);
    let (status, violation) = if let Some((q, used, cap)) = over {
        let v = Violation { quantity: (*q).into(), required: *used as f64, available: *cap as f64 };
        (Status::ResourceOverflow, Some(v))
    } else if k.impl_freq_mhz > fmax {
        let v = Violation { quantity: "freq_mhz".into(), required: k.impl_freq_mhz, available: fmax };
        (Status::TimingFailure, Some(v))
    } else {
        (Status::Ok, None)
    };
    let achieved = if status == Status::Ok { k.impl_freq_mhz } else { 0.0 };
    Ok(ImplementationResult {
        status,
        achieved_freq_mhz: achieved,
        fmax_mhz: fmax,
        brams: res.brams,
        dsps: res.dsps,
        luts: res.luts,
        ffs: res.ffs,
        peak_gops: peak_gops(arch, achieved),
        violation,
        datapath,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designspace::{table1_defaults, table1_grid};

    fn point(levels: &[(&str, Level)], precision: u32) -> (FeatureGrid, DesignPoint) {
        let g = table1_grid();
        let p = g.point_from_levels(precision, levels, &table1_defaults()).unwrap();
        (g, p)
    }

    #[test]
    fn defaults_close_timing() {
        let (g, p) = point(&[], 8);
        let r = implement(&p, &g, &OverlayArch::vta_default(8), &DeviceModel::pynq_z1_like()).unwrap();
        assert_eq!(r.status, Status::Ok);
        assert_eq!(r.achieved_freq_mhz, 100.0);
        assert_eq!(r.peak_gops, 51.2);
        assert!(r.fmax_mhz > 100.0);
    }

    #[test]
    fn defaults_close_timing_at_every_precision() {
        for bits in [1, 2, 4, 8] {
            let (g, p) = point(&[], bits);
            let r = implement(&p, &g, &OverlayArch::vta_default(bits), &DeviceModel::pynq_z1_like()).unwrap();
            assert_eq!(r.status, Status::Ok, "{bits}");
        }
    }

    #[test]
    fn aggressive_corner_fails_timing() {
        let (g, p) = point(
            &[
                ("HLS_freq", 500.into()),
                ("Impl_freq", 500.into()),
                ("Partition_mode", "cyclic".into()),
                ("Partition_dim", 1.into()),
                ("Partition_factor", 32.into()),
                ("Reshape_mode", "cyclic".into()),
                ("Reshape_dim", 2.into()),
                ("Reshape_factor", 16.into()),
            ],
            8,
        );
        let r = implement(&p, &g, &OverlayArch::vta_default(8), &DeviceModel::pynq_z1_like()).unwrap();
        assert_eq!(r.status, Status::TimingFailure);
        assert_eq!(r.achieved_freq_mhz, 0.0);
        assert_eq!(r.violation.unwrap().quantity, "freq_mhz");
    }

    #[test]
    fn huge_gemm_overflows_small_device() {
        let (g, p) = point(&[], 8);
        let arch = OverlayArch::vta_default(8).with_gemm(64, 64, 64);
        let r = implement(&p, &g, &arch, &DeviceModel::small()).unwrap();
        assert_eq!(r.status, Status::ResourceOverflow);
        assert!(r.dsps > DeviceModel::small().dsp_count);
    }

    #[test]
    fn packing_law() {
        let k8 = Knobs::default();
        let k4 = Knobs { precision: 4, ..Knobs::default() };
        let d = DeviceModel::pynq_z1_like();
        let arch8 = OverlayArch::vta_default(8);
        let arch4 = OverlayArch { precision: 4, ..arch8.clone() };
        let r8 = estimate_resources(&arch8, &k8, &d).unwrap();
        let r4 = estimate_resources(&arch4, &k4, &d).unwrap();
        assert!(r4.dsps <= r8.dsps);
        assert_eq!(dsp_packing(1), None);
    }

    #[test]
    fn congestion_non_increasing_in_partition() {
        let d = DeviceModel::pynq_z1_like();
        let arch = OverlayArch::vta_default(8);
        let mut prev = f64::INFINITY;
        for f in [1, 2, 4, 8, 16, 32] {
            let k = Knobs { partition: Directive::cyclic(1, f), ..Knobs::default() };
            let res = estimate_resources(&arch, &k, &d).unwrap();
            let fm = fmax_eff(&k, &res, &d);
            assert!(fm <= prev);
            prev = fm;
        }
    }

    #[test]
    fn precision_mismatch_is_precondition_error() {
        let (g, p) = point(&[], 4);
        assert!(matches!(
            implement(&p, &g, &OverlayArch::vta_default(8), &DeviceModel::pynq_z1_like()),
            Err(VhwError::Precondition(_))
        ));
    }

    #[test]
    fn strategies_are_deterministic_and_small() {
        assert_eq!(strategy_factor(1, 0, 0.03), 1.0);
        for i in 1..32 {
            let s = strategy_factor(2, i, 0.04);
            assert_eq!(s, strategy_factor(2, i, 0.04));
            assert!((0.96..=1.04).contains(&s));
        }
    }
}
