use serde::{Deserialize, Serialize};

use super::workload::bytes;
use super::{Dim, Loop, LoopOrder, SchedError, ScheduleConfig, ScheduleSpace};

/// GEMM calls and DRAM traffic of one lowered schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MacroOps {
    pub gemm_calls: u64,
    pub input_bytes: u64,
    pub weight_bytes: u64,
    /// Final outputs written at operand precision.
    pub output_bytes: u64,
    /// Partial sums written back at accumulator width.
    pub acc_spill_bytes: u64,
    /// Partial sums read back at accumulator width.
    pub acc_reload_bytes: u64,
}

impl MacroOps {
    pub fn load_bytes(&self) -> u64 {
        self.input_bytes + self.weight_bytes + self.acc_reload_bytes
    }

    pub fn store_bytes(&self) -> u64 {
        self.output_bytes + self.acc_spill_bytes
    }

    pub fn dram_bytes(&self) -> u64 {
        self.load_bytes() + self.store_bytes()
    }
}

fn deps(tensor: Tensor) -> &'static [Loop] {
    match tensor {
        Tensor::Weight => &[Loop::Oc, Loop::Ic],
        Tensor::Input => &[Loop::Ic, Loop::Spatial],
        Tensor::Output => &[Loop::Oc, Loop::Spatial],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tensor {
    Input,
    Weight,
    Output,
}

/// How many times each tile of `tensor` is brought on chip: the product of
/// trip counts of the loops it does not index that sit outside its
/// innermost indexing loop.
pub fn reload_factor(order: &LoopOrder, trips: impl Fn(Loop) -> u64, tensor: Tensor) -> u64 {
    let d = deps(tensor);
    let inner = d.iter().map(|&l| order.position(l)).max().expect("non-empty");
    order.0[..inner].iter().filter(|l| !d.contains(l)).map(|&l| trips(l)).product()
}

/// Lowers a legal schedule to intrinsic calls and DRAM byte counts.
pub fn lower_to_macro_ops(cfg: &ScheduleConfig, space: &ScheduleSpace) -> Result<MacroOps, SchedError> {
    space.check(cfg)?;
    let w = space.workload();
    let bits = space.arch().precision;
    let n = space.blocks(cfg.mapping);
    let t = |d: Dim| n[d as usize] / cfg.tile(d);
    let trips = |l: Loop| match l {
        Loop::Oc => t(Dim::Oc),
        Loop::Ic => t(Dim::Ic),
        Loop::Spatial => t(Dim::Batch) * t(Dim::Oh) * t(Dim::Ow),
    };
    let (in_tile, w_tile, acc_tile) = space.tile_bytes(cfg);
    let [b, oc, _, oh, ow] = space.tile_elems(cfg);
    let out_tile = bytes(b * oc * oh * ow, bits);

    let sp = trips(Loop::Spatial);
    let r_in = reload_factor(&cfg.order, trips, Tensor::Input);
    let r_w = reload_factor(&cfg.order, trips, Tensor::Weight);
    let r_out = reload_factor(&cfg.order, trips, Tensor::Output);
    let out_tiles = trips(Loop::Oc) * sp;
    Ok(MacroOps {
        gemm_calls: n.iter().product::<u64>() * w.kernel_h * w.kernel_w,
        input_bytes: trips(Loop::Ic) * sp * in_tile * r_in,
        weight_bytes: trips(Loop::Oc) * trips(Loop::Ic) * w_tile * r_w,
        output_bytes: out_tiles * out_tile,
        acc_spill_bytes: out_tiles * (r_out - 1) * acc_tile,
        acc_reload_bytes: out_tiles * (r_out - 1) * acc_tile,
    })
}
