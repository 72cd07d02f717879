//! Convolution schedules on a GEMM intrinsic.
//!
//! A layer is lowered onto a `(batch, block_in) x (block_in, block_out)`
//! intrinsic. Output channels tile by `block_out`, input channels by
//! `block_in`, and `gemm_batch` rows come from one of batch, output rows or
//! output columns (the [`BatchMapping`]). Every tile factor is counted in
//! intrinsic blocks, so the innermost tile always matches the intrinsic.

mod lower;
mod space;
mod workload;

use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Serialize};

pub use lower::{lower_to_macro_ops, reload_factor, MacroOps, Tensor};
pub use space::{divisors, ScheduleSpace};
pub use workload::{builtin, bytes, fig7_layer, footprint, resnet18_layers, toy_layer, ConvWorkload};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchedError {
    #[error("bad workload: {0}")]
    BadWorkload(String),
    #[error("illegal schedule: {0}")]
    Illegal(String),
}

/// Loop dimensions carrying tile factors, in knob order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dim {
    Batch,
    Oc,
    Ic,
    Oh,
    Ow,
}

impl Dim {
    pub const ALL: [Dim; 5] = [Dim::Batch, Dim::Oc, Dim::Ic, Dim::Oh, Dim::Ow];
}

/// Which workload dimension fills the intrinsic's `gemm_batch` rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchMapping {
    Batch,
    OutH,
    OutW,
}

impl BatchMapping {
    pub const ALL: [BatchMapping; 3] = [BatchMapping::Batch, BatchMapping::OutH, BatchMapping::OutW];
}

/// Outer tile loops; spatial covers batch, output rows and columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loop {
    Oc,
    Ic,
    Spatial,
}

/// A permutation of the three tile loops, outermost first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LoopOrder(pub [Loop; 3]);

impl LoopOrder {
    pub const ALL: [LoopOrder; 6] = [
        LoopOrder([Loop::Oc, Loop::Ic, Loop::Spatial]),
        LoopOrder([Loop::Oc, Loop::Spatial, Loop::Ic]),
        LoopOrder([Loop::Ic, Loop::Oc, Loop::Spatial]),
        LoopOrder([Loop::Ic, Loop::Spatial, Loop::Oc]),
        LoopOrder([Loop::Spatial, Loop::Oc, Loop::Ic]),
        LoopOrder([Loop::Spatial, Loop::Ic, Loop::Oc]),
    ];

    pub fn id(&self) -> usize {
        Self::ALL.iter().position(|o| o == self).expect("every order is listed")
    }

    pub fn position(&self, l: Loop) -> usize {
        self.0.iter().position(|&x| x == l).expect("permutation")
    }

    /// Order with positions `i` and `i + 1` exchanged.
    pub fn swapped(&self, i: usize) -> Self {
        let mut o = self.0;
        o.swap(i, i + 1);
        LoopOrder(o)
    }
}

impl fmt::Display for LoopOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = |l: &Loop| match l {
            Loop::Oc => "oc",
            Loop::Ic => "ic",
            Loop::Spatial => "sp",
        };
        write!(f, "{}-{}-{}", n(&self.0[0]), n(&self.0[1]), n(&self.0[2]))
    }
}

/// One schedule: tile sizes in intrinsic blocks for
/// `[batch, oc, ic, oh, ow]`, a loop order and a batch mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub tiles: [u64; 5],
    pub order: LoopOrder,
    pub mapping: BatchMapping,
}

impl ScheduleConfig {
    pub fn tile(&self, d: Dim) -> u64 {
        self.tiles[d as usize]
    }

    /// Compact label, e.g. `oh:1,4,4,3,12/oc-ic-sp`.
    pub fn label(&self) -> String {
        let m = match self.mapping {
            BatchMapping::Batch => "b",
            BatchMapping::OutH => "oh",
            BatchMapping::OutW => "ow",
        };
        let t = &self.tiles;
        alloc::format!("{m}:{},{},{},{},{}/{}", t[0], t[1], t[2], t[3], t[4], self.order)
    }

    /// Number of differing knobs (mapping, order, each tile).
    pub fn knob_distance(&self, other: &Self) -> usize {
        let tiles = self.tiles.iter().zip(&other.tiles).filter(|(a, b)| a != b).count();
        tiles + usize::from(self.order != other.order) + usize::from(self.mapping != other.mapping)
    }

    /// Numeric knob vector for surrogate models.
    pub fn features(&self) -> [f64; 7] {
        let t = self.tiles.map(|v| v as f64);
        [self.mapping as usize as f64, self.order.id() as f64, t[0], t[1], t[2], t[3], t[4]]
    }

    pub const FEATURE_NAMES: [&'static str; 7] =
        ["mapping", "order", "tile_batch", "tile_oc", "tile_ic", "tile_oh", "tile_ow"];
}
