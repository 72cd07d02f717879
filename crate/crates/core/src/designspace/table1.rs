//! The canonical overlay knob grid and its vendor-style defaults.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;

use super::{Feature, FeatureGrid, Level};

pub mod names {
    pub const HLS_FREQ: &str = "HLS_freq";
    pub const INLINE: &str = "Inline";
    pub const UNROLL: &str = "Unroll";
    pub const PIPELINE: &str = "Pipeline";
    pub const DATAFLOW: &str = "Dataflow";
    pub const PARTITION_MODE: &str = "Partition_mode";
    pub const PARTITION_DIM: &str = "Partition_dim";
    pub const PARTITION_FACTOR: &str = "Partition_factor";
    pub const RESHAPE_MODE: &str = "Reshape_mode";
    pub const RESHAPE_DIM: &str = "Reshape_dim";
    pub const RESHAPE_FACTOR: &str = "Reshape_factor";
    pub const IMPL_FREQ: &str = "Impl_freq";
    pub const SYN_STRATEGY: &str = "Syn_strategy";
    pub const IMP_STRATEGY: &str = "Imp_strategy";
}

/// Modeled extents (dim 1, dim 2) of the on-chip buffer arrays that
/// partition/reshape directives act on: buffer depth and tile row width.
pub const ARRAY_EXTENTS: [i64; 2] = [2048, 16];

/// Feature name to pinned value.
pub type Defaults = BTreeMap<String, Level>;

fn mode_values() -> [Level; 3] {
    ["none".into(), "cyclic".into(), "block".into()]
}

/// Frequencies 100..=500 MHz in steps of 20, unroll {1,2,4,8,complete},
/// partition/reshape as mode x dim x factor 1..=32, 8 synthesis and 32
/// implementation strategies, precisions {1,2,4,8}.
pub fn table1_grid() -> FeatureGrid {
    let freqs = || (100..=500).step_by(20);
    let features = vec![
        Feature::ordinal(names::HLS_FREQ, freqs()),
        Feature::boolean(names::INLINE),
        Feature::ordinal(names::UNROLL, [1, 2, 4, 8]).with_trailing("complete"),
        Feature::boolean(names::PIPELINE),
        Feature::boolean(names::DATAFLOW),
        Feature::categorical(names::PARTITION_MODE, mode_values()),
        Feature::ordinal(names::PARTITION_DIM, [1, 2]).gated_by(names::PARTITION_MODE, "none"),
        Feature::ordinal(names::PARTITION_FACTOR, 1..=32).gated_by(names::PARTITION_MODE, "none"),
        Feature::categorical(names::RESHAPE_MODE, mode_values()),
        Feature::ordinal(names::RESHAPE_DIM, [1, 2]).gated_by(names::RESHAPE_MODE, "none"),
        Feature::ordinal(names::RESHAPE_FACTOR, 1..=32).gated_by(names::RESHAPE_MODE, "none"),
        Feature::ordinal(names::IMPL_FREQ, freqs()),
        Feature::categorical(names::SYN_STRATEGY, (0..8).map(Level::Int)),
        Feature::categorical(names::IMP_STRATEGY, (0..32).map(Level::Int)),
    ];
    FeatureGrid::new(features, vec![1, 2, 4, 8]).expect("built-in grid is valid")
}

pub fn table1_defaults() -> Defaults {
    let mut d = Defaults::new();
    let mut put = |k: &str, v: Level| {
        d.insert(k.into(), v);
    };
    put(names::HLS_FREQ, Level::Int(100));
    put(names::INLINE, Level::Bool(false));
    put(names::UNROLL, Level::Int(1));
    put(names::PIPELINE, Level::Bool(true));
    put(names::DATAFLOW, Level::Bool(false));
    put(names::PARTITION_MODE, "none".into());
    put(names::PARTITION_DIM, Level::Int(1));
    put(names::PARTITION_FACTOR, Level::Int(1));
    put(names::RESHAPE_MODE, "none".into());
    put(names::RESHAPE_DIM, Level::Int(1));
    put(names::RESHAPE_FACTOR, Level::Int(1));
    put(names::IMPL_FREQ, Level::Int(100));
    put(names::SYN_STRATEGY, Level::Int(0));
    put(names::IMP_STRATEGY, Level::Int(0));
    d
}
