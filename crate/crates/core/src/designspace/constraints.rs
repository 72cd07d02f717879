use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::table1::{names, ARRAY_EXTENTS};
use super::{DesignPoint, FeatureGrid, Level};

/// User-supplied predicate.
pub type RuleFn = Arc<dyn Fn(&FeatureGrid, &DesignPoint) -> bool + Send + Sync>;

/// Predicate over a design point. Rules naming features the grid lacks are
/// vacuously satisfied.
#[derive(Clone)]
pub enum Rule {
    /// Partition and Reshape may not both use a factor > 1 on the same dim.
    ExclusivePartitionReshape,
    /// `Impl_freq <= HLS_freq`.
    ImplNotAboveHls,
    /// An active partition/reshape factor divides the modeled array extent
    /// of its dim (`extents[dim - 1]`).
    FactorDividesExtent { extents: [i64; 2] },
    /// `Dataflow` implies `Pipeline`.
    DataflowNeedsPipeline,
    /// A directive in mode `none` keeps its dim and factor at their first
    /// value, so "off" has a single representation.
    CanonicalNone,
    /// Product of the named integer features stays at or below `limit`.
    ProductAtMost { features: Vec<String>, limit: i64 },
    Custom(RuleFn),
}

impl fmt::Debug for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::ExclusivePartitionReshape => f.write_str("ExclusivePartitionReshape"),
            Rule::ImplNotAboveHls => f.write_str("ImplNotAboveHls"),
            Rule::FactorDividesExtent { extents } => write!(f, "FactorDividesExtent({extents:?})"),
            Rule::DataflowNeedsPipeline => f.write_str("DataflowNeedsPipeline"),
            Rule::CanonicalNone => f.write_str("CanonicalNone"),
            Rule::ProductAtMost { features, limit } => write!(f, "ProductAtMost({features:?} <= {limit})"),
            Rule::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub id: String,
    pub description: String,
    pub rule: Rule,
}

struct Directive {
    active: bool,
    dim: i64,
    factor: i64,
}

fn directive(grid: &FeatureGrid, p: &DesignPoint, mode: &str, dim: &str, factor: &str) -> Option<Directive> {
    let mode = grid.level(p, mode)?;
    let active = mode.as_sym() != Some("none");
    let dim = grid.level(p, dim).and_then(Level::as_int).unwrap_or(1);
    let factor = grid.level(p, factor).and_then(Level::as_int).unwrap_or(1);
    Some(Directive { active, dim, factor })
}

fn partition(grid: &FeatureGrid, p: &DesignPoint) -> Option<Directive> {
    directive(grid, p, names::PARTITION_MODE, names::PARTITION_DIM, names::PARTITION_FACTOR)
}

fn reshape(grid: &FeatureGrid, p: &DesignPoint) -> Option<Directive> {
    directive(grid, p, names::RESHAPE_MODE, names::RESHAPE_DIM, names::RESHAPE_FACTOR)
}

fn first_value(grid: &FeatureGrid, p: &DesignPoint, name: &str) -> bool {
    match grid.feature_index(name) {
        Some(i) => p.choices[i] == 0,
        None => true,
    }
}

impl Constraint {
    pub fn new(id: &str, description: &str, rule: Rule) -> Self {
        Self { id: id.into(), description: description.into(), rule }
    }

    pub fn holds(&self, grid: &FeatureGrid, p: &DesignPoint) -> bool {
        match &self.rule {
            Rule::ExclusivePartitionReshape => match (partition(grid, p), reshape(grid, p)) {
                (Some(a), Some(b)) => {
                    let fa = if a.active { a.factor } else { 1 };
                    let fb = if b.active { b.factor } else { 1 };
                    !(fa > 1 && fb > 1 && a.dim == b.dim)
                }
                _ => true,
            },
            Rule::ImplNotAboveHls => {
                let hls = grid.level(p, names::HLS_FREQ).and_then(Level::as_int);
                let imp = grid.level(p, names::IMPL_FREQ).and_then(Level::as_int);
                match (hls, imp) {
                    (Some(h), Some(i)) => i <= h,
                    _ => true,
                }
            }
            Rule::FactorDividesExtent { extents } => [partition(grid, p), reshape(grid, p)]
                .into_iter()
                .flatten()
                .filter(|d| d.active)
                .all(|d| {
                    let Some(&extent) = usize::try_from(d.dim - 1).ok().and_then(|i| extents.get(i)) else {
                        return false;
                    };
                    d.factor >= 1 && extent % d.factor == 0
                }),
            Rule::DataflowNeedsPipeline => {
                let df = grid.level(p, names::DATAFLOW).and_then(Level::as_bool);
                let pl = grid.level(p, names::PIPELINE).and_then(Level::as_bool);
                !(df == Some(true) && pl == Some(false))
            }
            Rule::CanonicalNone => {
                let ok = |mode: &str, dim: &str, factor: &str| {
                    let off = grid.level(p, mode).and_then(Level::as_sym) == Some("none");
                    !off || (first_value(grid, p, dim) && first_value(grid, p, factor))
                };
                ok(names::PARTITION_MODE, names::PARTITION_DIM, names::PARTITION_FACTOR)
                    && ok(names::RESHAPE_MODE, names::RESHAPE_DIM, names::RESHAPE_FACTOR)
            }
            Rule::ProductAtMost { features, limit } => {
                let product = features
                    .iter()
                    .filter_map(|n| grid.level(p, n).and_then(Level::as_int))
                    .fold(1i64, |acc, v| acc.saturating_mul(v));
                product <= *limit
            }
            Rule::Custom(f) => f(grid, p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductLimit {
    pub features: Vec<String>,
    pub limit: i64,
}

/// Toggleable built-in constraint set, as written in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstraintSet {
    pub exclusive_partition_reshape: bool,
    pub impl_not_above_hls: bool,
    pub factor_divides_extent: bool,
    pub dataflow_needs_pipeline: bool,
    pub canonical_none: bool,
    pub array_extents: [i64; 2],
    pub product_at_most: Vec<ProductLimit>,
}

impl Default for ConstraintSet {
    fn default() -> Self {
        Self {
            exclusive_partition_reshape: true,
            impl_not_above_hls: true,
            factor_divides_extent: true,
            dataflow_needs_pipeline: true,
            canonical_none: true,
            array_extents: ARRAY_EXTENTS,
            product_at_most: Vec::new(),
        }
    }
}

impl ConstraintSet {
    pub fn none() -> Self {
        Self {
            exclusive_partition_reshape: false,
            impl_not_above_hls: false,
            factor_divides_extent: false,
            dataflow_needs_pipeline: false,
            canonical_none: false,
            array_extents: ARRAY_EXTENTS,
            product_at_most: Vec::new(),
        }
    }

    pub fn build(&self) -> Vec<Constraint> {
        let mut out = Vec::new();
        if self.exclusive_partition_reshape {
            out.push(Constraint::new(
                "exclusive-partition-reshape",
                "Partition and Reshape may not both have factor > 1 on the same dim",
                Rule::ExclusivePartitionReshape,
            ));
        }
        if self.impl_not_above_hls {
            out.push(Constraint::new(
                "impl-not-above-hls",
                "implementation frequency may not exceed the HLS target frequency",
                Rule::ImplNotAboveHls,
            ));
        }
        if self.factor_divides_extent {
            out.push(Constraint::new(
                "factor-divides-extent",
                "partition/reshape factor must divide the modeled array extent of its dim",
                Rule::FactorDividesExtent { extents: self.array_extents },
            ));
        }
        if self.dataflow_needs_pipeline {
            out.push(Constraint::new(
                "dataflow-needs-pipeline",
                "task-level dataflow requires pipelined loops",
                Rule::DataflowNeedsPipeline,
            ));
        }
        if self.canonical_none {
            out.push(Constraint::new(
                "canonical-none",
                "a directive in mode none keeps dim and factor at their first value",
                Rule::CanonicalNone,
            ));
        }
        for (i, lim) in self.product_at_most.iter().enumerate() {
            out.push(Constraint::new(
                &alloc::format!("product-at-most-{i}"),
                "product of the listed integer features is bounded",
                Rule::ProductAtMost { features: lim.features.clone(), limit: lim.limit },
            ));
        }
        out
    }
}
