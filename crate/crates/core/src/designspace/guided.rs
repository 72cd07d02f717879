//! Importance-guided overlay sampling.
//!
//! The `top_k` most important features vary over their full value lists and
//! every other feature is pinned to its default. The resulting reduced grid
//! is filtered by the constraints, scored, and cut to the requested size.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::table1::names;
use super::{table1_defaults, Constraint, Defaults, DesignPoint, DesignSpaceError, FeatureGrid};

/// Higher is better. Typically a boosted-tree GOPs predictor.
pub trait PointScorer {
    fn score(&self, grid: &FeatureGrid, point: &DesignPoint) -> f64;
}

impl<F: Fn(&FeatureGrid, &DesignPoint) -> f64> PointScorer for F {
    fn score(&self, grid: &FeatureGrid, point: &DesignPoint) -> f64 {
        self(grid, point)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GuidanceParams {
    pub top_k: usize,
    pub defaults: Defaults,
    /// Feature to the feature bounding its feasible range. Varying the key
    /// alone would be pointless while the bound stays pinned, so the bound
    /// varies with it.
    pub companions: BTreeMap<String, String>,
}

impl Default for GuidanceParams {
    fn default() -> Self {
        let mut companions = BTreeMap::new();
        companions.insert(names::IMPL_FREQ.into(), names::HLS_FREQ.into());
        Self { top_k: 4, defaults: table1_defaults(), companions }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuidedSample {
    pub points: Vec<DesignPoint>,
    /// Fewer than the requested number of feasible points existed.
    pub shortfall: bool,
}

/// Feature indices by descending importance; ties keep declaration order.
pub fn feature_ranking(importance: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..importance.len()).collect();
    idx.sort_by(|&a, &b| {
        let (x, y) = (importance[a], importance[b]);
        y.partial_cmp(&x).unwrap_or(core::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    idx
}

/// Chooses the varying features: the `top_k` most important ones, each
/// bringing its gate or companion along (those do not count toward
/// `top_k`), since varying a feature whose gate or bound stays pinned would
/// change nothing.
fn varying(grid: &FeatureGrid, importance: &[f64], params: &GuidanceParams) -> Vec<bool> {
    let mut on = alloc::vec![false; grid.features().len()];
    let mut ranked = 0;
    for f in feature_ranking(importance) {
        if ranked >= params.top_k {
            break;
        }
        if on[f] {
            continue;
        }
        ranked += 1;
        on[f] = true;
        let feat = &grid.features()[f];
        let partner = feat
            .gate
            .as_ref()
            .map(|g| &g.feature)
            .or_else(|| params.companions.get(&feat.name))
            .and_then(|n| grid.feature_index(n));
        if let Some(g) = partner {
            on[g] = true;
        }
    }
    on
}

fn reduced_grid(
    grid: &FeatureGrid,
    importance: &[f64],
    precision: u32,
    params: &GuidanceParams,
) -> Result<(DesignPoint, Vec<usize>), DesignSpaceError> {
    if importance.len() != grid.features().len() {
        return Err(DesignSpaceError::InvalidPoint(alloc::format!(
            "{} importance scores for {} features",
            importance.len(),
            grid.features().len()
        )));
    }
    let base = grid.point_from_levels(precision, &[], &params.defaults)?;
    let on = varying(grid, importance, params);
    let free = (0..on.len()).filter(|&i| on[i]).collect();
    Ok((base, free))
}

/// Every feasible point of the reduced grid not in `exclude`, best score
/// first. Without a scorer the enumeration order is kept.
pub fn rank_guided(
    grid: &FeatureGrid,
    constraints: &[Constraint],
    importance: &[f64],
    precision: u32,
    params: &GuidanceParams,
    scorer: Option<&dyn PointScorer>,
    exclude: &BTreeSet<DesignPoint>,
) -> Result<Vec<DesignPoint>, DesignSpaceError> {
    let (base, free) = reduced_grid(grid, importance, precision, params)?;
    let mut out = Vec::new();
    let mut cur = base;
    loop {
        if !exclude.contains(&cur) && constraints.iter().all(|c| c.holds(grid, &cur)) {
            out.push(cur.clone());
        }
        // odometer over the free features, last fastest
        let mut carried = true;
        for &f in free.iter().rev() {
            cur.choices[f] += 1;
            if cur.choices[f] < grid.features()[f].len() {
                carried = false;
                break;
            }
            cur.choices[f] = 0;
        }
        if carried {
            break;
        }
    }
    if let Some(s) = scorer {
        let mut scored: Vec<(f64, usize, DesignPoint)> =
            out.into_iter().enumerate().map(|(i, p)| (s.score(grid, &p), i, p)).collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        out = scored.into_iter().map(|(_, _, p)| p).collect();
    }
    Ok(out)
}

/// Up to `m` distinct feasible points of the reduced grid: the top `m` by
/// score, or a uniform draw when no scorer is given.
#[allow(clippy::too_many_arguments)]
pub fn sample_guided<R: Rng + ?Sized>(
    grid: &FeatureGrid,
    constraints: &[Constraint],
    importance: &[f64],
    precision: u32,
    m: usize,
    params: &GuidanceParams,
    scorer: Option<&dyn PointScorer>,
    exclude: &BTreeSet<DesignPoint>,
    rng: &mut R,
) -> Result<GuidedSample, DesignSpaceError> {
    let mut ranked = rank_guided(grid, constraints, importance, precision, params, scorer, exclude)?;
    let shortfall = ranked.len() < m;
    let points = if scorer.is_some() || shortfall {
        ranked.truncate(m);
        ranked
    } else {
        let mut picks = rand::seq::index::sample(rng, ranked.len(), m).into_vec();
        picks.sort_unstable();
        picks.into_iter().map(|i| ranked[i].clone()).collect()
    };
    Ok(GuidedSample { points, shortfall })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designspace::{eliminate, table1_grid, ConstraintSet, Feature, Level};
    use crate::rng::seeded;

    fn toy() -> FeatureGrid {
        FeatureGrid::new(
            alloc::vec![Feature::ordinal("a", [1, 2, 3]), Feature::boolean("b"), Feature::ordinal("c", [1, 2])],
            alloc::vec![8],
        )
        .unwrap()
    }

    fn no_defaults() -> GuidanceParams {
        GuidanceParams { top_k: 4, defaults: Defaults::new(), companions: BTreeMap::new() }
    }

    #[test]
    fn uniform_importance_all_features_gives_whole_space() {
        let g = toy();
        let params = GuidanceParams { top_k: 3, ..no_defaults() };
        let n = eliminate(&g, &[]).count();
        let s = sample_guided(&g, &[], &[1.0; 3], 8, n, &params, None, &BTreeSet::new(), &mut seeded(1)).unwrap();
        assert!(!s.shortfall);
        let got: BTreeSet<_> = s.points.into_iter().collect();
        let all: BTreeSet<_> = g.points().collect();
        assert_eq!(got, all);
    }

    #[test]
    fn single_boolean_importance_pins_the_rest() {
        let g = toy();
        let mut d = Defaults::new();
        d.insert("a".into(), Level::Int(2));
        d.insert("c".into(), Level::Int(2));
        let params = GuidanceParams { top_k: 1, defaults: d, companions: BTreeMap::new() };
        let s = sample_guided(&g, &[], &[0.0, 1.0, 0.0], 8, 2, &params, None, &BTreeSet::new(), &mut seeded(1)).unwrap();
        assert_eq!(
            s.points,
            alloc::vec![
                DesignPoint { choices: alloc::vec![1, 0, 1], precision: 8 },
                DesignPoint { choices: alloc::vec![1, 1, 1], precision: 8 },
            ]
        );
    }

    #[test]
    fn shortfall_is_flagged() {
        let g = toy();
        let params = GuidanceParams { top_k: 1, ..no_defaults() };
        let s = sample_guided(&g, &[], &[1.0, 0.0, 0.0], 8, 5, &params, None, &BTreeSet::new(), &mut seeded(1)).unwrap();
        assert!(s.shortfall);
        assert_eq!(s.points.len(), 3);
    }

    #[test]
    fn scorer_orders_and_exclude_filters() {
        let g = toy();
        let params = GuidanceParams { top_k: 3, ..no_defaults() };
        let score = |_: &FeatureGrid, p: &DesignPoint| p.choices.iter().sum::<usize>() as f64;
        let mut ex = BTreeSet::new();
        ex.insert(DesignPoint { choices: alloc::vec![2, 1, 1], precision: 8 });
        let s = sample_guided(&g, &[], &[1.0; 3], 8, 2, &params, Some(&score), &ex, &mut seeded(0)).unwrap();
        assert_eq!(s.points[0], DesignPoint { choices: alloc::vec![1, 1, 1], precision: 8 });
        assert_eq!(s.points[1], DesignPoint { choices: alloc::vec![2, 0, 1], precision: 8 });
    }

    #[test]
    fn gated_feature_brings_its_gate() {
        let g = table1_grid();
        let mut imp = alloc::vec![0.0; g.features().len()];
        imp[g.feature_index("Partition_factor").unwrap()] = 1.0;
        let params = GuidanceParams { top_k: 1, ..GuidanceParams::default() };
        let cs = ConstraintSet::default().build();
        let pts = rank_guided(&g, &cs, &imp, 8, &params, None, &BTreeSet::new()).unwrap();
        // none + cyclic/block x factors dividing 2048
        assert_eq!(pts.len(), 1 + 2 * 6);
    }

    #[test]
    fn impl_freq_brings_hls_freq() {
        let g = table1_grid();
        let mut imp = alloc::vec![0.0; g.features().len()];
        imp[g.feature_index("Impl_freq").unwrap()] = 1.0;
        let params = GuidanceParams { top_k: 1, ..GuidanceParams::default() };
        let cs = ConstraintSet::default().build();
        let pts = rank_guided(&g, &cs, &imp, 8, &params, None, &BTreeSet::new()).unwrap();
        // pairs impl <= hls over 21 frequencies
        assert_eq!(pts.len(), 21 * 22 / 2);
    }

    #[test]
    fn deterministic_for_seed() {
        let g = table1_grid();
        let imp: Vec<f64> = (0..g.features().len()).map(|i| i as f64).collect();
        let cs = ConstraintSet::default().build();
        let run = |seed| {
            sample_guided(&g, &cs, &imp, 4, 7, &GuidanceParams::default(), None, &BTreeSet::new(), &mut seeded(seed))
                .unwrap()
        };
        assert_eq!(run(3), run(3));
    }
}
