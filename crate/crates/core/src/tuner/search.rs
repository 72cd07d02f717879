use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{MeasurementDb, Optimizer, SaParams, Source};
use crate::gbt::{fit, Dataset, GbtModel, GbtParams};
use crate::schedspace::{ScheduleConfig, ScheduleSpace};

/// Boosted-tree model of GOPs over schedule knobs, scaled so the best
/// training measurement scores 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surrogate {
    pub model: GbtModel,
    pub scale: f64,
}

impl Surrogate {
    /// Predicted GOPs.
    pub fn predict_gops(&self, cfg: &ScheduleConfig) -> f64 {
        self.model.predict_value(&cfg.features()).unwrap_or(0.0)
    }

    /// Predicted GOPs over the best measured so far.
    pub fn score(&self, cfg: &ScheduleConfig) -> f64 {
        self.predict_gops(cfg) / self.scale
    }
}

/// Fits a surrogate on the overlay's records, or `None` below `min_samples`.
pub fn fit_surrogate(db: &MeasurementDb, overlay: usize, params: &GbtParams, min_samples: usize) -> Option<Surrogate> {
    let names = ScheduleConfig::FEATURE_NAMES.iter().map(|s| (*s).into()).collect();
    let mut data = Dataset::new(names, "gops");
    for r in db.for_overlay(overlay) {
        data.push(r.schedule.features().to_vec(), r.gops);
    }
    if data.len() < min_samples.max(1) {
        return None;
    }
    let scale = data.samples.iter().map(|s| s.y).fold(0.0, f64::max);
    let model = fit(&data, params).ok()?;
    Some(Surrogate { model, scale: if scale > 0.0 { scale } else { 1.0 } })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaResult {
    /// Candidate pool, best score first.
    pub pool: Vec<ScheduleConfig>,
    pub scores: Vec<f64>,
    pub proposals: usize,
    pub accepted: usize,
}

impl SaResult {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            1.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }
}

/// Parallel-chain simulated annealing over `space`. Without a surrogate
/// every config scores 0, so chains are random walks. Returns up to
/// `q_size` distinct visited configs not in `exclude`, best first (ties by
/// first visit); when the walk saw too few, unvisited catalog entries are
/// appended in random order.
#[allow(clippy::too_many_arguments)]
pub fn sa_collect<R: Rng + ?Sized>(
    space: &ScheduleSpace,
    catalog: &[ScheduleConfig],
    surrogate: Option<&Surrogate>,
    q_size: usize,
    sa: &SaParams,
    exclude: &BTreeSet<ScheduleConfig>,
    rng: &mut R,
) -> SaResult {
    let score = |c: &ScheduleConfig| surrogate.map_or(0.0, |s| s.score(c));
    let mut visited: Vec<(ScheduleConfig, f64)> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut visit = |c: ScheduleConfig, s: f64, visited: &mut Vec<(ScheduleConfig, f64)>| {
        if seen.insert(c) {
            visited.push((c, s));
        }
    };
    let (mut proposals, mut accepted) = (0, 0);
    if !catalog.is_empty() {
        for _ in 0..sa.chains {
            let mut cur = catalog[rng.random_range(0..catalog.len())];
            let mut cur_s = score(&cur);
            visit(cur, cur_s, &mut visited);
            let mut t = sa.initial_temp;
            for _ in 0..sa.steps {
                let (next, stuck) = space.neighbor(&cur, rng);
                if stuck {
                    break;
                }
                let s = score(&next);
                proposals += 1;
                let u: f64 = rng.random();
                if s >= cur_s || u < libm::exp((s - cur_s) / t) {
                    accepted += 1;
                    cur = next;
                    cur_s = s;
                    visit(cur, cur_s, &mut visited);
                }
                t *= sa.cooling;
            }
        }
    }
    let mut ranked: Vec<(usize, ScheduleConfig, f64)> =
        visited.into_iter().enumerate().filter(|(_, (c, _))| !exclude.contains(c)).map(|(i, (c, s))| (i, c, s)).collect();
    ranked.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
    ranked.truncate(q_size);
    let (mut pool, mut scores): (Vec<_>, Vec<_>) = ranked.into_iter().map(|(_, c, s)| (c, s)).unzip();
    if pool.len() < q_size {
        let in_pool: BTreeSet<_> = pool.iter().copied().collect();
        let mut rest: Vec<ScheduleConfig> =
            catalog.iter().filter(|c| !exclude.contains(c) && !in_pool.contains(c)).copied().collect();
        rest.shuffle(rng);
        for c in rest.into_iter().take(q_size - pool.len()) {
            scores.push(score(&c));
            pool.push(c);
        }
    }
    SaResult { pool, scores, proposals, accepted }
}

/// One measurement batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub picks: Vec<(ScheduleConfig, Source)>,
    /// The pool held fewer than `b` configs.
    pub shortfall: bool,
}

impl Batch {
    pub fn count(&self, source: Source) -> usize {
        self.picks.iter().filter(|(_, s)| *s == source).count()
    }
}

/// ε-greedy batch selection from a pool. `floor((1-ε)b)` configs come from
/// the optimizer (top scores with a knob-distance diversity tie-break, or a
/// uniform draw for [`Optimizer::Random`]), the rest uniformly from what is
/// left.
pub fn select_batch<R: Rng + ?Sized>(
    pool: &[ScheduleConfig],
    scores: &[f64],
    b: usize,
    epsilon: f64,
    optimizer: Optimizer,
    rng: &mut R,
) -> Batch {
    assert_eq!(pool.len(), scores.len(), "one score per pool entry");
    let shortfall = pool.len() < b;
    let take = b.min(pool.len());
    let n_opt = (libm::floor((1.0 - epsilon) * b as f64 + 1e-9) as usize).min(take);
    let mut left: Vec<usize> = (0..pool.len()).collect();
    let mut picks = Vec::with_capacity(take);
    match optimizer {
        Optimizer::Random => {
            left.shuffle(rng);
            picks.extend(left.drain(..n_opt).map(|i| (pool[i], Source::Optimizer)));
        }
        Optimizer::Surrogate => {
            for _ in 0..n_opt {
                let pos = (0..left.len())
                    .max_by(|&x, &y| {
                        let (i, j) = (left[x], left[y]);
                        let spread = |k: usize| picks.iter().map(|(c, _): &(ScheduleConfig, Source)| c.knob_distance(&pool[k])).min().unwrap_or(0);
                        scores[i].total_cmp(&scores[j]).then(spread(i).cmp(&spread(j))).then(j.cmp(&i))
                    })
                    .expect("pool not exhausted");
                let i = left.remove(pos);
                picks.push((pool[i], Source::Optimizer));
            }
        }
    }
    left.shuffle(rng);
    picks.extend(left.into_iter().take(take - n_opt).map(|i| (pool[i], Source::Random)));
    Batch { picks, shortfall }
}
