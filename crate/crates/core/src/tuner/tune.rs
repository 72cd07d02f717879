use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::search::{fit_surrogate, sa_collect, select_batch};
use super::{Backend, Fleet, MeasurementDb, Optimizer, Record, Source, TunerError, TunerParams};
use crate::designspace::{sample_guided, DesignPoint, GuidanceParams, PointScorer};
use crate::rng::{job_stream, mix};
use crate::schedspace::{ScheduleConfig, ScheduleSpace};
use crate::vhw::{delivered_gops, ImplementationResult, Status};

const OUTER_TAG: u64 = 0x006f_7574_6572;
const INNER_TAG: u64 = 0x0069_6e6e_6572;

/// Where overlay candidates come from.
pub enum OverlayPolicy<'a> {
    /// Importance-guided reduced grid. `importance` is per grid feature;
    /// `None` falls back to uniform. The scorer ranks candidates, otherwise
    /// they are drawn uniformly.
    Guided {
        importance: Option<Vec<f64>>,
        scorer: Option<&'a dyn PointScorer>,
        guidance: GuidanceParams,
    },
    /// A fixed list, consumed `m` per sprint.
    Fixed(Vec<DesignPoint>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttemptStatus {
    Ok,
    TimingFailure,
    ResourceOverflow,
    /// The toolchain rejected the point or the job died.
    Error,
}

impl From<Status> for AttemptStatus {
    fn from(s: Status) -> Self {
        match s {
            Status::Ok => AttemptStatus::Ok,
            Status::TimingFailure => AttemptStatus::TimingFailure,
            Status::ResourceOverflow => AttemptStatus::ResourceOverflow,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayAttempt {
    pub id: usize,
    pub sprint: usize,
    pub point: DesignPoint,
    pub status: AttemptStatus,
    pub implementation: Option<ImplementationResult>,
    pub message: Option<String>,
    pub measurements: usize,
    pub best_gops: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SprintLog {
    pub sprint: usize,
    /// Overlay attempts counted before this sprint.
    pub k_before: usize,
    pub candidates: usize,
    pub survivors: usize,
    pub barren: bool,
    /// The guided grid held fewer than `m` untried points.
    pub shortfall: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchLog {
    pub overlay_id: usize,
    pub batch: usize,
    /// `false` while the surrogate lacks samples and picks are random.
    pub surrogate_active: bool,
    pub pool_size: usize,
    pub n_optimizer: usize,
    pub n_random: usize,
    /// Measurements repeated to fill a batch from a short pool.
    pub n_repeated: usize,
    pub shortfall: bool,
    pub acceptance_rate: f64,
    /// Surrogate error over this batch's measured GOPs.
    pub prediction_rmse: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeStatus {
    Found,
    NoFeasibleOverlay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningOutcome {
    pub precision: u32,
    pub optimizer: Optimizer,
    pub status: OutcomeStatus,
    /// Highest-GOPs record; its overlay and schedule are the selection.
    pub best: Option<Record>,
    pub db: MeasurementDb,
    pub overlays: Vec<OverlayAttempt>,
    pub sprints: Vec<SprintLog>,
    pub batches: Vec<BatchLog>,
}

impl TuningOutcome {
    pub fn best_overlay(&self) -> Option<&OverlayAttempt> {
        self.best.as_ref().map(|r| &self.overlays[r.overlay_id])
    }

    pub fn best_gops(&self) -> f64 {
        self.best.as_ref().map_or(0.0, |r| r.gops)
    }

    /// Best GOPs so far against global trial index.
    pub fn curve(&self) -> Vec<(usize, f64)> {
        self.db.curve()
    }

    pub fn overlay_curve(&self, overlay: usize) -> Vec<(usize, f64)> {
        self.db.curve_for(overlay)
    }
}

struct Measured {
    schedule: ScheduleConfig,
    latency_s: f64,
    gops: f64,
    source: Source,
}

struct InnerRun {
    batches: Vec<Vec<Measured>>,
    logs: Vec<BatchLog>,
}

struct InnerCtx<'a, B: Backend> {
    backend: &'a B,
    space: &'a ScheduleSpace,
    catalog: &'a [ScheduleConfig],
    params: &'a TunerParams,
    seed: u64,
}

fn inner_loop<B: Backend>(
    cx: &InnerCtx<'_, B>,
    overlay: usize,
    imp: &ImplementationResult,
    budget: usize,
) -> Result<InnerRun, TunerError> {
    let p = cx.params;
    let mut rng = job_stream(cx.seed, mix(&[INNER_TAG, overlay as u64]));
    let mut local = MeasurementDb::new();
    let mut measured = BTreeSet::new();
    let mut run = InnerRun { batches: Vec::new(), logs: Vec::new() };
    let mut n_trials = 0;
    while n_trials < budget {
        let surrogate = match p.optimizer {
            Optimizer::Surrogate => fit_surrogate(&local, overlay, &p.surrogate, p.min_surrogate_samples),
            Optimizer::Random => None,
        };
        let sa = sa_collect(cx.space, cx.catalog, surrogate.as_ref(), p.q_size, &p.sa, &measured, &mut rng);
        if sa.pool.is_empty() {
            break;
        }
        let optimizer = if surrogate.is_some() { Optimizer::Surrogate } else { Optimizer::Random };
        let batch = select_batch(&sa.pool, &sa.scores, p.b, p.epsilon, optimizer, &mut rng);
        let n_picked = batch.picks.len();
        let mut out = Vec::with_capacity(p.b);
        let mut se = 0.0;
        for i in 0..p.b {
            let (cfg, source) = batch.picks[i % n_picked];
            let clean = cx.backend.latency(cx.space, imp, &cfg)?;
            let latency_s = p.noise.apply(clean, &mut rng);
            let gops = delivered_gops(cx.space.workload(), latency_s);
            if let Some(s) = &surrogate {
                let e = s.predict_gops(&cfg) - gops;
                se += e * e;
            }
            local.push(Record {
                trial_index: local.len(),
                overlay_id: overlay,
                design_point: DesignPoint { choices: Vec::new(), precision: 0 },
                schedule: cfg,
                latency_s,
                gops,
                source,
                seed: cx.seed,
            });
            measured.insert(cfg);
            out.push(Measured { schedule: cfg, latency_s, gops, source });
        }
        run.logs.push(BatchLog {
            overlay_id: overlay,
            batch: run.batches.len(),
            surrogate_active: surrogate.is_some(),
            pool_size: sa.pool.len(),
            n_optimizer: batch.count(Source::Optimizer),
            n_random: batch.count(Source::Random),
            n_repeated: p.b - n_picked,
            shortfall: batch.shortfall,
            acceptance_rate: sa.acceptance_rate(),
            prediction_rmse: surrogate.as_ref().map(|_| libm::sqrt(se / p.b as f64)),
        });
        run.batches.push(out);
        n_trials += p.b;
    }
    Ok(run)
}

/// Runs the two-level search for one precision on `backend`'s workload.
///
/// Per-job randomness derives from `seed` and the sprint or overlay index,
/// so the outcome does not depend on the fleet's worker count.
pub fn tune<B: Backend, F: Fleet>(
    backend: &B,
    precision: u32,
    policy: &OverlayPolicy<'_>,
    params: &TunerParams,
    seed: u64,
    fleet: &F,
) -> Result<TuningOutcome, TunerError> {
    params.validate()?;
    let grid = backend.grid();
    if !grid.precisions().contains(&precision) {
        return Err(TunerError::Params(format!("precision {precision} is not in the grid")));
    }
    let space = backend
        .space(precision)
        .map_err(|e| TunerError::Schedule(format!("{e}")))?;
    let catalog = space.catalog();
    let cx = InnerCtx { backend, space: &space, catalog: &catalog, params, seed };

    let mut out = TuningOutcome {
        precision,
        optimizer: params.optimizer,
        status: OutcomeStatus::NoFeasibleOverlay,
        best: None,
        db: MeasurementDb::new(),
        overlays: Vec::new(),
        sprints: Vec::new(),
        batches: Vec::new(),
    };
    let mut tried = BTreeSet::new();
    let mut fixed_cursor = 0;
    let mut k = 0;
    let mut sprint = 0;
    while k < params.max_k_trials_overlays {
        let mut rng = job_stream(seed, mix(&[OUTER_TAG, sprint as u64]));
        let (candidates, shortfall) = match policy {
            OverlayPolicy::Guided { importance, scorer, guidance } => {
                let uniform;
                let imp = match importance {
                    Some(v) => v.as_slice(),
                    None => {
                        uniform = alloc::vec![1.0; grid.features().len()];
                        uniform.as_slice()
                    }
                };
                let s = sample_guided(grid, backend.constraints(), imp, precision, params.m, guidance, *scorer, &tried, &mut rng)?;
                (s.points, s.shortfall)
            }
            OverlayPolicy::Fixed(list) => {
                let pts: Vec<DesignPoint> = list.iter().skip(fixed_cursor).take(params.m).cloned().collect();
                fixed_cursor += params.m;
                let short = pts.len() < params.m;
                (pts, short)
            }
        };
        tried.extend(candidates.iter().cloned());

        let first_id = out.overlays.len();
        let imps = fleet.run(candidates.len(), |i| backend.implement(&candidates[i]));
        let mut survivors = Vec::new();
        for (i, (point, r)) in candidates.into_iter().zip(imps).enumerate() {
            let id = first_id + i;
            let (status, implementation, message) = match r {
                Ok(Ok(imp)) => (imp.status.into(), Some(imp), None),
                Ok(Err(e)) => (AttemptStatus::Error, None, Some(format!("{e}"))),
                Err(f) => (AttemptStatus::Error, None, Some(f.message)),
            };
            if status == AttemptStatus::Ok {
                survivors.push(id);
            }
            out.overlays.push(OverlayAttempt {
                id,
                sprint,
                point,
                status,
                implementation,
                message,
                measurements: 0,
                best_gops: None,
            });
        }

        let budget = if params.shared_budget && !survivors.is_empty() {
            params.max_n_trials.div_ceil(survivors.len())
        } else {
            params.max_n_trials
        };
        let runs = {
            let overlays = &out.overlays;
            let cx = &cx;
            fleet.run(survivors.len(), |i| {
                let o = &overlays[survivors[i]];
                inner_loop(cx, o.id, o.implementation.as_ref().expect("survivor is implemented"), budget)
            })
        };
        let mut runs: Vec<Option<InnerRun>> = runs
            .into_iter()
            .zip(&survivors)
            .map(|(r, &id)| match r {
                Ok(Ok(run)) => Some(run),
                Ok(Err(e)) => {
                    out.overlays[id].status = AttemptStatus::Error;
                    out.overlays[id].message = Some(format!("{e}"));
                    None
                }
                Err(f) => {
                    out.overlays[id].status = AttemptStatus::Error;
                    out.overlays[id].message = Some(f.message);
                    None
                }
            })
            .collect();

        // results are appended in submission order: each overlay's whole
        // inner loop, in candidate order
        for (slot, &id) in runs.iter_mut().zip(&survivors) {
            let Some(run) = slot else { continue };
            for m in run.batches.drain(..).flatten() {
                out.db.push(Record {
                    trial_index: out.db.len(),
                    overlay_id: id,
                    design_point: out.overlays[id].point.clone(),
                    schedule: m.schedule,
                    latency_s: m.latency_s,
                    gops: m.gops,
                    source: m.source,
                    seed,
                });
            }
        }
        let mut n_ok = 0;
        for (slot, &id) in runs.into_iter().zip(&survivors) {
            let Some(run) = slot else { continue };
            n_ok += 1;
            out.batches.extend(run.logs);
            let a = &mut out.overlays[id];
            a.measurements = out.db.for_overlay(id).count();
            a.best_gops = out.db.best_for(id).map(|r| r.gops);
        }

        out.sprints.push(SprintLog {
            sprint,
            k_before: k,
            candidates: out.overlays.len() - first_id,
            survivors: n_ok,
            barren: n_ok == 0,
            shortfall,
        });
        k += params.m;
        sprint += 1;
    }
    out.best = out.db.best().cloned();
    if out.best.is_some() {
        out.status = OutcomeStatus::Found;
    }
    Ok(out)
}
