use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use tvta_core::designspace::ColumnLayout;
use tvta_core::schedspace::ConvWorkload;
use tvta_core::tuner::{
    trials_to_fraction, tune, Fleet, GbtScorer, OverlayPolicy, Sequential, TunerParams, TuningOutcome, VirtualBackend,
};

use crate::config::{Experiment, Method, OverlaySource};
use crate::error::{CliError, Result};
use crate::trace::{Event, OverlayDescriptor, Phase, ScheduleDescriptor, TraceRecord, TraceWriter};
use crate::train::{load_importance, load_model, EXPECTED_GOPS};
use crate::{write_file, RunOptions};

/// One cell of the tuning matrix.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RunKey {
    pub workload: String,
    pub method: Method,
    pub precision: u32,
    pub seed: u64,
}

impl RunKey {
    pub fn stem(&self) -> String {
        format!("{}__{}__p{}__s{}", self.workload, self.method, self.precision, self.seed)
    }
}

/// Headline numbers of one run, also stored in its summary record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub status: String,
    pub best_gops: f64,
    pub best_trial: Option<usize>,
    pub best_overlay: Option<usize>,
    /// Trials until the best-so-far first reaches 95% of its final value.
    pub t95: Option<usize>,
    pub measurements: usize,
    pub overlays_tried: usize,
    pub overlays_ok: usize,
    pub peak_gops: Option<f64>,
    pub arithmetic_intensity: f64,
    pub bandwidth_gbps: f64,
}

/// Importance-guided inputs for one precision.
struct Guide {
    importance: Vec<f64>,
    scorer: GbtScorer,
}

pub fn run_matrix(exp: &Experiment) -> Vec<RunKey> {
    let cfg = &exp.config;
    let mut keys = Vec::new();
    for w in &exp.workloads {
        for &precision in &cfg.precisions {
            for &method in &cfg.methods {
                for &seed in &cfg.seeds {
                    keys.push(RunKey { workload: w.name.clone(), method, precision, seed });
                }
            }
        }
    }
    keys
}

fn load_guides(exp: &Experiment, opts: &RunOptions) -> Result<Vec<(u32, Guide)>> {
    let cfg = &exp.config;
    if !cfg.methods.iter().any(|m| m.overlays == OverlaySource::Tau) {
        return Ok(Vec::new());
    }
    let imp = load_importance(opts)?;
    let features: Vec<&str> = exp.grid.features().iter().map(|f| f.name.as_str()).collect();
    if imp.features != features {
        return Err(CliError::Missing("importance file does not match the configured grid; rerun `tvta train`".into()));
    }
    let layout = ColumnLayout::new(&exp.grid);
    let mut out = Vec::new();
    for &p in &cfg.precisions {
        let e = imp
            .get("gops", p)
            .ok_or_else(|| CliError::Missing(format!("no GOPs importance for precision {p}; rerun `tvta train`")))?;
        let model = load_model(opts, EXPECTED_GOPS, p)?;
        if model.n_features() != layout.len() {
            return Err(CliError::Missing(format!("GOPs model for precision {p} does not match the grid")));
        }
        out.push((p, Guide { importance: e.features.clone(), scorer: GbtScorer { model, layout: layout.clone() } }));
    }
    Ok(out)
}

pub fn run_one(
    exp: &Experiment,
    workload: &ConvWorkload,
    key: &RunKey,
    guide: Option<(&[f64], &GbtScorer)>,
) -> Result<TuningOutcome> {
    let backend = VirtualBackend {
        grid: exp.grid.clone(),
        constraints: exp.constraints.clone(),
        device: exp.device.clone(),
        workload: workload.clone(),
    };
    let base = TunerParams { optimizer: key.method.optimizer, ..exp.config.tuner.clone() };
    let (policy, params) = match key.method.overlays {
        OverlaySource::Vta => {
            let default = exp
                .grid
                .point_from_levels(key.precision, &[], &exp.config.guidance.defaults)
                .map_err(|e| CliError::Config(format!("guidance.defaults: {e}")))?;
            (OverlayPolicy::Fixed(vec![default]), base.baseline())
        }
        OverlaySource::Tau => {
            let (importance, scorer) = guide.ok_or_else(|| CliError::Missing("importance is required for tau runs".into()))?;
            let policy = OverlayPolicy::Guided {
                importance: Some(importance.to_vec()),
                scorer: Some(scorer),
                guidance: exp.config.guidance.clone(),
            };
            (policy, base)
        }
    };
    tune(&backend, key.precision, &policy, &params, key.seed, &Sequential).map_err(|e| match e {
        tvta_core::tuner::TunerError::Params(m) => CliError::Config(format!("tuner: {m}")),
        other => CliError::Failed(format!("{}: {other}", key.stem())),
    })
}

pub fn summarize(exp: &Experiment, workload: &ConvWorkload, out: &TuningOutcome) -> RunSummary {
    let curve = out.curve();
    RunSummary {
        status: serde_json::to_value(out.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
        best_gops: out.best_gops(),
        best_trial: out.best.as_ref().map(|r| r.trial_index),
        best_overlay: out.best.as_ref().map(|r| r.overlay_id),
        t95: trials_to_fraction(&curve, 0.95),
        measurements: out.db.len(),
        overlays_tried: out.overlays.len(),
        overlays_ok: out.overlays.iter().filter(|o| o.implementation.as_ref().is_some_and(|i| i.is_ok())).count(),
        peak_gops: out.best_overlay().and_then(|o| o.implementation.as_ref()).map(|i| i.peak_gops),
        arithmetic_intensity: workload.arithmetic_intensity(out.precision),
        bandwidth_gbps: exp.device.dram_gbps(),
    }
}

fn write_run(exp: &Experiment, opts: &RunOptions, key: &RunKey, workload: &ConvWorkload, out: &TuningOutcome) -> Result<RunSummary> {
    let cfg = &exp.config;
    let id = &cfg.experiment_id;
    let stamp = |mut r: TraceRecord| {
        r.precision = Some(key.precision);
        r.method = Some(key.method.to_string());
        r.workload = Some(key.workload.clone());
        r
    };
    let mut w = TraceWriter::create(&opts.traces_dir().join(format!("{}.jsonl", key.stem())), opts.timestamps)?;
    let mut h = stamp(TraceRecord::new(id, Phase::Tune, Event::Header, key.seed));
    h.detail = Some(serde_json::json!({
        "tuner": cfg.tuner,
        "guidance_top_k": cfg.guidance.top_k,
        "device": exp.device.name,
        "sprints": out.sprints,
    }));
    w.write(h)?;
    for o in &out.overlays {
        let status = serde_json::to_value(o.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        let mut r = stamp(TraceRecord::new(id, Phase::Tune, Event::Overlay, key.seed));
        r.overlay_id = Some(o.id);
        r.overlay = Some(OverlayDescriptor::new(o.id, &exp.grid, &o.point, &status, o.implementation.as_ref()));
        r.status = Some(status);
        r.gops = o.best_gops;
        r.detail = Some(serde_json::json!({ "sprint": o.sprint, "measurements": o.measurements, "message": o.message }));
        w.write(r)?;
    }
    for b in &out.batches {
        let mut r = stamp(TraceRecord::new(id, Phase::Tune, Event::Batch, key.seed));
        r.overlay_id = Some(b.overlay_id);
        r.detail = Some(serde_json::to_value(b).map_err(|e| CliError::Invariant(e.to_string()))?);
        w.write(r)?;
    }
    for rec in out.db.records() {
        let mut r = stamp(TraceRecord::new(id, Phase::Tune, Event::Measurement, key.seed));
        r.trial_index = Some(rec.trial_index);
        r.overlay_id = Some(rec.overlay_id);
        r.schedule = Some(ScheduleDescriptor { label: rec.schedule.label(), config: rec.schedule });
        r.latency_s = Some(rec.latency_s);
        r.gops = Some(rec.gops);
        r.source = Some(rec.source);
        r.status = Some("ok".into());
        w.write(r)?;
    }
    let summary = summarize(exp, workload, out);
    let mut r = stamp(TraceRecord::new(id, Phase::Tune, Event::Summary, key.seed));
    r.trial_index = summary.best_trial;
    r.overlay_id = summary.best_overlay;
    r.gops = Some(summary.best_gops);
    r.status = Some(summary.status.clone());
    if let Some(b) = &out.best {
        r.schedule = Some(ScheduleDescriptor { label: b.schedule.label(), config: b.schedule });
        r.latency_s = Some(b.latency_s);
        r.overlay = out
            .best_overlay()
            .map(|o| OverlayDescriptor::new(o.id, &exp.grid, &o.point, "ok", o.implementation.as_ref()));
    }
    r.detail = Some(serde_json::to_value(&summary).map_err(|e| CliError::Invariant(e.to_string()))?);
    w.write(r)?;
    w.finish()?;

    let mut csv = String::from("trial_index,best_gops\n");
    for (t, g) in out.curve() {
        let _ = writeln!(csv, "{t},{g}");
    }
    write_file(&opts.curves_dir().join(format!("{}.csv", key.stem())), &csv)?;
    Ok(summary)
}

/// Runs every (workload, precision, method, seed) cell and writes one trace
/// and one convergence curve per cell.
pub fn run_tuning(exp: &Experiment, opts: &RunOptions) -> Result<Vec<(RunKey, RunSummary)>> {
    let guides = load_guides(exp, opts)?;
    let keys = run_matrix(exp);
    let workload = |name: &str| exp.workloads.iter().find(|w| w.name == name).expect("key from matrix");
    let fleet = opts.fleet();
    let results = fleet.run(keys.len(), |i| {
        let key = &keys[i];
        let guide = guides
            .iter()
            .find(|(p, _)| *p == key.precision)
            .filter(|_| key.method.overlays == OverlaySource::Tau)
            .map(|(_, g)| (g.importance.as_slice(), &g.scorer));
        run_one(exp, workload(&key.workload), key, guide)
    });
    let mut out = Vec::with_capacity(keys.len());
    for (key, r) in keys.into_iter().zip(results) {
        let outcome = r.map_err(|f| CliError::Invariant(format!("{} panicked: {}", key.stem(), f.message)))??;
        let s = write_run(exp, opts, &key, workload(&key.workload), &outcome)?;
        out.push((key, s));
    }
    Ok(out)
}
