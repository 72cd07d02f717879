use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use tvta_core::designspace::{count_space, ColumnLayout, DesignPoint, FeatureGrid};
use tvta_core::rng::{job_stream, mix};
use tvta_core::schedspace::{ScheduleConfig, ScheduleSpace};
use tvta_core::tuner::Fleet;
use tvta_core::vhw::{delivered_gops, implement, latency_in, OverlayArch};

use crate::config::Experiment;
use crate::error::{CliError, Result};
use crate::trace::{Event, OverlayDescriptor, Phase, TraceRecord, TraceWriter};
use crate::RunOptions;

/// Regression targets, in file order.
pub const TARGETS: [&str; 5] = ["gops", "dsp", "bram", "lut", "ff"];

const DATASET_TAG: u64 = 0x6461_7461;

/// Rejection-sampling attempts allowed per requested point.
const ATTEMPTS_PER_POINT: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSummary {
    /// Records written per precision.
    pub per_precision: BTreeMap<u32, usize>,
    pub exhaustive: bool,
}

/// The design points sampled at one precision: every feasible point when
/// the unconstrained grid is within the cap, else `cap` distinct feasible
/// points drawn uniformly by rejection.
pub fn sample_points(exp: &Experiment, precision: u32, cap: usize, seed: u64) -> Result<(Vec<DesignPoint>, bool)> {
    let grid = &exp.grid;
    let at = grid.with_precisions(vec![precision]).map_err(|e| CliError::Invariant(e.to_string()))?;
    let feasible = |p: &DesignPoint| exp.constraints.iter().all(|c| c.holds(grid, p));
    if count_space(&at) <= cap as u128 {
        return Ok((grid.points_at(precision).filter(feasible).collect(), true));
    }
    let mut rng = job_stream(seed, mix(&[DATASET_TAG, precision as u64]));
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(cap);
    let mut attempts = 0;
    while out.len() < cap {
        attempts += 1;
        if attempts > cap.saturating_mul(ATTEMPTS_PER_POINT) {
            return Err(CliError::Config(format!(
                "dataset.samples: found only {} distinct feasible points at precision {precision}",
                out.len()
            )));
        }
        let p = random_point(grid, precision, &mut rng);
        if feasible(&p) && seen.insert(p.clone()) {
            out.push(p);
        }
    }
    Ok((out, false))
}

fn random_point<R: Rng>(grid: &FeatureGrid, precision: u32, rng: &mut R) -> DesignPoint {
    let choices = grid.features().iter().map(|f| rng.random_range(0..f.len())).collect();
    DesignPoint { choices, precision }
}

/// Fixed schedules whose best delivered GOPs serves as the GOPs target.
pub fn probe_schedules(space: &ScheduleSpace, n: usize, seed: u64, precision: u32) -> Vec<ScheduleConfig> {
    let cat = space.catalog();
    let mut rng = job_stream(seed, mix(&[DATASET_TAG, precision as u64, 1]));
    let mut idx = rand::seq::index::sample(&mut rng, cat.len(), n.min(cat.len())).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| cat[i]).collect()
}

pub fn generate_dataset(exp: &Experiment, opts: &RunOptions) -> Result<DatasetSummary> {
    let cfg = &exp.config;
    let layout = ColumnLayout::new(&exp.grid);
    let workload = &exp.workloads[0];
    let fleet = opts.fleet();
    let mut w = TraceWriter::create(&opts.dataset_file(), opts.timestamps)?;
    let mut header = TraceRecord::new(&cfg.experiment_id, Phase::Dataset, Event::Header, cfg.dataset.seed);
    header.workload = Some(workload.name.clone());
    header.detail = Some(serde_json::json!({
        "columns": layout.names(),
        "targets": TARGETS,
        "precisions": cfg.precisions,
        "samples_cap": cfg.dataset.samples,
        "probe_schedules": cfg.dataset.probe_schedules,
        "device": exp.device.name,
    }));
    w.write(header)?;

    let mut summary = DatasetSummary { per_precision: BTreeMap::new(), exhaustive: true };
    let mut index = 0;
    for &p in &cfg.precisions {
        let (points, exhaustive) = sample_points(exp, p, cfg.dataset.samples, cfg.dataset.seed)?;
        summary.exhaustive &= exhaustive;
        let arch = OverlayArch::vta_default(p);
        let space = ScheduleSpace::new(workload.clone(), arch.clone()).map_err(|e| CliError::Config(format!("workload: {e}")))?;
        let probes = probe_schedules(&space, cfg.dataset.probe_schedules, cfg.dataset.seed, p);
        let results = fleet.run(points.len(), |i| {
            let imp = implement(&points[i], &exp.grid, &arch, &exp.device)?;
            let gops = if imp.is_ok() {
                let mut best: f64 = 0.0;
                for c in &probes {
                    best = best.max(delivered_gops(workload, latency_in(&space, &imp, c)?));
                }
                best
            } else {
                0.0
            };
            Ok::<_, tvta_core::vhw::VhwError>((imp, gops))
        });
        for (point, r) in points.iter().zip(results) {
            let (imp, gops) = r
                .map_err(|f| CliError::Invariant(format!("dataset job panicked: {}", f.message)))?
                .map_err(|e| CliError::Invariant(format!("implementing a feasible point failed: {e}")))?;
            let x = layout.encode(&exp.grid, point).map_err(|e| CliError::Invariant(e.to_string()))?;
            let mut r = TraceRecord::new(&cfg.experiment_id, Phase::Dataset, Event::Sample, cfg.dataset.seed);
            r.trial_index = Some(index);
            r.precision = Some(p);
            r.status = Some(imp.status.as_str().into());
            r.gops = Some(gops);
            r.overlay = Some(OverlayDescriptor::new(index, &exp.grid, point, imp.status.as_str(), Some(&imp)));
            r.features = Some(x.into_iter().map(|v| (!v.is_nan()).then_some(v)).collect());
            let t = [gops, imp.dsps as f64, imp.brams as f64, imp.luts as f64, imp.ffs as f64];
            r.targets = Some(TARGETS.iter().map(|s| s.to_string()).zip(t).collect());
            w.write(r)?;
            index += 1;
        }
        summary.per_precision.insert(p, points.len());
    }
    w.finish()?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    /// Encoded features, NaN where missing.
    pub x: Vec<f64>,
    /// Targets in [`TARGETS`] order.
    pub y: [f64; 5],
    /// The design implemented cleanly.
    pub ok: bool,
}

/// Per-precision sample rows read back from a dataset file.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRows {
    pub columns: Vec<String>,
    pub rows: BTreeMap<u32, Vec<Row>>,
}

pub fn load_dataset(opts: &RunOptions) -> Result<DatasetRows> {
    let path = opts.dataset_file();
    if !path.exists() {
        return Err(CliError::Missing(format!("dataset {} not found; run `tvta dataset` first", path.display())));
    }
    let (recs, report) = crate::trace::read_trace(&path)?;
    if !report.errors.is_empty() {
        return Err(CliError::Missing(format!("dataset {} is corrupt: {}", path.display(), report.errors.join("; "))));
    }
    let columns: Vec<String> = recs[0]
        .detail
        .as_ref()
        .and_then(|d| d.get("columns"))
        .and_then(|c| serde_json::from_value(c.clone()).ok())
        .ok_or_else(|| CliError::Missing("dataset header lacks columns".into()))?;
    let mut rows: BTreeMap<u32, Vec<_>> = BTreeMap::new();
    for r in recs.iter().filter(|r| r.event == Event::Sample) {
        let (Some(p), Some(x), Some(t)) = (r.precision, &r.features, &r.targets) else {
            return Err(CliError::Missing("dataset sample lacks precision, features or targets".into()));
        };
        let x: Vec<f64> = x.iter().map(|v| v.unwrap_or(f64::NAN)).collect();
        let mut y = [0.0; 5];
        for (k, name) in TARGETS.iter().enumerate() {
            y[k] = *t.get(*name).ok_or_else(|| CliError::Missing(format!("dataset sample lacks target {name}")))?;
        }
        let ok = r.status.as_deref() == Some("ok");
        rows.entry(p).or_default().push(Row { x, y, ok });
    }
    Ok(DatasetRows { columns, rows })
}
