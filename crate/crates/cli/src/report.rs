use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tvta_core::tuner::{best_so_far, trials_to_fraction};
use tvta_core::vhw::{l2_to_optimal, peak_gops, roofline_attainable, OverlayArch, RooflinePoint};

use crate::config::Experiment;
use crate::error::{CliError, Result};
use crate::trace::{read_trace, Event, TraceRecord};
use crate::tuning::RunSummary;
use crate::{median, to_json, write_file, RunOptions};

/// What the report needs from one trace file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunData {
    pub workload: String,
    pub method: String,
    pub precision: u32,
    pub seed: u64,
    pub curve: Vec<(usize, f64)>,
    pub summary: RunSummary,
}

impl RunData {
    pub fn best(&self) -> f64 {
        self.curve.last().map_or(0.0, |c| c.1)
    }

    pub fn t95(&self) -> Option<usize> {
        trials_to_fraction(&self.curve, 0.95)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RooflineRow {
    pub workload: String,
    pub precision: u32,
    pub method: String,
    pub arithmetic_intensity: f64,
    pub bandwidth_gbps: f64,
    /// Peak of the winning overlay in the run with the median best.
    pub peak_gops: f64,
    pub attainable_gops: f64,
    pub measured_gops: f64,
    /// Summed log2-space distance of every seed's best to the ridge point.
    pub l2_to_optimal: Option<f64>,
    /// Peak of the default intrinsic at 100 MHz.
    pub reference_peak_gops_100mhz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub workload: String,
    pub precision: u32,
    pub optimizer: String,
    pub tau_method: String,
    pub vta_method: String,
    pub seeds: usize,
    pub tau_median_best: f64,
    pub vta_median_best: f64,
    pub tau_median_t95: f64,
    pub vta_median_t95: f64,
    /// tau best over vta best.
    pub speedup: f64,
    /// vta trials-to-95% over tau trials-to-95%.
    pub t95_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub files_used: usize,
    pub warnings: Vec<String>,
    pub roofline: Vec<RooflineRow>,
    pub convergence: Vec<ConvergenceRow>,
}

/// Extracts a run from parsed records; `Err` is a warning.
pub fn run_from_records(recs: &[TraceRecord]) -> std::result::Result<RunData, String> {
    let h = recs.first().filter(|r| r.event == Event::Header).ok_or("no header")?;
    let (Some(workload), Some(method), Some(precision)) = (&h.workload, &h.method, h.precision) else {
        return Err("header lacks workload, method or precision".into());
    };
    let s = recs.iter().rev().find(|r| r.event == Event::Summary).ok_or("no summary record (truncated run?)")?;
    let summary: RunSummary = s
        .detail
        .clone()
        .ok_or("summary lacks detail".to_string())
        .and_then(|d| serde_json::from_value(d).map_err(|e| format!("summary detail: {e}")))?;
    let mut pts = Vec::new();
    for r in recs.iter().filter(|r| r.event == Event::Measurement) {
        match (r.trial_index, r.gops) {
            (Some(t), Some(g)) => pts.push((t, g)),
            _ => return Err("measurement lacks trial_index or gops".into()),
        }
    }
    if pts.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err("measurement trial indices are not increasing".into());
    }
    if pts.len() != summary.measurements {
        return Err(format!("{} measurements but summary says {}", pts.len(), summary.measurements));
    }
    Ok(RunData {
        workload: workload.clone(),
        method: method.clone(),
        precision,
        seed: h.seed,
        curve: best_so_far(pts),
        summary,
    })
}

pub fn trace_files(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .into_iter()
        .flatten()
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    files
}

/// Loads every trace in `dir`, turning unusable files into warnings.
pub fn load_runs(dir: &Path) -> (Vec<RunData>, Vec<String>) {
    let mut runs = Vec::new();
    let mut warnings = Vec::new();
    let files = trace_files(dir);
    if files.is_empty() {
        warnings.push(format!("{}: no trace files", dir.display()));
    }
    for f in files {
        let name = f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        match read_trace(&f) {
            Err(e) => warnings.push(format!("{name}: {e}")),
            Ok((_, rep)) if !rep.errors.is_empty() => warnings.push(format!("{name}: {}", rep.errors.join("; "))),
            Ok((recs, _)) => match run_from_records(&recs) {
                Ok(r) => runs.push(r),
                Err(e) => warnings.push(format!("{name}: {e}")),
            },
        }
    }
    (runs, warnings)
}

fn median_t95(runs: &[&RunData]) -> f64 {
    // a run that never improved counts as its whole length
    median(&runs.iter().map(|r| r.t95().unwrap_or(r.curve.len()) as f64).collect::<Vec<_>>())
}

/// Builds the report tables from loaded runs.
pub fn build_report(runs: &[RunData], warnings: Vec<String>) -> ReportSummary {
    let mut groups: BTreeMap<(&str, u32, &str), Vec<&RunData>> = BTreeMap::new();
    for r in runs {
        groups.entry((&r.workload, r.precision, &r.method)).or_default().push(r);
    }
    let mut roofline = Vec::new();
    for (&(w, p, m), rs) in &groups {
        let mut by_best = rs.clone();
        by_best.sort_by(|a, b| a.best().total_cmp(&b.best()).then(a.seed.cmp(&b.seed)));
        let mid = by_best[(by_best.len() - 1) / 2];
        let ai = mid.summary.arithmetic_intensity;
        let bw = mid.summary.bandwidth_gbps;
        let peak = mid.summary.peak_gops.unwrap_or(0.0);
        let pts: Vec<RooflinePoint> = rs
            .iter()
            .filter_map(|r| r.summary.peak_gops.map(|pk| RooflinePoint::new(ai, pk, bw).with_measured(r.best())))
            .collect();
        let l2 = (peak > 0.0 && !pts.is_empty())
            .then(|| l2_to_optimal(&pts, &RooflinePoint::ridge(peak, bw)).ok())
            .flatten();
        roofline.push(RooflineRow {
            workload: w.into(),
            precision: p,
            method: m.into(),
            arithmetic_intensity: ai,
            bandwidth_gbps: bw,
            peak_gops: peak,
            attainable_gops: roofline_attainable(ai, peak, bw),
            measured_gops: median(&rs.iter().map(|r| r.best()).collect::<Vec<_>>()),
            l2_to_optimal: l2,
            reference_peak_gops_100mhz: peak_gops(&OverlayArch::vta_default(p), 100.0),
        });
    }

    let mut convergence = Vec::new();
    let mut cells: BTreeMap<(&str, u32, &str), ()> = BTreeMap::new();
    for &(w, p, m) in groups.keys() {
        if let Some((_, opt)) = m.split_once('-') {
            cells.insert((w, p, opt), ());
        }
    }
    for &(w, p, opt) in cells.keys() {
        let tau_m = format!("tau-{opt}");
        let vta_m = format!("vta-{opt}");
        let tau = groups.get(&(w, p, tau_m.as_str()));
        let vta = groups.get(&(w, p, vta_m.as_str()));
        // a missing side is compared against itself
        let (tau, vta) = match (tau, vta) {
            (Some(t), Some(v)) => (t, v),
            (Some(t), None) => (t, t),
            (None, Some(v)) => (v, v),
            (None, None) => continue,
        };
        let best = |rs: &Vec<&RunData>| median(&rs.iter().map(|r| r.best()).collect::<Vec<_>>());
        let (tb, vb) = (best(tau), best(vta));
        let (tt, vt) = (median_t95(tau), median_t95(vta));
        convergence.push(ConvergenceRow {
            workload: w.into(),
            precision: p,
            optimizer: opt.into(),
            tau_method: tau[0].method.clone(),
            vta_method: vta[0].method.clone(),
            seeds: tau.len().min(vta.len()),
            tau_median_best: tb,
            vta_median_best: vb,
            tau_median_t95: tt,
            vta_median_t95: vt,
            speedup: if vb > 0.0 { tb / vb } else { f64::NAN },
            t95_ratio: if tt > 0.0 { vt / tt } else { f64::NAN },
        });
    }
    ReportSummary { files_used: runs.len(), warnings, roofline, convergence }
}

pub fn summary_text(r: &ReportSummary) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "runs: {}  warnings: {}", r.files_used, r.warnings.len());
    for w in &r.warnings {
        let _ = writeln!(s, "  warning: {w}");
    }
    let _ = writeln!(s, "\nroofline (GOPs)");
    let _ = writeln!(
        s,
        "{:<14} {:>4} {:<14} {:>8} {:>9} {:>11} {:>9} {:>8} {:>10}",
        "workload", "bits", "method", "ai", "peak", "attainable", "measured", "l2", "ref@100MHz"
    );
    for x in &r.roofline {
        let l2 = x.l2_to_optimal.map_or("-".to_string(), |v| format!("{v:.3}"));
        let _ = writeln!(
            s,
            "{:<14} {:>4} {:<14} {:>8.2} {:>9.2} {:>11.2} {:>9.2} {:>8} {:>10.1}",
            x.workload, x.precision, x.method, x.arithmetic_intensity, x.peak_gops, x.attainable_gops, x.measured_gops, l2,
            x.reference_peak_gops_100mhz
        );
    }
    let _ = writeln!(s, "\nconvergence (medians over seeds)");
    let _ = writeln!(
        s,
        "{:<14} {:>4} {:<10} {:>9} {:>9} {:>8} {:>8} {:>8} {:>9}",
        "workload", "bits", "optimizer", "tau best", "vta best", "tau t95", "vta t95", "speedup", "t95 ratio"
    );
    for c in &r.convergence {
        let _ = writeln!(
            s,
            "{:<14} {:>4} {:<10} {:>9.2} {:>9.2} {:>8.1} {:>8.1} {:>8.3} {:>9.3}",
            c.workload, c.precision, c.optimizer, c.tau_median_best, c.vta_median_best, c.tau_median_t95,
            c.vta_median_t95, c.speedup, c.t95_ratio
        );
    }
    s
}

/// Reads the tuning traces and writes roofline, convergence and summary
/// files. Fails only when no trace is usable.
pub fn report(_exp: &Experiment, opts: &RunOptions) -> Result<ReportSummary> {
    let (runs, warnings) = load_runs(&opts.traces_dir());
    if runs.is_empty() {
        return Err(CliError::Missing(format!("no usable trace: {}", warnings.join("; "))));
    }
    let r = build_report(&runs, warnings);
    let dir = opts.report_dir();
    write_file(&dir.join("roofline.json"), &to_json(&r.roofline)?)?;
    write_file(&dir.join("convergence.json"), &to_json(&r.convergence)?)?;
    write_file(&dir.join("summary.txt"), &summary_text(&r))?;
    Ok(r)
}
