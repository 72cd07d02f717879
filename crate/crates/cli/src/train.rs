use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use tvta_core::designspace::ColumnLayout;
use tvta_core::gbt::{cross_validate, fit, CvReport, Dataset, GbtModel};
use tvta_core::rng::{job_stream, mix};
use tvta_core::tuner::Fleet;

use crate::config::Experiment;
use crate::dataset::{load_dataset, TARGETS};
use crate::error::{CliError, Result};
use crate::trace::{Event, Phase, TraceRecord, TraceWriter};
use crate::{to_json, write_file, RunOptions};

const TRAIN_TAG: u64 = 0x0074_7261_696e;

/// Importance for one (target, precision) model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub target: String,
    pub precision: u32,
    pub samples: usize,
    /// Per encoded column, summing to 1 unless no tree split.
    pub columns: Vec<f64>,
    /// Per grid feature: one-hot columns summed, precision dropped.
    pub features: Vec<f64>,
    pub best_candidate: usize,
    pub test_rmse: f64,
    /// 1 minus the quartile-bin misclassification rate on the holdout.
    pub accuracy: f64,
    pub majority_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceFile {
    pub columns: Vec<String>,
    pub features: Vec<String>,
    pub entries: Vec<ImportanceEntry>,
}

impl ImportanceFile {
    pub fn get(&self, target: &str, precision: u32) -> Option<&ImportanceEntry> {
        self.entries.iter().find(|e| e.target == target && e.precision == precision)
    }
}

pub fn model_file_name(target: &str, precision: u32) -> String {
    format!("{target}_p{precision}.json")
}

/// Name of the GOPs model trained on every sample, failures counting as 0.
/// It estimates expected GOPs and ranks overlay candidates; the `gops`
/// model proper only sees designs that implemented, since a failed design
/// has no throughput to explain.
pub const EXPECTED_GOPS: &str = "gops_expected";

/// One model to train: its name, target column and whether failed designs
/// are left out.
const MODELS: [(&str, usize, bool); 6] = [
    ("gops", 0, true),
    ("dsp", 1, false),
    ("bram", 2, false),
    ("lut", 3, false),
    ("ff", 4, false),
    (EXPECTED_GOPS, 0, false),
];

struct Trained {
    entry: ImportanceEntry,
    model: GbtModel,
    cv: CvReport,
}

pub fn train_importance(exp: &Experiment, opts: &RunOptions) -> Result<ImportanceFile> {
    let cfg = &exp.config;
    let data = load_dataset(opts)?;
    let layout = ColumnLayout::new(&exp.grid);
    if data.columns != layout.names() {
        return Err(CliError::Missing("dataset columns do not match the configured grid; regenerate the dataset".into()));
    }
    let jobs: Vec<(usize, u32)> = data.rows.keys().flat_map(|&p| (0..MODELS.len()).map(move |m| (m, p))).collect();
    let fleet = opts.fleet();
    let results = fleet.run(jobs.len(), |j| {
        let (mi, p) = jobs[j];
        let (name, t, ok_only) = MODELS[mi];
        let mut ds = Dataset::new(data.columns.clone(), name);
        for row in data.rows[&p].iter().filter(|r| r.ok || !ok_only) {
            ds.push(row.x.clone(), row.y[t]);
        }
        let mut rng = job_stream(cfg.gbt.seed, mix(&[TRAIN_TAG, mi as u64, p as u64]));
        let cv = cross_validate(&ds, &cfg.gbt.candidates, &mut rng)?;
        let model = fit(&ds, &cfg.gbt.candidates[cv.best])?;
        let columns = model.importance();
        let entry = ImportanceEntry {
            target: name.into(),
            precision: p,
            samples: ds.len(),
            features: layout.feature_scores(&columns),
            columns,
            best_candidate: cv.best,
            test_rmse: cv.test_rmse,
            accuracy: 1.0 - cv.test_misclassification,
            majority_accuracy: 1.0 - cv.majority_misclassification,
        };
        Ok::<_, tvta_core::gbt::GbtError>(Trained { entry, model, cv })
    });
    let mut trained = Vec::with_capacity(jobs.len());
    for ((mi, p), r) in jobs.iter().zip(results) {
        let r = r.map_err(|f| CliError::Invariant(format!("training job panicked: {}", f.message)))?;
        trained.push(r.map_err(|e| CliError::Failed(format!("training {} at precision {p}: {e}", MODELS[*mi].0)))?);
    }
    if trained.is_empty() {
        return Err(CliError::Failed("the dataset holds no samples".into()));
    }

    let dir = opts.train_dir();
    let mut w = TraceWriter::create(&dir.join("trace.jsonl"), opts.timestamps)?;
    let mut header = TraceRecord::new(&cfg.experiment_id, Phase::Train, Event::Header, cfg.gbt.seed);
    header.detail = Some(serde_json::json!({ "candidates": cfg.gbt.candidates, "targets": TARGETS, "models": MODELS.map(|m| m.0) }));
    w.write(header)?;
    let mut cv_reports = BTreeMap::new();
    for tr in &trained {
        let e = &tr.entry;
        write_file(&dir.join("models").join(model_file_name(&e.target, e.precision)), &to_json(&tr.model)?)?;
        cv_reports.insert(format!("{}_p{}", e.target, e.precision), &tr.cv);
        let mut r = TraceRecord::new(&cfg.experiment_id, Phase::Train, Event::Summary, cfg.gbt.seed);
        r.precision = Some(e.precision);
        r.detail = Some(serde_json::to_value(e).map_err(|e| CliError::Invariant(e.to_string()))?);
        w.write(r)?;
    }
    w.finish()?;
    write_file(&dir.join("cv_report.json"), &to_json(&cv_reports)?)?;

    let file = ImportanceFile {
        columns: layout.names().to_vec(),
        features: exp.grid.features().iter().map(|f| f.name.clone()).collect(),
        entries: trained.into_iter().map(|t| t.entry).filter(|e| e.target != EXPECTED_GOPS).collect(),
    };
    write_file(&dir.join("importance.json"), &to_json(&file)?)?;
    write_file(&dir.join("summary.txt"), &summary_table(&file))?;
    Ok(file)
}

/// Accuracy table plus the top features of each model.
pub fn summary_table(file: &ImportanceFile) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "quartile-bin accuracy on the holdout (majority baseline in parentheses)");
    let _ = writeln!(s, "{:<8} {:>9} {:>16} {:>12}  top features", "target", "precision", "accuracy", "test rmse");
    for e in &file.entries {
        let top: Vec<String> = tvta_core::designspace::feature_ranking(&e.features)
            .into_iter()
            .take(3)
            .filter(|&i| e.features[i] > 0.0)
            .map(|i| format!("{} {:.2}", file.features[i], e.features[i]))
            .collect();
        let _ = writeln!(
            s,
            "{:<8} {:>9} {:>7.1}% ({:>5.1}%) {:>12.4}  {}",
            e.target,
            e.precision,
            100.0 * e.accuracy,
            100.0 * e.majority_accuracy,
            e.test_rmse,
            top.join(", ")
        );
    }
    s
}

pub fn load_importance(opts: &RunOptions) -> Result<ImportanceFile> {
    let path = opts.train_dir().join("importance.json");
    let text = std::fs::read_to_string(&path)
        .map_err(|_| CliError::Missing(format!("importance file {} not found; run `tvta train` first", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Missing(format!("importance file {} is corrupt: {e}", path.display())))
}

pub fn load_model(opts: &RunOptions, target: &str, precision: u32) -> Result<GbtModel> {
    let path = opts.train_dir().join("models").join(model_file_name(target, precision));
    let text = std::fs::read_to_string(&path)
        .map_err(|_| CliError::Missing(format!("model {} not found; run `tvta train` first", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Missing(format!("model {} is corrupt: {e}", path.display())))
}
