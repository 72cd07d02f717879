//! Line-delimited trace records.
//!
//! Every file the runner writes under `dataset/` and `tune/traces/` is one
//! JSON object per line, each carrying `schema_version`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use tvta_core::designspace::{DesignPoint, FeatureGrid, Level};
use tvta_core::schedspace::ScheduleConfig;
use tvta_core::tuner::Source;
use tvta_core::vhw::ImplementationResult;

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Dataset,
    Train,
    Tune,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    /// First line of a file: what the file holds.
    Header,
    /// One implemented design point with its targets.
    Sample,
    /// One overlay attempt of a tuning run.
    Overlay,
    /// One batch of a tuning run.
    Batch,
    /// One schedule measurement.
    Measurement,
    /// Last line of a tuning run.
    Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlayDescriptor {
    pub id: usize,
    pub precision: u32,
    pub knobs: BTreeMap<String, Level>,
    pub status: String,
    pub fmax_mhz: Option<f64>,
    pub achieved_freq_mhz: Option<f64>,
    pub peak_gops: Option<f64>,
    pub brams: Option<u64>,
    pub dsps: Option<u64>,
    pub luts: Option<u64>,
    pub ffs: Option<u64>,
}

impl OverlayDescriptor {
    pub fn new(id: usize, grid: &FeatureGrid, point: &DesignPoint, status: &str, imp: Option<&ImplementationResult>) -> Self {
        let knobs = grid
            .features()
            .iter()
            .zip(&point.choices)
            .map(|(f, &c)| (f.name.clone(), f.values[c].clone()))
            .collect();
        Self {
            id,
            precision: point.precision,
            knobs,
            status: status.into(),
            fmax_mhz: imp.map(|i| i.fmax_mhz),
            achieved_freq_mhz: imp.map(|i| i.achieved_freq_mhz),
            peak_gops: imp.map(|i| i.peak_gops),
            brams: imp.map(|i| i.brams),
            dsps: imp.map(|i| i.dsps),
            luts: imp.map(|i| i.luts),
            ffs: imp.map(|i| i.ffs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleDescriptor {
    pub label: String,
    pub config: ScheduleConfig,
}

impl From<&ScheduleConfig> for ScheduleDescriptor {
    fn from(c: &ScheduleConfig) -> Self {
        Self { label: c.label(), config: *c }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRecord {
    pub schema_version: u32,
    pub experiment_id: String,
    pub phase: Phase,
    pub event: Event,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial_index: Option<usize>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workload: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlay_id: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlay: Option<OverlayDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gops: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Source>,
    /// Encoded feature vector; `null` marks a missing entry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<BTreeMap<String, f64>>,
    /// Event-specific payload.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<serde_json::Value>,
    /// Seconds since the Unix epoch; absent in no-timestamp mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock: Option<f64>,
}

impl TraceRecord {
    pub fn new(experiment_id: &str, phase: Phase, event: Event, seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment_id: experiment_id.into(),
            phase,
            event,
            trial_index: None,
            seed,
            precision: None,
            method: None,
            workload: None,
            overlay_id: None,
            overlay: None,
            schedule: None,
            latency_s: None,
            gops: None,
            status: None,
            source: None,
            features: None,
            targets: None,
            detail: None,
            wall_clock: None,
        }
    }
}

/// Appends records to a file, stamping wall-clock time unless disabled.
pub struct TraceWriter {
    out: BufWriter<File>,
    path: std::path::PathBuf,
    timestamps: bool,
}

impl TraceWriter {
    pub fn create(path: &Path, timestamps: bool) -> Result<Self> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        let f = File::create(path).map_err(|e| CliError::io(path, e))?;
        Ok(Self { out: BufWriter::new(f), path: path.to_path_buf(), timestamps })
    }

    pub fn write(&mut self, mut r: TraceRecord) -> Result<()> {
        if self.timestamps {
            r.wall_clock = Some(now());
        }
        let line = serde_json::to_string(&r).map_err(|e| CliError::Invariant(format!("trace record: {e}")))?;
        writeln!(self.out, "{line}").map_err(|e| CliError::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

pub fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

/// Problems found in one trace file.
#[derive(Debug, Clone, PartialEq)]
pub struct FileReport {
    pub records: usize,
    pub errors: Vec<String>,
}

/// Parses every line; a line is valid when it decodes as a [`TraceRecord`]
/// with the current schema version.
pub fn read_trace(path: &Path) -> Result<(Vec<TraceRecord>, FileReport)> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut recs = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            errors.push(format!("line {}: empty line", i + 1));
            continue;
        }
        match serde_json::from_str::<TraceRecord>(&line) {
            Ok(r) if r.schema_version == SCHEMA_VERSION => recs.push(r),
            Ok(r) => errors.push(format!("line {}: schema_version {} is not {SCHEMA_VERSION}", i + 1, r.schema_version)),
            Err(e) => errors.push(format!("line {}: {e}", i + 1)),
        }
    }
    if recs.first().is_some_and(|r| r.event != Event::Header) {
        errors.push("first record is not a header".into());
    }
    if recs.is_empty() && errors.is_empty() {
        errors.push("no records".into());
    }
    let n = recs.len();
    Ok((recs, FileReport { records: n, errors }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_round_trip_and_optional_fields() {
        let mut r = TraceRecord::new("x", Phase::Tune, Event::Measurement, 3);
        r.features = Some(vec![Some(1.0), None]);
        r.gops = Some(2.5);
        let s = serde_json::to_string(&r).unwrap();
        assert!(!s.contains("wall_clock"));
        assert!(s.contains("\"features\":[1.0,null]"));
        let back: TraceRecord = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
        assert!(serde_json::from_str::<TraceRecord>(r#"{"schema_version":1}"#).is_err());
    }
}
