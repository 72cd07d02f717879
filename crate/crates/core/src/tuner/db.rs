use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::designspace::DesignPoint;
use crate::schedspace::ScheduleConfig;

/// Who picked a measured schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Optimizer,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub trial_index: usize,
    pub overlay_id: usize,
    pub design_point: DesignPoint,
    pub schedule: ScheduleConfig,
    pub latency_s: f64,
    pub gops: f64,
    pub source: Source,
    pub seed: u64,
}

/// Append-only measurement log with per-overlay best pointers.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MeasurementDb {
    records: Vec<Record>,
    best: BTreeMap<usize, usize>,
    best_overall: Option<usize>,
}

impl MeasurementDb {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a record. Trial indices must strictly increase.
    pub fn push(&mut self, r: Record) {
        if let Some(last) = self.records.last() {
            assert!(r.trial_index > last.trial_index, "trial indices must increase");
        }
        let i = self.records.len();
        let better = |cur: Option<&usize>, recs: &[Record]| cur.is_none_or(|&b| r.gops > recs[b].gops);
        if better(self.best.get(&r.overlay_id), &self.records) {
            self.best.insert(r.overlay_id, i);
        }
        if better(self.best_overall.as_ref(), &self.records) {
            self.best_overall = Some(i);
        }
        self.records.push(r);
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Highest-GOPs record; the earliest trial wins ties.
    pub fn best(&self) -> Option<&Record> {
        self.best_overall.map(|i| &self.records[i])
    }

    pub fn best_for(&self, overlay: usize) -> Option<&Record> {
        self.best.get(&overlay).map(|&i| &self.records[i])
    }

    pub fn for_overlay(&self, overlay: usize) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(move |r| r.overlay_id == overlay)
    }

    /// `(trial_index, best GOPs so far)` after every record.
    pub fn curve(&self) -> Vec<(usize, f64)> {
        best_so_far(self.records.iter().map(|r| (r.trial_index, r.gops)))
    }

    pub fn curve_for(&self, overlay: usize) -> Vec<(usize, f64)> {
        best_so_far(self.for_overlay(overlay).map(|r| (r.trial_index, r.gops)))
    }
}

/// Running maximum of a `(trial, value)` stream.
pub fn best_so_far(points: impl IntoIterator<Item = (usize, f64)>) -> Vec<(usize, f64)> {
    let mut best = f64::NEG_INFINITY;
    points
        .into_iter()
        .map(|(t, v)| {
            if v > best {
                best = v;
            }
            (t, best)
        })
        .collect()
}

/// Number of trials (1-based count up to and including the hit) until a
/// best-so-far curve first reaches `fraction` of its final value.
pub fn trials_to_fraction(curve: &[(usize, f64)], fraction: f64) -> Option<usize> {
    let last = curve.last()?.1;
    curve.iter().find(|(_, v)| *v >= fraction * last).map(|(t, _)| t + 1)
}
