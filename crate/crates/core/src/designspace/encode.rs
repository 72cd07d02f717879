//! Numeric feature vectors for the boosted-tree models.
//!
//! Column mapping, in grid order:
//!
//! | feature kind | columns | value |
//! |---|---|---|
//! | ordinal | 1 | value index (a trailing `"complete"` is the highest index) |
//! | boolean | 1 | 0 / 1 |
//! | categorical | one per value, named `feature=value` | one-hot |
//!
//! followed by one `precision` column holding the bit-width. A feature whose
//! gate is off and which sits at its first value is encoded as [`MISSING`].

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{DesignPoint, DesignSpaceError, FeatureGrid, FeatureKind};

/// Marker for absent or inactive entries.
pub const MISSING: f64 = f64::NAN;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnSource {
    Ordinal { feature: usize },
    Boolean { feature: usize },
    OneHot { feature: usize, value: usize },
    Precision,
}

impl ColumnSource {
    pub fn feature(&self) -> Option<usize> {
        match *self {
            ColumnSource::Ordinal { feature }
            | ColumnSource::Boolean { feature }
            | ColumnSource::OneHot { feature, .. } => Some(feature),
            ColumnSource::Precision => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnLayout {
    names: Vec<String>,
    sources: Vec<ColumnSource>,
    /// For each feature, the index of the feature gating it and the value
    /// index that switches it off.
    gates: Vec<Option<(usize, usize)>>,
}

impl ColumnLayout {
    pub fn new(grid: &FeatureGrid) -> Self {
        let mut names = Vec::new();
        let mut sources = Vec::new();
        let mut gates = Vec::new();
        for (fi, f) in grid.features().iter().enumerate() {
            match f.kind {
                FeatureKind::Ordinal => {
                    names.push(f.name.clone());
                    sources.push(ColumnSource::Ordinal { feature: fi });
                }
                FeatureKind::Boolean => {
                    names.push(f.name.clone());
                    sources.push(ColumnSource::Boolean { feature: fi });
                }
                FeatureKind::Categorical => {
                    for (vi, v) in f.values.iter().enumerate() {
                        names.push(format!("{}={}", f.name, v));
                        sources.push(ColumnSource::OneHot { feature: fi, value: vi });
                    }
                }
            }
            gates.push(f.gate.as_ref().and_then(|g| {
                let gi = grid.feature_index(&g.feature)?;
                Some((gi, grid.features()[gi].position(&g.off)?))
            }));
        }
        names.push("precision".into());
        sources.push(ColumnSource::Precision);
        Self { names, sources, gates }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn sources(&self) -> &[ColumnSource] {
        &self.sources
    }

    /// Folds per-column scores into per-feature scores (one-hot blocks are
    /// summed, the precision column is dropped).
    pub fn feature_scores(&self, column_scores: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.gates.len()];
        for (src, &v) in self.sources.iter().zip(column_scores) {
            if let Some(f) = src.feature() {
                out[f] += v;
            }
        }
        out
    }

    fn inactive(&self, point: &DesignPoint, feature: usize) -> bool {
        match self.gates[feature] {
            Some((g, off)) => point.choices[g] == off && point.choices[feature] == 0,
            None => false,
        }
    }

    pub fn encode(&self, grid: &FeatureGrid, point: &DesignPoint) -> Result<Vec<f64>, DesignSpaceError> {
        grid.validate_point(point)?;
        let out = self
            .sources
            .iter()
            .map(|src| match *src {
                ColumnSource::Precision => point.precision as f64,
                ColumnSource::Ordinal { feature } | ColumnSource::Boolean { feature } => {
                    if self.inactive(point, feature) {
                        MISSING
                    } else {
                        point.choices[feature] as f64
                    }
                }
                ColumnSource::OneHot { feature, value } => {
                    if self.inactive(point, feature) {
                        MISSING
                    } else if point.choices[feature] == value {
                        1.0
                    } else {
                        0.0
                    }
                }
            })
            .collect();
        Ok(out)
    }

    pub fn decode(&self, grid: &FeatureGrid, row: &[f64]) -> Result<DesignPoint, DesignSpaceError> {
        let bad = |msg: String| DesignSpaceError::InvalidPoint(msg);
        if row.len() != self.len() {
            return Err(bad(format!("vector has {} entries, layout has {}", row.len(), self.len())));
        }
        let nf = grid.features().len();
        let mut choices: Vec<Option<usize>> = alloc::vec![None; nf];
        let mut missing = alloc::vec![false; nf];
        let mut precision = None;
        for (src, &x) in self.sources.iter().zip(row) {
            match *src {
                ColumnSource::Precision => {
                    if x.is_nan() || x < 0.0 || libm::trunc(x) != x {
                        return Err(bad(format!("precision `{x}` is not a bit-width")));
                    }
                    precision = Some(x as u32);
                }
                ColumnSource::Ordinal { feature } | ColumnSource::Boolean { feature } => {
                    if x.is_nan() {
                        missing[feature] = true;
                        choices[feature] = Some(0);
                        continue;
                    }
                    let n = grid.features()[feature].len();
                    if x < 0.0 || libm::trunc(x) != x || x as usize >= n {
                        return Err(bad(format!("`{x}` is not a value index of `{}`", grid.features()[feature].name)));
                    }
                    choices[feature] = Some(x as usize);
                }
                ColumnSource::OneHot { feature, value } => {
                    if x.is_nan() {
                        missing[feature] = true;
                        choices[feature].get_or_insert(0);
                    } else if x == 1.0 {
                        if missing[feature] || choices[feature].is_some() {
                            return Err(bad(format!("one-hot block of `{}` is malformed", grid.features()[feature].name)));
                        }
                        choices[feature] = Some(value);
                    } else if x != 0.0 {
                        return Err(bad(format!("one-hot entry `{x}` is not 0 or 1")));
                    }
                }
            }
        }
        let choices: Vec<usize> = choices
            .into_iter()
            .enumerate()
            .map(|(i, c)| c.ok_or_else(|| bad(format!("no value for `{}`", grid.features()[i].name))))
            .collect::<Result<_, _>>()?;
        let point = DesignPoint { choices, precision: precision.ok_or_else(|| bad("no precision".into()))? };
        grid.validate_point(&point)?;
        for (f, &m) in missing.iter().enumerate() {
            if m && !self.inactive(&point, f) {
                return Err(bad(format!("`{}` is missing but its gate is on", grid.features()[f].name)));
            }
        }
        Ok(point)
    }
}
