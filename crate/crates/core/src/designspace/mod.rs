//! Hardware knob space of the overlay plus precision.
//!
//! A [`FeatureGrid`] is an ordered list of [`Feature`]s and a list of
//! precisions. A [`DesignPoint`] picks one value index per feature plus a
//! precision. The grid is never materialized: [`count_space`] is analytic and
//! [`FeatureGrid::points`] / [`eliminate`] are lazy odometers.

mod constraints;
mod encode;
mod guided;
mod table1;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

pub use constraints::{Constraint, ConstraintSet, ProductLimit, Rule, RuleFn};
pub use encode::{ColumnLayout, ColumnSource, MISSING};
pub use guided::{feature_ranking, rank_guided, sample_guided, GuidanceParams, GuidedSample, PointScorer};
pub use table1::{names, table1_defaults, table1_grid, Defaults, ARRAY_EXTENTS};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DesignSpaceError {
    #[error("feature `{0}` has no values")]
    EmptyValues(String),
    #[error("feature `{feature}` lists value `{value}` twice")]
    DuplicateValue { feature: String, value: Level },
    #[error("ordinal feature `{0}` is not strictly increasing")]
    NotIncreasing(String),
    #[error("boolean feature `{0}` must have exactly the values false and true")]
    BadBoolean(String),
    #[error("feature name `{0}` is used twice")]
    DuplicateFeature(String),
    #[error("invalid precision list: {0}")]
    BadPrecision(String),
    #[error("gate of `{feature}` refers to `{gate}`, which is not an earlier-declared compatible feature value")]
    BadGate { feature: String, gate: String },
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("invalid design point: {0}")]
    InvalidPoint(String),
}

/// One admissible setting of a feature.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Level {
    Bool(bool),
    Int(i64),
    Sym(String),
}

impl Level {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Level::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Level::Bool(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Level::Sym(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Bool(v) => write!(f, "{v}"),
            Level::Int(v) => write!(f, "{v}"),
            Level::Sym(s) => f.write_str(s),
        }
    }
}

impl From<bool> for Level {
    fn from(v: bool) -> Self {
        Level::Bool(v)
    }
}

impl From<i64> for Level {
    fn from(v: i64) -> Self {
        Level::Int(v)
    }
}

impl From<&str> for Level {
    fn from(v: &str) -> Self {
        Level::Sym(v.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    /// Ordered numeric grid. A single trailing symbolic value (e.g.
    /// `"complete"`) is allowed and ranks above every number.
    Ordinal,
    Boolean,
    Categorical,
}

/// Marks a feature as inactive while another feature sits at `off`.
///
/// An inactive feature at its first value is encoded as [`MISSING`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gate {
    pub feature: String,
    pub off: Level,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Feature {
    pub name: String,
    pub kind: FeatureKind,
    pub values: Vec<Level>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<Gate>,
}

impl Feature {
    pub fn ordinal(name: &str, values: impl IntoIterator<Item = i64>) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Ordinal,
            values: values.into_iter().map(Level::Int).collect(),
            gate: None,
        }
    }

    pub fn boolean(name: &str) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Boolean,
            values: alloc::vec![Level::Bool(false), Level::Bool(true)],
            gate: None,
        }
    }

    pub fn categorical(name: &str, values: impl IntoIterator<Item = Level>) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Categorical,
            values: values.into_iter().collect(),
            gate: None,
        }
    }

    pub fn with_trailing(mut self, sym: &str) -> Self {
        self.values.push(Level::Sym(sym.into()));
        self
    }

    pub fn gated_by(mut self, feature: &str, off: impl Into<Level>) -> Self {
        self.gate = Some(Gate { feature: feature.into(), off: off.into() });
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn position(&self, level: &Level) -> Option<usize> {
        self.values.iter().position(|v| v == level)
    }

    fn validate(&self) -> Result<(), DesignSpaceError> {
        if self.values.is_empty() {
            return Err(DesignSpaceError::EmptyValues(self.name.clone()));
        }
        for (i, v) in self.values.iter().enumerate() {
            if self.values[..i].contains(v) {
                return Err(DesignSpaceError::DuplicateValue {
                    feature: self.name.clone(),
                    value: v.clone(),
                });
            }
        }
        match self.kind {
            FeatureKind::Ordinal => {
                let mut prev: Option<i64> = None;
                for (i, v) in self.values.iter().enumerate() {
                    match v {
                        Level::Int(x) => {
                            if prev.is_some_and(|p| *x <= p) {
                                return Err(DesignSpaceError::NotIncreasing(self.name.clone()));
                            }
                            prev = Some(*x);
                        }
                        Level::Sym(_) if i + 1 == self.values.len() && i > 0 => {}
                        _ => return Err(DesignSpaceError::NotIncreasing(self.name.clone())),
                    }
                }
            }
            FeatureKind::Boolean => {
                if self.values != [Level::Bool(false), Level::Bool(true)] {
                    return Err(DesignSpaceError::BadBoolean(self.name.clone()));
                }
            }
            FeatureKind::Categorical => {}
        }
        Ok(())
    }
}

/// Ordered feature list plus the precisions (bit-widths) to explore.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct FeatureGrid {
    features: Vec<Feature>,
    precisions: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    features: Vec<Feature>,
    #[serde(default = "default_precisions")]
    precisions: Vec<u32>,
}

fn default_precisions() -> Vec<u32> {
    alloc::vec![1, 2, 4, 8]
}

impl TryFrom<RawGrid> for FeatureGrid {
    type Error = DesignSpaceError;
    fn try_from(raw: RawGrid) -> Result<Self, Self::Error> {
        FeatureGrid::new(raw.features, raw.precisions)
    }
}

impl From<FeatureGrid> for RawGrid {
    fn from(g: FeatureGrid) -> Self {
        RawGrid { features: g.features, precisions: g.precisions }
    }
}

/// Upper bound on precision bit-widths accepted by [`FeatureGrid::new`].
pub const MAX_PRECISION_BITS: u32 = 32;

impl FeatureGrid {
    pub fn new(features: Vec<Feature>, precisions: Vec<u32>) -> Result<Self, DesignSpaceError> {
        for (i, f) in features.iter().enumerate() {
            f.validate()?;
            if features[..i].iter().any(|g| g.name == f.name) {
                return Err(DesignSpaceError::DuplicateFeature(f.name.clone()));
            }
            if let Some(gate) = &f.gate {
                let ok = features[..i]
                    .iter()
                    .find(|g| g.name == gate.feature)
                    .is_some_and(|g| g.position(&gate.off).is_some());
                if !ok {
                    return Err(DesignSpaceError::BadGate {
                        feature: f.name.clone(),
                        gate: gate.feature.clone(),
                    });
                }
            }
        }
        if precisions.is_empty() {
            return Err(DesignSpaceError::BadPrecision("empty".into()));
        }
        for (i, &p) in precisions.iter().enumerate() {
            if !p.is_power_of_two() || p > MAX_PRECISION_BITS {
                return Err(DesignSpaceError::BadPrecision(alloc::format!(
                    "{p} is not a power of two in [1, {MAX_PRECISION_BITS}]"
                )));
            }
            if precisions[..i].contains(&p) {
                return Err(DesignSpaceError::BadPrecision(alloc::format!("{p} listed twice")));
            }
        }
        Ok(Self { features, precisions })
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn precisions(&self) -> &[u32] {
        &self.precisions
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn feature(&self, name: &str) -> Option<&Feature> {
        self.features.iter().find(|f| f.name == name)
    }

    /// Same features, restricted to the given precisions.
    pub fn with_precisions(&self, precisions: Vec<u32>) -> Result<Self, DesignSpaceError> {
        Self::new(self.features.clone(), precisions)
    }

    /// The value a point assigns to `name`, if the grid has that feature.
    pub fn level<'a>(&'a self, point: &DesignPoint, name: &str) -> Option<&'a Level> {
        let i = self.feature_index(name)?;
        self.features[i].values.get(*point.choices.get(i)?)
    }

    pub fn validate_point(&self, point: &DesignPoint) -> Result<(), DesignSpaceError> {
        if point.choices.len() != self.features.len() {
            return Err(DesignSpaceError::InvalidPoint(alloc::format!(
                "{} assignments for {} features",
                point.choices.len(),
                self.features.len()
            )));
        }
        for (f, &c) in self.features.iter().zip(&point.choices) {
            if c >= f.values.len() {
                return Err(DesignSpaceError::InvalidPoint(alloc::format!(
                    "value index {c} out of range for `{}`",
                    f.name
                )));
            }
        }
        if !self.precisions.contains(&point.precision) {
            return Err(DesignSpaceError::InvalidPoint(alloc::format!(
                "precision {} not in grid",
                point.precision
            )));
        }
        Ok(())
    }

    /// Builds a point from named levels; unnamed features take `fallback`
    /// (or their first value when the fallback has none).
    pub fn point_from_levels(
        &self,
        precision: u32,
        levels: &[(&str, Level)],
        fallback: &Defaults,
    ) -> Result<DesignPoint, DesignSpaceError> {
        let mut choices = Vec::with_capacity(self.features.len());
        for f in &self.features {
            let wanted = levels
                .iter()
                .find(|(n, _)| *n == f.name)
                .map(|(_, l)| l)
                .or_else(|| fallback.get(&f.name));
            let idx = match wanted {
                Some(l) => f.position(l).ok_or_else(|| {
                    DesignSpaceError::InvalidPoint(alloc::format!("`{l}` is not a value of `{}`", f.name))
                })?,
                None => 0,
            };
            choices.push(idx);
        }
        for (n, _) in levels {
            if self.feature_index(n).is_none() {
                return Err(DesignSpaceError::UnknownFeature((*n).into()));
            }
        }
        let p = DesignPoint { choices, precision };
        self.validate_point(&p)?;
        Ok(p)
    }

    /// All points, precision outermost, then features in declaration order
    /// with the last feature varying fastest.
    pub fn points(&self) -> Points<'_> {
        Points {
            grid: self,
            precision: 0,
            end: self.precisions.len(),
            choices: alloc::vec![0; self.features.len()],
            done: false,
        }
    }

    /// Points at one precision only, same order as [`FeatureGrid::points`].
    pub fn points_at(&self, precision: u32) -> Points<'_> {
        match self.precisions.iter().position(|&p| p == precision) {
            Some(i) => Points {
                grid: self,
                precision: i,
                end: i + 1,
                choices: alloc::vec![0; self.features.len()],
                done: false,
            },
            None => Points { grid: self, precision: 0, end: 0, choices: Vec::new(), done: true },
        }
    }
}

/// One hardware configuration: a value index per grid feature plus precision.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DesignPoint {
    pub choices: Vec<usize>,
    pub precision: u32,
}

/// Lazy cartesian enumeration of a grid.
#[derive(Debug, Clone)]
pub struct Points<'g> {
    grid: &'g FeatureGrid,
    precision: usize,
    end: usize,
    choices: Vec<usize>,
    done: bool,
}

impl Iterator for Points<'_> {
    type Item = DesignPoint;

    fn next(&mut self) -> Option<DesignPoint> {
        if self.done {
            return None;
        }
        let out = DesignPoint {
            choices: self.choices.clone(),
            precision: self.grid.precisions[self.precision],
        };
        // odometer step, last feature fastest
        let mut carried = true;
        for i in (0..self.choices.len()).rev() {
            self.choices[i] += 1;
            if self.choices[i] < self.grid.features[i].values.len() {
                carried = false;
                break;
            }
            self.choices[i] = 0;
        }
        if carried {
            self.precision += 1;
            if self.precision >= self.end {
                self.done = true;
            }
        }
        Some(out)
    }
}

/// Exact size of the unconstrained space: `|precisions| * prod |values|`.
pub fn count_space(grid: &FeatureGrid) -> u128 {
    grid.features
        .iter()
        .fold(grid.precisions.len() as u128, |acc, f| acc.saturating_mul(f.values.len() as u128))
}

/// Points that satisfy every constraint, in enumeration order.
pub fn eliminate<'a>(
    grid: &'a FeatureGrid,
    constraints: &'a [Constraint],
) -> impl Iterator<Item = DesignPoint> + 'a {
    grid.points().filter(move |p| constraints.iter().all(|c| c.holds(grid, p)))
}
