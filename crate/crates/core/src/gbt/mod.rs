//! Gradient boosted regression trees.
//!
//! First-order boosting: every round fits one tree to the negative
//! gradients of the loss with exact greedy splits. Missing values (`NaN`)
//! never choose a threshold; each split learns where to send them.

mod cv;
mod tree;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use cv::{cross_validate, quartile_bin, quartiles, snap, CvIteration, CvReport, CV_ITERATIONS};
pub use tree::{Direction, Node};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GbtError {
    #[error("empty dataset")]
    Empty,
    #[error("target {0} is not finite")]
    NonFiniteTarget(usize),
    #[error("sample {index} has {got} features, expected {expected}")]
    Length { index: usize, got: usize, expected: usize },
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("dataset of {0} samples is too small for the protocol (need at least 20)")]
    TooSmall(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub x: Vec<f64>,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub target_name: String,
    pub samples: Vec<TrainingSample>,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>, target_name: &str) -> Self {
        Self { feature_names, target_name: target_name.into(), samples: Vec::new() }
    }

    pub fn push(&mut self, x: Vec<f64>, y: f64) {
        self.samples.push(TrainingSample { x, y });
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Samples at the given indices.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
            samples: idx.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }

    fn validate(&self) -> Result<(), GbtError> {
        if self.samples.is_empty() {
            return Err(GbtError::Empty);
        }
        let p = self.n_features();
        for (i, s) in self.samples.iter().enumerate() {
            if s.x.len() != p {
                return Err(GbtError::Length { index: i, got: s.x.len(), expected: p });
            }
            if !s.y.is_finite() {
                return Err(GbtError::NonFiniteTarget(i));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    #[default]
    SquaredError,
    /// Binary targets in {0, 1}; scores are log-odds.
    Logistic,
}

impl Loss {
    fn base_score(&self, y: &[f64]) -> f64 {
        // offset from the first value keeps constant targets exact
        let y0 = y[0];
        let mean = y0 + y.iter().map(|v| v - y0).sum::<f64>() / y.len() as f64;
        match self {
            Loss::SquaredError => mean,
            Loss::Logistic => {
                let p = mean.clamp(1e-6, 1.0 - 1e-6);
                libm::log(p / (1.0 - p))
            }
        }
    }

    /// Negative gradient at score `f`.
    fn residual(&self, y: f64, f: f64) -> f64 {
        match self {
            Loss::SquaredError => y - f,
            Loss::Logistic => y - sigmoid(f),
        }
    }

    /// Loss-minimizing leaf constant (one Newton step for the logistic loss).
    fn leaf_weight(&self, residuals: &[f64], scores: &[f64]) -> f64 {
        let n = residuals.len() as f64;
        let g: f64 = residuals.iter().sum();
        match self {
            Loss::SquaredError => g / n,
            Loss::Logistic => {
                let h: f64 = scores.iter().map(|&f| {
                    let p = sigmoid(f);
                    p * (1.0 - p)
                }).sum();
                if h > 1e-12 { g / h } else { 0.0 }
            }
        }
    }
}

pub fn sigmoid(f: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-f))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbtParams {
    pub num_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    pub loss: Loss,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self { num_trees: 100, max_depth: 4, learning_rate: 0.1, min_samples_leaf: 3, loss: Loss::SquaredError }
    }
}

impl GbtParams {
    pub fn validate(&self) -> Result<(), GbtError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(GbtError::Params("learning_rate must be positive".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(GbtError::Params("min_samples_leaf must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub trees: Vec<Node>,
    pub learning_rate: f64,
    pub base_score: f64,
    pub loss: Loss,
    pub feature_names: Vec<String>,
}

impl GbtModel {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Sum of raw tree outputs, accumulated in tree order.
    pub fn tree_sum(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.eval(x)).sum()
    }

    /// `base_score + learning_rate * sum of trees`. Missing entries follow
    /// each split's default direction.
    pub fn predict(&self, x: &[f64]) -> Result<f64, GbtError> {
        if x.len() != self.n_features() {
            return Err(GbtError::Length { index: 0, got: x.len(), expected: self.n_features() });
        }
        Ok(self.base_score + self.learning_rate * self.tree_sum(x))
    }

    /// Prediction mapped to the target scale (probability for logistic).
    pub fn predict_value(&self, x: &[f64]) -> Result<f64, GbtError> {
        let f = self.predict(x)?;
        Ok(match self.loss {
            Loss::SquaredError => f,
            Loss::Logistic => sigmoid(f),
        })
    }

    pub fn rmse(&self, data: &Dataset) -> Result<f64, GbtError> {
        data.validate()?;
        let mut se = 0.0;
        for s in &data.samples {
            let e = self.predict_value(&s.x)? - s.y;
            se += e * e;
        }
        Ok(libm::sqrt(se / data.len() as f64))
    }

    /// Per-feature sum of `gain * cover` over split nodes, averaged over
    /// trees and normalized to 1. All zeros when no tree splits.
    pub fn importance(&self) -> Vec<f64> {
        let mut imp = alloc::vec![0.0; self.n_features()];
        for t in &self.trees {
            t.visit_splits(&mut |f, gain, cover| imp[f] += gain * cover);
        }
        if !self.trees.is_empty() {
            let k = self.trees.len() as f64;
            imp.iter_mut().for_each(|v| *v /= k);
        }
        let total: f64 = imp.iter().sum();
        if total > 0.0 {
            imp.iter_mut().for_each(|v| *v /= total);
        }
        imp
    }
}

/// Fits a boosted ensemble.
pub fn fit(data: &Dataset, params: &GbtParams) -> Result<GbtModel, GbtError> {
    data.validate()?;
    params.validate()?;
    let y: Vec<f64> = data.samples.iter().map(|s| s.y).collect();
    let base = params.loss.base_score(&y);
    let mut scores = alloc::vec![base; y.len()];
    let index = tree::FeatureIndex::new(data);
    let mut trees = Vec::with_capacity(params.num_trees);
    for _ in 0..params.num_trees {
        let residuals: Vec<f64> = y.iter().zip(&scores).map(|(&yi, &f)| params.loss.residual(yi, f)).collect();
        let t = tree::grow(data, &index, &residuals, &scores, params);
        for (s, f) in data.samples.iter().zip(scores.iter_mut()) {
            *f += params.learning_rate * t.eval(&s.x);
        }
        trees.push(t);
    }
    Ok(GbtModel {
        trees,
        learning_rate: params.learning_rate,
        base_score: base,
        loss: params.loss,
        feature_names: data.feature_names.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn data(rows: &[(&[f64], f64)]) -> Dataset {
        let p = rows[0].0.len();
        let mut d = Dataset::new((0..p).map(|i| alloc::format!("x{i}")).collect(), "y");
        for (x, y) in rows {
            d.push(x.to_vec(), *y);
        }
        d
    }

    #[test]
    fn zero_trees_predict_mean() {
        let d = data(&[(&[0.0], 1.0), (&[1.0], 2.0), (&[2.0], 6.0)]);
        let m = fit(&d, &GbtParams { num_trees: 0, ..Default::default() }).unwrap();
        assert_eq!(m.predict(&[5.0]).unwrap(), 3.0);
        assert_eq!(m.importance(), vec![0.0]);
    }

    #[test]
    fn separable_binary_is_exact() {
        let rows: Vec<(Vec<f64>, f64)> = (0..10).map(|i| (vec![(i % 2) as f64], (i % 2) as f64)).collect();
        let mut d = Dataset::new(vec!["x".into()], "y");
        for (x, y) in rows {
            d.push(x, y);
        }
        let p = GbtParams { num_trees: 1, max_depth: 1, learning_rate: 1.0, min_samples_leaf: 1, loss: Loss::SquaredError };
        let m = fit(&d, &p).unwrap();
        assert_eq!(m.rmse(&d).unwrap(), 0.0);
    }

    #[test]
    fn constant_target_gives_leaves() {
        let d = data(&[(&[0.0, 3.0], 0.7), (&[1.0, 2.0], 0.7), (&[2.0, 1.0], 0.7), (&[3.0, 0.0], 0.7)]);
        let m = fit(&d, &GbtParams { min_samples_leaf: 1, ..Default::default() }).unwrap();
        assert!(m.trees.iter().all(|t| matches!(t, Node::Leaf { .. })));
        assert_eq!(m.predict(&[9.0, 9.0]).unwrap(), 0.7);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(fit(&Dataset::new(vec![], "y"), &GbtParams::default()), Err(GbtError::Empty)));
        let d = data(&[(&[0.0], f64::NAN)]);
        assert!(matches!(fit(&d, &GbtParams::default()), Err(GbtError::NonFiniteTarget(0))));
        let d = data(&[(&[0.0], 1.0)]);
        let m = fit(&d, &GbtParams::default()).unwrap();
        assert!(m.predict(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn logistic_learns_a_threshold() {
        let mut d = Dataset::new(vec!["x".into()], "y");
        for i in 0..40 {
            d.push(vec![i as f64], if i >= 20 { 1.0 } else { 0.0 });
        }
        let p = GbtParams { loss: Loss::Logistic, num_trees: 30, learning_rate: 0.5, ..Default::default() };
        let m = fit(&d, &p).unwrap();
        assert!(m.predict_value(&[35.0]).unwrap() > 0.9);
        assert!(m.predict_value(&[3.0]).unwrap() < 0.1);
    }

    #[test]
    fn prediction_is_base_plus_scaled_tree_sum() {
        let d = data(&[(&[0.0], 1.0), (&[1.0], 3.0), (&[2.0], 2.0), (&[3.0], 8.0), (&[4.0], 5.0), (&[5.0], 9.0)]);
        let m = fit(&d, &GbtParams { num_trees: 5, min_samples_leaf: 1, ..Default::default() }).unwrap();
        for x in [-1.0, 0.5, 2.5, f64::NAN] {
            assert_eq!(m.predict(&[x]).unwrap(), m.base_score + m.learning_rate * m.tree_sum(&[x]));
        }
    }
}
