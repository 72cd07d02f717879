//! Two-level auto-tuning.
//!
//! The outer loop draws sprints of `m` overlay candidates from the
//! importance-guided reduced grid and implements them. Every surviving
//! overlay then gets an inner loop: simulated annealing over the schedule
//! space collects a candidate pool, an ε-greedy rule picks a batch of `b`
//! schedules, the batch is measured and the surrogate refitted.

mod backend;
mod db;
mod fleet;
mod search;
mod tune;

use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::designspace::DesignSpaceError;
use crate::gbt::GbtParams;
use crate::vhw::{NoiseModel, VhwError};

pub use backend::{Backend, GbtScorer, VirtualBackend};
pub use db::{best_so_far, trials_to_fraction, MeasurementDb, Record, Source};
pub use fleet::{Fleet, JobFailure, Sequential};
pub use search::{fit_surrogate, sa_collect, select_batch, Batch, SaResult, Surrogate};
pub use tune::{
    tune, BatchLog, OutcomeStatus, OverlayAttempt, OverlayPolicy, SprintLog, TuningOutcome, AttemptStatus,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TunerError {
    #[error("invalid tuner parameters: {0}")]
    Params(String),
    #[error(transparent)]
    DesignSpace(#[from] DesignSpaceError),
    #[error(transparent)]
    Hardware(#[from] VhwError),
    #[error("schedule space: {0}")]
    Schedule(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Random,
    #[default]
    Surrogate,
}

impl Optimizer {
    pub fn as_str(&self) -> &'static str {
        match self {
            Optimizer::Random => "random",
            Optimizer::Surrogate => "surrogate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaParams {
    pub chains: usize,
    pub steps: usize,
    pub initial_temp: f64,
    pub cooling: f64,
}

impl Default for SaParams {
    fn default() -> Self {
        Self { chains: 4, steps: 128, initial_temp: 1.0, cooling: 0.95 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TunerParams {
    /// Overlay attempts across all sprints.
    pub max_k_trials_overlays: usize,
    /// Overlay candidates per sprint.
    pub m: usize,
    /// Measurement budget of each overlay (of the whole sprint when
    /// `shared_budget` is set).
    pub max_n_trials: usize,
    /// Measurements per batch.
    pub b: usize,
    pub epsilon: f64,
    pub q_size: usize,
    pub sa: SaParams,
    pub optimizer: Optimizer,
    /// Records an overlay needs before its surrogate replaces random picks.
    pub min_surrogate_samples: usize,
    pub surrogate: GbtParams,
    pub noise: NoiseModel,
    pub shared_budget: bool,
}

impl Default for TunerParams {
    fn default() -> Self {
        Self {
            max_k_trials_overlays: 4,
            m: 4,
            max_n_trials: 1000,
            b: 64,
            epsilon: 0.05,
            q_size: 128,
            sa: SaParams::default(),
            optimizer: Optimizer::Surrogate,
            min_surrogate_samples: 8,
            surrogate: GbtParams { num_trees: 50, max_depth: 4, learning_rate: 0.2, min_samples_leaf: 2, ..GbtParams::default() },
            noise: NoiseModel::default(),
            shared_budget: false,
        }
    }
}

impl TunerParams {
    pub fn validate(&self) -> Result<(), TunerError> {
        let bad = |m: &str| Err(TunerError::Params(m.into()));
        if self.m == 0 {
            return bad("m must be >= 1");
        }
        if self.b == 0 {
            return bad("b must be >= 1");
        }
        if self.b > self.q_size {
            return bad("b must not exceed q_size");
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad("epsilon must lie in [0, 1]");
        }
        if self.sa.chains == 0 {
            return bad("sa.chains must be >= 1");
        }
        if self.sa.initial_temp.is_nan() || self.sa.initial_temp <= 0.0 || !(self.sa.cooling > 0.0 && self.sa.cooling <= 1.0) {
            return bad("sa.initial_temp must be positive and sa.cooling in (0, 1]");
        }
        if !(self.noise.sigma >= 0.0 && self.noise.sigma.is_finite()) {
            return bad("noise.sigma must be finite and non-negative");
        }
        self.surrogate.validate().map_err(|e| TunerError::Params(alloc::format!("surrogate: {e}")))
    }

    /// Number of sprints the outer loop runs.
    pub fn sprints(&self) -> usize {
        self.max_k_trials_overlays.div_ceil(self.m)
    }

    /// Measurements one inner loop makes for a budget: whole batches until
    /// the budget is reached.
    pub fn measurements_for(&self, budget: usize) -> usize {
        budget.div_ceil(self.b) * self.b
    }

    /// Measurements spent when every overlay survives and no schedule space
    /// runs dry.
    pub fn total_budget(&self) -> usize {
        let per_sprint = if self.shared_budget {
            self.m * self.measurements_for(self.max_n_trials.div_ceil(self.m))
        } else {
            self.m * self.measurements_for(self.max_n_trials)
        };
        self.sprints() * per_sprint
    }

    /// The same search with a single overlay and the whole budget.
    pub fn baseline(&self) -> Self {
        Self { m: 1, max_k_trials_overlays: 1, max_n_trials: self.total_budget(), shared_budget: false, ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let p = TunerParams::default();
        p.validate().unwrap();
        // 16 batches of 64 per overlay, 4 overlays
        assert_eq!(p.total_budget(), 4096);
        assert_eq!(p.baseline().total_budget(), 4096);
        let shared = TunerParams { shared_budget: true, ..p };
        assert_eq!(shared.total_budget(), 4 * 256);
    }

    #[test]
    fn invalid_params() {
        let p = TunerParams { b: 200, ..TunerParams::default() };
        assert!(p.validate().is_err());
        assert!(TunerParams { m: 0, ..TunerParams::default() }.validate().is_err());
        assert!(TunerParams { epsilon: 1.5, ..TunerParams::default() }.validate().is_err());
    }
}
