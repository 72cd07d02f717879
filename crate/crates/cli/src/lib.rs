//! Experiment runner for importance-guided overlay autotuning.
//!
//! The pipeline has four stages, each reading the previous stage's files
//! from the output directory:
//!
//! 1. [`dataset`]: implement sampled design points on the virtual
//!    toolchain and record GOPs and resource targets.
//! 2. [`train`]: cross-validate boosted trees per target and precision and
//!    write feature importance.
//! 3. [`tuning`]: run the method matrix (default overlay vs guided pool,
//!    random vs surrogate schedule search) over precisions and seeds.
//! 4. [`report`]: roofline, convergence and speedup summaries.

pub mod config;
pub mod dataset;
pub mod error;
pub mod fleet;
pub mod report;
pub mod trace;
pub mod train;
pub mod tuning;

use std::path::{Path, PathBuf};

pub use config::{Experiment, ExperimentConfig, Method, OverlaySource};
pub use error::{CliError, Result};
pub use fleet::{run_fleet, ThreadFleet};

/// Environment variable overriding the output directory.
pub const OUT_DIR_ENV: &str = "TVTA_OUT_DIR";

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub workers: usize,
    pub timestamps: bool,
}

impl RunOptions {
    pub fn fleet(&self) -> ThreadFleet {
        ThreadFleet::new(self.workers)
    }

    pub fn dataset_file(&self) -> PathBuf {
        self.out.join("dataset").join("dataset.jsonl")
    }

    pub fn train_dir(&self) -> PathBuf {
        self.out.join("train")
    }

    pub fn traces_dir(&self) -> PathBuf {
        self.out.join("tune").join("traces")
    }

    pub fn curves_dir(&self) -> PathBuf {
        self.out.join("tune").join("curves")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.out.join("report")
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub(crate) fn to_json<T: serde::Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| CliError::Invariant(format!("serialize: {e}")))
}

pub(crate) fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Runs dataset, train, tune and report in order.
pub fn run_all(exp: &Experiment, opts: &RunOptions) -> Result<report::ReportSummary> {
    dataset::generate_dataset(exp, opts)?;
    train::train_importance(exp, opts)?;
    tuning::run_tuning(exp, opts)?;
    report::report(exp, opts)
}

/// Small end-to-end experiment used by `tvta demo`.
pub const DEMO_CONFIG: &str = r#"# Small end-to-end experiment (a minute or two on one core).
experiment_id = "demo"
workloads = ["fig7"]
precisions = [8, 4]
seeds = [0, 1]
methods = ["vta-random", "vta-surrogate", "tau-random", "tau-surrogate"]

[dataset]
samples = 300
probe_schedules = 16

[gbt]
candidates = [{ num_trees = 40, max_depth = 4, learning_rate = 0.2 }]

[tuner]
m = 2
max_k_trials_overlays = 2
max_n_trials = 128
b = 32
q_size = 64

[tuner.sa]
steps = 64

[tuner.surrogate]
num_trees = 20
"#;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_config_is_valid() {
        let e = ExperimentConfig::from_toml(DEMO_CONFIG).unwrap().resolve().unwrap();
        assert_eq!(e.config.precisions, [8, 4]);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }
}
