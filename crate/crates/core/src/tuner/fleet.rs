use alloc::string::String;
use alloc::vec::Vec;

/// A job that panicked or otherwise died; siblings are unaffected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobFailure {
    pub job: usize,
    pub message: String,
}

/// Runs independent jobs and returns their results in submission order.
pub trait Fleet: Sync {
    fn run<T, F>(&self, n_jobs: usize, job: F) -> Vec<Result<T, JobFailure>>
    where
        T: Send,
        F: Fn(usize) -> T + Sync;

    fn workers(&self) -> usize {
        1
    }
}

/// One job after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Fleet for Sequential {
    fn run<T, F>(&self, n_jobs: usize, job: F) -> Vec<Result<T, JobFailure>>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        (0..n_jobs).map(|i| Ok(job(i))).collect()
    }
}
