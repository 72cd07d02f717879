use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use tvta_core::tuner::{Fleet, JobFailure};

/// Scoped worker threads pulling job indices from a shared counter.
/// Results land in their submission slot, so the output never depends on
/// which worker ran what.
#[derive(Debug, Clone, Copy)]
pub struct ThreadFleet {
    workers: usize,
}

impl ThreadFleet {
    pub fn new(workers: usize) -> Self {
        Self { workers: workers.max(1) }
    }

    pub fn available() -> Self {
        Self::new(std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = p.downcast_ref::<String>() {
        s.clone()
    } else {
        "job panicked".into()
    }
}

impl Fleet for ThreadFleet {
    fn run<T, F>(&self, n_jobs: usize, job: F) -> Vec<Result<T, JobFailure>>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        let run_one = |i: usize| {
            catch_unwind(AssertUnwindSafe(|| job(i))).map_err(|p| JobFailure { job: i, message: panic_message(p) })
        };
        if self.workers == 1 || n_jobs <= 1 {
            return (0..n_jobs).map(run_one).collect();
        }
        let slots: Vec<Mutex<Option<Result<T, JobFailure>>>> = (0..n_jobs).map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        std::thread::scope(|s| {
            for _ in 0..self.workers.min(n_jobs) {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= n_jobs {
                        break;
                    }
                    let r = run_one(i);
                    *slots[i].lock().expect("slot lock") = Some(r);
                });
            }
        });
        slots.into_iter().map(|m| m.into_inner().expect("slot lock").expect("every job ran")).collect()
    }

    fn workers(&self) -> usize {
        self.workers
    }
}

pub type Job<'a, T> = Box<dyn FnOnce() -> T + Send + 'a>;

/// Runs `jobs` on `workers` threads; results come back in submission order.
pub fn run_fleet<T: Send>(jobs: Vec<Job<'_, T>>, workers: usize) -> Vec<Result<T, JobFailure>> {
    let jobs: Vec<Mutex<Option<Job<'_, T>>>> = jobs.into_iter().map(|j| Mutex::new(Some(j))).collect();
    ThreadFleet::new(workers).run(jobs.len(), |i| {
        let j = jobs[i].lock().expect("job lock").take().expect("job runs once");
        j()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hundred_noop_jobs_keep_order() {
        let out = ThreadFleet::new(8).run(100, |i| i);
        assert_eq!(out.len(), 100);
        for (i, r) in out.into_iter().enumerate() {
            assert_eq!(r.unwrap(), i);
        }
    }

    #[test]
    fn panics_stay_in_their_slot() {
        let out = ThreadFleet::new(4).run(10, |i| {
            if i == 3 {
                panic!("boom");
            }
            i * 2
        });
        assert_eq!(out[3].as_ref().unwrap_err().message, "boom");
        assert_eq!(out.iter().filter(|r| r.is_ok()).count(), 9);
    }

    #[test]
    fn boxed_jobs() {
        let jobs: Vec<Box<dyn FnOnce() -> usize + Send>> = (0..5usize).map(|i| Box::new(move || i + 1) as _).collect();
        let out: Vec<usize> = run_fleet(jobs, 3).into_iter().map(Result::unwrap).collect();
        assert_eq!(out, [1, 2, 3, 4, 5]);
    }
}
