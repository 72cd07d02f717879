use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{fit, Dataset, GbtError, GbtParams};

pub const CV_ITERATIONS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvIteration {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    /// Validation RMSE of every candidate parameter set.
    pub val_rmse: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub test: Vec<usize>,
    pub iterations: Vec<CvIteration>,
    /// Index into the candidate list with the lowest mean validation RMSE.
    pub best: usize,
    /// Validation RMSE of the best candidate in each iteration.
    pub val_errors: Vec<f64>,
    pub test_rmse: f64,
    /// Quartile cut points of the training+validation targets.
    pub quartiles: [f64; 3],
    /// Fraction of test samples whose predicted quartile bin is wrong (the
    /// prediction is first snapped to the nearest training target).
    pub test_misclassification: f64,
    /// Same, when always predicting the most frequent training bin.
    pub majority_misclassification: f64,
}

/// Linear-interpolated 25/50/75% points.
pub fn quartiles(values: &[f64]) -> [f64; 3] {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let at = |q: f64| {
        let pos = q * (v.len() - 1) as f64;
        let lo = libm::floor(pos) as usize;
        let hi = (lo + 1).min(v.len() - 1);
        v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
    };
    [at(0.25), at(0.5), at(0.75)]
}

/// Bin index in 0..=3: the number of cut points strictly below `v`.
pub fn quartile_bin(v: f64, q: &[f64; 3]) -> usize {
    q.iter().filter(|&&c| v > c).count()
}

/// The observed value closest to `v` (ties go to the lower one). `sorted`
/// must be ascending and non-empty.
pub fn snap(v: f64, sorted: &[f64]) -> f64 {
    let i = sorted.partition_point(|&s| s < v);
    match (i.checked_sub(1).map(|j| sorted[j]), sorted.get(i)) {
        (Some(lo), Some(&hi)) => if v - lo <= hi - v { lo } else { hi },
        (Some(lo), None) => lo,
        (None, Some(&hi)) => hi,
        (None, None) => v,
    }
}

/// 20% test holdout, then ten random 75/25 train/validation permutations of
/// the rest. The best candidate is refit on train+validation and scored on
/// the holdout.
pub fn cross_validate<R: Rng + ?Sized>(
    data: &Dataset,
    candidates: &[GbtParams],
    rng: &mut R,
) -> Result<CvReport, GbtError> {
    let n = data.len();
    if n < 20 {
        return Err(GbtError::TooSmall(n));
    }
    if candidates.is_empty() {
        return Err(GbtError::Params("no candidate parameters".into()));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let n_test = n / 5;
    let test = perm[..n_test].to_vec();
    let mut rest = perm[n_test..].to_vec();
    let n_train = rest.len() * 3 / 4;

    let mut iterations = Vec::with_capacity(CV_ITERATIONS);
    let mut sums = alloc::vec![0.0; candidates.len()];
    for _ in 0..CV_ITERATIONS {
        rest.shuffle(rng);
        let train = rest[..n_train].to_vec();
        let val = rest[n_train..].to_vec();
        let (dt, dv) = (data.subset(&train), data.subset(&val));
        let mut val_rmse = Vec::with_capacity(candidates.len());
        for (c, s) in candidates.iter().zip(sums.iter_mut()) {
            let e = fit(&dt, c)?.rmse(&dv)?;
            *s += e;
            val_rmse.push(e);
        }
        iterations.push(CvIteration { train, val, val_rmse });
    }
    let best = (0..candidates.len()).fold(0, |b, i| if sums[i] < sums[b] { i } else { b });
    let val_errors = iterations.iter().map(|it| it.val_rmse[best]).collect();

    let pool = data.subset(&rest);
    let model = fit(&pool, &candidates[best])?;
    let holdout = data.subset(&test);
    let mut seen: Vec<f64> = pool.samples.iter().map(|s| s.y).collect();
    let q = quartiles(&seen);
    seen.sort_by(f64::total_cmp);
    seen.dedup();
    let mut counts = [0usize; 4];
    for s in &pool.samples {
        counts[quartile_bin(s.y, &q)] += 1;
    }
    let majority = (0..4).fold(0, |b, i| if counts[i] > counts[b] { i } else { b });
    let (mut wrong, mut wrong_major) = (0usize, 0usize);
    for s in &holdout.samples {
        let truth = quartile_bin(s.y, &q);
        // predictions snap to an observed target so that near-exact fits of
        // discrete targets do not straddle a tied cut point
        let pred = snap(model.predict_value(&s.x)?, &seen);
        wrong += usize::from(quartile_bin(pred, &q) != truth);
        wrong_major += usize::from(majority != truth);
    }
    let denom = holdout.len().max(1) as f64;
    Ok(CvReport {
        test,
        iterations,
        best,
        val_errors,
        test_rmse: model.rmse(&holdout)?,
        quartiles: q,
        test_misclassification: wrong as f64 / denom,
        majority_misclassification: wrong_major as f64 / denom,
    })
}
