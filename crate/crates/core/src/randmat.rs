//! Monte-Carlo checks on random matrices with centered two-point entries:
//! spectral-norm concentration for the symmetric ensemble and the
//! Frobenius-distance behavior of the degree-reweighted transform used by the
//! clique-to-noise blocks.

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// Largest dimension accepted by the dense spectral-norm path.
pub const MAX_DIM: usize = 2000;

/// Standard deviation of the two-point entry distribution taking `1` with
/// probability `p` and `-p/(1-p)` otherwise.
pub fn sigma(p: f64) -> f64 {
    (p / (1.0 - p)).sqrt()
}

fn sample_entry(p: f64, rng: &mut ChaCha8Rng) -> f64 {
    if rng.random_bool(p) {
        1.0
    } else {
        -p / (1.0 - p)
    }
}

/// Symmetric matrix with independent entries on and above the diagonal.
pub fn sample_symmetric(n: usize, p: f64, rng: &mut ChaCha8Rng) -> SymMatrix {
    let mut m = SymMatrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            m.set(i, j, sample_entry(p, rng));
        }
    }
    m
}

/// Per-trial statistics of the ensemble.
#[derive(Debug, Clone, Serialize)]
pub struct MatrixCheckRow {
    pub trial: usize,
    pub norm: f64,
    pub norm_over_sqrt_n: f64,
    /// Whether `||A|| <= 3 sigma sqrt(n)`.
    pub within_bound: bool,
    /// Mean over the independent entries of the symmetric sample.
    pub entry_mean: f64,
    /// Variance over the independent entries of the symmetric sample.
    pub entry_variance: f64,
    /// `||A - A_tilde||_F^2 / n` for an independent square iid sample, where
    /// the transform replaces each negative entry in column `j` by
    /// `-n_j / (n - n_j)` with `n_j` the number of ones in the column.
    pub reweight_ratio: f64,
}

/// Aggregate statistics over all trials.
#[derive(Debug, Clone, Serialize)]
pub struct MatrixCheckSummary {
    pub n: usize,
    pub p: f64,
    pub trials: usize,
    pub sigma: f64,
    /// Fraction of trials with `||A|| <= 3 sigma sqrt(n)`.
    pub bound_fraction: f64,
    /// Pooled mean over all independent entries of all trials.
    pub pooled_mean: f64,
    /// Pooled variance over all independent entries of all trials.
    pub pooled_variance: f64,
    /// Standard error of the pooled mean.
    pub mean_standard_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatrixCheckOutput {
    pub summary: MatrixCheckSummary,
    pub rows: Vec<MatrixCheckRow>,
}

/// Degree-reweighted transform: ones stay ones, each other entry in column
/// `j` becomes `-n_j / (n - n_j)`.
fn reweight(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (rows, cols) = a.shape();
    let mut ones_per_col = vec![0usize; cols];
    for j in 0..cols {
        ones_per_col[j] = (0..rows).filter(|&i| a[(i, j)] == 1.0).count();
    }
    DMatrix::from_fn(rows, cols, |i, j| {
        if a[(i, j)] == 1.0 {
            1.0
        } else {
            let nj = ones_per_col[j];
            -(nj as f64) / (rows - nj) as f64
        }
    })
}

/// Runs `trials` independent draws at size `n` and entry probability `p`.
pub fn matrix_check(n: usize, p: f64, trials: usize, seed: u64) -> Result<MatrixCheckOutput> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::Parameter(format!(
            "n must lie in 1..={MAX_DIM}, got {n}"
        )));
    }
    if !(0.0 < p && p < 1.0) {
        return Err(Error::Parameter(format!("p must lie in (0, 1), got {p}")));
    }
    if trials == 0 {
        return Err(Error::Parameter("trials must be at least 1".into()));
    }
    let sig = sigma(p);
    let bound = 3.0 * sig * (n as f64).sqrt();
    let mut rows = Vec::with_capacity(trials);
    let mut within = 0usize;
    let mut pooled_sum = 0.0f64;
    let mut pooled_sq = 0.0f64;
    let mut pooled_count = 0usize;

    for trial in 0..trials {
        // Independent stream per trial so trial sets extend reproducibly.
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (trial as u64).wrapping_mul(0x9e3779b9));
        let a = sample_symmetric(n, p, &mut rng);
        let norm = a.spectral_norm()?;
        let within_bound = norm <= bound;
        within += within_bound as usize;

        let mut sum = 0.0f64;
        let mut sq = 0.0f64;
        let count = n * (n + 1) / 2;
        for i in 0..n {
            for j in 0..=i {
                let v = a.get(i, j);
                sum += v;
                sq += v * v;
            }
        }
        let entry_mean = sum / count as f64;
        let entry_variance = sq / count as f64 - entry_mean * entry_mean;
        pooled_sum += sum;
        pooled_sq += sq;
        pooled_count += count;

        // Independent square iid sample for the reweighting ratio.
        let iid = DMatrix::from_fn(n, n, |_, _| sample_entry(p, &mut rng));
        let ratio = (&iid - reweight(&iid)).norm_squared() / n as f64;

        rows.push(MatrixCheckRow {
            trial,
            norm,
            norm_over_sqrt_n: norm / (n as f64).sqrt(),
            within_bound,
            entry_mean,
            entry_variance,
            reweight_ratio: ratio,
        });
    }

    let pooled_mean = pooled_sum / pooled_count as f64;
    let pooled_variance = pooled_sq / pooled_count as f64 - pooled_mean * pooled_mean;
    let summary = MatrixCheckSummary {
        n,
        p,
        trials,
        sigma: sig,
        bound_fraction: within as f64 / trials as f64,
        pooled_mean,
        pooled_variance,
        mean_standard_error: sig / (pooled_count as f64).sqrt(),
    };
    Ok(MatrixCheckOutput { summary, rows })
}

/// Fixed CSV rendering of the per-trial rows.
pub fn matrix_check_csv(out: &MatrixCheckOutput) -> String {
    let mut text = String::from(
        "trial,norm,norm_over_sqrt_n,within_bound,entry_mean,entry_variance,reweight_ratio\n",
    );
    for row in &out.rows {
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.trial,
            row.norm,
            row.norm_over_sqrt_n,
            row.within_bound,
            row.entry_mean,
            row.entry_variance,
            row.reweight_ratio
        ));
    }
    text
}
