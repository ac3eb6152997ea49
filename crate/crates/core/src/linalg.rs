//! Dense symmetric kernels behind the certificate and solver: extreme
//! eigenvalues, spectral norms, linear solves with singularity detection, and
//! rank-one-update solves.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Dimension above which full eigendecompositions give way to power iteration.
pub const DENSE_EIG_LIMIT: usize = 2000;

/// Condition-estimate threshold above which a solve is declared singular.
pub const DEFAULT_COND_LIMIT: f64 = 1e12;

const POWER_TOL: f64 = 1e-10;

/// Symmetric matrix with a single stored triangle, so `get(i, j) == get(j, i)`
/// holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    // Lower triangle including the diagonal, row-major.
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            data: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = SymMatrix::zeros(dim);
        for i in 0..dim {
            for j in 0..=i {
                m.data[Self::index(i, j)] = f(i, j);
            }
        }
        m
    }

    fn index(i: usize, j: usize) -> usize {
        let (a, b) = if i >= j { (i, j) } else { (j, i) };
        a * (a + 1) / 2 + b
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[Self::index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[Self::index(i, j)] = value;
    }

    pub fn add_to(&mut self, i: usize, j: usize, value: f64) {
        self.data[Self::index(i, j)] += value;
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    /// Symmetrizes `m` into packed storage; rejects asymmetry beyond `tol`.
    pub fn from_dense(m: &DMatrix<f64>, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!(
                "expected square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        for i in 0..n {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > tol {
                    return Err(Error::Dimension(format!(
                        "matrix asymmetric at ({i}, {j}): {} vs {}",
                        m[(i, j)],
                        m[(j, i)]
                    )));
                }
            }
        }
        Ok(SymMatrix::from_fn(n, |i, j| {
            0.5 * (m[(i, j)] + m[(j, i)])
        }))
    }

    pub fn check_finite(&self) -> Result<()> {
        for i in 0..self.dim {
            for j in 0..=i {
                if !self.data[Self::index(i, j)].is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    /// All eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.check_finite()?;
        if self.dim == 0 {
            return Ok(Vec::new());
        }
        let mut vals: Vec<f64> = if self.dim <= DENSE_EIG_LIMIT {
            self.to_dense().symmetric_eigenvalues().iter().copied().collect()
        } else {
            // Beyond the dense limit only the extremes are computed;
            // interior values are not needed by any caller.
            let dense = self.to_dense();
            let (lo, hi) = lanczos_extremes(|x| &dense * x, self.dim);
            vec![lo, hi]
        };
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(vals)
    }

    /// Largest singular value, i.e. `max |eigenvalue|`.
    pub fn spectral_norm(&self) -> Result<f64> {
        let vals = self.eigenvalues()?;
        Ok(vals
            .iter()
            .fold(0.0f64, |acc, &v| acc.max(v.abs())))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let vals = self.eigenvalues()?;
        vals.first()
            .copied()
            .ok_or_else(|| Error::Dimension("empty matrix has no eigenvalues".into()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.dim {
            for j in 0..=i {
                let v = self.data[Self::index(i, j)];
                sum += if i == j { v * v } else { 2.0 * v * v };
            }
        }
        sum.sqrt()
    }
}

fn check_finite_dense(m: &DMatrix<f64>) -> Result<()> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if !m[(i, j)].is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// Largest singular value of a general rectangular matrix.
pub fn spectral_norm_rect(m: &DMatrix<f64>) -> Result<f64> {
    check_finite_dense(m)?;
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    if m.nrows().max(m.ncols()) <= DENSE_EIG_LIMIT {
        let svd = m.clone().try_svd(false, false, f64::EPSILON, 0).ok_or_else(|| {
            Error::Parameter("singular value decomposition did not converge".into())
        })?;
        Ok(svd
            .singular_values
            .iter()
            .fold(0.0f64, |acc, &v| acc.max(v)))
    } else {
        // Krylov iteration on M^T M; its extremes are the squared singular values.
        let mt = m.transpose();
        let apply = |x: &DVector<f64>| &mt * (m * x);
        let (_, hi) = lanczos_extremes(apply, m.ncols());
        Ok(hi.max(0.0).sqrt())
    }
}

/// Extreme eigenvalues of a symmetric operator by Lanczos iteration with full
/// reorthogonalization. The fallback path for dimensions beyond
/// [`DENSE_EIG_LIMIT`]; exact dense decomposition is preferred below it.
///
/// At most `min(dim, 10 * dim, 400)` matrix applications are spent; Ritz
/// residuals are driven below `1e-10` relative when the budget allows.
pub fn lanczos_extremes(apply: impl Fn(&DVector<f64>) -> DVector<f64>, dim: usize) -> (f64, f64) {
    if dim == 0 {
        return (0.0, 0.0);
    }
    let budget = (10 * dim).min(400).min(dim);
    // Deterministic start vector with no special structure.
    let mut state = 0x9e3779b97f4a7c15u64;
    let mut v = DVector::from_fn(dim, |_, _| {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
    });
    v /= v.norm();
    let mut basis: Vec<DVector<f64>> = vec![v.clone()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut scale = 0.0f64;
    for step in 0..budget {
        let mut w = apply(&basis[step]);
        let alpha = basis[step].dot(&w);
        alphas.push(alpha);
        scale = scale.max(alpha.abs());
        w -= &basis[step] * alpha;
        if step > 0 {
            w -= &basis[step - 1] * betas[step - 1];
        }
        // Full reorthogonalization keeps the basis numerically orthonormal.
        for b in &basis {
            let overlap = b.dot(&w);
            w -= b * overlap;
        }
        let beta = w.norm();
        if beta <= POWER_TOL * scale.max(1.0) || step + 1 == budget {
            break;
        }
        betas.push(beta);
        basis.push(w / beta);
    }
    let m = alphas.len();
    let tri = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j || j + 1 == i {
            betas[i.min(j)]
        } else {
            0.0
        }
    });
    let ritz = tri.symmetric_eigenvalues();
    let lo = ritz.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ritz.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Outcome of a dense linear solve.
#[derive(Debug, Clone)]
pub enum LinearSolve {
    Solved {
        x: DVector<f64>,
        residual: f64,
        cond_estimate: f64,
    },
    /// Estimated 1-norm condition number exceeded the limit (or the
    /// factorization broke down outright).
    Singular { cond_estimate: f64 },
}

impl LinearSolve {
    pub fn solution(&self) -> Option<&DVector<f64>> {
        match self {
            LinearSolve::Solved { x, .. } => Some(x),
            LinearSolve::Singular { .. } => None,
        }
    }

    pub fn is_singular(&self) -> bool {
        matches!(self, LinearSolve::Singular { .. })
    }
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        let s: f64 = (0..m.nrows()).map(|i| m[(i, j)].abs()).sum();
        best = best.max(s);
    }
    best
}

/// Hager-style estimate of `||A^-1||_1` from LU factorizations of `A` and `A^T`.
fn inverse_one_norm_estimate(
    lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    lu_t: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
) -> Option<f64> {
    let mut b = DVector::from_element(n, 1.0 / n as f64);
    let mut estimate = 0.0f64;
    for _ in 0..5 {
        let y = lu.solve(&b)?;
        let gamma = y.iter().map(|v| v.abs()).sum::<f64>();
        let xi = DVector::from_fn(n, |i, _| if y[i] >= 0.0 { 1.0 } else { -1.0 });
        let z = lu_t.solve(&xi)?;
        estimate = estimate.max(gamma);
        let (jmax, zmax) = z
            .iter()
            .enumerate()
            .fold((0usize, 0.0f64), |(bi, bv), (i, &v)| {
                if v.abs() > bv {
                    (i, v.abs())
                } else {
                    (bi, bv)
                }
            });
        if zmax <= z.dot(&b) {
            break;
        }
        b = DVector::zeros(n);
        b[jmax] = 1.0;
    }
    Some(estimate)
}

/// Solves `M x = rhs` by LU with partial pivoting. Reports a structured
/// singular flag instead of garbage whenever the estimated 1-norm condition
/// number exceeds `cond_limit`.
pub fn solve_linear(m: &DMatrix<f64>, rhs: &DVector<f64>, cond_limit: f64) -> Result<LinearSolve> {
    check_finite_dense(m)?;
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "solve_linear needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() != rhs.len() {
        return Err(Error::Dimension(format!(
            "rhs length {} does not match matrix dimension {}",
            rhs.len(),
            m.nrows()
        )));
    }
    for (i, v) in rhs.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row: i, col: 0 });
        }
    }
    let n = m.nrows();
    let lu = m.clone().lu();
    let lu_t = m.transpose().lu();
    let inv_norm = match inverse_one_norm_estimate(&lu, &lu_t, n) {
        Some(v) => v,
        None => {
            return Ok(LinearSolve::Singular {
                cond_estimate: f64::INFINITY,
            })
        }
    };
    let cond_estimate = one_norm(m) * inv_norm;
    if !cond_estimate.is_finite() || cond_estimate > cond_limit {
        return Ok(LinearSolve::Singular { cond_estimate });
    }
    let x = match lu.solve(rhs) {
        Some(x) => x,
        None => {
            return Ok(LinearSolve::Singular {
                cond_estimate: f64::INFINITY,
            })
        }
    };
    let residual = (m * &x - rhs).norm();
    Ok(LinearSolve::Solved {
        x,
        residual,
        cond_estimate,
    })
}

/// Solves `(D + u v^T) x = rhs` for a nonsingular diagonal `D` via the
/// rank-one update identity, without forming the dense matrix.
pub fn sherman_morrison_solve(
    diag: &[f64],
    u: &DVector<f64>,
    v: &DVector<f64>,
    rhs: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = diag.len();
    if u.len() != n || v.len() != n || rhs.len() != n {
        return Err(Error::Dimension(format!(
            "sherman_morrison_solve: diag {} u {} v {} rhs {}",
            n,
            u.len(),
            v.len(),
            rhs.len()
        )));
    }
    for (i, &d) in diag.iter().enumerate() {
        if !d.is_finite() {
            return Err(Error::NonFinite { row: i, col: i });
        }
        if d == 0.0 {
            return Err(Error::Parameter(format!(
                "diagonal entry {i} is zero; D must be nonsingular"
            )));
        }
    }
    // x = D^-1 rhs - D^-1 u (v^T D^-1 rhs) / (1 + v^T D^-1 u)
    let dinv_rhs = DVector::from_fn(n, |i, _| rhs[i] / diag[i]);
    let dinv_u = DVector::from_fn(n, |i, _| u[i] / diag[i]);
    let denominator = 1.0 + v.dot(&dinv_u);
    if denominator.abs() < 1e-12 {
        return Err(Error::SingularUpdate { denominator });
    }
    let scale = v.dot(&dinv_rhs) / denominator;
    Ok(&dinv_rhs - &dinv_u * scale)
}

/// Closed-form solve of `(D + theta e e^T) x = b` for diagonal `D`, the shape
/// taken by the decoupled halves of the cross-clique systems.
pub fn solve_diag_plus_scaled_ones(diag: &[f64], theta: f64, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = diag.len();
    if b.len() != n {
        return Err(Error::Dimension(format!(
            "solve_diag_plus_scaled_ones: diag {} rhs {}",
            n,
            b.len()
        )));
    }
    for (i, &d) in diag.iter().enumerate() {
        if d == 0.0 {
            return Err(Error::Parameter(format!(
                "diagonal entry {i} is zero; D must be nonsingular"
            )));
        }
    }
    let w = DVector::from_fn(n, |i, _| b[i] / diag[i]);
    let g = DVector::from_fn(n, |i, _| 1.0 / diag[i]);
    let s: f64 = g.sum();
    let denominator = 1.0 + theta * s;
    if denominator.abs() < 1e-12 {
        return Err(Error::SingularUpdate { denominator });
    }
    let factor = theta * w.sum() / denominator;
    Ok(&w - &g * factor)
}
