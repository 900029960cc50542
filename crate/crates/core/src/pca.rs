//! Principal component analysis: covariance, cyclic Jacobi eigendecomposition
//! of the symmetric covariance, and component selection by explained variance.

use thiserror::Error;

use crate::matrix::Matrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PcaError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("matrix is not symmetric (|a_ij - a_ji| = {0:e})")]
    NotSymmetric(f64),
    #[error("matrix must be square, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error("dimension {0} exceeds the supported maximum of 64")]
    TooLarge(usize),
    #[error("Jacobi iteration did not converge in {0} sweeps")]
    NoConvergence(usize),
    #[error("variance threshold must lie in (0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("weights must be nonnegative, finite, one per row, with a positive sum")]
    InvalidWeights,
    #[error("input contains non-finite values")]
    NonFinite,
}

pub const MAX_DIM: usize = 64;
pub const MAX_SWEEPS: usize = 100;
const SYMMETRY_TOL: f64 = 1e-9;
/// Off-diagonal magnitude, relative to max(1, ‖A‖_F), at which Jacobi stops.
const OFF_DIAGONAL_TOL: f64 = 1e-12;
/// Eigenvalues in [−CLAMP, 0) are rounding noise on a PSD matrix.
const NEGATIVE_CLAMP: f64 = 1e-12;
/// Cumulative explained ratio is compared to the threshold with this slack.
const RATIO_SLACK: f64 = 1e-12;

/// Sample covariance with divisor n − 1, symmetrized after accumulation.
pub fn covariance_matrix(data: &Matrix) -> Result<Matrix, PcaError> {
    let n = data.rows();
    if n < 2 {
        return Err(PcaError::TooFewSamples(n));
    }
    let weights = vec![1.0; n];
    let (mut cov, _) = weighted_scatter(data, &weights)?;
    let scale = 1.0 / (n as f64 - 1.0);
    for v in cov.as_mut_slice() {
        *v *= scale;
    }
    Ok(cov)
}

/// Frequency-weighted covariance Σ wᵢ(xᵢ − x̄)(xᵢ − x̄)ᵀ / Σ wᵢ and the
/// weighted mean x̄. Integer weights behave like repeated rows (up to the
/// overall divisor).
pub fn weighted_covariance(data: &Matrix, weights: &[f64]) -> Result<(Matrix, Vec<f64>), PcaError> {
    let (mut cov, mean) = weighted_scatter(data, weights)?;
    let total: f64 = weights.iter().sum();
    for v in cov.as_mut_slice() {
        *v /= total;
    }
    Ok((cov, mean))
}

/// Unnormalized weighted scatter matrix and weighted mean.
fn weighted_scatter(data: &Matrix, weights: &[f64]) -> Result<(Matrix, Vec<f64>), PcaError> {
    let (n, p) = (data.rows(), data.cols());
    if n < 1 {
        return Err(PcaError::TooFewSamples(n));
    }
    if weights.len() != n || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(PcaError::InvalidWeights);
    }
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(PcaError::InvalidWeights);
    }
    if data.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(PcaError::NonFinite);
    }
    let mut mean = vec![0.0; p];
    for (row, w) in data.row_iter().zip(weights) {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += w * x;
        }
    }
    for m in &mut mean {
        *m /= total;
    }
    let mut cov = Matrix::zeros(p, p);
    let mut centered = vec![0.0; p];
    for (row, w) in data.row_iter().zip(weights) {
        for j in 0..p {
            centered[j] = row[j] - mean[j];
        }
        for a in 0..p {
            let wa = w * centered[a];
            for b in a..p {
                cov[(a, b)] += wa * centered[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            cov[(a, b)] = cov[(b, a)];
        }
    }
    Ok((cov, mean))
}

/// Eigenpairs of a symmetric matrix, eigenvalues descending.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector of `values[k]`.
    pub vectors: Vec<Vec<f64>>,
    pub sweeps: usize,
}

/// Cyclic Jacobi eigendecomposition.
///
/// Sweeps over all (p, q) pairs until the largest off-diagonal entry is below
/// 1e−12·max(1, ‖A‖_F). Eigenvalues come out sorted descending (stable for
/// ties); each eigenvector's largest-magnitude entry is made positive, the
/// first such entry on ties.
pub fn sym_eigen(matrix: &Matrix) -> Result<Eigen, PcaError> {
    let n = matrix.rows();
    if n != matrix.cols() {
        return Err(PcaError::NotSquare(n, matrix.cols()));
    }
    if n > MAX_DIM {
        return Err(PcaError::TooLarge(n));
    }
    if matrix.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(PcaError::NonFinite);
    }
    let scale = matrix.max_abs().max(1.0);
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..i {
            worst = worst.max((matrix[(i, j)] - matrix[(j, i)]).abs());
        }
    }
    if worst > SYMMETRY_TOL * scale {
        return Err(PcaError::NotSymmetric(worst));
    }

    let mut a = matrix.clone();
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = avg;
            a[(j, i)] = avg;
        }
    }
    let mut v = Matrix::identity(n);
    let tol = OFF_DIAGONAL_TOL * a.frobenius_norm().max(1.0);

    let mut sweeps = 0;
    loop {
        let off = max_off_diagonal(&a);
        if off < tol {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(PcaError::NoConvergence(MAX_SWEEPS));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order
        .iter()
        .map(|&i| {
            let l = a[(i, i)];
            if (-NEGATIVE_CLAMP..0.0).contains(&l) {
                0.0
            } else {
                l
            }
        })
        .collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut col = v.column(i);
            fix_sign(&mut col);
            col
        })
        .collect();
    Ok(Eigen { values, vectors, sweeps })
}

fn max_off_diagonal(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut off = 0.0_f64;
    for p in 0..n {
        for q in p + 1..n {
            off = off.max(a[(p, q)].abs());
        }
    }
    off
}

/// One Jacobi rotation zeroing a[p][q]; accumulates the rotation into `v`.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let n = a.rows();
    let (app, aqq) = (a[(p, p)], a[(q, q)]);
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
    let c = 1.0 / t.hypot(1.0);
    let s = t * c;
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let (akp, akq) = (a[(k, p)], a[(k, q)]);
        let new_kp = c * akp - s * akq;
        let new_kq = s * akp + c * akq;
        a[(k, p)] = new_kp;
        a[(p, k)] = new_kp;
        a[(k, q)] = new_kq;
        a[(q, k)] = new_kq;
    }
    a[(p, p)] = app - t * apq;
    a[(q, q)] = aqq + t * apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

fn fix_sign(vec: &mut [f64]) {
    let mut idx = 0;
    for (i, x) in vec.iter().enumerate() {
        if x.abs() > vec[idx].abs() {
            idx = i;
        }
    }
    if vec[idx] < 0.0 {
        for x in vec.iter_mut() {
            *x = -*x;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult {
    pub mean: Vec<f64>,
    /// All p eigenvalues of the covariance, descending, clamped at 0.
    pub eigenvalues: Vec<f64>,
    /// All p unit components, in eigenvalue order.
    pub components: Vec<Vec<f64>>,
    /// eigenvalue / Σ eigenvalues; all zeros when the data has no variance.
    pub explained_ratio: Vec<f64>,
    /// m: how many leading components reach the variance threshold.
    pub retained: usize,
}

impl PcaResult {
    pub fn retained_components(&self) -> &[Vec<f64>] {
        &self.components[..self.retained]
    }

    pub fn total_variance(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// Scores of one row on every component.
    pub fn project(&self, row: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.iter().zip(row).zip(&self.mean).map(|((ci, x), m)| ci * (x - m)).sum())
            .collect()
    }

    /// Inverse of [`PcaResult::project`] using the first `scores.len()` components.
    pub fn reconstruct(&self, scores: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (s, c) in scores.iter().zip(&self.components) {
            for (o, ci) in out.iter_mut().zip(c) {
                *o += s * ci;
            }
        }
        out
    }
}

fn check_threshold(threshold: f64) -> Result<(), PcaError> {
    if threshold > 0.0 && threshold <= 1.0 {
        Ok(())
    } else {
        Err(PcaError::InvalidThreshold(threshold))
    }
}

/// PCA of the rows of `data`, keeping the smallest m ≥ 1 whose cumulative
/// explained ratio reaches `variance_threshold`.
pub fn principal_components(data: &Matrix, variance_threshold: f64) -> Result<PcaResult, PcaError> {
    check_threshold(variance_threshold)?;
    let cov = covariance_matrix(data)?;
    let mean = (0..data.cols()).map(|j| data.column(j).iter().sum::<f64>() / data.rows() as f64).collect();
    from_covariance(&cov, mean, variance_threshold)
}

/// As [`principal_components`], with per-row frequency weights.
pub fn principal_components_weighted(
    data: &Matrix,
    weights: &[f64],
    variance_threshold: f64,
) -> Result<PcaResult, PcaError> {
    check_threshold(variance_threshold)?;
    let (cov, mean) = weighted_covariance(data, weights)?;
    from_covariance(&cov, mean, variance_threshold)
}

fn from_covariance(cov: &Matrix, mean: Vec<f64>, threshold: f64) -> Result<PcaResult, PcaError> {
    let eig = sym_eigen(cov)?;
    let total: f64 = eig.values.iter().sum();
    let explained_ratio: Vec<f64> =
        if total > 0.0 { eig.values.iter().map(|l| l / total).collect() } else { vec![0.0; eig.values.len()] };
    let mut retained = explained_ratio.len().max(1);
    let mut cumulative = 0.0;
    for (k, r) in explained_ratio.iter().enumerate() {
        cumulative += r;
        if cumulative >= threshold - RATIO_SLACK {
            retained = k + 1;
            break;
        }
    }
    if total <= 0.0 {
        retained = 1;
    }
    Ok(PcaResult { mean, eigenvalues: eig.values, components: eig.vectors, explained_ratio, retained })
}
