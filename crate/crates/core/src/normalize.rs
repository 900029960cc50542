//! BC-Zscore standardization.
//!
//! Each column is shifted to be strictly positive, Box-Cox transformed with a
//! λ chosen by profile likelihood on a fixed grid, then Z-scored with the
//! sample (n−1) standard deviation. Constant columns map to zeros and are
//! flagged instead of failing the whole batch.
//!
//! All per-column reductions use one fixed left-to-right summation order so
//! results do not depend on how columns are scheduled.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;

#[derive(Debug, Error, PartialEq)]
pub enum NormalizeError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("Box-Cox input must be strictly positive (found {0})")]
    NonPositiveInput(f64),
    #[error("constant column cannot be fitted")]
    DegenerateColumn,
    #[error("non-finite input value")]
    NonFinite,
    #[error("parameter count mismatch: {expected} columns, {found} parameter records")]
    ParamMismatch { expected: usize, found: usize },
    #[error("invalid lambda grid: {0}")]
    InvalidGrid(String),
    #[error("array shape {shape:?} does not match {len} values")]
    Shape { shape: Vec<usize>, len: usize },
}

/// Below this |λ| the log branch of the transform is used.
pub const LAMBDA_EPS: f64 = 1e-10;

/// Hard bounds of the λ search interval.
pub const LAMBDA_MIN: f64 = -5.0;
pub const LAMBDA_MAX: f64 = 5.0;

/// Tolerance of the standardization post-condition (|mean| and |std − 1|).
pub const STANDARDIZED_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: f64,
    pub sample_std: f64,
    pub skewness: f64,
    /// Excess kurtosis (m4/m2² − 3).
    pub kurtosis: f64,
}

fn mean_of(column: &[f64]) -> f64 {
    let n = column.len() as f64;
    let mean = column.iter().sum::<f64>() / n;
    // one refinement pass removes most of the rounding left by the naive sum
    mean + column.iter().map(|x| x - mean).sum::<f64>() / n
}

/// Mean, sample standard deviation, skewness m3/m2^1.5 and excess kurtosis
/// m4/m2² − 3 (central moments with divisor n). Skewness and kurtosis are 0
/// for a constant column.
pub fn column_stats(column: &[f64]) -> Result<ColumnStats, NormalizeError> {
    let n = column.len();
    if n < 2 {
        return Err(NormalizeError::TooFewSamples { needed: 2, got: n });
    }
    if column.iter().any(|v| !v.is_finite()) {
        return Err(NormalizeError::NonFinite);
    }
    let mean = mean_of(column);
    let (mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0);
    for x in column {
        let d = x - mean;
        let d2 = d * d;
        s2 += d2;
        s3 += d2 * d;
        s4 += d2 * d2;
    }
    let nf = n as f64;
    let (m2, m3, m4) = (s2 / nf, s3 / nf, s4 / nf);
    let (skewness, kurtosis) = if m2 > 0.0 { (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0) } else { (0.0, 0.0) };
    Ok(ColumnStats { mean, sample_std: (s2 / (nf - 1.0)).sqrt(), skewness, kurtosis })
}

#[inline]
fn boxcox_value(x: f64, lambda: f64) -> f64 {
    if lambda == 1.0 {
        x - 1.0
    } else if lambda.abs() <= LAMBDA_EPS {
        x.ln()
    } else {
        (lambda * x.ln()).exp_m1() / lambda
    }
}

/// y = (x^λ − 1)/λ, or ln x when |λ| ≤ 1e−10. Inputs must be > 0.
pub fn boxcox(column: &[f64], lambda: f64) -> Result<Vec<f64>, NormalizeError> {
    column
        .iter()
        .map(|&x| {
            if x > 0.0 && x.is_finite() {
                Ok(boxcox_value(x, lambda))
            } else if x.is_finite() {
                Err(NormalizeError::NonPositiveInput(x))
            } else {
                Err(NormalizeError::NonFinite)
            }
        })
        .collect()
}

/// Evenly spaced λ candidates `min, min + step, …, max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Default for LambdaGrid {
    fn default() -> Self {
        Self { min: LAMBDA_MIN, max: LAMBDA_MAX, step: 0.01 }
    }
}

impl LambdaGrid {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self, NormalizeError> {
        let grid = Self { min, max, step };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<(), NormalizeError> {
        let bad = |m: &str| Err(NormalizeError::InvalidGrid(m.to_owned()));
        if !(self.min.is_finite() && self.max.is_finite() && self.step.is_finite()) {
            return bad("bounds must be finite");
        }
        if self.min < LAMBDA_MIN || self.max > LAMBDA_MAX {
            return bad("bounds must lie within [-5, 5]");
        }
        if self.min > self.max {
            return bad("min exceeds max");
        }
        if self.step <= 0.0 || (self.max - self.min) / self.step > 1e6 {
            return bad("step must be positive and give at most 1e6 points");
        }
        Ok(())
    }

    /// Grid points. Point i is `min + (max − min)·i/N`, which keeps round
    /// values such as 0 and 1 exact on the default grid.
    pub fn points(&self) -> Vec<f64> {
        let span = self.max - self.min;
        let steps = (span / self.step).round() as usize;
        if steps == 0 {
            return vec![self.min];
        }
        (0..=steps).map(|i| self.min + span * i as f64 / steps as f64).collect()
    }
}

impl std::str::FromStr for LambdaGrid {
    type Err = NormalizeError;

    /// Parses `min:max:step`, e.g. `-5:5:0.01`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let parse = |p: &str| p.trim().parse::<f64>().map_err(|_| NormalizeError::InvalidGrid(s.to_owned()));
        match parts.as_slice() {
            [a, b, c] => Self::new(parse(a)?, parse(b)?, parse(c)?),
            _ => Err(NormalizeError::InvalidGrid(format!("expected min:max:step, got `{s}`"))),
        }
    }
}

/// Box-Cox parameters of one column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxCoxParam {
    pub lambda: f64,
    /// Added before the transform; 0 when the column is already positive.
    pub shift: f64,
}

/// Per-column Box-Cox parameters, in column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxCoxParams {
    pub columns: Vec<BoxCoxParam>,
}

/// 0 if every value is positive, otherwise 1 − min.
pub fn positivity_shift(column: &[f64]) -> f64 {
    let min = column.iter().copied().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        0.0
    } else {
        1.0 - min
    }
}

/// Box-Cox profile log-likelihood of strictly positive data:
/// −(n/2)·ln var(y(λ)) + (λ − 1)·Σ ln x, with the population variance.
pub fn profile_log_likelihood(positive: &[f64], lambda: f64) -> f64 {
    let log_sum: f64 = positive.iter().map(|x| x.ln()).sum();
    profile_ll_with_log_sum(positive, lambda, log_sum)
}

fn profile_ll_with_log_sum(positive: &[f64], lambda: f64, log_sum: f64) -> f64 {
    let n = positive.len() as f64;
    let y: Vec<f64> = positive.iter().map(|&x| boxcox_value(x, lambda)).collect();
    let mean = mean_of(&y);
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var.is_nan() || var <= 0.0 || var.is_infinite() {
        return f64::NEG_INFINITY;
    }
    -0.5 * n * var.ln() + (lambda - 1.0) * log_sum
}

/// Fits λ by maximizing the profile log-likelihood over `grid`. Ties go to
/// the λ closest to 1, then to the smaller λ.
pub fn fit_lambda(column: &[f64], grid: &LambdaGrid) -> Result<BoxCoxParam, NormalizeError> {
    grid.validate()?;
    if column.len() < 3 {
        return Err(NormalizeError::TooFewSamples { needed: 3, got: column.len() });
    }
    if column.iter().any(|v| !v.is_finite()) {
        return Err(NormalizeError::NonFinite);
    }
    if is_constant(column) {
        return Err(NormalizeError::DegenerateColumn);
    }
    let shift = positivity_shift(column);
    let shifted: Vec<f64> = column.iter().map(|x| x + shift).collect();
    let log_sum: f64 = shifted.iter().map(|x| x.ln()).sum();

    let mut best: Option<(f64, f64)> = None;
    for lambda in grid.points() {
        let ll = profile_ll_with_log_sum(&shifted, lambda, log_sum);
        if !ll.is_finite() {
            continue;
        }
        let better = match best {
            None => true,
            Some((b_lambda, b_ll)) => {
                ll > b_ll
                    || (ll == b_ll
                        && ((lambda - 1.0).abs() < (b_lambda - 1.0).abs()
                            || ((lambda - 1.0).abs() == (b_lambda - 1.0).abs() && lambda < b_lambda)))
            }
        };
        if better {
            best = Some((lambda, ll));
        }
    }
    // Every λ gives -inf only when the shifted values are numerically constant.
    let (lambda, _) = best.ok_or(NormalizeError::DegenerateColumn)?;
    Ok(BoxCoxParam { lambda, shift })
}

fn is_constant(column: &[f64]) -> bool {
    column.windows(2).all(|w| w[0] == w[1])
}

/// Output of [`zscore_columns`].
#[derive(Debug, Clone, PartialEq)]
pub struct ZScored {
    pub values: Matrix,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Columns with zero spread; their output is all zeros.
    pub degenerate: Vec<bool>,
}

fn zscore_column(column: &[f64]) -> (Vec<f64>, f64, f64, bool) {
    let n = column.len() as f64;
    let mean = mean_of(column);
    let std = (column.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt();
    let scale = column.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    // Spread at the rounding-noise level of the values counts as no spread.
    if is_constant(column) || std <= 16.0 * f64::EPSILON * scale {
        return (vec![0.0; column.len()], mean, std, true);
    }
    let first: Vec<f64> = column.iter().map(|x| (x - mean) / std).collect();
    // The rounding of `mean` to a double is amplified by 1/std; a second pass
    // on the O(1) output removes it.
    let m2 = mean_of(&first);
    let s2 = (first.iter().map(|z| (z - m2) * (z - m2)).sum::<f64>() / (n - 1.0)).sqrt();
    (first.iter().map(|z| (z - m2) / s2).collect(), mean + m2 * std, std * s2, false)
}

/// Column-wise (x − mean)/sample_std. Zero-spread columns become zeros and are flagged.
pub fn zscore_columns(matrix: &Matrix) -> Result<ZScored, NormalizeError> {
    if matrix.rows() < 2 {
        return Err(NormalizeError::TooFewSamples { needed: 2, got: matrix.rows() });
    }
    let mut values = Matrix::zeros(matrix.rows(), matrix.cols());
    let mut means = Vec::with_capacity(matrix.cols());
    let mut stds = Vec::with_capacity(matrix.cols());
    let mut degenerate = Vec::with_capacity(matrix.cols());
    for j in 0..matrix.cols() {
        let (z, mean, std, flag) = zscore_column(&matrix.column(j));
        values.set_column(j, &z);
        means.push(mean);
        stds.push(std);
        degenerate.push(flag);
    }
    Ok(ZScored { values, means, stds, degenerate })
}

/// Row-major array whose first axis indexes samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NdArray {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl NdArray {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, NormalizeError> {
        let len: usize = shape.iter().product();
        if shape.is_empty() || len != data.len() {
            return Err(NormalizeError::Shape { shape, len: data.len() });
        }
        Ok(Self { shape, data })
    }
}

/// The three input layouts of BC-Zscore.
#[derive(Debug, Clone, PartialEq)]
pub enum Data {
    /// One column.
    Vector(Vec<f64>),
    /// n×p, one column per attribute.
    Matrix(Matrix),
    /// Shape `[n, d1, d2, …]`: every position along the trailing axes is a
    /// column of length n.
    Array(NdArray),
}

impl Data {
    fn to_matrix(&self) -> Matrix {
        match self {
            Data::Vector(v) => Matrix::from_vec(v.len(), 1, v.clone()),
            Data::Matrix(m) => m.clone(),
            Data::Array(a) => {
                let n = a.shape[0];
                let p = a.data.len().checked_div(n).unwrap_or(0);
                Matrix::from_vec(n, p, a.data.clone())
            }
        }
    }

    fn reshape_like(&self, m: Matrix) -> Data {
        match self {
            Data::Vector(_) => Data::Vector(m.into_vec()),
            Data::Matrix(_) => Data::Matrix(m),
            Data::Array(a) => Data::Array(NdArray { shape: a.shape.clone(), data: m.into_vec() }),
        }
    }
}

/// Per-column diagnostics of a BC-Zscore run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnReport {
    pub lambda: f64,
    pub shift: f64,
    /// Mean of the Box-Cox output (the Z-score centre).
    pub mean: f64,
    /// Sample std of the Box-Cox output (the Z-score scale).
    pub std: f64,
    pub skew_before: f64,
    pub skew_after: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcZscore {
    pub output: Data,
    pub params: BoxCoxParams,
    pub columns: Vec<ColumnReport>,
}

fn is_standardized(column: &[f64]) -> bool {
    column_stats(column)
        .map(|s| s.mean.abs() <= STANDARDIZED_TOL && (s.sample_std - 1.0).abs() <= STANDARDIZED_TOL)
        .unwrap_or(false)
}

fn choose_param(column: &[f64], grid: &LambdaGrid) -> Result<BoxCoxParam, NormalizeError> {
    let shift = positivity_shift(column);
    // Constant, two-point and already-standardized columns keep the identity
    // power: the Z-score of an affine map is the Z-score of the input.
    if is_constant(column) || column.len() < 3 || is_standardized(column) {
        return Ok(BoxCoxParam { lambda: 1.0, shift });
    }
    fit_lambda(column, grid)
}

/// A positive affine image of the Box-Cox output. Z-scores are invariant
/// under such maps, and this form keeps full relative precision when x^λ is
/// nearly constant (large |λ| on large values), where (x^λ − 1)/λ cancels.
fn conditioned_power(column: &[f64], shifted: &[f64], lambda: f64) -> Vec<f64> {
    if lambda == 1.0 {
        return column.to_vec();
    }
    if lambda.abs() <= LAMBDA_EPS {
        return shifted.iter().map(|x| x.ln()).collect();
    }
    let u: Vec<f64> = shifted.iter().map(|x| lambda * x.ln()).collect();
    let c = u.iter().sum::<f64>() / u.len() as f64;
    u.iter().map(|v| lambda.signum() * (v - c).exp_m1()).collect()
}

/// Box-Cox then Z-score, column by column, for any of the [`Data`] layouts.
///
/// With `params`, the stored λ and shift are applied as-is (no refit); the
/// Z-score centre and scale are always taken from `input`.
pub fn bc_zscore(input: &Data, params: Option<&BoxCoxParams>, grid: &LambdaGrid) -> Result<BcZscore, NormalizeError> {
    grid.validate()?;
    let matrix = input.to_matrix();
    if matrix.rows() < 2 {
        return Err(NormalizeError::TooFewSamples { needed: 2, got: matrix.rows() });
    }
    if let Some(p) = params {
        if p.columns.len() != matrix.cols() {
            return Err(NormalizeError::ParamMismatch { expected: matrix.cols(), found: p.columns.len() });
        }
    }

    let mut conditioned = Matrix::zeros(matrix.rows(), matrix.cols());
    let mut centres = Vec::with_capacity(matrix.cols());
    let mut fitted = Vec::with_capacity(matrix.cols());
    let mut skew_before = Vec::with_capacity(matrix.cols());
    for j in 0..matrix.cols() {
        let column = matrix.column(j);
        skew_before.push(column_stats(&column)?.skewness);
        let param = match params {
            Some(p) => p.columns[j],
            None => choose_param(&column, grid)?,
        };
        let shifted: Vec<f64> = column.iter().map(|x| x + param.shift).collect();
        let y = boxcox(&shifted, param.lambda)?;
        let stats = column_stats(&y)?;
        centres.push((stats.mean, stats.sample_std));
        conditioned.set_column(j, &conditioned_power(&column, &shifted, param.lambda));
        fitted.push(param);
    }

    let z = zscore_columns(&conditioned)?;
    let mut reports = Vec::with_capacity(matrix.cols());
    for (j, param) in fitted.iter().enumerate() {
        reports.push(ColumnReport {
            lambda: param.lambda,
            shift: param.shift,
            mean: centres[j].0,
            std: centres[j].1,
            skew_before: skew_before[j],
            skew_after: column_stats(&z.values.column(j))?.skewness,
            degenerate: z.degenerate[j],
        });
    }
    Ok(BcZscore { output: input.reshape_like(z.values), params: BoxCoxParams { columns: fitted }, columns: reports })
}
