//! Truncated functional ANOVA after the variance-stabilizing transform `W_k`.
//!
//! `W_k = Psi_k diag(omega_i + 1/k^2) Psi_kᵀ` where `Lambda_k = Psi_k diag(omega) Psi_kᵀ`.
//! With `M_k = I - X (Xᵀ Lambda_k⁻¹ X)⁻¹ Xᵀ Lambda_k⁻¹`:
//!
//! ```text
//! SST = sum_k (W_k Y_k)ᵀ Lambda_k⁻¹ (W_k Y_k)
//! SSE = sum_k (M_k W_k Y_k)ᵀ Lambda_k⁻¹ (M_k W_k Y_k)
//! SSR = SST - SSE,  F = SSR / SSE
//! ```

use crate::covariance::LambdaSequence;
use crate::error::{Error, Result};
use crate::gls::GlsSolver;
use crate::linalg::{self, Mat, Vector};

/// `SSE <= ZERO_SSE * SST` counts as an exact fit.
pub const ZERO_SSE: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightTransform {
    /// Eigenvectors of `Lambda_k`, columns ordered by descending eigenvalue.
    pub psi: Vec<Mat>,
    /// Eigenvalues of `Lambda_k`, descending.
    pub omega: Vec<Vector>,
    pub w: Vec<Mat>,
}

impl WeightTransform {
    pub fn tr(&self) -> usize {
        self.w.len()
    }

    /// `Tr(Lambda_k⁻¹ W_k) = n + (1/k^2) sum_i 1/omega_i` for 1-based `k`.
    pub fn trace_term(&self, k: usize) -> f64 {
        let omega = &self.omega[k - 1];
        omega.len() as f64 + omega.iter().map(|o| 1.0 / o).sum::<f64>() / (k * k) as f64
    }
}

pub fn build_w(lambda: &LambdaSequence) -> Result<WeightTransform> {
    let mut psi = Vec::with_capacity(lambda.tr());
    let mut omega = Vec::with_capacity(lambda.tr());
    let mut w = Vec::with_capacity(lambda.tr());
    for (idx, m) in lambda.matrices.iter().enumerate() {
        let a = 1.0 / ((idx + 1) * (idx + 1)) as f64;
        let (values, vectors) = linalg::sorted_eigen(m);
        if values.iter().any(|v| !v.is_finite()) || !(values[values.len() - 1] > 0.0) {
            return Err(Error::NotPositiveDefinite { k: idx + 1, min_eigenvalue: values[values.len() - 1] });
        }
        let mut wk = &vectors * Mat::from_diagonal(&values.add_scalar(a)) * vectors.transpose();
        linalg::symmetrize(&mut wk);
        psi.push(vectors);
        omega.push(values);
        w.push(wk);
    }
    Ok(WeightTransform { psi, omega, w })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FanovaResult {
    pub sst: f64,
    pub sse: f64,
    pub ssr: f64,
    /// `SSR/SSE`, or `+inf` when the fit is exact.
    pub f_value: f64,
    pub infinite_f: bool,
    /// Per-frequency `[SST_k, SSE_k, SSR_k]`.
    pub per_k: Vec<[f64; 3]>,
}

/// Decomposition for `n x TR` response coefficients. `solver` must be built from the
/// same `Lambda` sequence as `transform`.
pub fn decompose(solver: &GlsSolver, y: &Mat, transform: &WeightTransform) -> Result<FanovaResult> {
    if transform.tr() != solver.tr() || y.ncols() != solver.tr() {
        return Err(Error::dim("decompose: truncation order", solver.tr(), y.ncols().min(transform.tr())));
    }
    if y.nrows() != solver.design().nrows() {
        return Err(Error::dim("decompose: observations", solver.design().nrows(), y.nrows()));
    }
    let mut per_k = Vec::with_capacity(solver.tr());
    let (mut sst, mut sse) = (0.0, 0.0);
    for k in 0..solver.tr() {
        let wy = &transform.w[k] * y.column(k);
        let wy = Mat::from_column_slice(wy.len(), 1, wy.as_slice());
        let t = quad(solver, k, &wy);
        let r = residual(solver, k, &wy);
        let e = quad(solver, k, &r);
        per_k.push([t, e, t - e]);
        sst += t;
        sse += e;
    }
    let ssr = sst - sse;
    let infinite_f = sse <= ZERO_SSE * sst && ssr > 0.0;
    let f_value = if infinite_f { f64::INFINITY } else { ssr / sse };
    Ok(FanovaResult { sst, sse, ssr, f_value, infinite_f, per_k })
}

/// `vᵀ Lambda_k⁻¹ v`
fn quad(solver: &GlsSolver, k: usize, v: &Mat) -> f64 {
    (v.transpose() * solver.lambda_solve(k, v))[(0, 0)]
}

/// `M_k v`
fn residual(solver: &GlsSolver, k: usize, v: &Mat) -> Mat {
    let beta = solver.solve_k(k, &Vector::from_column_slice(v.as_slice()));
    let fitted = solver.design() * beta;
    v - Mat::from_column_slice(fitted.len(), 1, fitted.as_slice())
}

/// The oblique projector `M_k` (0-based `k`) as an explicit matrix.
pub fn projector(solver: &GlsSolver, k: usize) -> Mat {
    let n = solver.design().nrows();
    let mut m = Mat::zeros(n, n);
    for j in 0..n {
        let mut e = Mat::zeros(n, 1);
        e[(j, 0)] = 1.0;
        m.set_column(j, &residual(solver, k, &e).column(0));
    }
    m
}

/// Median and mean of per-replicate F values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FSummary {
    pub median: f64,
    pub mean: f64,
    pub infinite: usize,
}

pub fn summarize_f(values: &[f64]) -> Result<FSummary> {
    if values.is_empty() {
        return Err(Error::Config("no F values to summarize".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let m = sorted.len();
    let median = if m % 2 == 1 { sorted[m / 2] } else { 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]) };
    Ok(FSummary {
        median,
        mean: values.iter().sum::<f64>() / m as f64,
        infinite: values.iter().filter(|v| v.is_infinite()).count(),
    })
}
