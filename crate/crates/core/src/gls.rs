//! Per-frequency generalized least squares and the simulation error statistics.
//!
//! For each `k` the coefficient vector `Y_k` (length `n`) satisfies
//! `Y_k = X beta_k + eps_k` with `eps_k ~ N(0, Lambda_k)`. With `Lambda_k = L Lᵀ`,
//! `A = L⁻¹X` and `b = L⁻¹Y_k`, the estimate is the solution of `AᵀA beta = Aᵀb`.

use nalgebra::{Cholesky, Dyn};

use crate::covariance::{LambdaSequence, Provenance};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};
use crate::simulation::FunctionalSample;
use crate::spectral::SpectralBasis;

/// Systems whose normal matrix has a larger condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone)]
struct Frequency {
    lambda: Cholesky<f64, Dyn>,
    /// `L⁻¹ X`
    whitened: Mat,
    normal: Cholesky<f64, Dyn>,
}

/// Factorizations for a fixed design and covariance sequence, reusable across responses.
#[derive(Debug, Clone)]
pub struct GlsSolver {
    x: Mat,
    frequencies: Vec<Frequency>,
    provenance: Provenance,
}

fn forward(l: &Cholesky<f64, Dyn>, b: &Mat) -> Mat {
    l.l_dirty()
        .solve_lower_triangular(b)
        .expect("Cholesky factor has a positive diagonal")
}

impl GlsSolver {
    pub fn new(x: &Mat, lambda: &LambdaSequence) -> Result<Self> {
        if x.nrows() != lambda.n() {
            return Err(Error::dim("GLS: design rows", lambda.n(), x.nrows()));
        }
        if x.ncols() == 0 || x.ncols() > x.nrows() {
            return Err(Error::Config(format!("design must have 1..=n columns, got {}", x.ncols())));
        }
        let mut frequencies = Vec::with_capacity(lambda.tr());
        for (idx, m) in lambda.matrices.iter().enumerate() {
            let k = idx + 1;
            let chol = linalg::cholesky(m, k)?;
            let whitened = forward(&chol, x);
            let normal_matrix = whitened.transpose() * &whitened;
            let condition = linalg::spd_condition(&normal_matrix);
            if !(condition <= MAX_CONDITION) {
                return Err(Error::Singular { k, condition });
            }
            let normal = Cholesky::new(normal_matrix).ok_or(Error::Singular { k, condition })?;
            frequencies.push(Frequency { lambda: chol, whitened, normal });
        }
        Ok(GlsSolver { x: x.clone(), frequencies, provenance: lambda.provenance })
    }

    pub fn tr(&self) -> usize {
        self.frequencies.len()
    }

    pub fn design(&self) -> &Mat {
        &self.x
    }

    /// `beta_k` (0-based `k`) for one coefficient vector.
    pub fn solve_k(&self, k: usize, y: &Vector) -> Vector {
        let f = &self.frequencies[k];
        let b = forward(&f.lambda, &Mat::from_column_slice(y.len(), 1, y.as_slice()));
        let rhs = f.whitened.transpose() * b;
        let sol = f.normal.solve(&rhs);
        Vector::from_column_slice(sol.as_slice())
    }

    /// `TR x p` estimates from `n x TR` response coefficients.
    pub fn solve(&self, y: &Mat) -> Result<Mat> {
        if y.ncols() != self.tr() || y.nrows() != self.x.nrows() {
            return Err(Error::dim("GLS: response coefficient shape", self.x.nrows() * self.tr(), y.nrows() * y.ncols()));
        }
        let mut beta = Mat::zeros(self.tr(), self.x.ncols());
        for k in 0..self.tr() {
            let col = Vector::from_column_slice(y.column(k).as_slice());
            beta.set_row(k, &self.solve_k(k, &col).transpose());
        }
        Ok(beta)
    }

    /// `(Xᵀ Lambda_k⁻¹ X)⁻¹`, the covariance of the estimate at 0-based `k`.
    pub fn covariance(&self, k: usize) -> Mat {
        self.frequencies[k].normal.inverse()
    }

    /// `Lambda_k⁻¹ v` (0-based `k`).
    pub fn lambda_solve(&self, k: usize, v: &Mat) -> Mat {
        self.frequencies[k].lambda.solve(v)
    }
}

/// Estimates and fitted values of one GLS fit.
#[derive(Debug, Clone, PartialEq)]
pub struct GlsFit {
    /// `TR x p` estimated coefficients.
    pub beta_coefficients: Mat,
    /// `p x L` reconstructed estimates.
    pub beta_fields: Mat,
    /// `n x TR` response coefficients used in the fit.
    pub response_coefficients: Mat,
    /// `n x TR` fitted coefficients `X beta_k`.
    pub fitted_coefficients: Mat,
    /// `n x L` fitted response.
    pub fitted: Mat,
    /// `n x TR` residual coefficients `Y_k - X beta_k`.
    pub residual_coefficients: Mat,
    pub provenance: Provenance,
}

/// Response coefficients: the exact ones when present, otherwise the quadrature projection.
pub fn response_coefficients(response: &FunctionalSample, basis: &SpectralBasis) -> Result<Mat> {
    match &response.coefficients {
        Some(c) => {
            if c.ncols() != basis.tr() {
                return Err(Error::dim("response coefficient columns", basis.tr(), c.ncols()));
            }
            Ok(c.clone())
        }
        None => basis.project_rows(&response.values),
    }
}

pub fn fit(x: &Mat, response: &FunctionalSample, lambda: &LambdaSequence, basis: &SpectralBasis) -> Result<GlsFit> {
    if lambda.tr() != basis.tr() {
        return Err(Error::dim("fit: Lambda sequence length", basis.tr(), lambda.tr()));
    }
    let solver = GlsSolver::new(x, lambda)?;
    fit_with(&solver, response, basis)
}

pub fn fit_with(solver: &GlsSolver, response: &FunctionalSample, basis: &SpectralBasis) -> Result<GlsFit> {
    let y = response_coefficients(response, basis)?;
    fit_coefficients(solver, &y, basis)
}

/// Fit from `n x TR` response coefficients.
pub fn fit_coefficients(solver: &GlsSolver, y: &Mat, basis: &SpectralBasis) -> Result<GlsFit> {
    let beta = solver.solve(y)?;
    let fitted_coefficients = solver.design() * beta.transpose();
    let residual_coefficients = y - &fitted_coefficients;
    Ok(GlsFit {
        beta_fields: basis.reconstruct_rows(&beta.transpose())?,
        fitted: basis.reconstruct_rows(&fitted_coefficients)?,
        beta_coefficients: beta,
        response_coefficients: y.clone(),
        fitted_coefficients,
        residual_coefficients,
        provenance: solver.provenance,
    })
}

fn check_pairs(a: &[Mat], b: &[Mat]) -> Result<()> {
    if a.is_empty() {
        return Err(Error::Config("at least one replicate required".into()));
    }
    if a.len() != b.len() {
        return Err(Error::dim("replicate count", a.len(), b.len()));
    }
    for (x, y) in a.iter().zip(b) {
        if x.shape() != y.shape() {
            return Err(Error::dim("replicate shape", x.len(), y.len()));
        }
    }
    Ok(())
}

/// `(1/nu) sum_v ||A_v - B_v||_F^2` for coefficient matrices; by Parseval this is the
/// squared H-norm error summed over rows/columns of the truncated expansion.
pub fn efmse_coefficients(truth: &[Mat], estimate: &[Mat]) -> Result<f64> {
    check_pairs(truth, estimate)?;
    let total: f64 = truth.iter().zip(estimate).map(|(a, b)| (a - b).norm_squared()).sum();
    Ok(total / truth.len() as f64)
}

/// `(1/nu) sum_v sum_rows ||A_v,row - B_v,row||_H^2` with grid fields as rows.
pub fn efmse_grid(basis: &SpectralBasis, truth: &[Mat], estimate: &[Mat]) -> Result<f64> {
    check_pairs(truth, estimate)?;
    let mut total = 0.0;
    for (a, b) in truth.iter().zip(estimate) {
        if a.ncols() != basis.nodes() {
            return Err(Error::dim("efmse_grid: field length", basis.nodes(), a.ncols()));
        }
        let d = a - b;
        for row in d.row_iter() {
            total += row.iter().zip(&basis.grid.weights).map(|(v, w)| w * v * v).sum::<f64>();
        }
    }
    Ok(total / truth.len() as f64)
}

/// Per node, the replicate mean of the largest squared error over components.
/// Each input matrix is `components x L`.
pub fn linf_stats(errors: &[Mat]) -> Result<Vec<f64>> {
    let first = errors.first().ok_or_else(|| Error::Config("at least one replicate required".into()))?;
    let l = first.ncols();
    let mut out = vec![0.0; l];
    for e in errors {
        if e.ncols() != l {
            return Err(Error::dim("linf_stats: nodes", l, e.ncols()));
        }
        for (j, o) in out.iter_mut().enumerate() {
            *o += e.column(j).iter().fold(0.0_f64, |m, v| m.max(v * v));
        }
    }
    let nu = errors.len() as f64;
    out.iter_mut().for_each(|o| *o /= nu);
    Ok(out)
}

/// Cumulative fraction of `sum_i c_ik^2` captured by the first `1..=TR` frequencies.
pub fn explained_variance(coefficients: &Mat) -> Vec<f64> {
    let per_k: Vec<f64> = coefficients.column_iter().map(|c| c.norm_squared()).collect();
    let total: f64 = per_k.iter().sum();
    let mut acc = 0.0;
    per_k
        .iter()
        .map(|v| {
            acc += v;
            if total > 0.0 {
                acc / total
            } else {
                0.0
            }
        })
        .collect()
}
