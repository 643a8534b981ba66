//! Projected significance test along random directions.
//!
//! For a direction `h` with coefficients `h_k`, the projected data `Y(h) = (<Y_i, h>)_i`
//! follow a real linear model with covariance `Lambda_h = sum_k h_k^2 Lambda_k`. The
//! hypothesis `K beta(h) = C` is tested with
//! `T_h = (K b - C)ᵀ (K Q Kᵀ)⁻¹ (K b - C)`, `b = Q Xᵀ Lambda_h⁻¹ Y(h)`,
//! `Q = (Xᵀ Lambda_h⁻¹ X)⁻¹`, referred to `chi^2_{p-1}`.

use nalgebra::{Cholesky, Dyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::LambdaSequence;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};
use crate::simulation::{direction_coefficients, ErrorSampler};
use crate::special::chi2_sf;

/// `K` with rows `(1, 0, .., -1, .., 0)` and `C = 0`: all components equal.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastSpec {
    pub k: Mat,
    pub c: Vector,
}

impl ContrastSpec {
    pub fn equality(p: usize) -> Result<Self> {
        if p < 2 {
            return Err(Error::Config(format!("contrast needs p >= 2, got {p}")));
        }
        let mut k = Mat::zeros(p - 1, p);
        for r in 0..p - 1 {
            k[(r, 0)] = 1.0;
            k[(r, r + 1)] = -1.0;
        }
        Ok(ContrastSpec { k, c: Vector::zeros(p - 1) })
    }

    pub fn df(&self) -> usize {
        self.k.nrows()
    }
}

/// Which matrix plays the role of `Q_h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QForm {
    /// `(Xᵀ Lambda_h⁻¹ X)⁻¹`, the covariance of the GLS estimate.
    #[default]
    Gls,
    /// `(Xᵀ Lambda_h X)⁻¹`, kept for comparison only; it is not the covariance of the estimate.
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestReport {
    pub t_value: f64,
    pub df: usize,
    pub p_value: f64,
    pub direction_id: u64,
    pub alpha: f64,
    pub reject: bool,
}

/// `Lambda_h = sum_k h_k^2 Lambda_k`.
pub fn lambda_h(h: &[f64], lambda: &LambdaSequence) -> Result<Mat> {
    if h.len() != lambda.tr() {
        return Err(Error::dim("lambda_h: direction length", lambda.tr(), h.len()));
    }
    if h.iter().all(|v| *v == 0.0) {
        return Err(Error::Degenerate("direction h is identically zero".into()));
    }
    let n = lambda.n();
    let mut out = Mat::zeros(n, n);
    for (hk, m) in h.iter().zip(&lambda.matrices) {
        if *hk != 0.0 {
            out += m * (hk * hk);
        }
    }
    Ok(out)
}

/// `Y(h) = Y h` for `n x TR` response coefficients.
pub fn project_response(y: &Mat, h: &[f64]) -> Result<Vector> {
    if y.ncols() != h.len() {
        return Err(Error::dim("project_response: direction length", y.ncols(), h.len()));
    }
    Ok(y * Vector::from_column_slice(h))
}

/// Precomputed factorizations for one design and one direction.
#[derive(Debug, Clone)]
pub struct DirectionTest {
    x: Mat,
    lambda_h: Cholesky<f64, Dyn>,
    /// `Xᵀ Lambda_h⁻¹ X` factorization, yields the GLS estimate.
    normal: Cholesky<f64, Dyn>,
    kqk: Cholesky<f64, Dyn>,
    contrast: ContrastSpec,
    direction_id: u64,
    alpha: f64,
}

impl DirectionTest {
    pub fn new(
        x: &Mat,
        lambda_h: Mat,
        contrast: &ContrastSpec,
        q_form: QForm,
        alpha: f64,
        direction_id: u64,
    ) -> Result<Self> {
        if x.nrows() != lambda_h.nrows() {
            return Err(Error::dim("T_h: design rows", lambda_h.nrows(), x.nrows()));
        }
        if contrast.k.ncols() != x.ncols() {
            return Err(Error::dim("T_h: contrast columns", x.ncols(), contrast.k.ncols()));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        let chol = linalg::cholesky(&lambda_h, 0)?;
        let normal_matrix = x.transpose() * chol.solve(x);
        let normal = Cholesky::new(normal_matrix.clone()).ok_or(Error::Singular {
            k: 0,
            condition: linalg::spd_condition(&normal_matrix),
        })?;
        let q = match q_form {
            QForm::Gls => normal.inverse(),
            QForm::Printed => {
                let m = x.transpose() * &lambda_h * x;
                Cholesky::new(m.clone())
                    .ok_or(Error::Singular { k: 0, condition: linalg::spd_condition(&m) })?
                    .inverse()
            }
        };
        let kqk_matrix = &contrast.k * q * contrast.k.transpose();
        let kqk = Cholesky::new(kqk_matrix.clone()).ok_or(Error::Singular {
            k: 0,
            condition: linalg::spd_condition(&kqk_matrix),
        })?;
        Ok(DirectionTest { x: x.clone(), lambda_h: chol, normal, kqk, contrast: contrast.clone(), direction_id, alpha })
    }

    /// GLS estimate `beta(h)`.
    pub fn estimate(&self, y_h: &Vector) -> Vector {
        let rhs = self.x.transpose() * self.lambda_h.solve(y_h);
        self.normal.solve(&rhs)
    }

    pub fn test(&self, y_h: &Vector) -> Result<TestReport> {
        if y_h.len() != self.x.nrows() {
            return Err(Error::dim("T_h: projected response length", self.x.nrows(), y_h.len()));
        }
        let d = &self.contrast.k * self.estimate(y_h) - &self.contrast.c;
        let t_value = d.dot(&self.kqk.solve(&d)).max(0.0);
        let df = self.contrast.df();
        let p_value = chi2_sf(t_value, df)?;
        Ok(TestReport {
            t_value,
            df,
            p_value,
            direction_id: self.direction_id,
            alpha: self.alpha,
            reject: p_value < self.alpha,
        })
    }
}

/// One-shot `T_h` from `n x TR` response coefficients.
pub fn t_statistic(
    x: &Mat,
    y: &Mat,
    h: &[f64],
    lambda: &LambdaSequence,
    contrast: &ContrastSpec,
    alpha: f64,
) -> Result<TestReport> {
    let test = DirectionTest::new(x, lambda_h(h, lambda)?, contrast, QForm::Gls, alpha, 0)?;
    test.test(&project_response(y, h)?)
}

/// Monte Carlo campaign: every sample is tested along every direction.
#[derive(Debug, Clone)]
pub struct Campaign<'a> {
    pub x: &'a Mat,
    /// `TR x p` true coefficients.
    pub beta: &'a Mat,
    pub lambda: &'a LambdaSequence,
    pub eigenvalues: &'a [f64],
    pub samples: usize,
    pub directions: usize,
    pub alpha: f64,
    pub seed: u64,
    pub q_form: QForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSummary {
    pub direction_id: u64,
    pub success_rate: f64,
    pub mean_p_value: f64,
    pub p_values: Vec<f64>,
    pub t_values: Vec<f64>,
}

pub fn run_campaign(c: &Campaign) -> Result<Vec<DirectionSummary>> {
    let p = c.x.ncols();
    if c.beta.ncols() != p || c.beta.nrows() != c.lambda.tr() || c.eigenvalues.len() != c.lambda.tr() {
        return Err(Error::dim("campaign: beta shape", c.lambda.tr() * p, c.beta.len()));
    }
    if c.samples == 0 || c.directions == 0 {
        return Err(Error::Config("campaign needs samples and directions".into()));
    }
    let contrast = ContrastSpec::equality(p)?;
    let tests: Vec<(Vec<f64>, DirectionTest)> = (0..c.directions as u64)
        .map(|d| {
            let h = direction_coefficients(c.eigenvalues, c.seed, d);
            let t = DirectionTest::new(c.x, lambda_h(&h, c.lambda)?, &contrast, c.q_form, c.alpha, d)?;
            Ok((h, t))
        })
        .collect::<Result<_>>()?;
    let sampler = ErrorSampler::new(c.lambda);
    let mean = c.x * c.beta.transpose();
    let per_sample: Vec<Vec<TestReport>> = (0..c.samples as u64)
        .into_par_iter()
        .map(|s| {
            let y = &mean + sampler.coefficients(c.seed, s);
            tests.iter().map(|(h, t)| t.test(&project_response(&y, h)?)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(tests
        .iter()
        .enumerate()
        .map(|(d, (_, t))| {
            let p_values: Vec<f64> = per_sample.iter().map(|r| r[d].p_value).collect();
            let t_values: Vec<f64> = per_sample.iter().map(|r| r[d].t_value).collect();
            let rejections = per_sample.iter().filter(|r| r[d].reject).count();
            DirectionSummary {
                direction_id: t.direction_id,
                success_rate: rejections as f64 / c.samples as f64,
                mean_p_value: p_values.iter().sum::<f64>() / c.samples as f64,
                p_values,
                t_values,
            }
        })
        .collect())
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len() as f64;
    s.iter().enumerate().fold(0.0_f64, |d, (i, x)| {
        let f = cdf(*x);
        d.max(f - i as f64 / n).max((i as f64 + 1.0) / n - f)
    })
}

/// Asymptotic 1% critical value of the KS distance, `1.628 / sqrt(n)`.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.627_624 / (n as f64).sqrt()
}
