//! Per-frequency covariance matrices `Lambda_k` of the basis coefficients.
//!
//! `Lambda_k[i][j] = Cov(<eps_i, phi_k>, <eps_j, phi_k>)`. Three constructions:
//! the full simulation family driven by the Laplacian eigenvalues, a
//! tridiagonal ARH(1) form, and the empirical tridiagonal estimate.

use std::io::{Read, Write};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    TheoreticalFull,
    TheoreticalTridiagonal,
    Empirical,
}

/// Per-observation exponents `gamma_i in (0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaProfile {
    pub gammas: Vec<f64>,
}

impl GammaProfile {
    /// `gamma_i = 0.1 + 0.8 (i - 1)/(n - 1)`.
    pub fn even_spread(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("gamma profile needs n >= 2, got {n}")));
        }
        let gammas = (0..n).map(|i| 0.1 + 0.8 * i as f64 / (n - 1) as f64).collect();
        Ok(GammaProfile { gammas })
    }

    pub fn constant(n: usize, gamma: f64) -> Result<Self> {
        let g = GammaProfile { gammas: vec![gamma; n] };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.gammas.len() < 2 {
            return Err(Error::Config("gamma profile needs n >= 2".into()));
        }
        if let Some(g) = self.gammas.iter().find(|g| !(**g > 0.0 && **g < 1.0)) {
            return Err(Error::Config(format!("gamma values must lie in (0, 1), got {g}")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }
}

/// The matrices `Lambda_1 .. Lambda_TR`, all `n x n` and symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSequence {
    pub matrices: Vec<Mat>,
    pub provenance: Provenance,
}

impl LambdaSequence {
    /// Wrap matrices after checking shape and exact symmetry. Positive definiteness is
    /// left to the builders and to the solvers that factor the matrices.
    pub fn from_matrices(matrices: Vec<Mat>, provenance: Provenance) -> Result<Self> {
        let n = matrices.first().map(|m| m.nrows()).ok_or_else(|| Error::Config("empty Lambda sequence".into()))?;
        for (k, m) in matrices.iter().enumerate() {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::dim("Lambda_k shape", n, if m.nrows() != n { m.nrows() } else { m.ncols() }));
            }
            if *m != m.transpose() {
                return Err(Error::Numerical(format!("Lambda_{} is not symmetric", k + 1)));
            }
        }
        Ok(LambdaSequence { matrices, provenance })
    }

    pub fn n(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn tr(&self) -> usize {
        self.matrices.len()
    }

    /// Every matrix multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        LambdaSequence {
            matrices: self.matrices.iter().map(|m| m * c).collect(),
            provenance: self.provenance,
        }
    }

    /// Cholesky check of every matrix; errors carry the 1-based `k`.
    pub fn validate_pd(&self) -> Result<()> {
        for (k, m) in self.matrices.iter().enumerate() {
            linalg::cholesky(m, k + 1)?;
        }
        Ok(())
    }

    /// CSV rows `k,i,j,value` (1-based indices), full matrices.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["k", "i", "j", "value"])?;
        for (k, m) in self.matrices.iter().enumerate() {
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    w.write_record(&[(k + 1).to_string(), (i + 1).to_string(), (j + 1).to_string(), format!("{:e}", m[(i, j)])])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Inverse of [`LambdaSequence::write_csv`]; lines starting with `#` are ignored.
    pub fn read_csv<R: Read>(reader: R, provenance: Provenance) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
        let mut entries: Vec<(usize, usize, usize, f64)> = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let parse_idx = |s: &str| s.trim().parse::<usize>().map_err(|e| Error::Config(format!("bad index {s:?}: {e}")));
            let value = rec.get(3).ok_or_else(|| Error::Config("missing value column".into()))?;
            let value = value.trim().parse::<f64>().map_err(|e| Error::Config(format!("bad value {value:?}: {e}")))?;
            entries.push((parse_idx(&rec[0])?, parse_idx(&rec[1])?, parse_idx(&rec[2])?, value));
        }
        let tr = entries.iter().map(|e| e.0).max().unwrap_or(0);
        let n = entries.iter().map(|e| e.1.max(e.2)).max().unwrap_or(0);
        if tr == 0 || n == 0 || entries.iter().any(|e| e.0 == 0 || e.1 == 0 || e.2 == 0) {
            return Err(Error::Config("Lambda CSV must use 1-based, non-empty indices".into()));
        }
        let mut matrices = vec![Mat::zeros(n, n); tr];
        for (k, i, j, v) in entries {
            matrices[k - 1][(i - 1, j - 1)] = v;
        }
        Self::from_matrices(matrices, provenance)
    }
}

fn full_matrix(eigenvalue: f64, gamma: &GammaProfile) -> Mat {
    let n = gamma.len();
    let diag: Vec<f64> = gamma.gammas.iter().map(|g| eigenvalue.powf(-2.0 * (2.0 - g))).collect();
    Mat::from_fn(n, n, |i, j| {
        if i == j {
            diag[i]
        } else {
            (-(i.abs_diff(j) as f64) / (diag[i] + diag[j])).exp()
        }
    })
}

/// Simulation family: `Lambda_k[i][i] = lambda_k^{-2(2 - gamma_i)}` and
/// `Lambda_k[i][j] = exp(-|i - j| / (Lambda_k[i][i] + Lambda_k[j][j]))`.
/// Fails on the first `k` whose matrix is not positive definite.
pub fn lambda_theoretical(laplacian_eigenvalues: &[f64], gamma: &GammaProfile) -> Result<LambdaSequence> {
    gamma.validate()?;
    check_eigenvalues(laplacian_eigenvalues)?;
    let seq = LambdaSequence {
        matrices: laplacian_eigenvalues.iter().map(|l| full_matrix(*l, gamma)).collect(),
        provenance: Provenance::TheoreticalFull,
    };
    seq.validate_pd()?;
    Ok(seq)
}

fn check_eigenvalues(eigenvalues: &[f64]) -> Result<()> {
    if eigenvalues.is_empty() {
        return Err(Error::Config("at least one eigenvalue required".into()));
    }
    if let Some(l) = eigenvalues.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
        return Err(Error::Domain(format!("Laplacian eigenvalues must be positive, got {l}")));
    }
    Ok(())
}

/// A matrix whose spectrum was lifted by [`lambda_theoretical_floored`].
#[derive(Debug, Clone, PartialEq)]
pub struct FloorEvent {
    pub k: usize,
    pub min_eigenvalue: f64,
    pub lifted: usize,
}

/// As [`lambda_theoretical`] but eigenvalues below `epsilon * trace / n` are raised to that
/// floor instead of failing. Every repaired `k` is logged at warn level and returned.
pub fn lambda_theoretical_floored(
    laplacian_eigenvalues: &[f64],
    gamma: &GammaProfile,
    epsilon: f64,
) -> Result<(LambdaSequence, Vec<FloorEvent>)> {
    gamma.validate()?;
    check_eigenvalues(laplacian_eigenvalues)?;
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!("pd floor must be positive, got {epsilon}")));
    }
    let n = gamma.len();
    let mut events = Vec::new();
    let mut matrices = Vec::with_capacity(laplacian_eigenvalues.len());
    for (idx, l) in laplacian_eigenvalues.iter().enumerate() {
        let m = full_matrix(*l, gamma);
        let floor = epsilon * m.trace() / n as f64;
        let (values, vectors) = linalg::sorted_eigen(&m);
        let lifted = values.iter().filter(|v| **v < floor).count();
        if lifted == 0 && linalg::cholesky(&m, idx + 1).is_ok() {
            matrices.push(m);
            continue;
        }
        let min_eigenvalue = values[n - 1];
        warn!(
            "PD FLOOR APPLIED: Lambda_{} had smallest eigenvalue {:e}; {} eigenvalue(s) raised to {:e}",
            idx + 1,
            min_eigenvalue,
            lifted,
            floor
        );
        let clamped = values.map(|v| v.max(floor));
        let mut repaired = &vectors * Mat::from_diagonal(&clamped) * vectors.transpose();
        linalg::symmetrize(&mut repaired);
        matrices.push(repaired);
        events.push(FloorEvent { k: idx + 1, min_eigenvalue, lifted });
    }
    let seq = LambdaSequence { matrices, provenance: Provenance::TheoreticalFull };
    seq.validate_pd()?;
    Ok((seq, events))
}

/// Tridiagonal ARH(1) matrices: diagonal `lambda_k(R_0)`, both off-diagonals `lambda_k(R_1)`.
pub fn lambda_tridiagonal(r0: &[f64], r1: &[f64], n: usize) -> Result<LambdaSequence> {
    if r0.len() != r1.len() {
        return Err(Error::dim("lambda_tridiagonal: R_1 length", r0.len(), r1.len()));
    }
    if n < 2 {
        return Err(Error::Config(format!("n must be >= 2, got {n}")));
    }
    if r0.is_empty() {
        return Err(Error::Config("at least one frequency required".into()));
    }
    let mut matrices = Vec::with_capacity(r0.len());
    for (k, (d, o)) in r0.iter().zip(r1).enumerate() {
        if !(o.abs() < *d) {
            return Err(Error::DominanceViolated { k: k + 1, diag: *d, off: *o });
        }
        matrices.push(tridiagonal(n, *d, *o));
    }
    let seq = LambdaSequence { matrices, provenance: Provenance::TheoreticalTridiagonal };
    seq.validate_pd()?;
    Ok(seq)
}

fn tridiagonal(n: usize, diag: f64, off: f64) -> Mat {
    Mat::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => diag,
        1 => off,
        _ => 0.0,
    })
}

/// Largest ratio `|off|/diag` admitted for an `n x n` empirical tridiagonal matrix:
/// 99% of the positive-definiteness limit `1/(2 cos(pi/(n+1)))`.
pub fn empirical_clip_ratio(n: usize) -> f64 {
    0.99 / (2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalEstimate {
    pub sequence: LambdaSequence,
    /// `lambda_k(R_0)` estimates, one per `k`.
    pub r0: Vec<f64>,
    /// `lambda_k(R_1)` estimates after clipping.
    pub r1: Vec<f64>,
    /// 1-based `k` whose lag-one estimate was clipped.
    pub clipped: Vec<usize>,
}

/// Tridiagonal empirical `Lambda_k` from an `n x TR` matrix of residual coefficients:
/// diagonal `(1/n) sum_i c_ki^2`, off-diagonal `(1/(n-1)) sum_i c_ki c_k,i+1`.
pub fn estimate_empirical(residual_coefficients: &Mat) -> Result<EmpiricalEstimate> {
    let (n, tr) = residual_coefficients.shape();
    if n < 3 {
        return Err(Error::Config(format!("empirical covariance needs n >= 3, got {n}")));
    }
    if tr == 0 {
        return Err(Error::Config("no frequencies to estimate".into()));
    }
    let limit = empirical_clip_ratio(n);
    let mut r0 = Vec::with_capacity(tr);
    let mut r1 = Vec::with_capacity(tr);
    let mut clipped = Vec::new();
    let mut matrices = Vec::with_capacity(tr);
    for k in 0..tr {
        let c = residual_coefficients.column(k);
        let d = c.iter().map(|v| v * v).sum::<f64>() / n as f64;
        if !(d > 0.0) {
            return Err(Error::Degenerate(format!("residual coefficients at k = {} are all zero", k + 1)));
        }
        let mut o = (0..n - 1).map(|i| c[i] * c[i + 1]).sum::<f64>() / (n - 1) as f64;
        if o.abs() > limit * d {
            clipped.push(k + 1);
            o = o.signum() * limit * d;
        }
        r0.push(d);
        r1.push(o);
        matrices.push(tridiagonal(n, d, o));
    }
    if !clipped.is_empty() {
        warn!("empirical lag-one covariance clipped at k = {clipped:?}");
    }
    let sequence = LambdaSequence { matrices, provenance: Provenance::Empirical };
    sequence.validate_pd()?;
    Ok(EmpiricalEstimate { sequence, r0, r1, clipped })
}
