//! Gaussian functional errors, fixed-effect shapes, responses and random directions.

use serde::{Deserialize, Serialize};

use crate::covariance::LambdaSequence;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::rng::{normals, stream, Purpose};
use crate::spectral::{Domain, SpectralBasis};

/// `n` functional observations on the grid, optionally with their coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSample {
    /// `n x L` grid values.
    pub values: Mat,
    /// `n x TR` basis coefficients, when known exactly.
    pub coefficients: Option<Mat>,
}

impl FunctionalSample {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }
}

/// Shape family of the fixed effect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BetaShape {
    RectC1,
    RectC2,
    DiskC1,
    DiskC2,
    DiskC3,
    SectC1,
    SectC2,
    SectC3,
}

impl BetaShape {
    /// Shape family for a domain and a case number 1..=3.
    pub fn for_domain(domain: &Domain, case: u8) -> Result<Self> {
        use BetaShape::*;
        let shape = match (domain, case) {
            (Domain::Rectangle { .. }, 1) => RectC1,
            (Domain::Rectangle { .. }, 2) => RectC2,
            (Domain::Disk { .. }, 1) => DiskC1,
            (Domain::Disk { .. }, 2) => DiskC2,
            (Domain::Disk { .. }, 3) => DiskC3,
            (Domain::Sector { .. }, 1) => SectC1,
            (Domain::Sector { .. }, 2) => SectC2,
            (Domain::Sector { .. }, 3) => SectC3,
            _ => return Err(Error::Config(format!("no shape C{case} for {domain:?}"))),
        };
        Ok(shape)
    }

    fn compatible(&self, domain: &Domain) -> bool {
        use BetaShape::*;
        matches!(
            (self, domain),
            (RectC1 | RectC2, Domain::Rectangle { .. })
                | (DiskC1 | DiskC2 | DiskC3, Domain::Disk { .. })
                | (SectC1 | SectC2 | SectC3, Domain::Sector { .. })
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSpec {
    pub shape: BetaShape,
    /// Number of components `p >= 2`.
    pub p: usize,
    /// Copy component 1 into every component, so the equality hypothesis holds.
    #[serde(default)]
    pub null: bool,
}

/// True fixed effect: coefficients and reconstructed fields.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaTruth {
    /// `TR x p`; column `s` holds `<beta_s, phi_k>`.
    pub coefficients: Mat,
    /// `p x L` fields reconstructed from the coefficients.
    pub fields: Mat,
    /// `p x L` pointwise values for shapes given by a formula on the domain.
    pub pointwise: Option<Mat>,
}

/// `P(s, k) = 1 + (k/TR)^2 + ((TR - k + 1)/TR)^4`.
pub fn disk_p(k: usize, tr: usize) -> f64 {
    let (k, tr) = (k as f64, tr as f64);
    1.0 + (k / tr).powi(2) + ((tr - k + 1.0) / tr).powi(4)
}

/// Coefficient `beta_{ks}` of the circular-domain shapes (1-based `k`, `s`).
pub fn circular_coefficient(shape: BetaShape, k: usize, s: usize, tr: usize, p: usize, radius: f64, n: usize) -> f64 {
    let (kf, sf, trf) = (k as f64, s as f64, tr as f64);
    match shape {
        BetaShape::DiskC1 => {
            let pk = disk_p(k, tr);
            let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
            sign / kf.powf(3.5) * (kf / trf).powf(7.5 + 2.0 * sf - 1.0).exp() * pk.powf(2.5 + 2.0 * sf - 1.0)
                + (kf / trf).powf(6.5 + 2.0 * sf - 1.0).exp() * pk.powf(3.5 + 2.0 * sf - 1.0)
        }
        BetaShape::DiskC2 | BetaShape::SectC2 => {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            ((sf + kf / radius) / n as f64).exp() / radius + kf * (sign * 2.0 * std::f64::consts::PI * radius / kf).cos()
        }
        BetaShape::DiskC3 => disk_p(k, tr).powf(1.5 + 2.0 * sf - 1.0) / kf.powf(2.5 + 2.0 * sf - 1.0),
        BetaShape::SectC1 => 1.0 + (kf - 1.0) * sf,
        BetaShape::SectC3 => {
            use std::f64::consts::PI;
            (PI * (trf - kf) / kf).cos() * (PI * (p as f64 - sf) / sf).cos()
        }
        BetaShape::RectC1 | BetaShape::RectC2 => unreachable!("rectangle shapes are pointwise"),
    }
}

/// Pointwise value of a rectangle shape at `(x, y)` for component `s` (1-based).
pub fn rect_value(shape: BetaShape, domain: &Domain, s: usize, x: f64, y: f64) -> f64 {
    let Domain::Rectangle { a1, b1, a2, b2 } = *domain else {
        unreachable!("rectangle expected")
    };
    use std::f64::consts::PI;
    let (l1, l2, sf) = (b1 - a1, b2 - a2, s as f64);
    let xb = 0.5 * PI * (2.0 * sf + 1.0) * (b1 - x);
    let yb = 0.5 * PI * (2.0 * sf + 1.0) * (b2 - y);
    match shape {
        BetaShape::RectC1 => (PI * sf * xb / l1).sin() * (PI * sf * yb / l2).sin(),
        BetaShape::RectC2 => ((xb + (x - a1)) / l1).cos() * ((yb + (y - a2)) / l2).cos(),
        _ => unreachable!("circular shapes are spectral"),
    }
}

/// Fixed effect for a basis. `n` enters the C2 formulas on circular domains.
pub fn sample_beta(basis: &SpectralBasis, spec: &BetaSpec, n: usize) -> Result<BetaTruth> {
    if spec.p < 2 {
        return Err(Error::Config(format!("beta needs p >= 2 components, got {}", spec.p)));
    }
    if !spec.shape.compatible(&basis.domain) {
        return Err(Error::Config(format!("shape {:?} does not apply to {:?}", spec.shape, basis.domain)));
    }
    let (tr, p, l) = (basis.tr(), spec.p, basis.nodes());
    let source = |s: usize| if spec.null { 1 } else { s };
    match basis.domain {
        Domain::Rectangle { .. } => {
            let mut pointwise = Mat::zeros(p, l);
            for s in 1..=p {
                for (j, pt) in basis.grid.points.iter().enumerate() {
                    pointwise[(s - 1, j)] = rect_value(spec.shape, &basis.domain, source(s), pt[0], pt[1]);
                }
            }
            let coefficients = basis.project_rows(&pointwise)?.transpose();
            let fields = basis.reconstruct_rows(&coefficients.transpose())?;
            Ok(BetaTruth { coefficients, fields, pointwise: Some(pointwise) })
        }
        Domain::Disk { radius } | Domain::Sector { radius, .. } => {
            let coefficients =
                Mat::from_fn(tr, p, |k, s| circular_coefficient(spec.shape, k + 1, source(s + 1), tr, p, radius, n));
            let fields = basis.reconstruct_rows(&coefficients.transpose())?;
            Ok(BetaTruth { coefficients, fields, pointwise: None })
        }
    }
}

/// Semi-orthogonal `n x p` design: thin QR of a seeded standard-normal matrix.
pub fn make_design(n: usize, p: usize, seed: u64) -> Result<Mat> {
    make_design_stream(n, p, seed, 0)
}

/// As [`make_design`] on substream `replicate`.
pub fn make_design_stream(n: usize, p: usize, seed: u64, replicate: u64) -> Result<Mat> {
    if p < 1 || n < p {
        return Err(Error::Config(format!("design needs n >= p >= 1, got n = {n}, p = {p}")));
    }
    let mut rng = stream(seed, Purpose::Design, replicate, 0);
    let g = Mat::from_column_slice(n, p, &normals(&mut rng, n * p));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    // make diag(R) positive so the factorization is unique
    for j in 0..p {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(q)
}

/// Draws `eps_k ~ N(0, Lambda_k)` through precomputed symmetric factors.
#[derive(Debug, Clone)]
pub struct ErrorSampler {
    factors: Vec<Mat>,
}

impl ErrorSampler {
    pub fn new(lambda: &LambdaSequence) -> Self {
        ErrorSampler { factors: lambda.matrices.iter().map(linalg::sym_factor).collect() }
    }

    pub fn tr(&self) -> usize {
        self.factors.len()
    }

    /// `n x TR` coefficients for replicate `replicate`; column `k` uses its own substream.
    pub fn coefficients(&self, seed: u64, replicate: u64) -> Mat {
        let n = self.factors[0].nrows();
        let mut out = Mat::zeros(n, self.factors.len());
        for (k, f) in self.factors.iter().enumerate() {
            let z = crate::linalg::Vector::from_vec(normals(&mut stream(seed, Purpose::Error, replicate, k as u64), n));
            out.set_column(k, &(f * z));
        }
        out
    }
}

/// Error sample on the grid with exact coefficients.
pub fn sample_error(lambda: &LambdaSequence, basis: &SpectralBasis, seed: u64, replicate: u64) -> Result<FunctionalSample> {
    if lambda.tr() != basis.tr() {
        return Err(Error::dim("sample_error: Lambda sequence length", basis.tr(), lambda.tr()));
    }
    let coefficients = ErrorSampler::new(lambda).coefficients(seed, replicate);
    let values = basis.reconstruct_rows(&coefficients)?;
    Ok(FunctionalSample { values, coefficients: Some(coefficients) })
}

/// Random direction `h` solving `(-Delta) xi = white noise` spectrally.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    /// `<h, phi_k> = z_k / lambda_k`.
    pub coefficients: Vec<f64>,
    pub field: Vec<f64>,
}

/// Direction coefficients only.
pub fn direction_coefficients(eigenvalues: &[f64], seed: u64, id: u64) -> Vec<f64> {
    let z = normals(&mut stream(seed, Purpose::Direction, id, 0), eigenvalues.len());
    z.iter().zip(eigenvalues).map(|(z, l)| z / l).collect()
}

pub fn sample_direction(basis: &SpectralBasis, seed: u64, id: u64) -> Result<Direction> {
    let coefficients = direction_coefficients(&basis.eigenvalues(), seed, id);
    let field = basis.reconstruct(&coefficients)?;
    Ok(Direction { coefficients, field })
}

/// `Y_i = sum_s X[i][s] beta_s + eps_i`, row-wise. Works equally on grid values
/// (`beta`: `p x L`, `error`: `n x L`) and on coefficients (`p x TR`, `n x TR`).
pub fn make_response(x: &Mat, beta: &Mat, error: &Mat) -> Result<Mat> {
    if x.ncols() != beta.nrows() {
        return Err(Error::dim("make_response: beta rows", x.ncols(), beta.nrows()));
    }
    if error.nrows() != x.nrows() {
        return Err(Error::dim("make_response: error rows", x.nrows(), error.nrows()));
    }
    if error.ncols() != beta.ncols() {
        return Err(Error::dim("make_response: error columns", beta.ncols(), error.ncols()));
    }
    Ok(x * beta + error)
}
