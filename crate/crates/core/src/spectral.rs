//! Eigenpairs of the Dirichlet negative Laplacian on a rectangle, a disk and a
//! circular sector, evaluated on a midpoint quadrature grid.
//!
//! Conventions:
//!
//! * rectangle `[a1,b1] x [a2,b2]`: `phi = 2/sqrt(l1 l2) sin(pi k1 (x-a1)/l1) sin(pi k2 (y-a2)/l2)`,
//!   `lambda = pi^2 (k1^2/l1^2 + k2^2/l2^2)`;
//! * disk of radius `R`: `phi = N J_k(alpha r/R) cos(k phi)` (or `sin`), `lambda = alpha^2/R^2`;
//! * sector of radius `R` and angle `pi theta`: `phi = N J_{k/theta}(alpha r/R) sin(k phi/theta)`.
//!
//! Normalizing constants are analytic, so the Gram matrix on the grid measures
//! quadrature error only.

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::special::{bessel_j_zeros, bessel_j_zeros_below, jv};

/// Default upper bound on the number of eigenpairs a basis may hold.
pub const DEFAULT_MAX_PAIRS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Rectangle { a1: f64, b1: f64, a2: f64, b2: f64 },
    Disk { radius: f64 },
    /// Sector `{0 < r < R, 0 < phi < pi theta}`.
    Sector { radius: f64, theta: f64 },
}

impl Domain {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Domain::Rectangle { a1, b1, a2, b2 } => b1 > a1 && b2 > a2 && [a1, b1, a2, b2].iter().all(|v| v.is_finite()),
            Domain::Disk { radius } => radius > 0.0 && radius.is_finite(),
            Domain::Sector { radius, theta } => radius > 0.0 && radius.is_finite() && theta > 0.0 && theta < 2.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid domain {self:?}")))
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Domain::Rectangle { a1, b1, a2, b2 } => (b1 - a1) * (b2 - a2),
            Domain::Disk { radius } => PI * radius * radius,
            Domain::Sector { radius, theta } => 0.5 * PI * theta * radius * radius,
        }
    }

    pub fn is_circular(&self) -> bool {
        !matches!(self, Domain::Rectangle { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Cos,
    Sin,
}

/// Multi-index of an eigenpair. The derived order is the lexicographic tie-break.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MultiIndex {
    Rect { k1: usize, k2: usize },
    Disk { k: usize, h: usize, parity: Parity },
    Sector { k: usize, h: usize },
}

impl MultiIndex {
    /// Three integer components for export; unused slots are zero, parity is 0 = cos, 1 = sin.
    pub fn components(&self) -> [usize; 3] {
        match *self {
            MultiIndex::Rect { k1, k2 } => [k1, k2, 0],
            MultiIndex::Disk { k, h, parity } => [k, h, (parity == Parity::Sin) as usize],
            MultiIndex::Sector { k, h } => [k, h, 0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPair {
    pub index: MultiIndex,
    /// Eigenvalue of the negative Laplacian.
    pub eigenvalue: f64,
    /// Normalizing constant of the eigenfunction.
    pub normalization: f64,
    /// Bessel zero `alpha` (circular domains) or 0.
    pub zero: f64,
}

/// How the retained eigenpairs are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Truncation {
    /// Rectangle only: all `(k1, k2)` with `k1 <= tr1`, `k2 <= tr2`, sorted by eigenvalue.
    Tensor { tr1: usize, tr2: usize },
    /// Circular only: the lowest angular index (disk `k = 0`, sector `k = 1`) and `count` radial roots.
    Radial { count: usize },
    /// The `count` smallest eigenvalues over all multi-indices.
    Global { count: usize },
}

impl Truncation {
    pub fn count(&self) -> usize {
        match *self {
            Truncation::Tensor { tr1, tr2 } => tr1 * tr2,
            Truncation::Radial { count } | Truncation::Global { count } => count,
        }
    }
}

/// Step sizes: `(h_x, h_y)` on the rectangle, `(h_R, h_phi)` on circular domains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSteps {
    pub h1: f64,
    pub h2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    /// Cartesian node coordinates.
    pub points: Vec<[f64; 2]>,
    /// Polar node coordinates `(r, phi)` for circular domains.
    pub polar: Option<Vec<[f64; 2]>>,
    pub weights: Vec<f64>,
    /// Steps actually used (adjusted so an integer number of cells fits).
    pub steps: GridSteps,
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

fn cells(length: f64, step: f64) -> Result<usize> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::Config(format!("grid step must be positive, got {step}")));
    }
    let m = (length / step).round().max(1.0);
    if m > 1e5 {
        return Err(Error::Config(format!("grid step {step} too fine for extent {length}")));
    }
    Ok(m as usize)
}

/// Midpoint grid strictly inside the domain.
pub fn build_grid(domain: &Domain, steps: GridSteps) -> Result<QuadratureGrid> {
    domain.validate()?;
    match *domain {
        Domain::Rectangle { a1, b1, a2, b2 } => {
            let (m1, m2) = (cells(b1 - a1, steps.h1)?, cells(b2 - a2, steps.h2)?);
            let (hx, hy) = ((b1 - a1) / m1 as f64, (b2 - a2) / m2 as f64);
            let mut points = Vec::with_capacity(m1 * m2);
            for i in 0..m1 {
                for j in 0..m2 {
                    points.push([a1 + (i as f64 + 0.5) * hx, a2 + (j as f64 + 0.5) * hy]);
                }
            }
            let weights = vec![hx * hy; points.len()];
            Ok(QuadratureGrid { points, polar: None, weights, steps: GridSteps { h1: hx, h2: hy } })
        }
        Domain::Disk { radius } | Domain::Sector { radius, .. } => {
            let span = match *domain {
                Domain::Sector { theta, .. } => PI * theta,
                _ => 2.0 * PI,
            };
            let (mr, mp) = (cells(radius, steps.h1)?, cells(span, steps.h2)?);
            let (hr, hp) = (radius / mr as f64, span / mp as f64);
            let mut points = Vec::with_capacity(mr * mp);
            let mut polar = Vec::with_capacity(mr * mp);
            let mut weights = Vec::with_capacity(mr * mp);
            for i in 0..mr {
                let r = (i as f64 + 0.5) * hr;
                for j in 0..mp {
                    let phi = (j as f64 + 0.5) * hp;
                    polar.push([r, phi]);
                    points.push([r * phi.cos(), r * phi.sin()]);
                    weights.push(r * hr * hp);
                }
            }
            Ok(QuadratureGrid { points, polar: Some(polar), weights, steps: GridSteps { h1: hr, h2: hp } })
        }
    }
}

fn by_eigenvalue(a: &EigenPair, b: &EigenPair) -> Ordering {
    a.eigenvalue.total_cmp(&b.eigenvalue).then(a.index.cmp(&b.index))
}

fn rect_pair(domain: &Domain, k1: usize, k2: usize) -> EigenPair {
    let (l1, l2) = rect_sides(domain);
    let (f1, f2) = (k1 as f64 / l1, k2 as f64 / l2);
    EigenPair {
        index: MultiIndex::Rect { k1, k2 },
        eigenvalue: PI * PI * (f1 * f1 + f2 * f2),
        normalization: 2.0 / (l1 * l2).sqrt(),
        zero: 0.0,
    }
}

fn rect_sides(domain: &Domain) -> (f64, f64) {
    match *domain {
        Domain::Rectangle { a1, b1, a2, b2 } => (b1 - a1, b2 - a2),
        _ => unreachable!("rectangle expected"),
    }
}

fn disk_pair(radius: f64, k: usize, h: usize, parity: Parity, alpha: f64) -> EigenPair {
    let jn1 = jv(k as f64 + 1.0, alpha).abs();
    let normalization = if k == 0 {
        1.0 / (PI.sqrt() * radius * jn1)
    } else {
        (2.0 / PI).sqrt() / (radius * jn1)
    };
    EigenPair {
        index: MultiIndex::Disk { k, h, parity },
        eigenvalue: (alpha / radius).powi(2),
        normalization,
        zero: alpha,
    }
}

fn sector_pair(radius: f64, theta: f64, k: usize, h: usize, alpha: f64) -> EigenPair {
    let nu = k as f64 / theta;
    EigenPair {
        index: MultiIndex::Sector { k, h },
        eigenvalue: (alpha / radius).powi(2),
        normalization: 2.0 / (radius * jv(nu + 1.0, alpha).abs() * (PI * theta).sqrt()),
        zero: alpha,
    }
}

/// Ordered eigenpairs (non-decreasing eigenvalue) without grid evaluation.
pub fn eigenpairs(domain: &Domain, truncation: Truncation, max_pairs: usize) -> Result<Vec<EigenPair>> {
    domain.validate()?;
    let count = truncation.count();
    if count == 0 {
        return Err(Error::Config("truncation must retain at least one eigenpair".into()));
    }
    if count > max_pairs {
        return Err(Error::Config(format!(
            "truncation of {count} eigenpairs exceeds the cap of {max_pairs}"
        )));
    }
    let mut pairs = match (*domain, truncation) {
        (Domain::Rectangle { .. }, Truncation::Tensor { tr1, tr2 }) => {
            let mut v = Vec::with_capacity(count);
            for k1 in 1..=tr1 {
                for k2 in 1..=tr2 {
                    v.push(rect_pair(domain, k1, k2));
                }
            }
            v
        }
        (Domain::Rectangle { .. }, Truncation::Global { count }) => rect_global(domain, count),
        (Domain::Disk { radius }, Truncation::Radial { count }) => bessel_j_zeros(0.0, count)?
            .into_iter()
            .enumerate()
            .map(|(i, a)| disk_pair(radius, 0, i + 1, Parity::Cos, a))
            .collect(),
        (Domain::Sector { radius, theta }, Truncation::Radial { count }) => bessel_j_zeros(1.0 / theta, count)?
            .into_iter()
            .enumerate()
            .map(|(i, a)| sector_pair(radius, theta, 1, i + 1, a))
            .collect(),
        (Domain::Disk { .. } | Domain::Sector { .. }, Truncation::Global { count }) => circular_global(domain, count)?,
        _ => {
            return Err(Error::Config(format!(
                "truncation {truncation:?} does not apply to domain {domain:?}"
            )))
        }
    };
    pairs.sort_by(by_eigenvalue);
    pairs.truncate(count);
    Ok(pairs)
}

fn rect_global(domain: &Domain, count: usize) -> Vec<EigenPair> {
    let (l1, l2) = rect_sides(domain);
    // grow the candidate box until no index outside it can beat the count-th eigenvalue
    let mut m = ((count as f64).sqrt().ceil() as usize).max(1);
    loop {
        let (m1, m2) = ((m as f64 * l1 / l1.min(l2)).ceil() as usize, (m as f64 * l2 / l1.min(l2)).ceil() as usize);
        let mut v: Vec<EigenPair> = (1..=m1)
            .flat_map(|k1| (1..=m2).map(move |k2| (k1, k2)))
            .map(|(k1, k2)| rect_pair(domain, k1, k2))
            .collect();
        v.sort_by(by_eigenvalue);
        if v.len() >= count {
            let cutoff = v[count - 1].eigenvalue;
            let outside = PI * PI * ((((m1 + 1) as f64) / l1).powi(2).min((((m2 + 1) as f64) / l2).powi(2)));
            if outside > cutoff {
                v.truncate(count);
                return v;
            }
        }
        m *= 2;
    }
}

fn circular_global(domain: &Domain, count: usize) -> Result<Vec<EigenPair>> {
    let (radius, theta) = match *domain {
        Domain::Disk { radius } => (radius, None),
        Domain::Sector { radius, theta } => (radius, Some(theta)),
        _ => unreachable!(),
    };
    // bound on the unit-radius zero; every index with alpha < bound is collected
    let mut bound = 2.0 * (count as f64).sqrt() + 5.0;
    loop {
        let mut v = Vec::new();
        let mut k = match theta {
            Some(_) => 1,
            None => 0,
        };
        loop {
            let order = match theta {
                Some(t) => k as f64 / t,
                None => k as f64,
            };
            // j_{order,1} > order, so no further order contributes
            if order >= bound || order > crate::special::MAX_ORDER {
                break;
            }
            for (i, a) in bessel_j_zeros_below(order, bound)?.into_iter().enumerate() {
                match theta {
                    Some(t) => v.push(sector_pair(radius, t, k, i + 1, a)),
                    None => {
                        v.push(disk_pair(radius, k, i + 1, Parity::Cos, a));
                        if k > 0 {
                            v.push(disk_pair(radius, k, i + 1, Parity::Sin, a));
                        }
                    }
                }
            }
            k += 1;
        }
        if v.len() >= count {
            v.sort_by(by_eigenvalue);
            v.truncate(count);
            return Ok(v);
        }
        if bound > crate::special::MAX_ORDER {
            return Err(Error::Config(format!(
                "global truncation of {count} eigenpairs exceeds the supported Bessel order range"
            )));
        }
        bound *= 1.5;
    }
}

/// Value of an eigenfunction at a Cartesian point (rectangle) or polar point `(r, phi)`.
pub fn eigenfunction(domain: &Domain, pair: &EigenPair, point: [f64; 2]) -> f64 {
    match (*domain, pair.index) {
        (Domain::Rectangle { a1, b1, a2, b2 }, MultiIndex::Rect { k1, k2 }) => {
            pair.normalization
                * (PI * k1 as f64 * (point[0] - a1) / (b1 - a1)).sin()
                * (PI * k2 as f64 * (point[1] - a2) / (b2 - a2)).sin()
        }
        (Domain::Disk { radius }, MultiIndex::Disk { k, parity, .. }) => {
            let radial = jv(k as f64, pair.zero * point[0] / radius);
            let angle = k as f64 * point[1];
            let angular = match parity {
                Parity::Cos => angle.cos(),
                Parity::Sin => angle.sin(),
            };
            pair.normalization * radial * angular
        }
        (Domain::Sector { radius, theta }, MultiIndex::Sector { k, .. }) => {
            let nu = k as f64 / theta;
            pair.normalization * jv(nu, pair.zero * point[0] / radius) * (nu * point[1]).sin()
        }
        _ => unreachable!("eigenpair does not belong to the domain"),
    }
}

/// Orthonormal eigenpairs of the Dirichlet Laplacian evaluated on a quadrature grid.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    pub domain: Domain,
    pub grid: QuadratureGrid,
    pub pairs: Vec<EigenPair>,
    /// `values[(k, j)]` = `phi_k` at node `j` (TR x L).
    pub values: Mat,
    /// `values` with every column scaled by its quadrature weight.
    weighted: Mat,
}

/// Build a basis with the default eigenpair cap.
pub fn build_basis(domain: Domain, steps: GridSteps, truncation: Truncation) -> Result<SpectralBasis> {
    build_basis_capped(domain, steps, truncation, DEFAULT_MAX_PAIRS)
}

pub fn build_basis_capped(
    domain: Domain,
    steps: GridSteps,
    truncation: Truncation,
    max_pairs: usize,
) -> Result<SpectralBasis> {
    let pairs = eigenpairs(&domain, truncation, max_pairs)?;
    let grid = build_grid(&domain, steps)?;
    let nodes = grid.polar.as_ref().unwrap_or(&grid.points);
    let mut values = Mat::zeros(pairs.len(), grid.len());
    match domain {
        Domain::Rectangle { .. } => {
            for (row, pair) in pairs.iter().enumerate() {
                for (j, p) in nodes.iter().enumerate() {
                    values[(row, j)] = eigenfunction(&domain, pair, *p);
                }
            }
        }
        _ => {
            for (row, pair) in pairs.iter().enumerate() {
                radial_fill(&domain, pair, nodes, &mut values, row);
            }
        }
    }
    let mut weighted = values.clone();
    for (j, w) in grid.weights.iter().enumerate() {
        weighted.column_mut(j).scale_mut(*w);
    }
    Ok(SpectralBasis { domain, grid, pairs, values, weighted })
}

/// Polar grids repeat each radius across all angles, so evaluate the Bessel factor once per radius.
fn radial_fill(domain: &Domain, pair: &EigenPair, nodes: &[[f64; 2]], values: &mut Mat, row: usize) {
    let mut last_r = f64::NAN;
    let mut radial = 0.0;
    let (radius, order, angular): (f64, f64, Box<dyn Fn(f64) -> f64>) = match (*domain, pair.index) {
        (Domain::Disk { radius }, MultiIndex::Disk { k, parity, .. }) => {
            let kf = k as f64;
            let f: Box<dyn Fn(f64) -> f64> = match parity {
                Parity::Cos => Box::new(move |phi: f64| (kf * phi).cos()),
                Parity::Sin => Box::new(move |phi: f64| (kf * phi).sin()),
            };
            (radius, kf, f)
        }
        (Domain::Sector { radius, theta }, MultiIndex::Sector { k, .. }) => {
            let nu = k as f64 / theta;
            (radius, nu, Box::new(move |phi: f64| (nu * phi).sin()))
        }
        _ => unreachable!(),
    };
    for (j, p) in nodes.iter().enumerate() {
        if p[0] != last_r {
            last_r = p[0];
            radial = pair.normalization * jv(order, pair.zero * p[0] / radius);
        }
        values[(row, j)] = radial * angular(p[1]);
    }
}

impl SpectralBasis {
    /// Truncation order TR.
    pub fn tr(&self) -> usize {
        self.pairs.len()
    }

    /// Number of grid nodes L.
    pub fn nodes(&self) -> usize {
        self.grid.len()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.eigenvalue).collect()
    }

    /// Quadrature inner products `<f, phi_k>`.
    pub fn project(&self, field: &[f64]) -> Result<Vec<f64>> {
        if field.len() != self.nodes() {
            return Err(Error::dim("project: field length", self.nodes(), field.len()));
        }
        Ok((0..self.tr())
            .map(|k| self.weighted.row(k).iter().zip(field).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `sum_k c_k phi_k` on the grid.
    pub fn reconstruct(&self, coefficients: &[f64]) -> Result<Vec<f64>> {
        if coefficients.len() != self.tr() {
            return Err(Error::dim("reconstruct: coefficient length", self.tr(), coefficients.len()));
        }
        let mut out = vec![0.0; self.nodes()];
        for (k, c) in coefficients.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(self.values.row(k).iter()) {
                *o += c * v;
            }
        }
        Ok(out)
    }

    /// Row-wise projection of an `n x L` matrix of fields to `n x TR` coefficients.
    pub fn project_rows(&self, fields: &Mat) -> Result<Mat> {
        if fields.ncols() != self.nodes() {
            return Err(Error::dim("project_rows: columns", self.nodes(), fields.ncols()));
        }
        Ok(fields * self.weighted.transpose())
    }

    /// Row-wise reconstruction of `n x TR` coefficients to `n x L` fields.
    pub fn reconstruct_rows(&self, coefficients: &Mat) -> Result<Mat> {
        if coefficients.ncols() != self.tr() {
            return Err(Error::dim("reconstruct_rows: columns", self.tr(), coefficients.ncols()));
        }
        Ok(coefficients * &self.values)
    }

    /// Quadrature squared H-norm of a grid field.
    pub fn norm_sq(&self, field: &[f64]) -> f64 {
        field.iter().zip(&self.grid.weights).map(|(f, w)| w * f * f).sum()
    }

    /// `G = V diag(w) Vᵀ`.
    pub fn gram(&self) -> Mat {
        &self.weighted * self.values.transpose()
    }

    /// `max |G - I|`.
    pub fn gram_deviation(&self) -> f64 {
        let g = self.gram();
        let mut worst = 0.0_f64;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }
}

/// Least-squares slope of `values[i]` against `index[i]`.
pub fn ls_slope(index: &[f64], values: &[f64]) -> f64 {
    let n = index.len() as f64;
    let mx = index.iter().sum::<f64>() / n;
    let my = values.iter().sum::<f64>() / n;
    let sxy: f64 = index.iter().zip(values).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = index.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Domain {
        Domain::Rectangle { a1: -2.0, b1: 3.0, a2: -2.0, b2: 3.0 }
    }

    #[test]
    fn rectangle_first_eigenvalue() {
        let p = eigenpairs(&square(), Truncation::Tensor { tr1: 2, tr2: 2 }, 100).unwrap();
        assert!((p[0].eigenvalue - 2.0 * PI * PI / 25.0).abs() < 1e-14);
        assert!((p[0].eigenvalue - 0.78957).abs() < 1e-5);
        // (1,2) and (2,1) tie; lexicographic order puts (1,2) first
        assert_eq!(p[1].index, MultiIndex::Rect { k1: 1, k2: 2 });
        assert_eq!(p[2].index, MultiIndex::Rect { k1: 2, k2: 1 });
    }

    #[test]
    fn disk_first_eigenvalue() {
        let p = eigenpairs(&Domain::Disk { radius: 25.0 }, Truncation::Radial { count: 3 }, 100).unwrap();
        assert!((p[0].eigenvalue - (2.404825557695773f64 / 25.0).powi(2)).abs() < 1e-14);
        assert!((p[0].eigenvalue - 9.2531e-3).abs() < 1e-7);
    }

    #[test]
    fn sector_angular_factor() {
        let d = Domain::Sector { radius: 1.0, theta: 2.0 / 3.0 };
        let p = eigenpairs(&d, Truncation::Radial { count: 1 }, 10).unwrap()[0];
        assert!((p.zero - 4.493409457909064).abs() < 1e-10);
        // at r where the radial part is known, the angular part is sin(3 phi / 2)
        let r = 0.5;
        let radial = p.normalization * jv(1.5, p.zero * r);
        for &phi in &[0.3, 1.0, 2.0] {
            let v = eigenfunction(&d, &p, [r, phi]);
            assert!((v - radial * (1.5 * phi).sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn rectangle_grid_is_exactly_orthonormal() {
        let b = build_basis(square(), GridSteps { h1: 0.25, h2: 0.25 }, Truncation::Tensor { tr1: 5, tr2: 5 }).unwrap();
        assert_eq!(b.nodes(), 400);
        assert!(b.gram_deviation() < 1e-12);
        assert!((b.grid.total_weight() - 25.0).abs() < 1e-12);
        let c: Vec<f64> = (0..b.tr()).map(|i| (i as f64).sin()).collect();
        let back = b.project(&b.reconstruct(&c).unwrap()).unwrap();
        for (x, y) in c.iter().zip(&back) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn global_modes_are_sorted_and_consistent() {
        let r = eigenpairs(&square(), Truncation::Global { count: 30 }, 100).unwrap();
        assert!(r.windows(2).all(|w| w[0].eigenvalue <= w[1].eigenvalue));
        let d = eigenpairs(&Domain::Disk { radius: 1.0 }, Truncation::Global { count: 6 }, 100).unwrap();
        // j01 < j11 (x2) < j21 (x2) < j02
        assert_eq!(d[0].index, MultiIndex::Disk { k: 0, h: 1, parity: Parity::Cos });
        assert_eq!(d[1].index, MultiIndex::Disk { k: 1, h: 1, parity: Parity::Cos });
        assert_eq!(d[2].index, MultiIndex::Disk { k: 1, h: 1, parity: Parity::Sin });
        assert!((d[5].zero - 5.520078110286311).abs() < 1e-10);
        let s = eigenpairs(&Domain::Sector { radius: 1.0, theta: 0.5 }, Truncation::Global { count: 4 }, 100).unwrap();
        assert_eq!(s[0].index, MultiIndex::Sector { k: 1, h: 1 });
        assert!(s.windows(2).all(|w| w[0].eigenvalue <= w[1].eigenvalue));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(eigenpairs(&square(), Truncation::Radial { count: 3 }, 100).is_err());
        assert!(eigenpairs(&Domain::Disk { radius: 1.0 }, Truncation::Tensor { tr1: 2, tr2: 2 }, 100).is_err());
        assert!(eigenpairs(&square(), Truncation::Tensor { tr1: 200, tr2: 200 }, DEFAULT_MAX_PAIRS).is_err());
        assert!(Domain::Sector { radius: 1.0, theta: 2.0 }.validate().is_err());
        assert!(Domain::Disk { radius: -1.0 }.validate().is_err());
        let b = build_basis(square(), GridSteps { h1: 0.5, h2: 0.5 }, Truncation::Tensor { tr1: 2, tr2: 2 }).unwrap();
        assert!(b.project(&[1.0]).is_err());
        assert!(b.reconstruct(&[1.0]).is_err());
    }

    #[test]
    fn polar_weights_cover_the_area() {
        let d = Domain::Disk { radius: 25.0 };
        let g = build_grid(&d, GridSteps { h1: 25.0 / 145.0, h2: 2.0 * PI / 135.0 }).unwrap();
        assert!((g.total_weight() / d.area() - 1.0).abs() < 0.02);
        let s = Domain::Sector { radius: 25.0, theta: 2.0 / 3.0 };
        let g = build_grid(&s, GridSteps { h1: 25.0 / 145.0, h2: 2.0 * PI / 115.0 }).unwrap();
        assert!((g.total_weight() / s.area() - 1.0).abs() < 0.02);
        assert!(g.weights.iter().all(|w| *w > 0.0));
    }
}
