//! Block-design fMRI: Glover's difference-of-gammas HRF, stimulus convolution, and a
//! slice-level functional fit with an empirically estimated covariance.

use std::io::Read;

use log::warn;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::covariance::{estimate_empirical, EmpiricalEstimate};
use crate::cramer_wold::{lambda_h, project_response, ContrastSpec, DirectionTest, QForm, TestReport};
use crate::error::{Error, Result};
use crate::fanova::{build_w, decompose, FanovaResult};
use crate::gls::{fit_coefficients, GlsFit, GlsSolver};
use crate::linalg::{self, Mat};
use crate::simulation::{direction_coefficients, FunctionalSample};
use crate::spectral::SpectralBasis;

/// Peak times and full widths at half maximum (seconds) of the two gamma bumps, and the
/// relative size of the undershoot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HrfSpec {
    pub peak1: f64,
    pub fwhm1: f64,
    pub peak2: f64,
    pub fwhm2: f64,
    pub dip: f64,
}

impl Default for HrfSpec {
    fn default() -> Self {
        HrfSpec { peak1: 5.4, fwhm1: 5.2, peak2: 10.8, fwhm2: 7.35, dip: 0.35 }
    }
}

/// Gamma density with `shape` and `scale`; mode `(shape - 1) scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaBump {
    pub shape: f64,
    pub scale: f64,
}

/// Half-maximum points of `u^{a-1} e^{-(a-1)(u-1)}` relative to the mode, i.e. the
/// roots of `(a - 1)(ln u - u + 1) = -ln 2`.
fn half_max_points(a: f64) -> (f64, f64) {
    let target = -std::f64::consts::LN_2 / (a - 1.0);
    let g = |u: f64| u.ln() - u + 1.0 - target;
    let bisect = |mut lo: f64, mut hi: f64| {
        // g(lo) and g(hi) have opposite signs
        let sign_lo = g(lo) > 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (g(mid) > 0.0) == sign_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let mut hi = 2.0;
    while g(hi) > 0.0 {
        hi *= 2.0;
    }
    (bisect(f64::MIN_POSITIVE, 1.0), bisect(1.0, hi))
}

impl GammaBump {
    /// Shape and scale with the given mode and full width at half maximum.
    pub fn from_peak_fwhm(peak: f64, fwhm: f64) -> Result<Self> {
        if !(peak > 0.0 && fwhm > 0.0) {
            return Err(Error::Config(format!("HRF peak and width must be positive, got {peak}, {fwhm}")));
        }
        // relative width (u_hi - u_lo) falls monotonically from +inf to 0 as the shape grows
        let width = |a: f64| {
            let (lo, hi) = half_max_points(a);
            hi - lo
        };
        let target = fwhm / peak;
        let (mut lo, mut hi) = (1.0 + 1e-9, 2.0);
        while width(hi) > target {
            hi *= 2.0;
            if hi > 1e9 {
                return Err(Error::Numerical(format!("no gamma shape gives FWHM {fwhm} at peak {peak}")));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if width(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let shape = 0.5 * (lo + hi);
        Ok(GammaBump { shape, scale: peak / (shape - 1.0) })
    }

    pub fn mode(&self) -> f64 {
        (self.shape - 1.0) * self.scale
    }

    /// Density divided by its value at the mode.
    pub fn relative(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let u = t / self.mode();
        ((self.shape - 1.0) * (u.ln() - u + 1.0)).exp()
    }

    fn ln_pdf_mode(&self) -> f64 {
        let m = self.mode();
        (self.shape - 1.0) * m.ln() - m / self.scale - ln_gamma(self.shape) - self.shape * self.scale.ln()
    }

    /// `int_0^t relative(s) ds`.
    pub fn integral(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        gamma_lr(self.shape, t / self.scale) / self.ln_pdf_mode().exp()
    }
}

/// `hrf(t) = g1(t)/g1(peak1) - dip g2(t)/g2(peak2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hrf {
    pub spec: HrfSpec,
    pub first: GammaBump,
    pub second: GammaBump,
}

impl Hrf {
    pub fn new(spec: HrfSpec) -> Result<Self> {
        if !(0.0..=1.0).contains(&spec.dip) {
            return Err(Error::Config(format!("HRF dip must lie in [0, 1], got {}", spec.dip)));
        }
        Ok(Hrf {
            spec,
            first: GammaBump::from_peak_fwhm(spec.peak1, spec.fwhm1)?,
            second: GammaBump::from_peak_fwhm(spec.peak2, spec.fwhm2)?,
        })
    }

    pub fn value(&self, t: f64) -> f64 {
        self.first.relative(t) - self.spec.dip * self.second.relative(t)
    }

    /// `int_0^t hrf(s) ds`.
    pub fn integral(&self, t: f64) -> f64 {
        self.first.integral(t) - self.spec.dip * self.second.integral(t)
    }
}

/// Samples of the HRF on a uniform grid of the given step.
pub fn glover_hrf(spec: HrfSpec, step: f64, duration: f64) -> Result<Vec<(f64, f64)>> {
    if !(step > 0.0 && step <= 0.5) {
        return Err(Error::Config(format!("HRF grid step must lie in (0, 0.5] s, got {step}")));
    }
    let h = Hrf::new(spec)?;
    let m = (duration / step).floor() as usize;
    Ok((0..=m).map(|i| {
        let t = i as f64 * step;
        (t, h.value(t))
    }).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub event_type: u32,
    pub onset: f64,
    pub duration: f64,
    pub height: f64,
}

/// Alternating hot (type 1, height 0.5) and warm (type 2, height 1) blocks of 5 s
/// starting at 20, 60, ..., 300 s.
pub fn block_design_events() -> Vec<Event> {
    (0..8)
        .map(|i| Event {
            event_type: if i % 2 == 0 { 1 } else { 2 },
            onset: 20.0 + 40.0 * i as f64,
            duration: 5.0,
            height: if i % 2 == 0 { 0.5 } else { 1.0 },
        })
        .collect()
}

/// Header-less CSV rows `type,onset,duration,height`.
pub fn read_events<R: Read>(reader: R) -> Result<Vec<Event>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 4 {
            return Err(Error::Config(format!("event rows need 4 columns, got {}", rec.len())));
        }
        let f = |i: usize| rec[i].parse::<f64>().map_err(|e| Error::Config(format!("bad event field {:?}: {e}", &rec[i])));
        let ty = f(0)?;
        if ty < 0.0 || ty.fract() != 0.0 {
            return Err(Error::Config(format!("event type must be a non-negative integer, got {ty}")));
        }
        out.push(Event { event_type: ty as u32, onset: f(1)?, duration: f(2)?, height: f(3)? });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameTiming {
    /// Seconds between frames.
    pub tr_t: f64,
    pub n_frames: usize,
    pub drop_first: usize,
}

impl Default for FrameTiming {
    fn default() -> Self {
        FrameTiming { tr_t: 5.0, n_frames: 68, drop_first: 4 }
    }
}

impl FrameTiming {
    /// Times of the retained frames.
    pub fn times(&self) -> Vec<f64> {
        (self.drop_first..self.n_frames).map(|i| i as f64 * self.tr_t).collect()
    }

    /// End of the scan window.
    pub fn window_end(&self) -> f64 {
        self.n_frames as f64 * self.tr_t
    }
}

/// Event types present, ascending; one design column each.
pub fn event_types(events: &[Event]) -> Vec<u32> {
    let mut t: Vec<u32> = events.iter().map(|e| e.event_type).collect();
    t.sort_unstable();
    t.dedup();
    t
}

/// Design matrix: one column per event type, the stimulus boxcar convolved with the HRF,
/// sampled at the retained frames. Zero-duration events are impulses of the given height.
/// `drift` appends a centred linear column.
pub fn build_design(events: &[Event], hrf: &Hrf, timing: &FrameTiming, drift: bool) -> Result<Mat> {
    if timing.drop_first >= timing.n_frames || !(timing.tr_t > 0.0) {
        return Err(Error::Config("frame timing leaves no frames".into()));
    }
    let types = event_types(events);
    let times = timing.times();
    let end = timing.window_end();
    let cols = types.len() + drift as usize;
    let mut x = Mat::zeros(times.len(), cols);
    for ev in events {
        if !(ev.duration >= 0.0) || !ev.onset.is_finite() {
            return Err(Error::Config(format!("invalid event {ev:?}")));
        }
        if ev.onset >= end {
            warn!("event at {} s starts after the scan window ({} s) and is ignored", ev.onset, end);
            continue;
        }
        let mut duration = ev.duration;
        if ev.onset + duration > end {
            warn!("event at {} s truncated to the scan window", ev.onset);
            duration = end - ev.onset;
        }
        let col = types.iter().position(|t| *t == ev.event_type).expect("type listed");
        for (i, t) in times.iter().enumerate() {
            let v = if duration == 0.0 {
                hrf.value(t - ev.onset)
            } else {
                hrf.integral(t - ev.onset) - hrf.integral(t - ev.onset - duration)
            };
            x[(i, col)] += ev.height * v;
        }
    }
    if drift {
        let mid = 0.5 * (times[0] + times[times.len() - 1]);
        let span = (times[times.len() - 1] - times[0]).max(1.0);
        for (i, t) in times.iter().enumerate() {
            x[(i, cols - 1)] = (t - mid) / span;
        }
    }
    Ok(x)
}

/// Volume CSV with header `frame,node,value` (1-based frame and node).
pub fn read_volume<R: Read>(reader: R) -> Result<Mat> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 3 {
            return Err(Error::Config(format!("volume rows need 3 columns, got {}", rec.len())));
        }
        let idx = |i: usize| rec[i].parse::<usize>().map_err(|e| Error::Config(format!("bad index {:?}: {e}", &rec[i])));
        let v = rec[2].parse::<f64>().map_err(|e| Error::Config(format!("bad value {:?}: {e}", &rec[2])))?;
        rows.push((idx(0)?, idx(1)?, v));
    }
    let frames = rows.iter().map(|r| r.0).max().unwrap_or(0);
    let nodes = rows.iter().map(|r| r.1).max().unwrap_or(0);
    if frames == 0 || nodes == 0 || rows.iter().any(|r| r.0 == 0 || r.1 == 0) {
        return Err(Error::Config("volume must use 1-based frame and node indices".into()));
    }
    if rows.len() != frames * nodes {
        return Err(Error::Config(format!("volume has {} rows, expected {frames} x {nodes}", rows.len())));
    }
    let mut m = Mat::zeros(frames, nodes);
    for (f, n, v) in rows {
        m[(f - 1, n - 1)] = v;
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceOptions {
    pub alpha: f64,
    pub directions: usize,
    pub seed: u64,
}

impl Default for SliceOptions {
    fn default() -> Self {
        SliceOptions { alpha: 0.05, directions: 4, seed: 1 }
    }
}

/// Output of [`fit_slice`]. Coefficients in `fit` are in the original basis.
#[derive(Debug, Clone)]
pub struct SliceReport {
    pub pilot_beta: Mat,
    pub fit: GlsFit,
    /// Orthogonal rotation (columns are eigenvectors of the projected residual covariance).
    pub rotation: Mat,
    pub lambda_hat: EmpiricalEstimate,
    pub fanova: FanovaResult,
    pub tests: Vec<TestReport>,
}

/// Plug-in fit of one slice:
/// OLS pilot, empirical covariance in the residual eigenbasis, GLS refit, FANOVA, and
/// projected tests along random directions.
pub fn fit_slice(x: &Mat, slice: &FunctionalSample, basis: &SpectralBasis, options: SliceOptions) -> Result<SliceReport> {
    let n = slice.n();
    if x.nrows() != n {
        return Err(Error::dim("fit_slice: design rows", n, x.nrows()));
    }
    let y = crate::gls::response_coefficients(slice, basis)?;
    // OLS pilot
    let xtx = x.transpose() * x;
    let ols = linalg::cholesky(&xtx, 0).map_err(|_| Error::Singular { k: 0, condition: linalg::spd_condition(&xtx) })?;
    let pilot_beta = ols.solve(&(x.transpose() * &y)).transpose();
    let residual = &y - x * pilot_beta.transpose();
    // eigenbasis of the projected R_0
    let r0 = residual.transpose() * &residual / n as f64;
    let (_, rotation) = linalg::sorted_eigen(&r0);
    let y_rot = &y * &rotation;
    let lambda_hat = estimate_empirical(&(&residual * &rotation))?;
    let solver = GlsSolver::new(x, &lambda_hat.sequence)?;
    let rotated = fit_coefficients(&solver, &y_rot, basis)?;
    let beta = &rotation * &rotated.beta_coefficients;
    let fitted_coefficients = x * beta.transpose();
    let fit = GlsFit {
        beta_fields: basis.reconstruct_rows(&beta.transpose())?,
        fitted: basis.reconstruct_rows(&fitted_coefficients)?,
        residual_coefficients: &y - &fitted_coefficients,
        beta_coefficients: beta,
        response_coefficients: y.clone(),
        fitted_coefficients,
        provenance: lambda_hat.sequence.provenance,
    };
    let fanova = decompose(&solver, &y_rot, &build_w(&lambda_hat.sequence)?)?;
    let contrast = ContrastSpec::equality(x.ncols())?;
    let eigenvalues = basis.eigenvalues();
    let mut tests = Vec::with_capacity(options.directions);
    for d in 0..options.directions as u64 {
        let h = direction_coefficients(&eigenvalues, options.seed, d);
        let h_rot: Vec<f64> = (rotation.transpose() * crate::linalg::Vector::from_vec(h)).iter().cloned().collect();
        let t = DirectionTest::new(x, lambda_h(&h_rot, &lambda_hat.sequence)?, &contrast, QForm::Gls, options.alpha, d)?;
        tests.push(t.test(&project_response(&y_rot, &h_rot)?)?);
    }
    Ok(SliceReport { pilot_beta, fit, rotation, lambda_hat, fanova, tests })
}
