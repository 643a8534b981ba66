//! Special functions: Bessel functions of the first kind with real non-negative
//! order, their positive zeros, and the chi-square upper tail.
//!
//! `bessel_j` picks one of three evaluation routes:
//!
//! * the ascending power series, when `x <= 12` or `x^2/4 <= order + 1`
//!   (terms are then either small in magnitude or monotonically decreasing);
//! * the Hankel asymptotic expansion, for large arguments, accepted only when
//!   its terms shrink below `1e-16` before they start to grow;
//! * Miller's backward recurrence normalized by the Neumann-type sum
//!   `(x/2)^mu = sum_k (mu + 2k) Gamma(mu + k) / k! J_{mu + 2k}(x)`,
//!   which works for fractional orders and every remaining argument.

use std::f64::consts::PI;

use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::{Error, Result};

/// Largest order accepted by [`bessel_j`].
pub const MAX_ORDER: f64 = 200.0;
/// Largest argument accepted by [`bessel_j`].
pub const MAX_ARGUMENT: f64 = 1.0e4;

const ROOT_SCAN_STEP: f64 = 1.0;
const ROOT_MAX_BISECTIONS: usize = 200;

/// Bessel function of the first kind `J_order(x)` for `order, x >= 0`.
pub fn bessel_j(order: f64, x: f64) -> Result<f64> {
    check_order(order)?;
    if !(x >= 0.0) || x > MAX_ARGUMENT {
        return Err(Error::Domain(format!(
            "bessel_j argument must lie in [0, {MAX_ARGUMENT}], got {x}"
        )));
    }
    Ok(jv(order, x))
}

fn check_order(order: f64) -> Result<()> {
    if !(order >= 0.0) || order > MAX_ORDER {
        return Err(Error::Domain(format!(
            "Bessel order must lie in [0, {MAX_ORDER}], got {order}"
        )));
    }
    Ok(())
}

/// Unchecked evaluation; callers guarantee `order >= 0` and `x >= 0`.
pub(crate) fn jv(order: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if order == 0.0 { 1.0 } else { 0.0 };
    }
    if x <= 12.0 || 0.25 * x * x <= order + 1.0 {
        return series(order, x);
    }
    if x >= 25.0 {
        if let Some(v) = hankel(order, x) {
            return v;
        }
    }
    miller(order, x)
}

/// Derivative `J'_order(x) = (order / x) J_order(x) - J_{order+1}(x)`.
pub(crate) fn jv_prime(order: f64, x: f64) -> f64 {
    if x == 0.0 {
        return match order {
            o if o == 1.0 => 0.5,
            o if o == 0.0 || o > 1.0 => 0.0,
            _ => f64::INFINITY,
        };
    }
    order / x * jv(order, x) - jv(order + 1.0, x)
}

fn series(order: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = half * half;
    let log_first = order * half.ln() - ln_gamma(order + 1.0);
    if log_first < -745.0 {
        return 0.0;
    }
    let mut term = log_first.exp();
    let mut sum = term;
    let mut m = 0.0;
    loop {
        m += 1.0;
        term *= -q / (m * (m + order));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() && m > half {
            break;
        }
        if m > 500.0 {
            break;
        }
    }
    sum
}

fn hankel(order: f64, x: f64) -> Option<f64> {
    let mu = 4.0 * order * order;
    let mut term = 1.0_f64;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut prev = f64::INFINITY;
    let mut converged = false;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= (mu - odd * odd) / (kf * 8.0 * x);
        let mag = term.abs();
        if mag > prev {
            break;
        }
        prev = mag;
        // terms alternate between Q (odd k) and P (even k) with sign (-1)^floor(k/2)
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 1 {
            q += sign * term;
        } else {
            p += sign * term;
        }
        if mag < 1e-16 {
            converged = true;
            break;
        }
    }
    if !converged {
        return None;
    }
    let chi = x - (0.5 * order + 0.25) * PI;
    Some((2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin()))
}

fn miller(order: f64, x: f64) -> f64 {
    let n = order.floor() as usize;
    let mu = order - n as f64;
    let top = order.max(x);
    let mut start = (top + 12.0 * x.cbrt() + 25.0).ceil() as usize;
    if start % 2 == 1 {
        start += 1;
    }
    // f[j] approximates J_{mu + j}(x) up to a common factor
    let mut f = vec![0.0_f64; start + 2];
    f[start] = 1e-280;
    for j in (1..=start).rev() {
        let next = 2.0 * (mu + j as f64) / x * f[j] - f[j + 1];
        f[j - 1] = next;
        if next.abs() > 1e250 {
            for v in f[j - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    // sum_k c_k f[2k] with c_k = (mu + 2k) Gamma(mu + k) / k!
    let mut g = ln_gamma(mu + 1.0).exp(); // Gamma(mu + k)/k! at k = 1, and c_0 = Gamma(mu + 1)
    let mut norm = g * f[0];
    let mut k = 1usize;
    while 2 * k <= start {
        if k >= 2 {
            g *= (mu + k as f64 - 1.0) / k as f64;
        }
        norm += (mu + 2.0 * k as f64) * g * f[2 * k];
        k += 1;
    }
    let scale = if mu == 0.0 { 1.0 } else { (0.5 * x).powf(mu) };
    f[n] * scale / norm
}

/// McMahon's large-root-index approximation of the `index`-th zero of `J_order`.
pub fn mcmahon_guess(order: f64, index: usize) -> f64 {
    let beta = (index as f64 + 0.5 * order - 0.25) * PI;
    let mu = 4.0 * order * order;
    let e = 8.0 * beta;
    beta - (mu - 1.0) / e - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * e.powi(3))
}

/// Olver's large-order approximation `order + delta_h order^{1/3} + ...` of the
/// `index`-th zero of `J_order`.
pub fn olver_guess(order: f64, index: usize) -> f64 {
    let delta = olver_delta(index);
    let c = order.cbrt();
    order + delta * c + 0.3 * delta * delta / c
}

/// `|a_h| / 2^{1/3}` where `a_h` is the `h`-th zero of the Airy function.
pub fn olver_delta(index: usize) -> f64 {
    const AIRY: [f64; 5] = [
        2.338_107_410_459_767,
        4.087_949_444_130_97,
        5.520_559_828_095_551,
        6.786_708_090_071_759,
        7.944_133_587_120_853,
    ];
    let a = if index >= 1 && index <= AIRY.len() {
        AIRY[index - 1]
    } else {
        let t = 3.0 * PI * (4.0 * index as f64 - 1.0) / 8.0;
        t.powf(2.0 / 3.0) * (1.0 + 5.0 / 48.0 / (t * t))
    };
    a / 2f64.cbrt()
}

fn initial_guess(order: f64, index: usize) -> f64 {
    if order > 2.0 * index as f64 {
        olver_guess(order, index)
    } else {
        mcmahon_guess(order, index)
    }
}

/// The `index`-th positive zero `alpha_{order,index}` of `J_order` (`index >= 1`).
pub fn bessel_j_zero(order: f64, index: usize) -> Result<f64> {
    if index == 0 {
        return Err(Error::Domain("root index must be >= 1".into()));
    }
    let zeros = bessel_j_zeros(order, index)?;
    Ok(zeros[index - 1])
}

/// The first `count` positive zeros of `J_order`, strictly increasing.
///
/// Zeros are bracketed by a forward scan with unit step (consecutive zeros of
/// `J_order`, `order >= 0`, are more than 3 apart, so no sign change is
/// skipped), which pins the root index. Each bracket is refined by bisection
/// and polished by Newton steps started from the McMahon/Olver estimate.
pub fn bessel_j_zeros(order: f64, count: usize) -> Result<Vec<f64>> {
    check_order(order)?;
    let mut zeros = Vec::with_capacity(count);
    // J_order is positive on (0, j_{order,1}) and j_{order,1} > order
    let mut lo = order.max(1e-3);
    let mut f_lo = jv(order, lo);
    for index in 1..=count {
        let mut hi = lo + ROOT_SCAN_STEP;
        let mut f_hi = jv(order, hi);
        let mut scans = 0;
        while f_lo * f_hi > 0.0 {
            lo = hi;
            f_lo = f_hi;
            hi += ROOT_SCAN_STEP;
            if hi > MAX_ARGUMENT {
                return Err(Error::RootNotConverged { order, index, lo, hi });
            }
            f_hi = jv(order, hi);
            scans += 1;
            if scans > 100_000 {
                return Err(Error::RootNotConverged { order, index, lo, hi });
            }
        }
        let root = refine_root(order, index, lo, hi, f_lo)?;
        zeros.push(root);
        lo = root + 0.5;
        f_lo = jv(order, lo);
    }
    Ok(zeros)
}

/// All positive zeros of `J_order` not exceeding `bound`.
pub fn bessel_j_zeros_below(order: f64, bound: f64) -> Result<Vec<f64>> {
    check_order(order)?;
    let mut zeros = Vec::new();
    if bound <= order {
        return Ok(zeros);
    }
    let mut lo = order.max(1e-3);
    let mut f_lo = jv(order, lo);
    let mut index = 1;
    while lo < bound {
        let hi = (lo + ROOT_SCAN_STEP).min(bound.max(lo + 1e-12));
        let f_hi = jv(order, hi);
        if f_lo * f_hi <= 0.0 && f_hi != 0.0 || f_lo * f_hi < 0.0 {
            let root = refine_root(order, index, lo, hi, f_lo)?;
            if root <= bound {
                zeros.push(root);
            }
            index += 1;
            lo = root + 0.5;
            f_lo = jv(order, lo);
        } else {
            lo = hi;
            f_lo = f_hi;
        }
    }
    Ok(zeros)
}

fn refine_root(order: f64, index: usize, mut lo: f64, mut hi: f64, mut f_lo: f64) -> Result<f64> {
    for _ in 0..ROOT_MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-13 * hi {
            break;
        }
        let f_mid = jv(order, mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_lo * f_mid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    if !(hi - lo <= 1e-9 * hi.max(1.0)) {
        return Err(Error::RootNotConverged { order, index, lo, hi });
    }
    // Newton polish, seeded from the asymptotic estimate when it falls inside the bracket
    let guess = initial_guess(order, index);
    let mut x = if guess > lo && guess < hi { guess } else { 0.5 * (lo + hi) };
    let (a, b) = (lo - 1e-9, hi + 1e-9);
    for _ in 0..4 {
        let d = jv_prime(order, x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let step = jv(order, x) / d;
        let next = x - step;
        if !(next > a && next < b) {
            break;
        }
        x = next;
        if step.abs() < 1e-15 * x {
            break;
        }
    }
    // keep whichever of Newton / bisection midpoint has the smaller residual
    let mid = 0.5 * (lo + hi);
    if jv(order, mid).abs() < jv(order, x).abs() {
        x = mid;
    }
    Ok(x)
}

/// Upper tail `P(chi^2_df > x)` through the regularized upper incomplete gamma function.
pub fn chi2_sf(x: f64, df: usize) -> Result<f64> {
    if df == 0 {
        return Err(Error::Domain("chi-square degrees of freedom must be positive".into()));
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!("chi-square argument must be >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(gamma_ur(0.5 * df as f64, 0.5 * x).clamp(0.0, 1.0))
}
