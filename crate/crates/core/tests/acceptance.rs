//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use hilbert_fanova::covariance::lambda_tridiagonal;
use hilbert_fanova::cramer_wold::{ks_critical_1pct, ks_statistic};
use hilbert_fanova::fmri::{block_design_events, build_design, fit_slice, glover_hrf, FrameTiming, Hrf, HrfSpec, SliceOptions};
use hilbert_fanova::gls::GlsSolver;
use hilbert_fanova::linalg::Mat;
use hilbert_fanova::scenario::{campaign_scenario, circular_scenario, rectangle_scenario, run_scenario, run_test_campaign, standard_rectangle, standard_sector, ScenarioConfig};
use hilbert_fanova::simulation::{make_response, ErrorSampler, FunctionalSample};
use hilbert_fanova::special::{bessel_j, bessel_j_zeros, chi2_sf};
use hilbert_fanova::spectral::{build_basis, eigenpairs, ls_slope, Domain, GridSteps, Truncation, DEFAULT_MAX_PAIRS};
use hilbert_fanova::Result;

struct Verdict {
    pass: bool,
    detail: String,
}

fn check(id: u32, name: &str, budget: Duration, f: impl FnOnce() -> Result<Verdict>) -> bool {
    let start = Instant::now();
    let outcome = f();
    let elapsed = start.elapsed();
    let (pass, detail) = match outcome {
        Ok(v) => (v.pass && elapsed < budget, v.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    println!(
        "{} criterion {id:>2} {name}: {detail} [{:.2} s of {} s]",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    pass
}

fn within_factor(value: f64, reference: f64, factor: f64) -> bool {
    value >= reference / factor && value <= reference * factor
}

fn basis_correctness() -> Result<Verdict> {
    let rect = build_basis(standard_rectangle(), GridSteps { h1: 0.05, h2: 0.05 }, Truncation::Tensor { tr1: 12, tr2: 12 })?;
    let disk_domain = Domain::Disk { radius: 25.0 };
    let disk = build_basis(disk_domain, GridSteps { h1: 25.0 / 145.0, h2: 2.0 * PI / 135.0 }, Truncation::Radial { count: 7 })?;
    let (r, d) = (rect.gram_deviation(), disk.gram_deviation());
    Ok(Verdict {
        pass: rect.tr() == 144 && r <= 0.05 && d <= 0.05,
        detail: format!("rectangle TR = {} max|G - I| = {r:.2e}, disk TR = {} max|G - I| = {d:.2e}", rect.tr(), disk.tr()),
    })
}

fn bessel_zeros() -> Result<Verdict> {
    let mut worst: f64 = 0.0;
    for order in [0.0, 1.0, 1.5, 10.0] {
        for z in bessel_j_zeros(order, 80)? {
            worst = worst.max(bessel_j(order, z)?.abs());
        }
    }
    let zeros = bessel_j_zeros(0.0, 80)?;
    let mcmahon_ok = (10..=80).all(|h| (zeros[h - 1] - PI * (h as f64 - 0.25)).abs() <= 1.0 / h as f64);
    Ok(Verdict {
        pass: worst <= 1e-10 && mcmahon_ok,
        detail: format!("max |J_k(zero)| = {worst:.1e} over k in {{0, 1, 1.5, 10}}, h <= 80; McMahon bound holds for h in 10..=80: {mcmahon_ok}"),
    })
}

fn weyl_slope() -> Result<Verdict> {
    let domain = standard_rectangle();
    let pairs = eigenpairs(&domain, Truncation::Global { count: 500 }, DEFAULT_MAX_PAIRS)?;
    let ks: Vec<f64> = (50..=500).map(|k| k as f64).collect();
    let values: Vec<f64> = (50..=500).map(|k| pairs[k - 1].eigenvalue).collect();
    let slope = ls_slope(&ks, &values);
    let target = 4.0 * PI / domain.area();
    let rel = slope / target - 1.0;
    Ok(Verdict { pass: rel.abs() <= 0.10, detail: format!("slope {slope:.5} vs 4 pi/|D| = {target:.5} ({:+.2}%)", 100.0 * rel) })
}

fn gls_exactness() -> Result<Verdict> {
    let cfg = rectangle_scenario(0, 3);
    let basis = cfg.basis()?;
    let lambda = cfg.lambda(&basis)?;
    let truth = cfg.beta(&basis)?;
    let x = cfg.design()?;
    let y = &x * truth.coefficients.transpose();
    let solver = GlsSolver::new(&x, &lambda)?;
    let beta = solver.solve(&y)?;
    let exact_err = (&beta - &truth.coefficients).amax();
    let noisy = &y + ErrorSampler::new(&lambda).coefficients(cfg.seed, 0);
    let reference = solver.solve(&noisy)?;
    let bitwise = [0.25, 4.0, 1024.0].iter().all(|c| GlsSolver::new(&x, &lambda.scaled(*c)).and_then(|s| s.solve(&noisy)).map(|b| b == reference).unwrap_or(false));
    let mut general: f64 = 0.0;
    for c in [1e-6, 0.3, 3.7, 1e5] {
        let b = GlsSolver::new(&x, &lambda.scaled(c))?.solve(&noisy)?;
        general = general.max((&b - &reference).amax() / reference.amax());
    }
    Ok(Verdict {
        pass: exact_err <= 1e-10 && bitwise && general <= 1e-12,
        detail: format!("noiseless max error {exact_err:.1e}; power-of-two scalings bitwise identical: {bitwise}; other scalings max rel. change {general:.1e}"),
    })
}

fn table_reproduction() -> Result<Verdict> {
    let rect = run_scenario(&rectangle_scenario(0, 1))?;
    let disk = run_scenario(&circular_scenario(2, false, 1))?;
    let sector = run_scenario(&circular_scenario(2, true, 1))?;
    let ok_rb = (2e-4..=5e-3).contains(&rect.efmse_beta);
    let ok_ry = (3e-3..=7e-2).contains(&rect.efmse_y);
    let ok_d = within_factor(disk.efmse_beta, 7.4e-4, 5.0);
    let ok_s = within_factor(sector.efmse_beta, 1.2e-4, 5.0);
    Ok(Verdict {
        pass: ok_rb && ok_ry && ok_d && ok_s,
        detail: format!(
            "rectangle (P1,a,C1) EFMSE_beta {:.3e} [{}] EFMSE_Y {:.3e} [{}]; disk (P1,c,C1) EFMSE_beta {:.3e} [{}]; sector (P1,c,C1) EFMSE_beta {:.3e} [{}]",
            rect.efmse_beta,
            ok(ok_rb),
            rect.efmse_y,
            ok(ok_ry),
            disk.efmse_beta,
            ok(ok_d),
            sector.efmse_beta,
            ok(ok_s)
        ),
    })
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "out of band"
    }
}

fn f_contrast() -> Result<Verdict> {
    let mut failures = Vec::new();
    let (mut rect_range, mut circ_min) = ((f64::INFINITY, 0.0_f64), f64::INFINITY);
    for i in 0..8 {
        let cfg = rectangle_scenario(i, 1);
        let m = run_scenario(&cfg)?.f.median;
        rect_range = (rect_range.0.min(m), rect_range.1.max(m));
        if !(1.0..=3.0).contains(&m) {
            failures.push(format!("rectangle {}", cfg.id));
        }
    }
    for sector in [false, true] {
        for i in 0..12 {
            let cfg = circular_scenario(i, sector, 1);
            if cfg.truncation.count() < 7 {
                continue;
            }
            let m = run_scenario(&cfg)?.f.median;
            circ_min = circ_min.min(m);
            if m < 1e2 {
                failures.push(format!("{} {}", if sector { "sector" } else { "disk" }, cfg.id));
            }
        }
    }
    Ok(Verdict {
        pass: failures.is_empty(),
        detail: format!(
            "rectangle median F in [{:.3e}, {:.3e}] (want [1, 3]); smallest circular median F with TR >= 7 {circ_min:.3e} (want >= 1e2); {} scenario(s) out of band",
            rect_range.0,
            rect_range.1,
            failures.len()
        ),
    })
}

fn calibration_and_power() -> Result<Verdict> {
    let domains = [standard_rectangle(), Domain::Disk { radius: 25.0 }, standard_sector(25.0)];
    let mut null_rates = Vec::new();
    let mut min_success: Vec<f64> = Vec::new();
    for domain in domains {
        let null_cfg = ScenarioConfig { null: true, replicates: 500, directions: 4, ..campaign_scenario(domain, 21) };
        let summaries = run_test_campaign(&null_cfg)?;
        null_rates.push(summaries.iter().map(|s| s.success_rate).sum::<f64>() / summaries.len() as f64);
        let alt = run_test_campaign(&campaign_scenario(domain, 1))?;
        min_success.push(alt.iter().map(|s| s.success_rate).fold(1.0, f64::min));
    }
    let null_ok = null_rates.iter().all(|r| (0.02..=0.09).contains(r));
    let power_ok = min_success.iter().all(|r| *r >= 0.97);
    Ok(Verdict {
        pass: null_ok && power_ok,
        detail: format!(
            "null rejection rate (500 samples x 4 directions) rectangle/disk/sector {:.3}/{:.3}/{:.3} [{}]; worst-direction success under C1 {:.3}/{:.3}/{:.3} [{}]",
            null_rates[0],
            null_rates[1],
            null_rates[2],
            ok(null_ok),
            min_success[0],
            min_success[1],
            min_success[2],
            ok(power_ok)
        ),
    })
}

fn chi2_machinery() -> Result<Verdict> {
    let v = chi2_sf(7.814728, 3)?;
    // Q(3/2, z) = erfc(sqrt z) + 2 sqrt(z/pi) e^{-z}; erfc from its continued fraction
    let z: f64 = 7.814728 / 2.0;
    let s = z.sqrt();
    let mut cf = 0.0;
    for k in (1..200).rev() {
        cf = (k as f64 / 2.0) / (s + cf);
    }
    let erfc = (-z).exp() / PI.sqrt() / (s + cf);
    let oracle = erfc + 2.0 * (z / PI).sqrt() * (-z).exp();
    Ok(Verdict {
        pass: (v - 0.05).abs() <= 1e-6 && (v - oracle).abs() <= 1e-12,
        detail: format!("chi2_sf(7.814728, 3) = {v:.9} (oracle {oracle:.9})"),
    })
}

fn hrf_design() -> Result<Verdict> {
    let samples = glover_hrf(HrfSpec::default(), 0.01, 32.0)?;
    let peak = samples.iter().cloned().fold((0.0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a }).0;
    let hrf = Hrf::new(HrfSpec::default())?;
    let timing = FrameTiming::default();
    let events = block_design_events();
    let x = build_design(&events, &hrf, &timing, false)?;
    // oracle: Simpson quadrature of the convolution integral on a 1 ms grid
    let mut oracle = Mat::zeros(x.nrows(), x.ncols());
    for ev in &events {
        let col = (ev.event_type - 1) as usize;
        for (i, t) in timing.times().iter().enumerate() {
            let hi = (ev.onset + ev.duration).min(*t);
            if hi <= ev.onset {
                continue;
            }
            let m = (((hi - ev.onset) / 1e-3).ceil() as usize).max(2).next_multiple_of(2);
            let h = (hi - ev.onset) / m as f64;
            let mut s = hrf.value(t - ev.onset) + hrf.value(t - hi);
            for j in 1..m {
                s += hrf.value(t - ev.onset - j as f64 * h) * if j % 2 == 1 { 4.0 } else { 2.0 };
            }
            oracle[(i, col)] += ev.height * s * h / 3.0;
        }
    }
    let rel = (&x - &oracle).amax() / oracle.amax();
    Ok(Verdict {
        pass: (peak - 5.4).abs() <= 0.2 && rel <= 1e-6,
        detail: format!("HRF peak at {peak:.2} s; design vs fine-grid convolution max relative deviation {rel:.1e}"),
    })
}

fn fmri_end_to_end() -> Result<Verdict> {
    let x = build_design(&block_design_events(), &Hrf::new(HrfSpec::default())?, &FrameTiming::default(), false)?;
    let n = x.nrows();
    let basis = build_basis(Domain::Rectangle { a1: 0.0, b1: 1.0, a2: 0.0, b2: 1.0 }, GridSteps { h1: 0.05, h2: 0.05 }, Truncation::Tensor { tr1: 4, tr2: 4 })?;
    let tr = basis.tr();
    let r0: Vec<f64> = (1..=tr).map(|k| 0.1 / k as f64).collect();
    let r1: Vec<f64> = r0.iter().map(|v| 0.3 * v).collect();
    let sampler = ErrorSampler::new(&lambda_tridiagonal(&r0, &r1, n)?);
    let slice = |beta: &Mat, rep: u64| -> Result<FunctionalSample> {
        let y = make_response(&x, &beta.transpose(), &sampler.coefficients(40, rep))?;
        Ok(FunctionalSample { values: basis.reconstruct_rows(&y)?, coefficients: None })
    };
    let alt = Mat::from_fn(tr, 2, |k, s| (1.0 + s as f64) / (k + 1) as f64);
    let mut errors = Vec::new();
    for rep in 0..20 {
        let report = fit_slice(&x, &slice(&alt, rep)?, &basis, SliceOptions { directions: 1, ..Default::default() })?;
        errors.push((&report.fit.beta_coefficients - &alt).norm() / alt.norm());
    }
    let mean_err = errors.iter().sum::<f64>() / errors.len() as f64;
    let null = Mat::from_fn(tr, 2, |k, _| 1.0 / (k + 1) as f64);
    let mut p_values = Vec::new();
    for rep in 0..300 {
        let options = SliceOptions { directions: 1, seed: 1000 + rep, ..Default::default() };
        p_values.push(fit_slice(&x, &slice(&null, 100 + rep)?, &basis, options)?.tests[0].p_value);
    }
    let ks = ks_statistic(&p_values, |p| p.clamp(0.0, 1.0));
    let crit = ks_critical_1pct(p_values.len());
    Ok(Verdict {
        pass: mean_err <= 0.10 && ks < crit,
        detail: format!("n = {n}, mean relative H-error of beta over 20 slices {mean_err:.3}; null p-value KS distance {ks:.3} vs 1% critical {crit:.3} (300 slices)"),
    })
}

fn main() {
    let s = Duration::from_secs;
    let results = [
        check(1, "basis correctness", s(30), basis_correctness),
        check(2, "Bessel zeros", s(5), bessel_zeros),
        check(3, "Weyl slope", s(10), weyl_slope),
        check(4, "GLS exactness", s(5), gls_exactness),
        check(5, "table reproduction", s(600), table_reproduction),
        check(6, "F-statistic contrast", s(600), f_contrast),
        check(7, "test calibration and power", s(900), calibration_and_power),
        check(8, "chi-square machinery", s(1), chi2_machinery),
        check(9, "HRF and design", s(5), hrf_design),
        check(10, "fMRI synthetic end-to-end", s(300), fmri_end_to_end),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
