//! Monte Carlo and asymptotic checks across modules.

use std::f64::consts::PI;

use hilbert_fanova::covariance::{estimate_empirical, lambda_theoretical, lambda_tridiagonal, GammaProfile, LambdaSequence, Provenance};
use hilbert_fanova::cramer_wold::{ks_critical_1pct, ks_statistic, run_campaign, Campaign, QForm};
use hilbert_fanova::fmri::{build_design, fit_slice, Event, FrameTiming, Hrf, HrfSpec, SliceOptions};
use hilbert_fanova::gls::GlsSolver;
use hilbert_fanova::linalg::{Mat, Vector};
use hilbert_fanova::scenario::{default_steps, rectangle_scenario, standard_rectangle};
use hilbert_fanova::simulation::{make_design, make_response, ErrorSampler, FunctionalSample};
use hilbert_fanova::special::{bessel_j_zeros, chi2_sf};
use hilbert_fanova::spectral::{build_basis, eigenpairs, ls_slope, Domain, GridSteps, MultiIndex, Truncation, DEFAULT_MAX_PAIRS};

fn tri_lambda(n: usize, tr: usize) -> LambdaSequence {
    let r0: Vec<f64> = (1..=tr).map(|k| 1.0 / k as f64).collect();
    let r1: Vec<f64> = r0.iter().map(|v| 0.35 * v).collect();
    lambda_tridiagonal(&r0, &r1, n).unwrap()
}

fn sample_cov(draws: &[Vector]) -> Mat {
    let n = draws[0].len();
    let mean = draws.iter().fold(Vector::zeros(n), |a, d| a + d) / draws.len() as f64;
    let mut c = Mat::zeros(n, n);
    for d in draws {
        let e = d - &mean;
        c += &e * e.transpose();
    }
    c / (draws.len() - 1) as f64
}

#[test]
fn sampler_matches_lambda_and_frequencies_are_independent() {
    let reps = 10_000;
    let lambda = tri_lambda(5, 3);
    let sampler = ErrorSampler::new(&lambda);
    let draws: Vec<Mat> = (0..reps).map(|r| sampler.coefficients(2, r)).collect();
    for k in 0..3 {
        let col: Vec<Vector> = draws.iter().map(|d| d.column(k).into_owned()).collect();
        let emp = sample_cov(&col);
        let m = lambda.matrices[k].amax();
        let tol = 5.0 * m / (reps as f64).sqrt() * 3.0;
        assert!((emp - &lambda.matrices[k]).amax() <= tol, "k = {k}");
    }
    let (a, b): (Vec<f64>, Vec<f64>) = draws.iter().map(|d| (d[(2, 0)], d[(2, 1)])).unzip();
    let corr = correlation(&a, &b);
    assert!(corr.abs() <= 3.0 / (reps as f64).sqrt(), "{corr}");
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn gls_is_unbiased_with_the_predicted_covariance() {
    let (n, p, tr) = (20, 3, 2);
    let x = make_design(n, p, 8).unwrap();
    let lambda = tri_lambda(n, tr);
    let solver = GlsSolver::new(&x, &lambda).unwrap();
    let sampler = ErrorSampler::new(&lambda);
    let beta = Mat::from_fn(tr, p, |k, s| (k + 1) as f64 - 0.5 * s as f64);
    let mean = &x * beta.transpose();
    let estimates: Vec<Mat> = (0..10_000).map(|r| solver.solve(&(&mean + sampler.coefficients(5, r))).unwrap()).collect();
    for k in 0..tr {
        let draws: Vec<Vector> = estimates.iter().map(|b| b.row(k).transpose()).collect();
        let predicted = solver.covariance(k);
        let first: Vec<Vector> = draws[..1000].to_vec();
        let avg = first.iter().fold(Vector::zeros(p), |a, d| a + d) / 1000.0;
        for s in 0..p {
            let se = (predicted[(s, s)] / 1000.0).sqrt();
            assert!((avg[s] - beta[(k, s)]).abs() <= 4.0 * se, "k {k} s {s}");
        }
        let emp = sample_cov(&draws);
        let scale = predicted.diagonal().max();
        assert!((emp - &predicted).amax() <= 0.15 * scale, "k {k}");
    }
}

#[test]
fn null_statistic_follows_chi_square() {
    let (n, p, tr) = (60, 3, 4);
    let x = make_design(n, p, 4).unwrap();
    let lambda = tri_lambda(n, tr);
    let eigenvalues: Vec<f64> = (1..=tr).map(|k| k as f64).collect();
    let beta = Mat::from_fn(tr, p, |k, _| 1.0 / (k + 1) as f64);
    let c = Campaign { x: &x, beta: &beta, lambda: &lambda, eigenvalues: &eigenvalues, samples: 500, directions: 2, alpha: 0.05, seed: 77, q_form: QForm::Gls };
    for d in run_campaign(&c).unwrap() {
        let ks = ks_statistic(&d.t_values, |t| 1.0 - chi2_sf(t, p - 1).unwrap());
        assert!(ks < ks_critical_1pct(500), "direction {}: {ks}", d.direction_id);
    }
}

#[test]
fn statistic_grows_with_sample_size_under_the_alternative() {
    // rows of the design stay O(1) so information accumulates with n
    let (p, tr) = (3, 3);
    let eigenvalues: Vec<f64> = (1..=tr).map(|k| k as f64).collect();
    let beta = Mat::from_fn(tr, p, |k, s| 0.05 * s as f64 / (k + 1) as f64);
    let mut medians = Vec::new();
    for n in [50, 150, 400] {
        let x = make_design(n, p, 3).unwrap() * (n as f64 / p as f64).sqrt();
        let lambda = tri_lambda(n, tr);
        let c = Campaign { x: &x, beta: &beta, lambda: &lambda, eigenvalues: &eigenvalues, samples: 101, directions: 1, alpha: 0.05, seed: 5, q_form: QForm::Gls };
        let mut t = run_campaign(&c).unwrap().remove(0).t_values;
        t.sort_by(|a, b| a.total_cmp(b));
        medians.push(t[50]);
    }
    assert!(medians[0] < medians[1] && medians[1] < medians[2], "{medians:?}");
}

#[test]
fn empirical_estimate_contracts_with_n() {
    let tr = 3;
    let truth_r0: Vec<f64> = (1..=tr).map(|k| 1.0 / k as f64).collect();
    let error_at = |n: usize| {
        let lambda = tri_lambda(n, tr);
        let sampler = ErrorSampler::new(&lambda);
        let mut total = 0.0;
        for r in 0..40 {
            let est = estimate_empirical(&sampler.coefficients(9, r)).unwrap();
            total += est.r0.iter().zip(&truth_r0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            total += est.r1.iter().zip(&truth_r0).map(|(a, b)| (a - 0.35 * b).abs()).fold(0.0, f64::max);
        }
        total / 40.0
    };
    let e: Vec<f64> = [50, 200, 800].iter().map(|n| error_at(*n)).collect();
    for w in e.windows(2) {
        let ratio = w[0] / w[1];
        assert!((2.0 / 1.5..=2.0 * 1.5).contains(&ratio), "{e:?}");
    }
}

#[test]
fn plug_in_fit_stays_close_to_the_known_covariance_fit() {
    let mut cfg = rectangle_scenario(0, 2);
    cfg.replicates = 10;
    let basis = cfg.basis().unwrap();
    let lambda = cfg.lambda(&basis).unwrap();
    let beta = cfg.beta(&basis).unwrap().coefficients;
    let x = cfg.design().unwrap();
    let known = GlsSolver::new(&x, &lambda).unwrap();
    let sampler = ErrorSampler::new(&lambda);
    let (mut e_known, mut e_plug) = (0.0, 0.0);
    for r in 0..cfg.replicates as u64 {
        let y = &x * beta.transpose() + sampler.coefficients(cfg.seed, r);
        e_known += (known.solve(&y).unwrap() - &beta).norm_squared();
        // OLS pilot: the design is semi-orthogonal
        let resid = &y - &x * (x.transpose() * &y);
        let est = estimate_empirical(&resid).unwrap();
        e_plug += (GlsSolver::new(&x, &est.sequence).unwrap().solve(&y).unwrap() - &beta).norm_squared();
    }
    assert!(e_plug < 10.0 * e_known, "{e_plug} vs {e_known}");
}

#[test]
fn theoretical_diagonal_decays_at_the_widom_rate() {
    let pairs = eigenpairs(&standard_rectangle(), Truncation::Global { count: 200 }, DEFAULT_MAX_PAIRS).unwrap();
    let eig: Vec<f64> = pairs.iter().map(|p| p.eigenvalue).collect();
    let gamma = GammaProfile::even_spread(3).unwrap();
    let lambda = lambda_theoretical(&eig, &gamma).unwrap();
    for i in 0..3 {
        for w in lambda.matrices.windows(2) {
            assert!(w[1][(i, i)] <= w[0][(i, i)]);
        }
        let lk: Vec<f64> = (20..=200).map(|k| (k as f64).ln()).collect();
        let ld: Vec<f64> = (20..=200).map(|k| lambda.matrices[k - 1][(i, i)].ln()).collect();
        let slope = ls_slope(&lk, &ld);
        let want = -2.0 * (2.0 - gamma.gammas[i]);
        assert!((slope / want - 1.0).abs() <= 0.10, "i {i}: {slope} vs {want}");
    }
}

#[test]
fn disk_gram_deviation_shrinks_as_the_radial_step_halves() {
    let domain = Domain::Disk { radius: 25.0 };
    let dev: Vec<f64> = [36.0, 72.0, 145.0]
        .iter()
        .map(|m| build_basis(domain, GridSteps { h1: 25.0 / m, h2: 2.0 * PI / 135.0 }, Truncation::Radial { count: 7 }).unwrap().gram_deviation())
        .collect();
    assert!(dev[0] > dev[1] && dev[1] > dev[2], "{dev:?}");
    assert!(dev[2] <= 0.05);
}

#[test]
fn rectangle_eigenfunctions_vanish_near_the_boundary() {
    let domain = standard_rectangle();
    let steps = default_steps(&domain);
    let basis = build_basis(domain, steps, Truncation::Tensor { tr1: 6, tr2: 6 }).unwrap();
    for (row, pair) in basis.pairs.iter().enumerate() {
        let MultiIndex::Rect { k1, k2 } = pair.index else { unreachable!() };
        let lipschitz = pair.normalization * PI * (k1.max(k2) as f64) / 5.0;
        for (j, pt) in basis.grid.points.iter().enumerate() {
            let dist = [pt[0] + 2.0, 3.0 - pt[0], pt[1] + 2.0, 3.0 - pt[1]].into_iter().fold(f64::INFINITY, f64::min);
            if dist <= steps.h1 {
                assert!(basis.values[(row, j)].abs() <= lipschitz * dist + 1e-12);
            }
        }
    }
}

#[test]
fn bessel_zeros_interlace_and_follow_olver() {
    let zeros: Vec<Vec<f64>> = (0..=20).map(|k| bessel_j_zeros(k as f64, 21).unwrap()).collect();
    for k in 0..20 {
        for h in 0..20 {
            assert!(zeros[k][h] < zeros[k + 1][h] && zeros[k + 1][h] < zeros[k][h + 1], "k {k} h {h}");
        }
    }
    // (j_{k,1} - k) / k^{1/3} -> -a_1 / 2^{1/3}
    let limit = 2.338_107_410_459_767 / 2f64.cbrt();
    let res: Vec<f64> = [20.0, 40.0, 70.0, 100.0].iter().map(|k| (bessel_j_zeros(*k, 1).unwrap()[0] - k) / k.cbrt()).collect();
    for w in res.windows(2) {
        assert!((w[1] - limit).abs() < (w[0] - limit).abs());
    }
    assert!((res[3] / limit - 1.0).abs() < 0.03, "{res:?}");
    let ratio = bessel_j_zeros(100.0, 1).unwrap()[0] / 100.0;
    assert!(ratio > 1.0 && ratio < 1.1);
}

#[test]
fn shifting_onsets_shifts_design_columns() {
    let hrf = Hrf::new(HrfSpec::default()).unwrap();
    let timing = FrameTiming::default();
    let events = vec![Event { event_type: 1, onset: 42.0, duration: 5.0, height: 1.0 }, Event { event_type: 2, onset: 103.0, duration: 0.0, height: 0.7 }];
    let shifted: Vec<Event> = events.iter().map(|e| Event { onset: e.onset + timing.tr_t, ..*e }).collect();
    let a = build_design(&events, &hrf, &timing, false).unwrap();
    let b = build_design(&shifted, &hrf, &timing, false).unwrap();
    for i in 0..a.nrows() - 1 {
        for j in 0..2 {
            assert!((b[(i + 1, j)] - a[(i, j)]).abs() <= 1e-12);
        }
    }
}

#[test]
fn spherical_errors_make_the_refit_close_to_the_pilot() {
    let timing = FrameTiming { tr_t: 5.0, n_frames: 1004, drop_first: 4 };
    let events: Vec<Event> = (0..62)
        .map(|i| Event { event_type: 1 + (i % 2) as u32, onset: 20.0 + 80.0 * i as f64 + 40.0 * (i % 2) as f64, duration: 5.0, height: 1.0 })
        .filter(|e| e.onset < 5000.0)
        .collect();
    let x = build_design(&events, &Hrf::new(HrfSpec::default()).unwrap(), &timing, false).unwrap();
    let n = x.nrows();
    let basis = build_basis(Domain::Rectangle { a1: 0.0, b1: 1.0, a2: 0.0, b2: 1.0 }, GridSteps { h1: 0.1, h2: 0.1 }, Truncation::Tensor { tr1: 2, tr2: 2 }).unwrap();
    let lambda = LambdaSequence::from_matrices(vec![Mat::identity(n, n) * 0.25; basis.tr()], Provenance::TheoreticalFull).unwrap();
    let beta = Mat::from_fn(basis.tr(), 2, |k, s| (1 + s) as f64 / (1 + k) as f64);
    let y = make_response(&x, &beta.transpose(), &ErrorSampler::new(&lambda).coefficients(3, 0)).unwrap();
    let slice = FunctionalSample { values: basis.reconstruct_rows(&y).unwrap(), coefficients: None };
    let report = fit_slice(&x, &slice, &basis, SliceOptions::default()).unwrap();
    let rel = (&report.fit.beta_coefficients - &report.pilot_beta).norm() / report.pilot_beta.norm();
    // the estimated lag-one term is O(n^{-1/2}), not zero, so the refit moves slightly
    assert!(rel < 1e-2, "{rel}");
    // with the exact spherical covariance GLS is OLS
    let gls = GlsSolver::new(&x, &lambda).unwrap().solve(&y).unwrap();
    let rel_exact = (&gls - &report.pilot_beta).norm() / gls.norm();
    assert!(rel_exact < 1e-12, "{rel_exact}");
}
