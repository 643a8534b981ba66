//! Synthetic fMRI slice: block design, ARH(1) errors, plug-in GLS fit and projected tests.

use hilbert_fanova::covariance::lambda_tridiagonal;
use hilbert_fanova::fmri::{block_design_events, build_design, fit_slice, FrameTiming, Hrf, HrfSpec, SliceOptions};
use hilbert_fanova::linalg::Mat;
use hilbert_fanova::simulation::{make_response, ErrorSampler, FunctionalSample};
use hilbert_fanova::spectral::{build_basis, Domain, GridSteps, Truncation};

fn main() -> hilbert_fanova::Result<()> {
    let hrf = Hrf::new(HrfSpec::default())?;
    let timing = FrameTiming::default();
    let x = build_design(&block_design_events(), &hrf, &timing, false)?;
    println!("design {} x {}, column norms {:.3} {:.3}", x.nrows(), x.ncols(), x.column(0).norm(), x.column(1).norm());

    // a 20 x 20 slice on the unit square, 16 basis functions
    let basis = build_basis(
        Domain::Rectangle { a1: 0.0, b1: 1.0, a2: 0.0, b2: 1.0 },
        GridSteps { h1: 0.05, h2: 0.05 },
        Truncation::Tensor { tr1: 4, tr2: 4 },
    )?;
    let tr = basis.tr();
    let r0: Vec<f64> = (1..=tr).map(|k| 0.5 / k as f64).collect();
    let r1: Vec<f64> = r0.iter().map(|v| 0.3 * v).collect();
    let lambda = lambda_tridiagonal(&r0, &r1, x.nrows())?;
    let sampler = ErrorSampler::new(&lambda);

    for (label, warm) in [("distinct hot/warm effects", 2.0), ("equal effects", 1.0)] {
        // TR x 2 truth: hot = 1/k, warm = warm/k
        let beta = Mat::from_fn(tr, 2, |k, s| if s == 0 { 1.0 } else { warm } / (k + 1) as f64);
        let y = make_response(&x, &beta.transpose(), &sampler.coefficients(7, 0))?;
        let slice = FunctionalSample { values: basis.reconstruct_rows(&y)?, coefficients: None };
        let report = fit_slice(&x, &slice, &basis, SliceOptions { directions: 8, ..Default::default() })?;
        let rel = (&report.fit.beta_coefficients - &beta).norm() / beta.norm();
        let rejected = report.tests.iter().filter(|t| t.reject).count();
        println!("{label}: relative beta error {rel:.3}, F = {:.3}, rejected in {rejected}/8 directions", report.fanova.f_value);
        for t in &report.tests {
            print!(" {:.2e}", t.p_value);
        }
        println!();
    }
    Ok(())
}
