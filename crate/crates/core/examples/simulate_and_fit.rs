//! Simulate functional responses on the rectangle and recover the fixed effects by GLS.

use hilbert_fanova::gls::{efmse_grid, fit};
use hilbert_fanova::linalg::Mat;
use hilbert_fanova::scenario::rectangle_scenario;
use hilbert_fanova::simulation::{make_response, sample_error, FunctionalSample};

fn main() -> hilbert_fanova::Result<()> {
    let mut cfg = rectangle_scenario(0, 11);
    cfg.n = 60;
    let basis = cfg.basis()?;
    let lambda = cfg.lambda(&basis)?;
    let truth = cfg.beta(&basis)?;
    let x = cfg.design()?;
    println!("{}: n = {}, p = {}, TR = {}, L = {}", cfg.id, cfg.n, cfg.p, basis.tr(), basis.nodes());

    let (mut truths, mut estimates) = (Vec::new(), Vec::new());
    for r in 0..5 {
        let error = sample_error(&lambda, &basis, cfg.seed, r)?;
        let y = FunctionalSample { values: make_response(&x, &truth.fields, &error.values)?, coefficients: None };
        let f = fit(&x, &y, &lambda, &basis)?;
        let err = (&f.beta_coefficients - &truth.coefficients).norm_squared();
        println!("replicate {r}: squared coefficient error {err:.4e}");
        truths.push(truth.fields.clone());
        estimates.push(f.beta_fields);
    }
    println!("EFMSE_beta on the grid: {:.4e}", efmse_grid(&basis, &truths, &estimates)?);

    // without noise GLS is exact
    let silent = Mat::zeros(cfg.n, basis.nodes());
    let zero = FunctionalSample { values: make_response(&x, &truth.fields, &silent)?, coefficients: None };
    let exact = fit(&x, &zero, &lambda, &basis)?;
    println!("noiseless fit, max coefficient error {:.2e}", (&exact.beta_coefficients - &truth.coefficients).amax());
    Ok(())
}
