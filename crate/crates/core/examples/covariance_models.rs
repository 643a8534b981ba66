//! The three covariance families: theoretical, tridiagonal ARH(1), and estimated from residuals.

use hilbert_fanova::covariance::{estimate_empirical, lambda_theoretical, lambda_theoretical_floored, lambda_tridiagonal, GammaProfile};
use hilbert_fanova::linalg::min_eigenvalue;
use hilbert_fanova::simulation::ErrorSampler;

fn main() -> hilbert_fanova::Result<()> {
    let eigenvalues = [0.79, 1.97, 3.16, 3.95];
    let gamma = GammaProfile::even_spread(8)?;
    let full = lambda_theoretical(&eigenvalues, &gamma)?;
    for (k, m) in full.matrices.iter().enumerate() {
        println!("theoretical k = {}: diag {:.3} .. {:.3}, min eigenvalue {:.3e}", k + 1, m[(0, 0)], m[(7, 7)], min_eigenvalue(m));
    }

    // this eigenvalue makes the n = 6 family indefinite
    let g6 = GammaProfile::even_spread(6)?;
    match lambda_theoretical(&[1.3], &g6) {
        Ok(_) => println!("lambda = 1.3 accepted"),
        Err(e) => println!("lambda = 1.3 rejected: {e}"),
    }
    let (_, events) = lambda_theoretical_floored(&[1.3], &g6, 1e-6)?;
    println!("with a floor: {events:?}");

    let r0 = [1.0, 0.5, 0.25];
    let r1 = [0.4, -0.2, 0.05];
    let tri = lambda_tridiagonal(&r0, &r1, 400)?;
    let eps = ErrorSampler::new(&tri).coefficients(3, 0);
    let est = estimate_empirical(&eps)?;
    println!("tridiagonal truth R0 = {r0:?}, R1 = {r1:?}");
    println!("estimated from n = 400: R0 = {:.3?}, R1 = {:.3?}, clipped {:?}", est.r0, est.r1, est.clipped);
    Ok(())
}
