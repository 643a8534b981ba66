//! Projected F tests along random Gaussian directions, under the null and an alternative.

use hilbert_fanova::covariance::lambda_tridiagonal;
use hilbert_fanova::cramer_wold::{run_campaign, Campaign, QForm};
use hilbert_fanova::linalg::Mat;
use hilbert_fanova::scenario::{campaign_scenario, run_test_campaign, standard_rectangle};
use hilbert_fanova::simulation::make_design;

fn main() -> hilbert_fanova::Result<()> {
    let (n, p, tr) = (150, 4, 6);
    let x = make_design(n, p, 5)?;
    let eigenvalues: Vec<f64> = (1..=tr).map(|k| k as f64).collect();
    let r0: Vec<f64> = (1..=tr).map(|k| 0.02 / k as f64).collect();
    let r1: Vec<f64> = r0.iter().map(|v| 0.3 * v).collect();
    let lambda = lambda_tridiagonal(&r0, &r1, n)?;
    let null = Mat::from_fn(tr, p, |k, _| 1.0 / (k + 1) as f64);
    let alt = Mat::from_fn(tr, p, |k, s| (s + 1) as f64 / (k + 1) as f64);
    for (label, beta) in [("null", &null), ("alternative", &alt)] {
        let c = Campaign { x: &x, beta, lambda: &lambda, eigenvalues: &eigenvalues, samples: 200, directions: 4, alpha: 0.05, seed: 9, q_form: QForm::Gls };
        let rates: Vec<String> = run_campaign(&c)?.iter().map(|d| format!("{:.3}", d.success_rate)).collect();
        println!("{label}: rejection rate per direction {}", rates.join(" "));
    }

    // the rectangle campaign with the simulation covariance family
    let cfg = campaign_scenario(standard_rectangle(), 1);
    for d in run_test_campaign(&cfg)? {
        println!("rectangle direction {}: success {:.1}%, mean p {:.3e}", d.direction_id + 1, 100.0 * d.success_rate, d.mean_p_value);
    }
    Ok(())
}
