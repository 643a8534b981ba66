//! Monte Carlo FANOVA on the rectangle scenarios: EFMSE and F per scenario.

use hilbert_fanova::scenario::{rectangle_scenario, run_scenario};

fn main() -> hilbert_fanova::Result<()> {
    println!("{:<9} {:>3} {:>6} {:>11} {:>11} {:>11}", "scenario", "p", "TR", "EFMSE_beta", "EFMSE_Y", "median F");
    for i in 0..8 {
        let cfg = rectangle_scenario(i, 1);
        let out = run_scenario(&cfg)?;
        println!(
            "{:<9} {:>3} {:>6} {:>11.3e} {:>11.3e} {:>11.3e}",
            cfg.id,
            cfg.p,
            cfg.truncation.count(),
            out.efmse_beta,
            out.efmse_y,
            out.f.median
        );
    }
    Ok(())
}
