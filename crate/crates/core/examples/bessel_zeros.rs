//! Bessel function values and zeros, with the McMahon and Olver approximations.

use std::f64::consts::PI;

use hilbert_fanova::special::{bessel_j, bessel_j_zeros, mcmahon_guess, olver_guess};

fn main() -> hilbert_fanova::Result<()> {
    for order in [0.0, 1.0, 1.5, 10.0] {
        let zeros = bessel_j_zeros(order, 80)?;
        let worst = zeros.iter().map(|z| bessel_j(order, *z).map(f64::abs)).collect::<Result<Vec<_>, _>>()?;
        let worst = worst.into_iter().fold(0.0, f64::max);
        println!(
            "J_{order}: first zeros {:.6} {:.6} {:.6}, 80th {:.6}, max |J| at zeros {worst:.1e}",
            zeros[0], zeros[1], zeros[2], zeros[79]
        );
    }
    println!("\nMcMahon, order 0:");
    for h in [1, 2, 10, 40] {
        let z = bessel_j_zeros(0.0, h)?[h - 1];
        println!("  h = {h:>2}: zero {z:.10}, guess {:.10}, pi(h - 1/4) off by {:.2e}", mcmahon_guess(0.0, h), (z - PI * (h as f64 - 0.25)).abs());
    }
    println!("\nOlver, first zero:");
    for k in [20.0, 50.0, 100.0] {
        let z = bessel_j_zeros(k, 1)?[0];
        println!("  k = {k:>3}: zero {z:.8}, guess {:.8}, (a - k)/k^(1/3) = {:.5}", olver_guess(k, 1), (z - k) / f64::cbrt(k));
    }
    Ok(())
}
