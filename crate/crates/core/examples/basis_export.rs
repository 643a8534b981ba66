//! Build rectangle, disk and sector bases and export eigenpairs and grid as CSV.

use std::fmt::Write as _;

use hilbert_fanova::scenario::default_steps;
use hilbert_fanova::spectral::{build_basis, Domain, Truncation};

fn main() -> hilbert_fanova::Result<()> {
    let dir = std::env::temp_dir().join("hfanova_basis_export");
    std::fs::create_dir_all(&dir)?;
    let cases = [
        ("rectangle", Domain::Rectangle { a1: -2.0, b1: 3.0, a2: -2.0, b2: 3.0 }, Truncation::Tensor { tr1: 4, tr2: 4 }),
        ("disk", Domain::Disk { radius: 25.0 }, Truncation::Radial { count: 7 }),
        ("sector", Domain::Sector { radius: 25.0, theta: 2.0 / 3.0 }, Truncation::Radial { count: 7 }),
    ];
    for (name, domain, truncation) in cases {
        let basis = build_basis(domain, default_steps(&domain), truncation)?;
        println!(
            "{name}: TR = {}, L = {}, area {:.3} (exact {:.3}), Gram deviation {:.2e}",
            basis.tr(),
            basis.nodes(),
            basis.grid.total_weight(),
            domain.area(),
            basis.gram_deviation()
        );
        let mut pairs = String::from("index,m1,m2,m3,eigenvalue,normalization\n");
        for (i, p) in basis.pairs.iter().enumerate() {
            let c = p.index.components();
            writeln!(pairs, "{},{},{},{},{:e},{:e}", i + 1, c[0], c[1], c[2], p.eigenvalue, p.normalization).unwrap();
        }
        let mut grid = String::from("node_id,x,y,weight\n");
        for (j, (pt, w)) in basis.grid.points.iter().zip(&basis.grid.weights).enumerate() {
            writeln!(grid, "{},{:e},{:e},{:e}", j + 1, pt[0], pt[1], w).unwrap();
        }
        std::fs::write(dir.join(format!("{name}_basis.csv")), pairs)?;
        std::fs::write(dir.join(format!("{name}_grid.csv")), grid)?;
    }
    println!("CSV files in {}", dir.display());
    Ok(())
}
