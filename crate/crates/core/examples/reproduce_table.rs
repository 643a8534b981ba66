//! Rerun one reference table and print it next to the published values.

use hilbert_fanova::scenario::{reproduce_table, TableId};

fn main() -> hilbert_fanova::Result<()> {
    let table: TableId = std::env::args().nth(1).unwrap_or_else(|| "T9".into()).parse()?;
    println!("{table} ({})", table.statistic().name());
    for r in reproduce_table(table, 1)? {
        println!(
            "{:<12} value {:>11.3e}  published {:>9.3e}  band [{:.1e}, {:.1e}]  {}",
            r.row.label,
            r.value,
            r.row.reference,
            r.row.lower,
            r.row.upper,
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    Ok(())
}
