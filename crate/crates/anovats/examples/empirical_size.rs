//! Empirical size of the homogeneity test under the null, swept over the
//! panel length: the rejection rate approaches the nominal level as n
//! grows.
//!
//! Run with: cargo run --release --example empirical_size

use anovats::harness::{run_size, SizeExperiment};

fn main() -> anovats::Result<()> {
    let exp = SizeExperiment {
        processes: vec![1],
        cases: vec![1],
        group_counts: vec![3],
        lengths: vec![20, 30, 50, 70, 100],
        block_constants: vec![2.5],
        reps: 1000,
        ..SizeExperiment::default()
    };
    println!(
        "empirical size, nominal alpha = {}: {} groups, MA(1) Gaussian noise, {} reps",
        exp.alpha, exp.group_counts[0], exp.reps
    );
    let report = run_size(&exp, 42)?;
    println!("{:>6} {:>8}", "n", "size");
    for row in &report.rows {
        println!("{:>6} {:>8.3}", row.n, row.value);
    }
    Ok(())
}
