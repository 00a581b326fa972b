//! Power of the test-plus-clustering pipeline against a two-cluster
//! alternative (effects 0,0,0 vs 1,1,1), swept over the panel length.
//!
//! Four probabilities are tracked per length: rejecting the root and
//! finding the true first split, a second-stage rejection among replicates
//! that got the first split right (which should stay near the level),
//! the raw count of those replicates, and recovering the exact two-cluster
//! partition.
//!
//! Run with: cargo run --release --example power_study

use anovats::harness::{run_power, PowerExperiment};

fn main() -> anovats::Result<()> {
    let exp = PowerExperiment {
        processes: vec![1],
        cases: vec![1],
        lengths: vec![20, 30, 50, 70, 100],
        reps: 500,
        ..PowerExperiment::default()
    };
    println!(
        "effects {:?}, {} replications per length, alpha = {}",
        exp.effects, exp.reps, exp.alpha
    );
    let report = run_power(&exp, 42)?;

    let metrics = [
        ("reject_and_correct_split", "reject + correct split"),
        ("second_stage_size", "second-stage rejection"),
        ("correct_first_split_count", "replicates with correct split"),
        ("correct_clustering", "exact partition recovered"),
    ];
    print!("{:>32}", "");
    for n in &exp.lengths {
        print!("{:>8}", format!("n={n}"));
    }
    println!();
    for (key, label) in metrics {
        print!("{label:>32}");
        for &n in &exp.lengths {
            let v = report.value(1, 1, exp.effects.len(), n, key).unwrap();
            if key == "correct_first_split_count" {
                print!("{v:>8.0}");
            } else {
                print!("{v:>8.3}");
            }
        }
        println!();
    }
    Ok(())
}
