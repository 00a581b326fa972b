//! End-to-end walkthrough on a small synthetic panel: four areas observed
//! for 20 time points, two of which share a mean. The test rejects overall
//! homogeneity, and the post-hoc recursion walks the sorted means, splits
//! at the largest gap, and stops where subgroups become homogeneous.
//!
//! Run with: cargo run --example demo_walkthrough

use anovats::posthoc::{cluster, split_at_largest_gap};
use anovats::simgen::{assemble_panel, ProcessSpec, RngStream, DEFAULT_BURN_IN};
use anovats::testing::{test, BlockRule};

fn main() -> anovats::Result<()> {
    // moving-average noise around area means 0, 2, 2, 4
    let spec = ProcessSpec::benchmark(
        1,
        1,
        4,
        20,
        vec![0.0, 2.0, 2.0, 4.0],
        2.0,
        DEFAULT_BURN_IN,
    )?;
    let panel = assemble_panel(&spec, RngStream::new(3, 0))?;
    let rule = BlockRule::default();
    let alpha = 0.05;

    println!("panel: {} areas, n = {}", panel.num_groups(), panel.num_times());

    let result = test(&panel, &rule, alpha)?;
    println!(
        "\noverall test: T = {:.3}, b = {}, p = {:.3} -> {}",
        result.statistic,
        result.b,
        result.p_value,
        if result.reject { "reject homogeneity" } else { "homogeneous" }
    );

    let means: Vec<f64> = result.group_means.iter().map(|m| m[0]).collect();
    let split = split_at_largest_gap(panel.as_panel().labels(), &means)?;
    println!("\nareas sorted by sample mean:");
    for (label, mean) in split.sorted_labels.iter().zip(&split.sorted_means) {
        println!("  {label}: {mean:.3}");
    }
    println!("adjacent gaps: {:?}", split.gaps.iter().map(|g| (g * 1000.0).round() / 1000.0).collect::<Vec<_>>());
    println!(
        "largest gap separates {{{}}} from {{{}}}",
        split.left().join(", "),
        split.right().join(", ")
    );

    let clustering = cluster(&panel, &rule, alpha)?;
    println!("\nrecursive clustering:\n{}", clustering.render_text());
    println!("tests performed along the way:");
    for entry in &clustering.trace {
        println!(
            "  {{{}}}: p = {:.3} -> {}",
            entry.members.join(", "),
            entry.p_value,
            if entry.rejected { "split" } else { "keep together" }
        );
    }
    Ok(())
}
