//! Recursive clustering after a rejected homogeneity test, on a simulated
//! six-area panel with three true levels, plus the bare largest-gap split
//! on a vector of published-style area means.
//!
//! Run with: cargo run --example post_hoc_clustering

use anovats::posthoc::{cluster, split_at_largest_gap};
use anovats::simgen::{assemble_panel, ProcessSpec, RngStream, DEFAULT_BURN_IN};
use anovats::testing::BlockRule;

fn main() -> anovats::Result<()> {
    let spec = ProcessSpec::benchmark(
        1,
        1,
        6,
        50,
        vec![0.0, 0.0, 2.0, 2.0, 5.0, 5.0],
        0.0,
        DEFAULT_BURN_IN,
    )?;
    let panel = assemble_panel(&spec, RngStream::new(21, 0))?;

    let result = cluster(&panel, &BlockRule::default(), 0.05)?;
    print!("{result}");
    println!(
        "\n{} homogeneity tests were run; the tree above records every split decision.",
        result.trace.len()
    );

    // the split step also works directly on labels and means, no panel needed
    let areas: Vec<String> = ["Sk1", "Ger3", "OSN", "FG", "UKN2", "NorC", "NCNS"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let biomass = [2.57, 2.95, 3.20, 3.37, 4.14, 4.32, 4.34];
    let split = split_at_largest_gap(&areas, &biomass)?;
    println!(
        "\nseven sea areas by mean biomass: shallow {{{}}} vs deep {{{}}}",
        split.left().join(", "),
        split.right().join(", ")
    );
    Ok(())
}
