//! Post-hoc clustering of groups after a rejected homogeneity test.
//!
//! When the test rejects, the groups are sorted by sample mean, split at the
//! largest adjacent gap, and each side is tested again; splitting recurses
//! until every subgroup is homogeneous at the fixed per-test level or a
//! single member remains. The result is a binary tree whose leaves, read
//! left to right, partition the groups into mean-contiguous clusters.
//!
//! Only univariate panels can be clustered: the ordering step requires
//! scalar means. Every test performed along the way is recorded in a trace,
//! which never holds more than `2a - 3` entries for `a` groups.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::panel::CompletePanel;
use crate::testing::{self, BlockRule};

/// Ascending-mean ordering of a set of groups with the largest adjacent gap
/// located. Ties in means keep their original order; ties in gap size go to
/// the leftmost gap.
#[derive(Debug, Clone, PartialEq)]
pub struct GapSplit {
    /// Labels sorted ascending by mean.
    pub sorted_labels: Vec<String>,
    /// Means aligned with `sorted_labels`.
    pub sorted_means: Vec<f64>,
    /// Adjacent differences of `sorted_means`, length `len - 1`.
    pub gaps: Vec<f64>,
    /// Number of members in the left part: the split falls after
    /// `sorted_labels[..split_index]`.
    pub split_index: usize,
}

impl GapSplit {
    pub fn left(&self) -> &[String] {
        &self.sorted_labels[..self.split_index]
    }

    pub fn right(&self) -> &[String] {
        &self.sorted_labels[self.split_index..]
    }
}

/// Sorts `labels` ascending by `means` (stable: mean ties keep input order)
/// and splits after the largest adjacent gap, taking the leftmost gap on
/// ties.
pub fn split_at_largest_gap(labels: &[String], means: &[f64]) -> Result<GapSplit> {
    if labels.len() != means.len() {
        return Err(Error::InvalidInput(format!(
            "{} labels but {} means",
            labels.len(),
            means.len()
        )));
    }
    if labels.len() < 2 {
        return Err(Error::InvalidInput("splitting needs at least 2 groups".into()));
    }
    if means.iter().any(|m| !m.is_finite()) {
        return Err(Error::InvalidInput("group means must be finite".into()));
    }
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&i, &j| means[i].total_cmp(&means[j]));
    let sorted_labels: Vec<String> = order.iter().map(|&i| labels[i].clone()).collect();
    let sorted_means: Vec<f64> = order.iter().map(|&i| means[i]).collect();
    let gaps: Vec<f64> = sorted_means.windows(2).map(|w| w[1] - w[0]).collect();
    let mut best = 0;
    for (j, &g) in gaps.iter().enumerate() {
        if g > gaps[best] {
            best = j;
        }
    }
    Ok(GapSplit { sorted_labels, sorted_means, gaps, split_index: best + 1 })
}

/// One node of the clustering tree. Members are sorted ascending by sample
/// mean. `p_value` is `None` only for single-member leaves, which are never
/// tested.
#[derive(Debug, Clone, Serialize)]
pub struct ClusterNode {
    pub member_labels: Vec<String>,
    pub sample_means: Vec<f64>,
    pub p_value: Option<f64>,
    /// Size of the left child when this node was split.
    pub split_index: Option<usize>,
    pub children: Option<Box<(ClusterNode, ClusterNode)>>,
}

impl ClusterNode {
    fn leaves<'a>(&'a self, out: &mut Vec<&'a ClusterNode>) {
        match &self.children {
            Some(pair) => {
                pair.0.leaves(out);
                pair.1.leaves(out);
            }
            None => out.push(self),
        }
    }
}

/// One homogeneity test performed during clustering, in visit order
/// (parent before children, left child before right).
#[derive(Debug, Clone, Serialize)]
pub struct TraceEntry {
    pub members: Vec<String>,
    pub p_value: f64,
    pub rejected: bool,
}

/// Full clustering outcome: the tree, the leaf partition in left-to-right
/// order, and the trace of every test performed.
#[derive(Debug, Clone, Serialize)]
pub struct ClusterResult {
    pub root: ClusterNode,
    pub final_groups: Vec<Vec<String>>,
    pub alpha: f64,
    pub trace: Vec<TraceEntry>,
}

impl ClusterResult {
    /// Indented text rendering of the tree plus the final partition.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        render_node(&self.root, 0, &mut out);
        out.push_str("final groups: ");
        let parts: Vec<String> =
            self.final_groups.iter().map(|g| format!("{{{}}}", g.join(", "))).collect();
        out.push_str(&parts.join("  "));
        out.push('\n');
        out
    }
}

impl std::fmt::Display for ClusterResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.render_text())
    }
}

fn render_node(node: &ClusterNode, depth: usize, out: &mut String) {
    let indent = "  ".repeat(depth);
    let members = node.member_labels.join(", ");
    match node.p_value {
        Some(p) => {
            let verdict = if node.children.is_some() { "reject, split" } else { "homogeneous" };
            out.push_str(&format!("{indent}[{members}]  p = {}  {verdict}\n", sig6(p)));
        }
        None => out.push_str(&format!("{indent}[{members}]\n")),
    }
    if let Some(pair) = &node.children {
        render_node(&pair.0, depth + 1, out);
        render_node(&pair.1, depth + 1, out);
    }
}

fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (5 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Recursively clusters the groups of a univariate panel: test, and on
/// rejection split at the largest mean gap and recurse into both sides.
/// The significance level is held constant across all tests.
pub fn cluster(panel: &CompletePanel, rule: &BlockRule, alpha: f64) -> Result<ClusterResult> {
    if panel.dim() != 1 {
        return Err(Error::InvalidInput(format!(
            "clustering requires a univariate panel (p = 1), got p = {}",
            panel.dim()
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!(
            "alpha must lie strictly between 0 and 1, got {alpha}"
        )));
    }
    let root_stat = testing::statistic(panel)?;
    let means: Vec<f64> = root_stat.group_means.iter().map(|m| m[0]).collect();
    let indices: Vec<usize> = (0..panel.num_groups()).collect();
    let mut trace = Vec::new();
    let root = build(panel, &indices, rule, alpha, &means, &mut trace)?;
    let mut leaf_nodes = Vec::new();
    root.leaves(&mut leaf_nodes);
    let final_groups = leaf_nodes.iter().map(|l| l.member_labels.clone()).collect();
    Ok(ClusterResult { root, final_groups, alpha, trace })
}

fn build(
    panel: &CompletePanel,
    indices: &[usize],
    rule: &BlockRule,
    alpha: f64,
    means: &[f64],
    trace: &mut Vec<TraceEntry>,
) -> Result<ClusterNode> {
    if indices.len() == 1 {
        let i = indices[0];
        return Ok(ClusterNode {
            member_labels: vec![panel.labels()[i].clone()],
            sample_means: vec![means[i]],
            p_value: None,
            split_index: None,
            children: None,
        });
    }

    // Sort this node's members ascending by their full-sample means.
    let mut order: Vec<usize> = indices.to_vec();
    order.sort_by(|&i, &j| means[i].total_cmp(&means[j]));
    let member_labels: Vec<String> = order.iter().map(|&i| panel.labels()[i].clone()).collect();
    let sample_means: Vec<f64> = order.iter().map(|&i| means[i]).collect();

    let sub = panel.select_groups(indices)?;
    let result = testing::test(&sub, rule, alpha)?;
    trace.push(TraceEntry {
        members: member_labels.clone(),
        p_value: result.p_value,
        rejected: result.reject,
    });

    if !result.reject {
        return Ok(ClusterNode {
            member_labels,
            sample_means,
            p_value: Some(result.p_value),
            split_index: None,
            children: None,
        });
    }

    let split = split_at_largest_gap(&member_labels, &sample_means)?;
    let k = split.split_index;
    let left = build(panel, &order[..k], rule, alpha, means, trace)?;
    let right = build(panel, &order[k..], rule, alpha, means, trace)?;
    Ok(ClusterNode {
        member_labels,
        sample_means,
        p_value: Some(result.p_value),
        split_index: Some(k),
        children: Some(Box::new((left, right))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn labels(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn gap_split_orders_by_mean_and_finds_largest_gap() {
        // four groups whose means sort as 1, 3, 2, 4
        let split = split_at_largest_gap(
            &labels(&["A1", "A2", "A3", "A4"]),
            &[-0.064, 1.88, 1.75, 3.87],
        )
        .unwrap();
        assert_eq!(split.sorted_labels, labels(&["A1", "A3", "A2", "A4"]));
        let rounded: Vec<f64> = split.gaps.iter().map(|g| (g * 100.0).round() / 100.0).collect();
        assert_eq!(rounded, vec![1.81, 0.13, 1.99]);
        assert_eq!(split.split_index, 3);
        assert_eq!(split.left(), &labels(&["A1", "A3", "A2"])[..]);
        assert_eq!(split.right(), &labels(&["A4"])[..]);
    }

    #[test]
    fn gap_split_seven_groups() {
        let names = ["Sk1", "Ger3", "OSN", "FG", "UKN2", "NorC", "NCNS"];
        let means = [2.57, 2.95, 3.20, 3.37, 4.14, 4.32, 4.34];
        let split = split_at_largest_gap(&labels(&names), &means).unwrap();
        assert_eq!(split.split_index, 4);
        assert_eq!(split.left(), &labels(&["Sk1", "Ger3", "OSN", "FG"])[..]);
        assert_eq!(split.right(), &labels(&["UKN2", "NorC", "NCNS"])[..]);
    }

    #[test]
    fn gap_split_breaks_ties_stably() {
        // equal means keep input order; equal gaps pick the leftmost
        let split = split_at_largest_gap(&labels(&["x", "y", "z"]), &[1.0, 1.0, 2.0]).unwrap();
        assert_eq!(split.sorted_labels, labels(&["x", "y", "z"]));
        assert_eq!(split.split_index, 2);

        let split = split_at_largest_gap(&labels(&["a", "b", "c", "d"]), &[0.0, 1.0, 2.0, 3.0])
            .unwrap();
        assert_eq!(split.split_index, 1);
    }

    #[test]
    fn gap_split_validates() {
        assert!(split_at_largest_gap(&labels(&["a"]), &[1.0]).is_err());
        assert!(split_at_largest_gap(&labels(&["a", "b"]), &[1.0]).is_err());
        assert!(split_at_largest_gap(&labels(&["a", "b"]), &[1.0, f64::NAN]).is_err());
    }

    fn jittered_panel(base: &[f64], n: usize, seed: u64) -> CompletePanel {
        let mut rng = StdRng::seed_from_u64(seed);
        let series: Vec<Vec<f64>> = base
            .iter()
            .map(|&mu| (0..n).map(|_| mu + rng.gen_range(-0.5..0.5)).collect())
            .collect();
        let names = (1..=base.len()).map(|i| format!("g{i}")).collect();
        CompletePanel::from_series(names, series).unwrap()
    }

    #[test]
    fn cluster_recovers_three_separated_clusters() {
        let panel = jittered_panel(&[0.0, 0.0, 5.0, 5.0, 10.0, 10.0], 24, 3);
        let r = cluster(&panel, &BlockRule::default(), 0.05).unwrap();
        // within a cluster, members stay in mean order, so compare as sets
        let as_sets: Vec<Vec<String>> = r
            .final_groups
            .iter()
            .map(|g| {
                let mut g = g.clone();
                g.sort();
                g
            })
            .collect();
        assert_eq!(
            as_sets,
            vec![labels(&["g1", "g2"]), labels(&["g3", "g4"]), labels(&["g5", "g6"])]
        );
        // root plus one internal split plus three homogeneous leaves
        assert!(r.trace.len() <= 2 * 6 - 3);
        assert!(r.trace[0].rejected);
        assert_eq!(r.root.split_index, Some(2));
    }

    #[test]
    fn rejected_pair_splits_into_singletons() {
        let panel = jittered_panel(&[0.0, 10.0], 20, 5);
        let r = cluster(&panel, &BlockRule::default(), 0.05).unwrap();
        assert_eq!(r.final_groups, vec![labels(&["g1"]), labels(&["g2"])]);
        assert_eq!(r.trace.len(), 1);
        let pair = r.root.children.as_ref().unwrap();
        assert_eq!(pair.0.p_value, None);
        assert_eq!(pair.1.p_value, None);
    }

    #[test]
    fn homogeneous_panel_stays_together() {
        let panel = jittered_panel(&[1.0, 1.0, 1.0, 1.0], 30, 9);
        let r = cluster(&panel, &BlockRule::default(), 0.05).unwrap();
        assert_eq!(r.final_groups.len(), 1);
        assert_eq!(r.trace.len(), 1);
        assert!(!r.trace[0].rejected);
    }

    #[test]
    fn cluster_rejects_multivariate_panels() {
        let panel = CompletePanel::from_values(
            labels(&["a", "b"]),
            4,
            2,
            (0..16).map(|k| k as f64).collect(),
        )
        .unwrap();
        assert!(matches!(
            cluster(&panel, &BlockRule::default(), 0.05),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn leaves_concatenate_to_global_mean_order() {
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..25 {
            let a = rng.gen_range(2..=7);
            let n = rng.gen_range(8..=30);
            let base: Vec<f64> = (0..a).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let panel = jittered_panel(&base, n, rng.gen());
            let r = cluster(&panel, &BlockRule::default(), 0.05).unwrap();

            let stat = testing::statistic(&panel).unwrap();
            let means: Vec<f64> = stat.group_means.iter().map(|m| m[0]).collect();
            let mut order: Vec<usize> = (0..a).collect();
            order.sort_by(|&i, &j| means[i].total_cmp(&means[j]));
            let expected: Vec<String> =
                order.iter().map(|&i| panel.labels()[i].clone()).collect();

            let flattened: Vec<String> = r.final_groups.concat();
            assert_eq!(flattened, expected, "leaves must cover groups in mean order");
            assert!(r.trace.len() <= 2 * a - 3, "trace too long: {}", r.trace.len());
        }
    }

    #[test]
    fn clustering_is_deterministic() {
        let panel = jittered_panel(&[0.0, 2.0, 2.0, 6.0], 20, 21);
        let r1 = cluster(&panel, &BlockRule::default(), 0.05).unwrap();
        let r2 = cluster(&panel, &BlockRule::default(), 0.05).unwrap();
        assert_eq!(serde_json::to_string(&r1).unwrap(), serde_json::to_string(&r2).unwrap());
    }

    #[test]
    fn render_text_shows_tree_and_final_groups() {
        let panel = jittered_panel(&[0.0, 10.0], 20, 5);
        let r = cluster(&panel, &BlockRule::default(), 0.05).unwrap();
        let text = r.render_text();
        assert!(text.contains("reject, split"));
        assert!(text.contains("final groups: {g1}  {g2}"));
    }
}
