//! Monte Carlo experiments: empirical size over a grid of block constants
//! and power/clustering metrics under a two-cluster alternative.
//!
//! Replications run in parallel, one RNG stream per replication, and every
//! cell aggregate is an integer tally, so a report is a pure function of
//! its experiment and seed: reruns are byte-identical regardless of thread
//! count or scheduling.

use std::collections::BTreeSet;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::panel::CompletePanel;
use crate::posthoc::{cluster, split_at_largest_gap, ClusterNode};
use crate::simgen::{assemble_panel, ProcessSpec, RngStream, DEFAULT_BURN_IN};
use crate::testing::{block_length, p_value, statistic, subsample_statistics, BlockRule};

const METRIC_SIZE: &str = "size";
const METRIC_REJECT_AND_SPLIT: &str = "reject_and_correct_split";
const METRIC_SECOND_STAGE: &str = "second_stage_size";
const METRIC_SPLIT_COUNT: &str = "correct_first_split_count";
const METRIC_CLUSTERING: &str = "correct_clustering";

/// A replication whose GARCH path aborts on a non-positive conditional
/// variance is redrawn from a fresh stream; the abort probability per
/// panel is below 1e-2 even in the most fragile benchmark cell, so the
/// retry budget is effectively unreachable.
const RETRY_LIMIT: u64 = 100;

/// Grid for the empirical-size experiment: every combination of process,
/// case, group count, length, and block constant, under the homogeneous
/// null.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeExperiment {
    pub processes: Vec<u8>,
    pub cases: Vec<u8>,
    pub group_counts: Vec<usize>,
    pub lengths: Vec<usize>,
    pub block_constants: Vec<f64>,
    pub reps: usize,
    pub alpha: f64,
    pub burn_in: usize,
}

impl Default for SizeExperiment {
    /// The full benchmark grid: processes 1-4, cases 1-2, a in {3,9,15},
    /// n in {20,30,50,70,100}, c in {1,...,6}, 200 replications.
    fn default() -> Self {
        SizeExperiment {
            processes: vec![1, 2, 3, 4],
            cases: vec![1, 2],
            group_counts: vec![3, 9, 15],
            lengths: vec![20, 30, 50, 70, 100],
            block_constants: vec![1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0],
            reps: 200,
            alpha: 0.05,
            burn_in: DEFAULT_BURN_IN,
        }
    }
}

impl SizeExperiment {
    /// Reduced grid for smoke runs: process 1, case 1, a=3, n in {20,50},
    /// c=2.5, 50 replications.
    pub fn quick() -> Self {
        SizeExperiment {
            processes: vec![1],
            cases: vec![1],
            group_counts: vec![3],
            lengths: vec![20, 50],
            block_constants: vec![2.5],
            reps: 50,
            ..SizeExperiment::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_grid(&self.processes, &self.cases, self.reps, self.alpha)?;
        if self.group_counts.is_empty() || self.group_counts.iter().any(|&a| a < 2) {
            return Err(Error::InvalidInput(
                "group counts must be non-empty and at least 2".into(),
            ));
        }
        if self.lengths.is_empty() || self.lengths.iter().any(|&n| n < 3) {
            return Err(Error::InvalidInput(
                "lengths must be non-empty and at least 3".into(),
            ));
        }
        if self.block_constants.is_empty()
            || self.block_constants.iter().any(|&c| !(c.is_finite() && c > 0.0))
        {
            return Err(Error::InvalidInput(
                "block constants must be non-empty, finite, and positive".into(),
            ));
        }
        Ok(())
    }
}

/// Grid for the power/clustering experiment: a fixed effect vector (the
/// benchmark uses (0,0,0,1,1,1)), one block constant, all requested
/// processes, cases, and lengths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerExperiment {
    pub processes: Vec<u8>,
    pub cases: Vec<u8>,
    pub lengths: Vec<usize>,
    /// True group effects; the group count is this vector's length.
    pub effects: Vec<f64>,
    pub block_constant: f64,
    pub reps: usize,
    pub alpha: f64,
    pub burn_in: usize,
}

impl Default for PowerExperiment {
    fn default() -> Self {
        PowerExperiment {
            processes: vec![1, 2, 3, 4],
            cases: vec![1, 2],
            lengths: vec![20, 30, 50, 70, 100],
            effects: vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0],
            block_constant: 2.5,
            reps: 200,
            alpha: 0.05,
            burn_in: DEFAULT_BURN_IN,
        }
    }
}

impl PowerExperiment {
    /// Reduced grid for smoke runs: process 1, case 1, n in {20,50}, 50
    /// replications.
    pub fn quick() -> Self {
        PowerExperiment {
            processes: vec![1],
            cases: vec![1],
            lengths: vec![20, 50],
            reps: 50,
            ..PowerExperiment::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_grid(&self.processes, &self.cases, self.reps, self.alpha)?;
        if self.lengths.is_empty() || self.lengths.iter().any(|&n| n < 3) {
            return Err(Error::InvalidInput(
                "lengths must be non-empty and at least 3".into(),
            ));
        }
        if self.effects.len() < 2 {
            return Err(Error::InvalidInput("need at least 2 group effects".into()));
        }
        if self.effects.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidInput("effects must be finite".into()));
        }
        let distinct = self.effects.iter().any(|e| *e != self.effects[0]);
        if !distinct {
            return Err(Error::InvalidInput(
                "effects must contain at least two distinct values; an all-equal \
                 vector has no correct split to measure"
                    .into(),
            ));
        }
        if !(self.block_constant.is_finite() && self.block_constant > 0.0) {
            return Err(Error::InvalidInput(
                "block constant must be finite and positive".into(),
            ));
        }
        Ok(())
    }
}

fn validate_grid(processes: &[u8], cases: &[u8], reps: usize, alpha: f64) -> Result<()> {
    if processes.is_empty() || processes.iter().any(|p| !(1..=4).contains(p)) {
        return Err(Error::InvalidInput(
            "processes must be non-empty with entries in 1..=4".into(),
        ));
    }
    if cases.is_empty() || cases.iter().any(|c| !(1..=2).contains(c)) {
        return Err(Error::InvalidInput(
            "cases must be non-empty with entries in {1, 2}".into(),
        ));
    }
    if reps == 0 {
        return Err(Error::InvalidInput("reps must be at least 1".into()));
    }
    if reps > u32::MAX as usize {
        return Err(Error::InvalidInput("reps must fit in 32 bits".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!(
            "alpha must lie strictly between 0 and 1, got {alpha}"
        )));
    }
    Ok(())
}

/// One experiment cell and metric value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub process: u8,
    pub case: u8,
    pub a: usize,
    pub n: usize,
    pub c: f64,
    pub reps: usize,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
}

/// All rows of a size or power run, in grid order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    /// Looks up one cell's metric value.
    pub fn value(
        &self,
        process: u8,
        case: u8,
        a: usize,
        n: usize,
        metric: &str,
    ) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| {
                r.process == process
                    && r.case == case
                    && r.a == a
                    && r.n == n
                    && r.metric == metric
            })
            .map(|r| r.value)
    }

    /// As [`value`](Self::value), additionally matching the block constant.
    pub fn value_at_c(
        &self,
        process: u8,
        case: u8,
        a: usize,
        n: usize,
        c: f64,
        metric: &str,
    ) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| {
                r.process == process
                    && r.case == case
                    && r.a == a
                    && r.n == n
                    && r.c == c
                    && r.metric == metric
            })
            .map(|r| r.value)
    }

    /// Writes the report as CSV with columns
    /// `process,case,a,n,c,reps,seed,metric,value`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in &self.rows {
            w.serialize(row).map_err(|e| {
                Error::InvalidInput(format!("failed to serialize report row: {e}"))
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf)
            .map_err(|e| Error::InvalidInput(format!("report is not UTF-8: {e}")))
    }
}

/// Draws the panel for one replication, redrawing from a fresh stream on a
/// numerical abort (GARCH positivity). Stream ids encode (attempt, rep) so
/// the result does not depend on the experiment's replication count.
fn generate_panel(spec: &ProcessSpec, seed: u64, rep: u64) -> Result<CompletePanel> {
    let mut last = Error::Numerical("replication retry budget exhausted".into());
    for attempt in 0..RETRY_LIMIT {
        let stream = RngStream::new(seed, (attempt << 32) | rep);
        match assemble_panel(spec, stream) {
            Err(Error::Numerical(msg)) => last = Error::Numerical(msg),
            other => return other,
        }
    }
    Err(last)
}

/// Runs the empirical-size experiment: for every grid cell, the fraction
/// of replications whose p-value falls below `alpha` under the
/// homogeneous null. Deterministic given `seed`.
pub fn run_size(exp: &SizeExperiment, seed: u64) -> Result<ExperimentReport> {
    exp.validate()?;
    let mut rows = Vec::new();
    for &process in &exp.processes {
        for &case in &exp.cases {
            for &a in &exp.group_counts {
                for &n in &exp.lengths {
                    let spec = ProcessSpec::benchmark(
                        process,
                        case,
                        a,
                        n,
                        vec![0.0; a],
                        0.0,
                        exp.burn_in,
                    )?;
                    // distinct constants often share a block length; windows
                    // are computed once per unique b
                    let blocks: Vec<usize> = exp
                        .block_constants
                        .iter()
                        .map(|&c| block_length(n, &BlockRule::with_constant(c)))
                        .collect::<Result<_>>()?;
                    let mut unique = blocks.clone();
                    unique.sort_unstable();
                    unique.dedup();

                    let zero = || vec![0u64; unique.len()];
                    let counts = (0..exp.reps as u64)
                        .into_par_iter()
                        .map(|rep| {
                            let panel = generate_panel(&spec, seed, rep)?;
                            let stat = statistic(&panel)?;
                            unique
                                .iter()
                                .map(|&b| {
                                    let windows = subsample_statistics(&panel, b)?;
                                    let p = p_value(stat.value, &windows);
                                    Ok(u64::from(p < exp.alpha && stat.value > 0.0))
                                })
                                .collect::<Result<Vec<u64>>>()
                        })
                        .try_reduce(zero, |mut acc, one| {
                            for (x, y) in acc.iter_mut().zip(&one) {
                                *x += y;
                            }
                            Ok(acc)
                        })?;

                    for (&c, &b) in exp.block_constants.iter().zip(&blocks) {
                        let idx = unique.binary_search(&b).expect("b came from unique");
                        rows.push(ReportRow {
                            process,
                            case,
                            a,
                            n,
                            c,
                            reps: exp.reps,
                            seed,
                            metric: METRIC_SIZE.into(),
                            value: counts[idx] as f64 / exp.reps as f64,
                        });
                    }
                }
            }
        }
    }
    Ok(ExperimentReport { rows })
}

/// The target of the power experiment, derived from the true effects: the
/// correct first split (largest gap in the sorted true means) and the
/// correct final partition (maximal sets of equal effects).
#[derive(Debug, Clone)]
struct Truth {
    first_split: (BTreeSet<String>, BTreeSet<String>),
    partition: BTreeSet<BTreeSet<String>>,
}

fn derive_truth(effects: &[f64]) -> Result<Truth> {
    let labels: Vec<String> = (1..=effects.len()).map(|i| format!("Area_{i}")).collect();
    let split = split_at_largest_gap(&labels, effects)?;
    let as_set = |xs: &[String]| xs.iter().cloned().collect::<BTreeSet<_>>();
    let mut partition: BTreeSet<BTreeSet<String>> = BTreeSet::new();
    for (i, &e) in effects.iter().enumerate() {
        let class: BTreeSet<String> = effects
            .iter()
            .enumerate()
            .filter(|&(_, x)| *x == e)
            .map(|(j, _)| labels[j].clone())
            .collect();
        if i == 0 || !partition.contains(&class) {
            partition.insert(class);
        }
    }
    Ok(Truth {
        first_split: (as_set(split.left()), as_set(split.right())),
        partition,
    })
}

/// Per-replication outcomes feeding the four power metrics.
#[derive(Debug, Clone, Copy, Default)]
struct RepOutcome {
    /// Root test rejected and the first split matched the truth.
    reject_and_correct: bool,
    /// Among correctly split replications, at least one second-stage test
    /// rejected (a stage-two false rejection under the benchmark truth).
    second_stage_reject: bool,
    /// Final partition equals the true one as a set of sets.
    correct_clustering: bool,
}

fn node_rejected(node: &ClusterNode) -> bool {
    node.split_index.is_some()
}

fn rep_outcome(
    panel: &CompletePanel,
    truth: &Truth,
    rule: &BlockRule,
    alpha: f64,
) -> Result<RepOutcome> {
    let result = cluster(panel, rule, alpha)?;
    let root = &result.root;

    let mut outcome = RepOutcome::default();
    if let Some(split) = root.split_index {
        let left: BTreeSet<String> = root.member_labels[..split].iter().cloned().collect();
        let right: BTreeSet<String> = root.member_labels[split..].iter().cloned().collect();
        let correct = (left == truth.first_split.0 && right == truth.first_split.1)
            || (left == truth.first_split.1 && right == truth.first_split.0);
        outcome.reject_and_correct = correct;
        if correct {
            let children = root.children.as_ref().expect("split node has children");
            outcome.second_stage_reject =
                node_rejected(&children.0) || node_rejected(&children.1);
        }
    }
    let final_partition: BTreeSet<BTreeSet<String>> = result
        .final_groups
        .iter()
        .map(|g| g.iter().cloned().collect())
        .collect();
    outcome.correct_clustering = final_partition == truth.partition;
    Ok(outcome)
}

/// Runs the power/clustering experiment. Per cell it reports four metrics:
///
/// - `reject_and_correct_split`: fraction of replications rejecting at the
///   root with the correct first split,
/// - `second_stage_size`: among those, the fraction where at least one of
///   the two second-stage tests rejected (0 when none qualified),
/// - `correct_first_split_count`: the number of correctly split
///   replications (the previous metric's denominator),
/// - `correct_clustering`: fraction whose final partition is exactly the
///   true grouping.
///
/// Deterministic given `seed`.
pub fn run_power(exp: &PowerExperiment, seed: u64) -> Result<ExperimentReport> {
    exp.validate()?;
    let truth = derive_truth(&exp.effects)?;
    let a = exp.effects.len();
    let rule = BlockRule::with_constant(exp.block_constant);
    let mut rows = Vec::new();
    for &process in &exp.processes {
        for &case in &exp.cases {
            for &n in &exp.lengths {
                let spec = ProcessSpec::benchmark(
                    process,
                    case,
                    a,
                    n,
                    exp.effects.clone(),
                    0.0,
                    exp.burn_in,
                )?;
                let counts = (0..exp.reps as u64)
                    .into_par_iter()
                    .map(|rep| -> Result<[u64; 3]> {
                        let panel = generate_panel(&spec, seed, rep)?;
                        let o = rep_outcome(&panel, &truth, &rule, exp.alpha)?;
                        Ok([
                            u64::from(o.reject_and_correct),
                            u64::from(o.second_stage_reject),
                            u64::from(o.correct_clustering),
                        ])
                    })
                    .try_reduce(
                        || [0u64; 3],
                        |mut acc, one| {
                            for (x, y) in acc.iter_mut().zip(&one) {
                                *x += y;
                            }
                            Ok(acc)
                        },
                    )?;

                let [split_count, second_stage, clustering] = counts;
                let second_stage_rate = if split_count > 0 {
                    second_stage as f64 / split_count as f64
                } else {
                    0.0
                };
                let metrics = [
                    (METRIC_REJECT_AND_SPLIT, split_count as f64 / exp.reps as f64),
                    (METRIC_SECOND_STAGE, second_stage_rate),
                    (METRIC_SPLIT_COUNT, split_count as f64),
                    (METRIC_CLUSTERING, clustering as f64 / exp.reps as f64),
                ];
                for (metric, value) in metrics {
                    rows.push(ReportRow {
                        process,
                        case,
                        a,
                        n,
                        c: exp.block_constant,
                        reps: exp.reps,
                        seed,
                        metric: metric.into(),
                        value,
                    });
                }
            }
        }
    }
    Ok(ExperimentReport { rows })
}
