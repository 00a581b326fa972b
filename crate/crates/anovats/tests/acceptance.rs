//! Acceptance checks for the distribution-level guarantees of the crate:
//! block rule arithmetic, agreement with naive definitions, decision-form
//! equivalence, invariances, Monte Carlo size and power bands, generator
//! moments, and preprocessing closed forms.
//!
//! Every test prints one PASS line with the measured quantities; run with
//! `cargo test --test acceptance -- --nocapture` to see them. Assertion
//! messages start with FAIL so a red run names the violated bound.

use std::time::Instant;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use anovats::harness::{run_power, run_size, PowerExperiment, SizeExperiment};
use anovats::posthoc::split_at_largest_gap;
use anovats::preprocess::{aggregate_seasons, impute_with_model, ArModel};
use anovats::simgen::{
    assemble_panel, draw_innovations, Dependence, InnovationFamily, InnovationSpec,
    ProcessSpec, RngStream, DEFAULT_BURN_IN,
};
use anovats::testing::{
    block_length, quantile_decision, small_n_guarantee, subsample_statistics, test,
    BlockRule,
};
use anovats::{CompletePanel, Panel};

fn random_panel(rng: &mut StdRng, a: usize, n: usize, p: usize) -> CompletePanel {
    let labels = (1..=a).map(|i| format!("g{i}")).collect();
    let values: Vec<f64> = (0..a * n * p).map(|_| rng.gen_range(-5.0..5.0)).collect();
    CompletePanel::from_values(labels, n, p, values).unwrap()
}

fn rel_close(x: f64, y: f64, tol: f64) -> bool {
    if x == y {
        return true;
    }
    (x - y).abs() <= tol * x.abs().max(y.abs())
}

/// Plain-loop transcription of the definitions: full statistic, one
/// rescaled statistic per window, and the strict-exceedance fraction.
/// Deliberately free of the library's summation helpers.
fn naive_all(panel: &CompletePanel, b: usize) -> (f64, Vec<f64>, f64) {
    let (a, n, p) = (panel.num_groups(), panel.num_times(), panel.dim());
    let mut group_means = vec![vec![0.0; p]; a];
    for i in 0..a {
        for d in 0..p {
            let mut s = 0.0;
            for t in 0..n {
                s += panel.value(i, t, d);
            }
            group_means[i][d] = s / n as f64;
        }
    }
    let mut grand = vec![0.0; p];
    for d in 0..p {
        let mut s = 0.0;
        for i in 0..a {
            for t in 0..n {
                s += panel.value(i, t, d);
            }
        }
        grand[d] = s / (a as f64 * n as f64);
    }
    let mut ss = 0.0;
    for i in 0..a {
        for d in 0..p {
            let diff = group_means[i][d] - grand[d];
            ss += diff * diff;
        }
    }
    let t_n = n as f64 * ss;

    let factor = b as f64 / (1.0 - b as f64 / n as f64);
    let mut windows = Vec::new();
    for t0 in 0..=(n - b) {
        let mut wss = 0.0;
        for d in 0..p {
            let mut w_group = vec![0.0; a];
            for i in 0..a {
                let mut s = 0.0;
                for t in t0..t0 + b {
                    s += panel.value(i, t, d);
                }
                w_group[i] = s / b as f64;
            }
            let mut w_grand = 0.0;
            for i in 0..a {
                w_grand += w_group[i];
            }
            w_grand /= a as f64;
            for i in 0..a {
                let diff = w_group[i] - w_grand;
                wss += diff * diff;
            }
        }
        windows.push(factor * wss);
    }

    let mut exceed = 0usize;
    for &w in &windows {
        if w > t_n {
            exceed += 1;
        }
    }
    let p_n = exceed as f64 / windows.len() as f64;
    (t_n, windows, p_n)
}

#[test]
fn block_length_checkpoints() {
    let rule = BlockRule::default();
    let b15 = block_length(15, &rule).unwrap();
    let b36 = block_length(36, &rule).unwrap();
    assert_eq!(b15, 6, "FAIL: block length at n=15, c=2.5 must be 6, got {b15}");
    assert_eq!(b36, 8, "FAIL: block length at n=36, c=2.5 must be 8, got {b36}");
    println!("PASS block length checkpoints: b(15) = {b15}, b(36) = {b36}");
}

#[test]
fn small_sample_guarantee_boundary() {
    let rule = BlockRule::default();
    for n in 3..=26 {
        assert!(
            small_n_guarantee(n, &rule, 0.05).unwrap(),
            "FAIL: one exceedance must keep p above 0.05 at n = {n}"
        );
    }
    for n in 27..=60 {
        assert!(
            !small_n_guarantee(n, &rule, 0.05).unwrap(),
            "FAIL: the single-exceedance guarantee must lapse at n = {n}"
        );
    }
    println!(
        "PASS small-sample guarantee: holds for every n in 3..=26, lapses from n = 27 on"
    );
}

#[test]
fn matches_naive_transcription_on_random_panels() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(20_240_301);
    let rule = BlockRule::default();
    for k in 0..1000 {
        let a = rng.gen_range(2..=10);
        let n = rng.gen_range(5..=60);
        let p = rng.gen_range(1..=3);
        let panel = random_panel(&mut rng, a, n, p);
        let b = block_length(n, &rule).unwrap();
        let (t_naive, w_naive, p_naive) = naive_all(&panel, b);

        let result = test(&panel, &rule, 0.05).unwrap();
        assert!(
            rel_close(result.statistic, t_naive, 1e-12),
            "FAIL: panel {k} (a={a}, n={n}, p={p}): statistic {} vs naive {t_naive}",
            result.statistic
        );
        let windows = subsample_statistics(&panel, b).unwrap();
        assert_eq!(windows.len(), w_naive.len(), "FAIL: window count differs on panel {k}");
        for (t0, (w, nw)) in windows.iter().zip(&w_naive).enumerate() {
            assert!(
                rel_close(*w, *nw, 1e-12),
                "FAIL: panel {k} window {t0}: {w} vs naive {nw}"
            );
        }
        assert!(
            rel_close(result.p_value, p_naive, 1e-12),
            "FAIL: panel {k}: p {} vs naive {p_naive}",
            result.p_value
        );
    }
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 10.0, "FAIL: naive-comparison sweep took {secs:.1} s, bound is 10 s");
    println!(
        "PASS naive-transcription agreement: 1000 random panels matched to 1e-12 \
         relative in {secs:.2} s"
    );
}

#[test]
fn quantile_and_p_value_decisions_agree() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(8_675_309);
    let rule = BlockRule::default();
    let mut checked = 0usize;
    for _ in 0..1000 {
        let a = rng.gen_range(2..=10);
        let n = rng.gen_range(5..=60);
        let p = rng.gen_range(1..=3);
        let panel = random_panel(&mut rng, a, n, p);
        let b = block_length(n, &rule).unwrap();
        let windows = subsample_statistics(&panel, b).unwrap();
        let m = windows.len() as f64;
        // levels probing every achievable p boundary plus conventional ones
        let mut alphas = vec![0.01, 0.05, 0.1, 0.5, 0.99];
        alphas.extend((1..windows.len()).map(|j| j as f64 / m));
        for alpha in alphas {
            let r = test(&panel, &rule, alpha).unwrap();
            let q = quantile_decision(r.statistic, &windows, alpha);
            assert_eq!(
                r.reject, q,
                "FAIL: decisions split at a={a}, n={n}, p={p}, alpha={alpha}: \
                 p-value form {} vs quantile form {q}",
                r.reject
            );
            checked += 1;
        }
    }

    // engineered exact ties: constant groups with b = n/2 make every window
    // statistic equal T_n bit for bit, and a constant panel makes them all 0
    for n in [8usize, 12, 20, 40] {
        let series: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64; n]).collect();
        let labels = (1..=4).map(|i| format!("g{i}")).collect();
        let panel = CompletePanel::from_series(labels, series).unwrap();
        let tie_rule = BlockRule::with_override(n / 2);
        let windows = subsample_statistics(&panel, n / 2).unwrap();
        let r = test(&panel, &tie_rule, 0.05).unwrap();
        assert!(
            windows.iter().all(|&w| w == r.statistic),
            "FAIL: tie construction broke at n={n}"
        );
        for alpha in [0.01, 0.05, 0.5, 0.99] {
            let q = quantile_decision(r.statistic, &windows, alpha);
            let r = test(&panel, &tie_rule, alpha).unwrap();
            assert_eq!(r.reject, q, "FAIL: decisions split on all-tied windows at n={n}");
            checked += 1;
        }

        let flat = CompletePanel::from_series(
            vec!["g1".into(), "g2".into()],
            vec![vec![0.0; n], vec![0.0; n]],
        )
        .unwrap();
        let windows = subsample_statistics(&flat, n / 2).unwrap();
        let r = test(&flat, &tie_rule, 0.05).unwrap();
        let q = quantile_decision(r.statistic, &windows, 0.05);
        assert_eq!(r.reject, q, "FAIL: decisions split on the constant panel at n={n}");
        checked += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 10.0, "FAIL: decision-agreement sweep took {secs:.1} s, bound is 10 s");
    println!(
        "PASS decision-form agreement: {checked} (panel, level) pairs, ties included, \
         in {secs:.2} s"
    );
}

#[test]
fn location_scale_and_permutation_invariance() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(4_242_424);
    let rule = BlockRule::default();

    let rebuild = |panel: &CompletePanel, f: &dyn Fn(f64) -> f64| -> CompletePanel {
        let (a, n, p) = (panel.num_groups(), panel.num_times(), panel.dim());
        let values: Vec<f64> = (0..a)
            .flat_map(|i| {
                (0..n).flat_map(move |t| (0..p).map(move |d| (i, t, d)))
            })
            .map(|(i, t, d)| f(panel.value(i, t, d)))
            .collect();
        CompletePanel::from_values(panel.as_panel().labels().to_vec(), n, p, values).unwrap()
    };

    for _ in 0..200 {
        let a = rng.gen_range(2..=8);
        let n = rng.gen_range(6..=50);
        let p = rng.gen_range(1..=2);
        let panel = random_panel(&mut rng, a, n, p);
        let base = test(&panel, &rule, 0.05).unwrap();

        let shift = rng.gen_range(-100.0..100.0);
        let shifted = test(&rebuild(&panel, &|x| x + shift), &rule, 0.05).unwrap();
        assert_eq!(
            base.p_value, shifted.p_value,
            "FAIL: p-value moved under location shift {shift} (a={a}, n={n}, p={p})"
        );

        let scale: f64 = rng.gen_range(0.01..50.0);
        let scaled = test(&rebuild(&panel, &|x| scale * x), &rule, 0.05).unwrap();
        assert!(
            rel_close(scaled.statistic, scale * scale * base.statistic, 1e-12),
            "FAIL: statistic must scale by s^2: s={scale}, T={}, sT={}",
            base.statistic,
            scaled.statistic
        );
        assert_eq!(
            base.p_value, scaled.p_value,
            "FAIL: p-value moved under scaling by {scale} (a={a}, n={n}, p={p})"
        );

        let mut order: Vec<usize> = (0..a).collect();
        order.shuffle(&mut rng);
        let permuted = test(&panel.select_groups(&order).unwrap(), &rule, 0.05).unwrap();
        assert!(
            rel_close(permuted.statistic, base.statistic, 1e-12),
            "FAIL: statistic moved under group permutation {order:?}"
        );
        assert_eq!(
            base.p_value, permuted.p_value,
            "FAIL: p-value moved under group permutation {order:?}"
        );
    }
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 5.0, "FAIL: invariance sweep took {secs:.1} s, bound is 5 s");
    println!(
        "PASS invariances: location, scale, and group permutation hold on 200 panels \
         each in {secs:.2} s"
    );
}

#[test]
fn empirical_size_stays_in_band() {
    let start = Instant::now();
    let exp = SizeExperiment {
        processes: vec![1],
        cases: vec![1],
        group_counts: vec![3],
        lengths: vec![100],
        block_constants: vec![2.5],
        reps: 1000,
        ..SizeExperiment::default()
    };
    // one worker thread so the wall-clock bound is measured unassisted
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let report = pool.install(|| run_size(&exp, 42)).unwrap();
    let size = report.value(1, 1, 3, 100, "size").unwrap();
    let secs = start.elapsed().as_secs_f64();
    assert!(
        (0.03..=0.08).contains(&size),
        "FAIL: empirical size {size} escapes [0.03, 0.08] at nominal 0.05"
    );
    assert!(secs < 60.0, "FAIL: size run took {secs:.1} s single-threaded, bound is 60 s");
    println!(
        "PASS empirical size: {size:.3} over 1000 replications at nominal 0.05 \
         (single-threaded, {secs:.1} s)"
    );
}

#[test]
fn power_and_clustering_benchmarks() {
    let start = Instant::now();
    let long = PowerExperiment {
        processes: vec![1],
        cases: vec![1],
        lengths: vec![100],
        reps: 1000,
        ..PowerExperiment::default()
    };
    let report = run_power(&long, 42).unwrap();
    let correct = report.value(1, 1, 6, 100, "correct_clustering").unwrap();
    assert!(
        correct >= 0.8,
        "FAIL: correct-clustering probability {correct} below 0.8 at n = 100"
    );

    let short = PowerExperiment {
        processes: vec![1, 2],
        cases: vec![1],
        lengths: vec![20],
        reps: 1000,
        ..PowerExperiment::default()
    };
    let report = run_power(&short, 42).unwrap();
    let gauss = report.value(1, 1, 6, 20, "reject_and_correct_split").unwrap();
    let heavy = report.value(2, 1, 6, 20, "reject_and_correct_split").unwrap();
    assert!(
        heavy < gauss,
        "FAIL: heavy-tailed innovations must lower first-stage power at n = 20: \
         t {heavy} vs Gaussian {gauss}"
    );
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 180.0, "FAIL: power runs took {secs:.1} s, bound is 180 s");
    println!(
        "PASS power and clustering: correct clustering {correct:.3} at n = 100; \
         first-stage power {heavy:.3} (t) < {gauss:.3} (Gaussian) at n = 20 ({secs:.1} s)"
    );
}

#[test]
fn largest_gap_walkthroughs() {
    let labels: Vec<String> =
        ["Area_1", "Area_2", "Area_3", "Area_4"].iter().map(|s| s.to_string()).collect();
    let means = [-0.064, 1.88, 1.75, 3.87];
    let split = split_at_largest_gap(&labels, &means).unwrap();
    let rounded: Vec<f64> = split.gaps.iter().map(|g| (g * 100.0).round() / 100.0).collect();
    assert_eq!(
        rounded,
        vec![1.81, 0.13, 1.99],
        "FAIL: four-area gaps must round to (1.81, 0.13, 1.99), got {rounded:?}"
    );
    assert_eq!(
        (split.left(), split.right()),
        (&["Area_1".to_string(), "Area_3".into(), "Area_2".into()][..], &["Area_4".to_string()][..]),
        "FAIL: four-area split must isolate Area_4"
    );

    let areas: Vec<String> = ["Sk1", "Ger3", "OSN", "FG", "UKN2", "NorC", "NCNS"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let biomass = [2.57, 2.95, 3.20, 3.37, 4.14, 4.32, 4.34];
    let split = split_at_largest_gap(&areas, &biomass).unwrap();
    assert_eq!(
        (split.left(), split.right()),
        (&areas[..4], &areas[4..]),
        "FAIL: seven-area split must separate the first four means from the last three"
    );
    println!(
        "PASS largest-gap walkthroughs: gaps {rounded:?} isolate Area_4; the seven \
         biomass means split 4 | 3"
    );
}

#[test]
fn generator_moments() {
    let start = Instant::now();
    let n = 100_000usize;

    let spec = ProcessSpec::benchmark(1, 1, 3, n, vec![0.0; 3], 0.0, DEFAULT_BURN_IN).unwrap();
    let panel = assemble_panel(&spec, RngStream::new(7, 0)).unwrap();
    let x: Vec<f64> = (0..n).map(|t| panel.value(0, t, 0)).collect();
    let mean = x.iter().sum::<f64>() / n as f64;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let lag1 = (0..n - 1).map(|t| (x[t] - mean) * (x[t + 1] - mean)).sum::<f64>()
        / (n - 1) as f64;
    assert!(
        (var - 1.25).abs() <= 0.02,
        "FAIL: moving-average variance {var} outside 1.25 +/- 0.02"
    );
    assert!(
        (lag1 - 0.5).abs() <= 0.02,
        "FAIL: moving-average lag-1 autocovariance {lag1} outside 0.5 +/- 0.02"
    );

    let spec = ProcessSpec::benchmark(4, 1, 3, n, vec![0.0; 3], 0.0, DEFAULT_BURN_IN).unwrap();
    let panel = assemble_panel(&spec, RngStream::new(11, 0)).unwrap();
    let x: Vec<f64> = (0..n).map(|t| panel.value(0, t, 0)).collect();
    let mean = x.iter().sum::<f64>() / n as f64;
    let garch_var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    assert!(
        (garch_var - 1.0 / 0.85).abs() <= 0.05,
        "FAIL: GARCH unconditional variance {garch_var} outside 1.176 +/- 0.05"
    );

    let innov = InnovationSpec {
        family: InnovationFamily::Gaussian,
        dependence: Dependence::AdjacentCorrelated,
        dim: 3,
    };
    let rows = draw_innovations(&innov, n, RngStream::new(13, 0)).unwrap();
    let (m0, m1) = rows.iter().fold((0.0, 0.0), |(a, b), r| (a + r[0], b + r[1]));
    let (m0, m1) = (m0 / n as f64, m1 / n as f64);
    let (mut c00, mut c11, mut c01) = (0.0, 0.0, 0.0);
    for r in &rows {
        c00 += (r[0] - m0) * (r[0] - m0);
        c11 += (r[1] - m1) * (r[1] - m1);
        c01 += (r[0] - m0) * (r[1] - m1);
    }
    let corr = c01 / (c00 * c11).sqrt();
    assert!(
        (corr - 0.5).abs() <= 0.02,
        "FAIL: adjacent innovation correlation {corr} outside 0.5 +/- 0.02"
    );

    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 30.0, "FAIL: moment checks took {secs:.1} s, bound is 30 s");
    println!(
        "PASS generator moments: MA variance {var:.4}, lag-1 {lag1:.4}, GARCH variance \
         {garch_var:.4}, adjacent correlation {corr:.4} ({secs:.1} s)"
    );
}

#[test]
fn preprocessing_closed_forms() {
    // interior gap with both neighbors observed: the smoothed value is the
    // two-sided AR(1) conditional mean
    let (phi, mu) = (0.6, 2.0);
    let model = ArModel { order: 1, coefficients: vec![phi], innovation_variance: 0.7, mean: mu };
    let series: Vec<f64> = (0..40).map(|t| mu + (t as f64 * 0.9).sin()).collect();
    let mut missing = vec![false; 40];
    missing[17] = true;
    let filled = impute_with_model(&series, &missing, &model).unwrap();
    let expected = mu + phi * ((series[16] - mu) + (series[18] - mu)) / (1.0 + phi * phi);
    assert!(
        (filled[17] - expected).abs() <= 1e-8,
        "FAIL: AR(1) gap value {} differs from the closed form {expected}",
        filled[17]
    );

    for x in [0.1, 0.5, 1.0, std::f64::consts::E, 10.0, 123.456] {
        let y = anovats::preprocess::boxcox::transform(x, 0.0);
        assert!(
            y == x.ln(),
            "FAIL: zero-lambda transform of {x} must equal ln exactly, got {y}"
        );
    }

    let months: Vec<String> = (2013..=2021)
        .flat_map(|y| (1..=12).map(move |m| format!("{y}-{m:02}")))
        .collect();
    let n = months.len();
    let values: Vec<f64> = (0..2 * n).map(|k| k as f64).collect();
    let monthly = Panel::new(
        vec!["north".into(), "south".into()],
        Some(months),
        n,
        1,
        values,
        vec![false; 2 * n],
    )
    .unwrap();
    let quarterly = aggregate_seasons(&monthly).unwrap();
    assert_eq!(
        quarterly.num_times(),
        36,
        "FAIL: nine years of months must give 36 quarters, got {}",
        quarterly.num_times()
    );
    println!(
        "PASS preprocessing closed forms: AR(1) gap matches the two-sided conditional \
         mean, zero-lambda transform is ln, nine years aggregate to 36 quarters"
    );
}
