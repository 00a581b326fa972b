use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use anovats::error::{Error, Result};
use anovats::harness::{run_power, run_size, PowerExperiment, SizeExperiment};
use anovats::panel::{self, Layout, Panel};
use anovats::posthoc;
use anovats::preprocess::{aggregate_seasons, impute_panel, LambdaGrid};
use anovats::simgen::{assemble_panel, ProcessSpec, RngStream, DEFAULT_BURN_IN};
use anovats::testing::{self, BlockRule};

/// Homogeneity testing for short multivariate time-series panels:
/// subsampling test, post-hoc clustering, generators, Monte Carlo
/// experiments, and preprocessing.
#[derive(Parser)]
#[command(name = "anovats", version, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct TestOpts {
    /// Input CSV path.
    #[arg(long)]
    input: PathBuf,
    /// Input layout: `long` (area,time[,dim],value) or `wide` (one column
    /// per area).
    #[arg(long, default_value = "long")]
    layout: Layout,
    /// Significance level, strictly between 0 and 1.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Block length constant: b = floor(c * n^(1/3)), clamped to [2, n-1].
    #[arg(long, default_value_t = 2.5)]
    c: f64,
    /// Explicit block length, overriding the constant rule (still clamped).
    #[arg(long)]
    b: Option<usize>,
    /// First time label to keep (default: the panel's first).
    #[arg(long)]
    from: Option<String>,
    /// Last time label to keep (default: the panel's last).
    #[arg(long)]
    to: Option<String>,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PreprocessOpts {
    /// Monthly long CSV with YYYY-MM time labels.
    #[arg(long)]
    input: PathBuf,
    /// Output path for the completed quarterly long CSV. A JSON sidecar
    /// with the fitted models lands next to it as `<output>.models.json`.
    #[arg(long)]
    output: PathBuf,
    /// Drop areas whose missing fraction after aggregation exceeds this.
    #[arg(long, default_value_t = 0.5)]
    max_missing_fraction: f64,
    /// Largest AR order considered for imputation.
    #[arg(long, default_value_t = 5)]
    max_order: usize,
    /// First time label to keep, applied before aggregation.
    #[arg(long)]
    from: Option<String>,
    /// Last time label to keep, applied before aggregation.
    #[arg(long)]
    to: Option<String>,
}

#[derive(Args)]
struct SimulateOpts {
    /// Config file of `key = value` lines (`#` comments). Keys: process
    /// (1-4), case (1-2), a, n, effects (comma-separated, length a), mu,
    /// burn_in.
    #[arg(long)]
    input: PathBuf,
    /// RNG seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV path (wide layout); stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SizeOpts {
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// RNG seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Replications per grid cell (default: 200 full grid, 50 quick).
    #[arg(long)]
    reps: Option<usize>,
    /// Reduced grid: process 1, case 1, a=3, n in {20,50}, c=2.5.
    #[arg(long)]
    quick: bool,
    /// Significance level.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Replace the block-constant grid with this single value.
    #[arg(long)]
    c: Option<f64>,
}

#[derive(Args)]
struct PowerOpts {
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// RNG seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Replications per grid cell (default: 200 full grid, 50 quick).
    #[arg(long)]
    reps: Option<usize>,
    /// Reduced grid: process 1, case 1, n in {20,50}.
    #[arg(long)]
    quick: bool,
    /// Significance level.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Block length constant.
    #[arg(long)]
    c: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Test the panel for group homogeneity.
    Test(TestOpts),
    /// Test, then recursively cluster the groups (univariate panels).
    Cluster(TestOpts),
    /// Aggregate monthly data to seasons and impute missing values.
    Preprocess(PreprocessOpts),
    /// Generate a synthetic panel from a process config.
    Simulate(SimulateOpts),
    /// Empirical size experiment over the block-constant grid.
    Size(SizeOpts),
    /// Power and clustering-accuracy experiment.
    Power(PowerOpts),
}

fn main() {
    let cli = Cli::parse();
    configure_threads();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

/// ANOVATS_THREADS caps the rayon pool used by the experiment commands.
fn configure_threads() {
    if let Ok(v) = std::env::var("ANOVATS_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring ANOVATS_THREADS={v}; expected a positive integer"),
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Test(opts) => cmd_test(opts),
        Command::Cluster(opts) => cmd_cluster(opts),
        Command::Preprocess(opts) => cmd_preprocess(opts),
        Command::Simulate(opts) => cmd_simulate(opts),
        Command::Size(opts) => cmd_size(opts),
        Command::Power(opts) => cmd_power(opts),
    }
}

/// Formats with 6 significant digits for human-facing lines; JSON and CSV
/// keep full precision.
fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

fn block_rule(c: f64, b: Option<usize>) -> BlockRule {
    match b {
        Some(b) => BlockRule::with_override(b),
        None => BlockRule::with_constant(c),
    }
}

fn load_panel(
    input: &Path,
    layout: Layout,
    from: &Option<String>,
    to: &Option<String>,
) -> Result<Panel> {
    let panel = panel::read_csv(input, layout)?;
    restrict(panel, from, to)
}

fn restrict(panel: Panel, from: &Option<String>, to: &Option<String>) -> Result<Panel> {
    if from.is_none() && to.is_none() {
        return Ok(panel);
    }
    let labels = panel.time_index().ok_or_else(|| {
        Error::InvalidInput(
            "--from/--to need a labeled time index; this input has none".into(),
        )
    })?;
    let first = labels.first().expect("panels are non-empty").clone();
    let last = labels.last().expect("panels are non-empty").clone();
    let from = from.clone().unwrap_or(first);
    let to = to.clone().unwrap_or(last);
    panel::restrict_time(&panel, &from, &to)
}

fn write_or_print(output: &Option<PathBuf>, content: &str) -> Result<()> {
    match output {
        Some(path) => {
            fs::write(path, content)?;
            Ok(())
        }
        None => {
            io::stdout().write_all(content.as_bytes())?;
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidInput(format!("JSON encoding failed: {e}")))
}

fn cmd_test(opts: TestOpts) -> Result<()> {
    let panel = load_panel(&opts.input, opts.layout, &opts.from, &opts.to)?;
    let complete = panel.complete()?;
    let rule = block_rule(opts.c, opts.b);
    let result = testing::test(&complete, &rule, opts.alpha)?;
    let json = to_json(&result)?;
    let verdict = if result.reject {
        "reject homogeneity"
    } else {
        "no evidence against homogeneity"
    };
    match &opts.output {
        Some(path) => fs::write(path, json + "\n")?,
        None => println!("{json}"),
    }
    println!(
        "T = {}, b = {}, p = {} at alpha = {}: {verdict}",
        sig6(result.statistic),
        result.b,
        sig6(result.p_value),
        sig6(result.alpha),
    );
    Ok(())
}

fn cmd_cluster(opts: TestOpts) -> Result<()> {
    let panel = load_panel(&opts.input, opts.layout, &opts.from, &opts.to)?;
    let complete = panel.complete()?;
    let rule = block_rule(opts.c, opts.b);
    let result = posthoc::cluster(&complete, &rule, opts.alpha)?;
    if let Some(path) = &opts.output {
        fs::write(path, to_json(&result)? + "\n")?;
    }
    print!("{}", result.render_text());
    Ok(())
}

fn cmd_preprocess(opts: PreprocessOpts) -> Result<()> {
    let monthly = panel::read_csv(&opts.input, Layout::Long)?;
    let monthly = restrict(monthly, &opts.from, &opts.to)?;
    let quarterly = aggregate_seasons(&monthly)?;
    let kept = panel::drop_incomplete_groups(&quarterly, opts.max_missing_fraction)?;
    let dropped = quarterly.num_groups() - kept.num_groups();
    let (completed, models) = impute_panel(&kept, &LambdaGrid::default(), opts.max_order)?;
    panel::write_csv(&completed, &opts.output, Layout::Long)?;
    let sidecar = sidecar_path(&opts.output);
    fs::write(&sidecar, to_json(&models)? + "\n")?;
    let imputed = models.iter().filter(|m| m.ar_model.is_some()).count();
    println!(
        "{} areas x {} quarters written to {} ({} dropped, {} imputed)",
        completed.num_groups(),
        completed.num_times(),
        opts.output.display(),
        dropped,
        imputed,
    );
    println!("models sidecar: {}", sidecar.display());
    Ok(())
}

fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".models.json");
    output.with_file_name(name)
}

fn cmd_simulate(opts: SimulateOpts) -> Result<()> {
    let text = fs::read_to_string(&opts.input)?;
    let spec = parse_sim_config(&text)?;
    let panel = assemble_panel(&spec, RngStream::new(opts.seed, 0))?;
    let mut buf = Vec::new();
    panel::write_csv_writer(&panel, &mut buf, Layout::Wide)?;
    let csv = String::from_utf8(buf)
        .map_err(|e| Error::InvalidInput(format!("CSV is not UTF-8: {e}")))?;
    write_or_print(&opts.output, &csv)
}

/// Parses `key = value` lines into a benchmark process spec. Accepted
/// keys: process, case, a, n, effects, mu, burn_in.
fn parse_sim_config(text: &str) -> Result<ProcessSpec> {
    let mut process: u8 = 1;
    let mut case: u8 = 1;
    let mut a: Option<usize> = None;
    let mut n: Option<usize> = None;
    let mut effects: Option<Vec<f64>> = None;
    let mut mu: f64 = 0.0;
    let mut burn_in: usize = DEFAULT_BURN_IN;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |what: &str| {
            Error::InvalidInput(format!("config line {}: {what}", lineno + 1))
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad("expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "process" => process = value.parse().map_err(|_| bad("process must be 1..=4"))?,
            "case" => case = value.parse().map_err(|_| bad("case must be 1 or 2"))?,
            "a" => a = Some(value.parse().map_err(|_| bad("a must be a positive integer"))?),
            "n" => n = Some(value.parse().map_err(|_| bad("n must be a positive integer"))?),
            "effects" => {
                let parsed: std::result::Result<Vec<f64>, _> =
                    value.split(',').map(|v| v.trim().parse::<f64>()).collect();
                effects =
                    Some(parsed.map_err(|_| bad("effects must be comma-separated numbers"))?);
            }
            "mu" => mu = value.parse().map_err(|_| bad("mu must be a number"))?,
            "burn_in" => {
                burn_in = value.parse().map_err(|_| bad("burn_in must be an integer"))?
            }
            other => return Err(bad(&format!("unknown key `{other}`"))),
        }
    }
    let n = n.ok_or_else(|| Error::InvalidInput("config must set n".into()))?;
    let a = match (a, &effects) {
        (Some(a), Some(e)) if e.len() != a => {
            return Err(Error::InvalidInput(format!(
                "a = {a} but effects has {} entries",
                e.len()
            )))
        }
        (Some(a), _) => a,
        (None, Some(e)) => e.len(),
        (None, None) => return Err(Error::InvalidInput("config must set a or effects".into())),
    };
    let effects = effects.unwrap_or_else(|| vec![0.0; a]);
    ProcessSpec::benchmark(process, case, a, n, effects, mu, burn_in)
}

fn cmd_size(opts: SizeOpts) -> Result<()> {
    let mut exp = if opts.quick { SizeExperiment::quick() } else { SizeExperiment::default() };
    if let Some(reps) = opts.reps {
        exp.reps = reps;
    }
    exp.alpha = opts.alpha;
    if let Some(c) = opts.c {
        exp.block_constants = vec![c];
    }
    let report = run_size(&exp, opts.seed)?;
    write_or_print(&opts.output, &report.to_csv_string()?)
}

fn cmd_power(opts: PowerOpts) -> Result<()> {
    let mut exp = if opts.quick { PowerExperiment::quick() } else { PowerExperiment::default() };
    if let Some(reps) = opts.reps {
        exp.reps = reps;
    }
    exp.alpha = opts.alpha;
    if let Some(c) = opts.c {
        exp.block_constant = c;
    }
    let report = run_power(&exp, opts.seed)?;
    write_or_print(&opts.output, &report.to_csv_string()?)
}
