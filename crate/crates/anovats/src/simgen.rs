//! Reproducible generators for the benchmark disturbance processes.
//!
//! Disturbances come in two kinds, each driven by an `a`-dimensional
//! innovation sequence `nu_t`:
//!
//! - moving average: `e_t = nu_t + Psi nu_{t-1}` (exact two-term
//!   convolution, one presample innovation),
//! - multivariate GARCH: `e_t = h_t^(1/2) . nu_t` elementwise, with
//!   `h_t = 1 + 0.1 Psi e_{t-1}^2 + 0.1 h_{t-1}`, started at the
//!   unconditional variance level and run through a burn-in period.
//!   Conditional variances are checked for positivity at every step; the
//!   recursion aborts rather than silently clipping.
//!
//! Innovation families: standard Gaussian, Student t with 5 degrees of
//! freedom (sampled as `z * sqrt(5 / chi2_5)`), and skew-normal with shape
//! 50, centered to mean zero via the `delta * sqrt(2/pi)` mean formula.
//! Coordinates are either independent or correlated with unit variance and
//! adjacent-pair correlation 0.5.
//!
//! Every generator is a pure function of an [`RngStream`]: the same seed
//! and stream id reproduce identical draws, distinct stream ids give
//! independent streams.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::CompletePanel;

/// Default GARCH burn-in length.
pub const DEFAULT_BURN_IN: usize = 500;

/// Skew-normal shape parameter used by [`InnovationFamily::SkewNormal50`].
const SKEW_SHAPE: f64 = 50.0;

/// Seeded, indexed source of randomness. Identical `(seed, stream_id)`
/// pairs reproduce identical draws; distinct stream ids are independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Marginal distribution of the innovations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnovationFamily {
    Gaussian,
    /// Student t with 5 degrees of freedom (centered, scale 1).
    StudentT5,
    /// Skew-normal with shape 50, centered to mean zero.
    SkewNormal50,
}

impl InnovationFamily {
    /// E[nu^2] for one coordinate; the GARCH recursion is initialized at
    /// the stationary variance level implied by this moment.
    pub fn second_moment(&self) -> f64 {
        match self {
            InnovationFamily::Gaussian => 1.0,
            InnovationFamily::StudentT5 => 5.0 / 3.0,
            InnovationFamily::SkewNormal50 => {
                let delta = skew_delta(SKEW_SHAPE);
                1.0 - (2.0 / PI) * delta * delta
            }
        }
    }
}

/// Cross-coordinate dependence of the innovations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dependence {
    /// Coordinates drawn independently.
    Independent,
    /// Unit variances with correlation 0.5 between adjacent coordinates.
    AdjacentCorrelated,
}

/// What to draw: family, dependence, and the coordinate count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InnovationSpec {
    pub family: InnovationFamily,
    pub dependence: Dependence,
    pub dim: usize,
}

/// Disturbance recursion applied on top of the innovations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisturbanceKind {
    Ma1,
    Garch,
}

/// Complete recipe for one simulated panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub kind: DisturbanceKind,
    /// `a x a` coefficient matrix of the disturbance recursion.
    pub psi: Vec<Vec<f64>>,
    pub innovation: InnovationSpec,
    /// Group effects, `a x p`; re-centered to sum to zero per coordinate
    /// when the panel is assembled.
    pub effects: Vec<Vec<f64>>,
    /// Common mean, one entry per coordinate.
    pub mu: Vec<f64>,
    /// Panel length.
    pub n: usize,
    /// GARCH burn-in (ignored for the moving-average kind).
    pub burn_in: usize,
}

impl ProcessSpec {
    pub fn num_groups(&self) -> usize {
        self.psi.len()
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.psi.len();
        if a == 0 {
            return Err(Error::InvalidInput("psi matrix is empty".into()));
        }
        for row in &self.psi {
            if row.len() != a {
                return Err(Error::InvalidInput(format!(
                    "psi must be square: {a} rows but a row of length {}",
                    row.len()
                )));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput("psi entries must be finite".into()));
            }
        }
        if self.innovation.dim != a {
            return Err(Error::InvalidInput(format!(
                "innovation dimension {} does not match psi dimension {a}",
                self.innovation.dim
            )));
        }
        if self.effects.len() != a {
            return Err(Error::InvalidInput(format!(
                "expected {a} effect rows, got {}",
                self.effects.len()
            )));
        }
        let p = self.mu.len();
        if p == 0 {
            return Err(Error::InvalidInput("mu must have at least one coordinate".into()));
        }
        for row in &self.effects {
            if row.len() != p {
                return Err(Error::InvalidInput(format!(
                    "effect rows must have {p} coordinates, got {}",
                    row.len()
                )));
            }
        }
        if self.n == 0 {
            return Err(Error::InvalidInput("panel length n must be positive".into()));
        }
        if self.kind == DisturbanceKind::Garch && self.burn_in < 100 {
            return Err(Error::InvalidInput(format!(
                "GARCH burn-in must be at least 100, got {}",
                self.burn_in
            )));
        }
        Ok(())
    }

    /// One of the standard benchmark designs: processes 1-3 are
    /// moving-average disturbances with Gaussian, t, and skew-normal
    /// innovations; process 4 is GARCH with Gaussian innovations. Case 1
    /// uses `Psi = 0.5 I` and independent coordinates; case 2 uses a
    /// block-diagonal `Psi` of 3x3 blocks with adjacent-correlated
    /// coordinates and requires `a` divisible by 3. `effects` has one entry
    /// per group (univariate panels).
    pub fn benchmark(
        process: u8,
        case: u8,
        a: usize,
        n: usize,
        effects: Vec<f64>,
        mu: f64,
        burn_in: usize,
    ) -> Result<ProcessSpec> {
        let (kind, family) = match process {
            1 => (DisturbanceKind::Ma1, InnovationFamily::Gaussian),
            2 => (DisturbanceKind::Ma1, InnovationFamily::StudentT5),
            3 => (DisturbanceKind::Ma1, InnovationFamily::SkewNormal50),
            4 => (DisturbanceKind::Garch, InnovationFamily::Gaussian),
            other => {
                return Err(Error::InvalidInput(format!(
                    "process must be 1..=4, got {other}"
                )))
            }
        };
        if effects.len() != a {
            return Err(Error::InvalidInput(format!(
                "expected {a} effects, got {}",
                effects.len()
            )));
        }
        let (psi, dependence) = match case {
            1 => {
                let psi = (0..a)
                    .map(|i| (0..a).map(|j| if i == j { 0.5 } else { 0.0 }).collect())
                    .collect();
                (psi, Dependence::Independent)
            }
            2 => {
                if a % 3 != 0 {
                    return Err(Error::InvalidInput(format!(
                        "case 2 requires the group count to be divisible by 3, got a = {a}"
                    )));
                }
                let block = [[0.7, 0.0, 0.0], [0.0, -0.5, 0.0], [0.3, 0.1, 0.3]];
                let mut psi = vec![vec![0.0; a]; a];
                for blk in 0..a / 3 {
                    for r in 0..3 {
                        for c in 0..3 {
                            psi[blk * 3 + r][blk * 3 + c] = block[r][c];
                        }
                    }
                }
                (psi, Dependence::AdjacentCorrelated)
            }
            other => {
                return Err(Error::InvalidInput(format!("case must be 1 or 2, got {other}")))
            }
        };
        Ok(ProcessSpec {
            kind,
            psi,
            innovation: InnovationSpec { family, dependence, dim: a },
            effects: effects.into_iter().map(|e| vec![e]).collect(),
            mu: vec![mu],
            n,
            burn_in,
        })
    }
}

fn skew_delta(shape: f64) -> f64 {
    shape / (1.0 + shape * shape).sqrt()
}

/// Unit-diagonal covariance with 0.5 on the first off-diagonals.
fn adjacent_sigma(a: usize) -> DMatrix<f64> {
    DMatrix::from_fn(a, a, |i, j| {
        if i == j {
            1.0
        } else if i.abs_diff(j) == 1 {
            0.5
        } else {
            0.0
        }
    })
}

fn cholesky_factor(matrix: DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    matrix
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::Numerical(format!("{what} is not positive definite")))
}

/// Per-row sampler, fixed at construction so repeated rows share the
/// factorizations.
enum RowSampler {
    GaussianIid(usize),
    GaussianCorrelated(DMatrix<f64>),
    StudentIid(usize, ChiSquared<f64>),
    StudentCorrelated(DMatrix<f64>, ChiSquared<f64>),
    SkewIid(usize, f64),
    /// delta vector, Cholesky factor of (Sigma - delta delta'), mean shift
    SkewCorrelated(DVector<f64>, DMatrix<f64>),
}

impl RowSampler {
    fn build(spec: &InnovationSpec) -> Result<RowSampler> {
        if spec.dim == 0 {
            return Err(Error::InvalidInput("innovation dimension must be positive".into()));
        }
        let a = spec.dim;
        let chi5 = || {
            ChiSquared::new(5.0)
                .map_err(|e| Error::Numerical(format!("chi-squared setup failed: {e}")))
        };
        Ok(match (spec.family, spec.dependence) {
            (InnovationFamily::Gaussian, Dependence::Independent) => RowSampler::GaussianIid(a),
            (InnovationFamily::Gaussian, Dependence::AdjacentCorrelated) => {
                RowSampler::GaussianCorrelated(cholesky_factor(
                    adjacent_sigma(a),
                    "adjacent correlation matrix",
                )?)
            }
            (InnovationFamily::StudentT5, Dependence::Independent) => {
                RowSampler::StudentIid(a, chi5()?)
            }
            (InnovationFamily::StudentT5, Dependence::AdjacentCorrelated) => {
                RowSampler::StudentCorrelated(
                    cholesky_factor(adjacent_sigma(a), "adjacent correlation matrix")?,
                    chi5()?,
                )
            }
            (InnovationFamily::SkewNormal50, Dependence::Independent) => {
                RowSampler::SkewIid(a, skew_delta(SKEW_SHAPE))
            }
            (InnovationFamily::SkewNormal50, Dependence::AdjacentCorrelated) => {
                let sigma = adjacent_sigma(a);
                let alpha = DVector::from_element(a, SKEW_SHAPE);
                let sa = &sigma * &alpha;
                let denom = (1.0 + alpha.dot(&sa)).sqrt();
                let delta = sa / denom;
                let reduced = &sigma - &delta * delta.transpose();
                let factor =
                    cholesky_factor(reduced, "skew-normal conditional covariance")?;
                RowSampler::SkewCorrelated(delta, factor)
            }
        })
    }

    fn sample(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let normal = |rng: &mut ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };
        match self {
            RowSampler::GaussianIid(a) => {
                for x in out.iter_mut().take(*a) {
                    *x = normal(rng);
                }
            }
            RowSampler::GaussianCorrelated(l) => {
                let z = DVector::from_fn(l.nrows(), |_, _| normal(rng));
                let v = l * z;
                out.copy_from_slice(v.as_slice());
            }
            RowSampler::StudentIid(a, chi5) => {
                for x in out.iter_mut().take(*a) {
                    let z = normal(rng);
                    let w = chi5.sample(rng);
                    *x = z * (5.0 / w).sqrt();
                }
            }
            RowSampler::StudentCorrelated(l, chi5) => {
                let z = DVector::from_fn(l.nrows(), |_, _| normal(rng));
                let g = l * z;
                let w = chi5.sample(rng);
                let scale = (5.0 / w).sqrt();
                for (x, gi) in out.iter_mut().zip(g.iter()) {
                    *x = gi * scale;
                }
            }
            RowSampler::SkewIid(a, delta) => {
                let spread = (1.0 - delta * delta).sqrt();
                let shift = delta * (2.0 / PI).sqrt();
                for x in out.iter_mut().take(*a) {
                    let u0 = normal(rng);
                    let u1 = normal(rng);
                    *x = delta * u0.abs() + spread * u1 - shift;
                }
            }
            RowSampler::SkewCorrelated(delta, l) => {
                let u0 = normal(rng).abs();
                let z = DVector::from_fn(l.nrows(), |_, _| normal(rng));
                let g = l * z;
                let shift = (2.0 / PI).sqrt();
                for (j, x) in out.iter_mut().enumerate() {
                    *x = delta[j] * u0 + g[j] - shift * delta[j];
                }
            }
        }
    }
}

fn draw_rows(
    spec: &InnovationSpec,
    n_draws: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<f64>>> {
    let sampler = RowSampler::build(spec)?;
    let mut rows = vec![vec![0.0; spec.dim]; n_draws];
    for row in &mut rows {
        sampler.sample(rng, row);
    }
    Ok(rows)
}

/// Draws `n_draws` innovation rows (each of length `spec.dim`) from the
/// given stream.
pub fn draw_innovations(
    spec: &InnovationSpec,
    n_draws: usize,
    stream: RngStream,
) -> Result<Vec<Vec<f64>>> {
    draw_rows(spec, n_draws, &mut stream.rng())
}

/// Applies the moving-average recursion `e_t = nu_t + Psi nu_{t-1}` to an
/// innovation sequence, producing one fewer row than it was given.
pub fn ma1_filter(psi: &[Vec<f64>], innovations: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let a = psi.len();
    if innovations.len() < 2 {
        return Err(Error::InvalidInput(
            "the moving-average filter needs at least 2 innovation rows".into(),
        ));
    }
    if innovations.iter().any(|r| r.len() != a) {
        return Err(Error::InvalidInput(
            "innovation rows must match the psi dimension".into(),
        ));
    }
    let mut out = Vec::with_capacity(innovations.len() - 1);
    for t in 1..innovations.len() {
        let mut row = vec![0.0; a];
        for i in 0..a {
            let mut s = innovations[t][i];
            for j in 0..a {
                s += psi[i][j] * innovations[t - 1][j];
            }
            row[i] = s;
        }
        out.push(row);
    }
    Ok(out)
}

/// Disturbances and conditional variances from the GARCH recursion, one
/// row per innovation row.
#[derive(Debug, Clone)]
pub struct GarchPath {
    pub disturbances: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

/// Runs `h_t = 1 + 0.1 Psi e_{t-1}^2 + 0.1 h_{t-1}` with `h_0 = h0` and
/// `e_t = h_t^(1/2) . nu_t`, erroring if any conditional variance drops to
/// the machine-positive threshold (1e-12) or below.
pub fn garch_filter(
    psi: &[Vec<f64>],
    innovations: &[Vec<f64>],
    h0: &[f64],
) -> Result<GarchPath> {
    let a = psi.len();
    if h0.len() != a {
        return Err(Error::InvalidInput("h0 must match the psi dimension".into()));
    }
    if innovations.iter().any(|r| r.len() != a) {
        return Err(Error::InvalidInput(
            "innovation rows must match the psi dimension".into(),
        ));
    }
    let mut disturbances = Vec::with_capacity(innovations.len());
    let mut variances = Vec::with_capacity(innovations.len());
    let mut h = h0.to_vec();
    let mut e_sq = vec![0.0; a];
    for (t, nu) in innovations.iter().enumerate() {
        if t > 0 {
            let mut next = vec![0.0; a];
            for i in 0..a {
                let mut s = 1.0 + 0.1 * h[i];
                for j in 0..a {
                    s += 0.1 * psi[i][j] * e_sq[j];
                }
                next[i] = s;
            }
            h = next;
        }
        for (i, &hi) in h.iter().enumerate() {
            if !(hi > 1e-12) {
                return Err(Error::Numerical(format!(
                    "GARCH conditional variance for coordinate {} fell to {hi:e} at step {t}; \
                     psi row {:?} destabilizes the recursion",
                    i + 1,
                    psi[i]
                )));
            }
        }
        let mut e_row = vec![0.0; a];
        for i in 0..a {
            e_row[i] = h[i].sqrt() * nu[i];
            e_sq[i] = e_row[i] * e_row[i];
        }
        variances.push(h.clone());
        disturbances.push(e_row);
    }
    Ok(GarchPath { disturbances, variances })
}

/// Stationary level of the variance recursion, used to initialize `h`:
/// solves `(I - 0.1 m2 Psi - 0.1 I) h = 1` with `m2 = E[nu^2]`. Falls back
/// to the intercept-only level when the system is singular or gives a
/// non-positive solution.
fn stationary_variance_level(psi: &[Vec<f64>], m2: f64) -> Vec<f64> {
    let a = psi.len();
    let m = DMatrix::from_fn(a, a, |i, j| {
        let diag = if i == j { 0.9 } else { 0.0 };
        diag - 0.1 * m2 * psi[i][j]
    });
    let ones = DVector::from_element(a, 1.0);
    match m.lu().solve(&ones) {
        Some(h) if h.iter().all(|&x| x.is_finite() && x > 0.0) => h.as_slice().to_vec(),
        _ => vec![1.0 / 0.9; a],
    }
}

fn columns_per_coordinate(
    spec: &ProcessSpec,
    stream: RngStream,
    gen_one: impl Fn(&ProcessSpec, &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>>,
) -> Result<Vec<Vec<f64>>> {
    let (a, p, n) = (spec.num_groups(), spec.dim(), spec.n);
    let mut rng = stream.rng();
    let mut rows = vec![vec![0.0; a * p]; n];
    for d in 0..p {
        let e = gen_one(spec, &mut rng)?;
        for t in 0..n {
            for i in 0..a {
                rows[t][i * p + d] = e[t][i];
            }
        }
    }
    Ok(rows)
}

/// Generates `n` moving-average disturbance rows (`a * p` columns, column
/// `i*p + d` holding group `i`, coordinate `d`). Coordinates are generated
/// independently from consecutive draws of the same stream.
pub fn gen_ma1(spec: &ProcessSpec, stream: RngStream) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    if spec.kind != DisturbanceKind::Ma1 {
        return Err(Error::InvalidInput("spec kind is not the moving-average process".into()));
    }
    columns_per_coordinate(spec, stream, |spec, rng| {
        let nu = draw_rows(&spec.innovation, spec.n + 1, rng)?;
        ma1_filter(&spec.psi, &nu)
    })
}

/// Generates `n` GARCH disturbance rows (layout as in [`gen_ma1`]),
/// discarding `burn_in` initial steps per coordinate.
pub fn gen_garch(spec: &ProcessSpec, stream: RngStream) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    if spec.kind != DisturbanceKind::Garch {
        return Err(Error::InvalidInput("spec kind is not the GARCH process".into()));
    }
    let h0 = stationary_variance_level(&spec.psi, spec.innovation.family.second_moment());
    columns_per_coordinate(spec, stream, |spec, rng| {
        let nu = draw_rows(&spec.innovation, spec.burn_in + spec.n, rng)?;
        let path = garch_filter(&spec.psi, &nu, &h0)?;
        Ok(path.disturbances[spec.burn_in..].to_vec())
    })
}

/// Generates a complete panel: disturbances from the spec's process with
/// the re-centered effects and common mean added. Group labels are
/// `Area_1..Area_a`.
pub fn assemble_panel(spec: &ProcessSpec, stream: RngStream) -> Result<CompletePanel> {
    spec.validate()?;
    let e = match spec.kind {
        DisturbanceKind::Ma1 => gen_ma1(spec, stream)?,
        DisturbanceKind::Garch => gen_garch(spec, stream)?,
    };
    let (a, p, n) = (spec.num_groups(), spec.dim(), spec.n);

    // re-center the effects so they sum to zero per coordinate
    let mut centered = spec.effects.clone();
    for d in 0..p {
        let mean: f64 = spec.effects.iter().map(|row| row[d]).sum::<f64>() / a as f64;
        for row in &mut centered {
            row[d] -= mean;
        }
    }

    let labels: Vec<String> = (1..=a).map(|i| format!("Area_{i}")).collect();
    let mut values = vec![0.0; a * n * p];
    for i in 0..a {
        for t in 0..n {
            for d in 0..p {
                values[(i * n + t) * p + d] = spec.mu[d] + centered[i][d] + e[t][i * p + d];
            }
        }
    }
    CompletePanel::from_values(labels, n, p, values)
}
