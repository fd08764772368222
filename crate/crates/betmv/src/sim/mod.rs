//! Monte Carlo experiment harness: data generators, rejection-rate and
//! growth-trajectory runners, and their text serializations.
//!
//! Reproducibility contract: every experiment is driven by a ChaCha8 stream
//! cipher seeded with the experiment seed, and run `r` draws from stream
//! `r` (`ChaCha8Rng::set_stream`). Runs therefore consume independent,
//! position-addressable substreams: parallel and serial execution produce
//! bit-identical results, and rerunning a configuration reproduces it
//! exactly.
//!
//! Generators include two alternative families (the Normal-Laplace
//! alternation and a moment-parameterized beta) and the four extremal null
//! members that attain the shape-class tail bounds; the latter double as
//! oracles for calibration tests, since their rejection frequencies are
//! known exactly.

pub mod dist;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::eprocess::{BettingStrategy, EProcess, EProcessError};
use crate::evidence::{EvidenceError, Hypothesis, Sidedness};
use crate::pcombine::{self, PCombineError, PVector};
use crate::sig12;

/// Errors from experiment configuration or execution.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("generator parameters invalid: {0}")]
    InvalidGenerator(&'static str),
    #[error("experiment configuration invalid: {0}")]
    InvalidConfig(&'static str),
    #[error("method {method} requires {requirement}")]
    MethodMismatch {
        method: &'static str,
        requirement: &'static str,
    },
    #[error(transparent)]
    EProcess(#[from] EProcessError),
    #[error(transparent)]
    PCombine(#[from] PCombineError),
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
}

/// Beta shape parameters recovered from a mean and variance:
///
/// ```text
/// alpha = mean (mean - mean^2 - var) / var
/// beta  = (mean^2 + var - mean)(mean - 1) / var
/// ```
///
/// Requires `0 < mean < 1` and `0 < var < mean (1 - mean)`.
pub fn beta_params(mean: f64, variance: f64) -> Result<(f64, f64), SimError> {
    if !(mean > 0.0 && mean < 1.0) {
        return Err(SimError::InvalidGenerator("beta mean must be in (0, 1)"));
    }
    let cap = mean * (1.0 - mean);
    if !(variance > 0.0 && variance < cap) {
        return Err(SimError::InvalidGenerator(
            "beta variance must be in (0, mean (1 - mean))",
        ));
    }
    let alpha = mean * (mean - mean * mean - variance) / variance;
    let beta = (mean * mean + variance - mean) * (mean - 1.0) / variance;
    Ok((alpha, beta))
}

/// Mixture parameters for the unimodal extremal null with atom location
/// `a`: atom weight `p` solving `a^2 = (3 - 3p) / (3p + 2 - p^2)` (written
/// in its cancellation-free form) and uniform right endpoint
/// `b = a (1 + p) / (1 - p)`.
fn unimodal_mixture_params(a: f64) -> (f64, f64) {
    let a2 = a * a;
    let disc = (17.0 * a2 * a2 + 6.0 * a2 + 9.0).sqrt();
    let p = 2.0 * (3.0 - 2.0 * a2) / (3.0 * a2 + 3.0 + disc);
    let b = a * (1.0 + p) / (1.0 - p);
    (p, b)
}

/// Data-generating process for one experiment run.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    /// Alternates Normal (odd 1-based indices) and Laplace (even indices)
    /// observations, both with the given mean and variance.
    NormalLaplace { mean: f64, variance: f64 },
    /// Beta distribution parameterized by its mean and variance.
    BetaMeanVar { mean: f64, variance: f64 },
    /// Two-point null attaining the Cantelli bound at level `alpha`:
    /// `sqrt((1-alpha)/alpha)` w.p. `alpha`, else `-sqrt(alpha/(1-alpha))`.
    ExtremalPlain { alpha: f64 },
    /// Three-point symmetric null attaining the symmetric bound at level
    /// `alpha <= 1/2`: `+-(2 alpha)^{-1/2}` w.p. `alpha` each, else 0.
    ExtremalSymmetric { alpha: f64 },
    /// Atom at `-a` plus uniform on `[-a, b]`, the unimodal extremal
    /// construction (mean zero, variance below one, e-value mean approaching
    /// one as `a` shrinks).
    ExtremalUnimodal { a: f64 },
    /// Atom at zero plus uniform on `[-b, b]` with `P(X > 0) = p <= 1/2`
    /// and `b = sqrt(3/(2p))`; unit variance, attains the
    /// unimodal-symmetric bound at the level matched by `p`.
    ExtremalUnimodalSymmetric { p: f64 },
    /// Draws the first `break_index` observations from `pre`, the rest from
    /// `post`.
    RegimeShift {
        pre: Box<Generator>,
        post: Box<Generator>,
        break_index: usize,
    },
}

impl Generator {
    pub fn validate(&self) -> Result<(), SimError> {
        match self {
            Generator::NormalLaplace { mean, variance } => {
                if !mean.is_finite() || !variance.is_finite() || *variance <= 0.0 {
                    return Err(SimError::InvalidGenerator(
                        "normal-laplace needs finite mean and positive variance",
                    ));
                }
            }
            Generator::BetaMeanVar { mean, variance } => {
                beta_params(*mean, *variance)?;
            }
            Generator::ExtremalPlain { alpha } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(SimError::InvalidGenerator(
                        "extremal-plain level must be in (0, 1)",
                    ));
                }
            }
            Generator::ExtremalSymmetric { alpha } => {
                if !(*alpha > 0.0 && *alpha <= 0.5) {
                    return Err(SimError::InvalidGenerator(
                        "extremal-symmetric level must be in (0, 1/2]",
                    ));
                }
            }
            Generator::ExtremalUnimodal { a } => {
                if !(*a > 0.0 && *a < 1.0) {
                    return Err(SimError::InvalidGenerator(
                        "extremal-unimodal atom must be in (0, 1)",
                    ));
                }
            }
            Generator::ExtremalUnimodalSymmetric { p } => {
                if !(*p > 0.0 && *p <= 0.5) {
                    return Err(SimError::InvalidGenerator(
                        "extremal-unimodal-symmetric tail mass must be in (0, 1/2]",
                    ));
                }
            }
            Generator::RegimeShift { pre, post, .. } => {
                pre.validate()?;
                post.validate()?;
            }
        }
        Ok(())
    }

    /// Stable identifier for CSV output.
    pub fn name(&self) -> &'static str {
        match self {
            Generator::NormalLaplace { .. } => "nl",
            Generator::BetaMeanVar { .. } => "beta",
            Generator::ExtremalPlain { .. } => "extremal-plain",
            Generator::ExtremalSymmetric { .. } => "extremal-symmetric",
            Generator::ExtremalUnimodal { .. } => "extremal-unimodal",
            Generator::ExtremalUnimodalSymmetric { .. } => "extremal-us",
            Generator::RegimeShift { .. } => "regime-shift",
        }
    }

    /// Compact `key=value` parameter rendering (no commas, CSV-safe).
    pub fn param_string(&self) -> String {
        match self {
            Generator::NormalLaplace { mean, variance }
            | Generator::BetaMeanVar { mean, variance } => {
                format!("mean={mean};var={variance}")
            }
            Generator::ExtremalPlain { alpha } | Generator::ExtremalSymmetric { alpha } => {
                format!("alpha={alpha}")
            }
            Generator::ExtremalUnimodal { a } => format!("a={a}"),
            Generator::ExtremalUnimodalSymmetric { p } => format!("p={p}"),
            Generator::RegimeShift {
                pre,
                post,
                break_index,
            } => format!(
                "break={break_index};pre={}[{}];post={}[{}]",
                pre.name(),
                pre.param_string(),
                post.name(),
                post.param_string()
            ),
        }
    }

    /// Analytic mean and variance of one observation, when well defined
    /// (`RegimeShift` mixes two laws over time, so it has none).
    pub fn moments(&self) -> Option<(f64, f64)> {
        match self {
            Generator::NormalLaplace { mean, variance }
            | Generator::BetaMeanVar { mean, variance } => Some((*mean, *variance)),
            Generator::ExtremalPlain { .. }
            | Generator::ExtremalSymmetric { .. }
            | Generator::ExtremalUnimodalSymmetric { .. } => Some((0.0, 1.0)),
            Generator::ExtremalUnimodal { a } => {
                let (p, b) = unimodal_mixture_params(*a);
                let uniform_second = (a * a - a * b + b * b) / 3.0;
                Some((0.0, a * a * p + (1.0 - p) * uniform_second))
            }
            Generator::RegimeShift { .. } => None,
        }
    }

    /// Draws the observation at 1-based position `index` of a run.
    /// Precondition: the generator has been validated.
    pub fn sample<R: RngCore>(&self, index: usize, rng: &mut R) -> f64 {
        match self {
            Generator::NormalLaplace { mean, variance } => {
                if index % 2 == 1 {
                    dist::sample_normal(rng, *mean, variance.sqrt())
                } else {
                    dist::sample_laplace(rng, *mean, (variance / 2.0).sqrt())
                }
            }
            Generator::BetaMeanVar { mean, variance } => {
                let (alpha, beta) =
                    beta_params(*mean, *variance).expect("generator validated before sampling");
                dist::sample_beta(rng, alpha, beta)
            }
            Generator::ExtremalPlain { alpha } => {
                let u = dist::uniform_open01(rng);
                if u < *alpha {
                    ((1.0 - alpha) / alpha).sqrt()
                } else {
                    -(alpha / (1.0 - alpha)).sqrt()
                }
            }
            Generator::ExtremalSymmetric { alpha } => {
                let u = dist::uniform_open01(rng);
                let spike = 1.0 / (2.0 * alpha).sqrt();
                if u < *alpha {
                    spike
                } else if u < 2.0 * alpha {
                    -spike
                } else {
                    0.0
                }
            }
            Generator::ExtremalUnimodal { a } => {
                let (p, b) = unimodal_mixture_params(*a);
                let u = dist::uniform_open01(rng);
                if u < p {
                    -a
                } else {
                    -a + dist::uniform_open01(rng) * (a + b)
                }
            }
            Generator::ExtremalUnimodalSymmetric { p } => {
                let b = (3.0 / (2.0 * p)).sqrt();
                let u = dist::uniform_open01(rng);
                if u < 2.0 * p {
                    -b + dist::uniform_open01(rng) * 2.0 * b
                } else {
                    0.0
                }
            }
            Generator::RegimeShift {
                pre,
                post,
                break_index,
            } => {
                if index <= *break_index {
                    pre.sample(index, rng)
                } else {
                    post.sample(index, rng)
                }
            }
        }
    }
}

/// Test procedure to run on each generated sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// One-sided e-process with the mixture strategy.
    EMixture,
    /// One-sided e-process with the e-GREE strategy.
    EGree,
    /// Fisher combination of the per-observation p-values.
    PFisher,
    /// Simes combination of the per-observation p-values.
    PSimes,
    /// Batch e-value on the sample mean.
    EBatch,
    /// Batch p-value on the sample mean.
    PBatch,
    /// Exact GRAPA e-process on raw `[0, 1]` observations.
    Grapa,
    /// Approximate (Taylor plug-in) GRAPA e-process.
    Agrapa,
    /// e-GREE on the interval (two-sided) e-value.
    EGree2s,
    /// Mixture strategy on the interval (two-sided) e-value.
    EMixture2s,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::EMixture => "e-mixture",
            Method::EGree => "e-gree",
            Method::PFisher => "p-fisher",
            Method::PSimes => "p-simes",
            Method::EBatch => "e-batch",
            Method::PBatch => "p-batch",
            Method::Grapa => "grapa",
            Method::Agrapa => "agrapa",
            Method::EGree2s => "e-gree-2s",
            Method::EMixture2s => "e-mixture-2s",
        }
    }

    /// Sequential methods produce a wealth trajectory; the rest are batch
    /// procedures evaluated once on the full sample.
    pub fn is_sequential(self) -> bool {
        matches!(
            self,
            Method::EMixture
                | Method::EGree
                | Method::Grapa
                | Method::Agrapa
                | Method::EGree2s
                | Method::EMixture2s
        )
    }
}

/// Full description of one rejection-rate experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub generator: Generator,
    /// Observations per run.
    pub n: usize,
    /// Monte Carlo repetitions.
    pub runs: usize,
    /// Rejection threshold for the e-side; p-methods reject at level
    /// `1/threshold`.
    pub threshold: f64,
    pub seed: u64,
    pub method: Method,
    pub hypothesis: Hypothesis<f64>,
    /// Stake grid for the mixture methods.
    pub mixture_grid: Vec<f64>,
    /// Stake cap for the e-GREE methods.
    pub gree_cap: f64,
    /// Loss-fraction bound for the GRAPA methods.
    pub grapa_c: f64,
}

impl SimConfig {
    /// Configuration with the standard strategy parameters (mixture grid
    /// `{0.01..0.20}`, e-GREE cap `1/2`, GRAPA bound `1/2`).
    pub fn new(
        generator: Generator,
        n: usize,
        runs: usize,
        threshold: f64,
        seed: u64,
        method: Method,
        hypothesis: Hypothesis<f64>,
    ) -> Self {
        Self {
            generator,
            n,
            runs,
            threshold,
            seed,
            method,
            hypothesis,
            mixture_grid: (1..=20).map(|k| k as f64 / 100.0).collect(),
            gree_cap: 0.5,
            grapa_c: 0.5,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.generator.validate()?;
        if self.n == 0 {
            return Err(SimError::InvalidConfig("n must be at least 1"));
        }
        if self.runs == 0 {
            return Err(SimError::InvalidConfig("runs must be at least 1"));
        }
        if !(self.threshold > 1.0) || !self.threshold.is_finite() {
            return Err(SimError::InvalidConfig("threshold must exceed 1"));
        }
        let one_sided = matches!(self.hypothesis.side(), Sidedness::OneSidedUpper);
        match self.method {
            Method::EMixture | Method::EGree | Method::PFisher | Method::PSimes
            | Method::EBatch | Method::PBatch => {
                if !one_sided {
                    return Err(SimError::MethodMismatch {
                        method: self.method.name(),
                        requirement: "a one-sided hypothesis",
                    });
                }
            }
            Method::EGree2s | Method::EMixture2s => {
                if one_sided {
                    return Err(SimError::MethodMismatch {
                        method: self.method.name(),
                        requirement: "a two-sided hypothesis",
                    });
                }
            }
            Method::Grapa | Method::Agrapa => {}
        }
        // Build one process up front so strategy and hypothesis errors
        // surface at configuration time, not mid-experiment.
        if self.method.is_sequential() {
            self.build_process()?;
        }
        Ok(())
    }

    fn strategy(&self) -> Option<BettingStrategy<f64>> {
        match self.method {
            Method::EMixture | Method::EMixture2s => Some(BettingStrategy::EMixture {
                grid: self.mixture_grid.clone(),
            }),
            Method::EGree | Method::EGree2s => Some(BettingStrategy::EGree {
                cap: self.gree_cap,
            }),
            Method::Grapa => Some(BettingStrategy::Grapa {
                c: self.grapa_c,
                exact: true,
            }),
            Method::Agrapa => Some(BettingStrategy::Agrapa { c: self.grapa_c }),
            _ => None,
        }
    }

    fn build_process(&self) -> Result<EProcess<f64>, SimError> {
        let strategy = self
            .strategy()
            .expect("only sequential methods build processes");
        Ok(EProcess::new(self.hypothesis, strategy)?)
    }
}

/// Aggregated outcome of a Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    /// Fraction of runs that rejected.
    pub rejection_rate: f64,
    /// Binomial standard error `sqrt(r (1 - r) / runs)`.
    pub standard_error: f64,
    /// Pointwise mean of `log M_t` across runs (trajectory mode only).
    pub avg_log_trajectory: Option<Vec<f64>>,
}

struct RunOutcome {
    rejected: bool,
    log_wealth: Option<Vec<f64>>,
}

fn run_once(config: &SimConfig, run_index: usize, record: bool) -> Result<RunOutcome, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(run_index as u64);
    let xs: Vec<f64> = (1..=config.n)
        .map(|i| config.generator.sample(i, &mut rng))
        .collect();

    if config.method.is_sequential() {
        let mut process = config.build_process()?;
        let mut rejected = false;
        let mut log_wealth = record.then(|| Vec::with_capacity(config.n));
        for &x in &xs {
            let w = process.update(x)?;
            if w >= config.threshold {
                rejected = true;
            }
            if let Some(traj) = log_wealth.as_mut() {
                traj.push(w.ln());
            }
        }
        return Ok(RunOutcome {
            rejected,
            log_wealth,
        });
    }

    let level = 1.0 / config.threshold;
    let spec = *config.hypothesis.spec();
    let shape = config.hypothesis.shape();
    let rejected = match config.method {
        Method::PFisher | Method::PSimes => {
            let mut ps = Vec::with_capacity(xs.len());
            for &x in &xs {
                ps.push(config.hypothesis.evidence(x)?.p);
            }
            let ps = PVector::new(ps)?;
            let combined = if config.method == Method::PFisher {
                pcombine::fisher_combine(&ps)
            } else {
                pcombine::simes_combine(&ps)
            };
            combined <= level
        }
        Method::EBatch => pcombine::e_batch(&xs, &spec, shape)? >= config.threshold,
        Method::PBatch => pcombine::p_batch(&xs, &spec, shape)? <= level,
        _ => unreachable!("sequential methods handled above"),
    };
    Ok(RunOutcome {
        rejected,
        log_wealth: None,
    })
}

fn aggregate(
    config: &SimConfig,
    outcomes: Vec<Result<RunOutcome, SimError>>,
    record: bool,
) -> Result<ExperimentResult, SimError> {
    let mut rejections = 0usize;
    let mut trajectory_sum = record.then(|| vec![0.0f64; config.n]);
    for outcome in outcomes {
        let outcome = outcome?;
        if outcome.rejected {
            rejections += 1;
        }
        if let (Some(sum), Some(traj)) = (trajectory_sum.as_mut(), outcome.log_wealth) {
            for (acc, v) in sum.iter_mut().zip(traj) {
                *acc += v;
            }
        }
    }
    let rate = rejections as f64 / config.runs as f64;
    let se = (rate * (1.0 - rate) / config.runs as f64).sqrt();
    let avg = trajectory_sum.map(|sum| {
        sum.into_iter()
            .map(|s| s / config.runs as f64)
            .collect::<Vec<_>>()
    });
    Ok(ExperimentResult {
        rejection_rate: rate,
        standard_error: se,
        avg_log_trajectory: avg,
    })
}

/// Runs the experiment and reports the rejection frequency.
///
/// Runs execute in parallel; outcomes are collected in run order and
/// reduced sequentially, so the result is bit-identical to a serial pass.
pub fn run_rejection_experiment(config: &SimConfig) -> Result<ExperimentResult, SimError> {
    config.validate()?;
    let outcomes: Vec<_> = (0..config.runs)
        .into_par_iter()
        .map(|r| run_once(config, r, false))
        .collect();
    aggregate(config, outcomes, false)
}

/// Runs the experiment recording the run-averaged `log M_t` trajectory.
/// Only sequential (e-process) methods have trajectories.
pub fn run_avg_log_trajectory(config: &SimConfig) -> Result<ExperimentResult, SimError> {
    config.validate()?;
    if !config.method.is_sequential() {
        return Err(SimError::MethodMismatch {
            method: config.method.name(),
            requirement: "a sequential e-process method for trajectories",
        });
    }
    let outcomes: Vec<_> = (0..config.runs)
        .into_par_iter()
        .map(|r| run_once(config, r, true))
        .collect();
    aggregate(config, outcomes, true)
}

/// One-row CSV summary (`method,shape,generator,param,n,runs,threshold,rate,se`).
pub fn rejection_csv(config: &SimConfig, result: &ExperimentResult) -> String {
    let mut out = String::from("method,shape,generator,param,n,runs,threshold,rate,se\n");
    out.push_str(&format!(
        "{},{},{},{},{},{},{},{},{}\n",
        config.method.name(),
        config.hypothesis.shape().name(),
        config.generator.name(),
        config.generator.param_string(),
        config.n,
        config.runs,
        sig12(config.threshold),
        sig12(result.rejection_rate),
        sig12(result.standard_error),
    ));
    out
}

/// Trajectory CSV (`t,mean_log_wealth`), one row per time step.
pub fn trajectory_csv(result: &ExperimentResult) -> Result<String, SimError> {
    let Some(trajectory) = &result.avg_log_trajectory else {
        return Err(SimError::InvalidConfig(
            "result carries no trajectory; run in trajectory mode",
        ));
    };
    let mut out = String::from("t,mean_log_wealth\n");
    for (t, v) in trajectory.iter().enumerate() {
        out.push_str(&format!("{},{}\n", t + 1, sig12(*v)));
    }
    Ok(out)
}
