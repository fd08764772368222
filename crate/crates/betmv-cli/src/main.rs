//! `betmv`: anytime-valid mean/variance testing from the command line.
//!
//! Subcommands: `evalue` (single-observation evidence), `eprocess` (run a
//! betting e-process over a data file), `simulate` (Monte Carlo rejection
//! rates and growth curves), `monitor` (loss monitoring on a price CSV),
//! and `combine` (p-value combination and batch statistics).
//!
//! Exit codes: 0 on success, 1 on domain or data errors, 2 on usage errors.
//! All numbers print with 12 significant digits; results go to stdout,
//! diagnostics to stderr.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use chrono::{Days, NaiveDate};
use clap::{Args, Parser, Subcommand, ValueEnum};

use betmv::eprocess::{first_crossing, BettingStrategy, EProcess};
use betmv::evidence::{Hypothesis, MeanVarSpec, ShapeClass};
use betmv::monitor::{self, ColumnSpec};
use betmv::pcombine::{self, PVector};
use betmv::sig12;
use betmv::sim::{self, Generator, Method, SimConfig};

/// Marker for flag-combination errors that should exit with the usage code.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(UsageError(msg.into()))
}

#[derive(Parser)]
#[command(
    name = "betmv",
    version,
    about = "Anytime-valid tests of means and variances: e-values, betting e-processes, and loss monitoring"
)]
struct Cli {
    /// Output format for results on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Base seed for random experiments.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for parallel simulation (default: one per core).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, ValueEnum)]
enum ShapeArg {
    Plain,
    Symmetric,
    Unimodal,
    #[value(name = "us", alias = "unimodal-symmetric")]
    Us,
}

impl From<ShapeArg> for ShapeClass {
    fn from(s: ShapeArg) -> Self {
        match s {
            ShapeArg::Plain => ShapeClass::Plain,
            ShapeArg::Symmetric => ShapeClass::Symmetric,
            ShapeArg::Unimodal => ShapeClass::Unimodal,
            ShapeArg::Us => ShapeClass::UnimodalSymmetric,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum StrategyArg {
    Mixture,
    Egree,
    Grapa,
    Agrapa,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    EMixture,
    EGree,
    PFisher,
    PSimes,
    EBatch,
    PBatch,
    Grapa,
    Agrapa,
    #[value(name = "e-gree-2s")]
    EGree2s,
    #[value(name = "e-mixture-2s")]
    EMixture2s,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::EMixture => Method::EMixture,
            MethodArg::EGree => Method::EGree,
            MethodArg::PFisher => Method::PFisher,
            MethodArg::PSimes => Method::PSimes,
            MethodArg::EBatch => Method::EBatch,
            MethodArg::PBatch => Method::PBatch,
            MethodArg::Grapa => Method::Grapa,
            MethodArg::Agrapa => Method::Agrapa,
            MethodArg::EGree2s => Method::EGree2s,
            MethodArg::EMixture2s => Method::EMixture2s,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum GenArg {
    Nl,
    Beta,
    ExtremalPlain,
    ExtremalSymmetric,
    ExtremalUnimodal,
    ExtremalUs,
    RegimeNl,
}

/// Null hypothesis flags shared by several subcommands. Passing both
/// `--lower` and `--upper` selects the two-sided (interval) null.
#[derive(Args)]
struct HypothesisArgs {
    /// Null mean bound.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    mu: f64,
    /// Null standard deviation bound.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Shape restriction on the null family.
    #[arg(long, value_enum, default_value_t = ShapeArg::Plain)]
    shape: ShapeArg,
    /// Lower end of a two-sided mean interval.
    #[arg(long, requires = "upper", conflicts_with_all = ["mu", "shape"],
          allow_hyphen_values = true)]
    lower: Option<f64>,
    /// Upper end of a two-sided mean interval.
    #[arg(long, requires = "lower", allow_hyphen_values = true)]
    upper: Option<f64>,
}

impl HypothesisArgs {
    fn build(&self) -> Result<Hypothesis<f64>> {
        match (self.lower, self.upper) {
            (Some(lo), Some(hi)) => Ok(Hypothesis::two_sided(lo, hi, self.sigma)?),
            _ => {
                let spec = MeanVarSpec::new(self.mu, self.sigma)?;
                Ok(Hypothesis::one_sided(spec, self.shape.into()))
            }
        }
    }

    fn is_two_sided(&self) -> bool {
        self.lower.is_some()
    }
}

/// Betting strategy flags shared by `eprocess` and `monitor`.
#[derive(Args)]
struct StrategyArgs {
    /// Betting strategy.
    #[arg(long, value_enum, default_value_t = StrategyArg::Mixture)]
    strategy: StrategyArg,
    /// Stake cap for the e-GREE strategy.
    #[arg(long, default_value_t = 0.5)]
    cap: f64,
    /// Stake-fraction bound c for the GRAPA strategies.
    #[arg(long, default_value_t = 0.5)]
    stake_bound: f64,
}

impl StrategyArgs {
    fn build(&self) -> BettingStrategy<f64> {
        match self.strategy {
            StrategyArg::Mixture => BettingStrategy::default_mixture(),
            StrategyArg::Egree => BettingStrategy::EGree { cap: self.cap },
            StrategyArg::Grapa => BettingStrategy::Grapa {
                c: self.stake_bound,
                exact: true,
            },
            StrategyArg::Agrapa => BettingStrategy::Agrapa {
                c: self.stake_bound,
            },
        }
    }
}

/// Rejection threshold flags: explicit `--thresholds` or `--alpha` (which
/// means the single threshold `1/alpha`).
#[derive(Args)]
struct ThresholdArgs {
    /// Comma-separated e-process thresholds.
    #[arg(long, value_delimiter = ',', default_values_t = [2.0, 5.0, 10.0, 20.0])]
    thresholds: Vec<f64>,
    /// Test level; translated to the threshold 1/alpha.
    #[arg(long, conflicts_with = "thresholds", value_parser = parse_alpha)]
    alpha: Option<f64>,
}

impl ThresholdArgs {
    fn effective(&self) -> Vec<f64> {
        match self.alpha {
            Some(a) => vec![1.0 / a],
            None => self.thresholds.clone(),
        }
    }
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s.parse().map_err(|_| format!("invalid level {s:?}"))?;
    if a > 0.0 && a < 1.0 {
        Ok(a)
    } else {
        Err("alpha must lie strictly between 0 and 1".to_string())
    }
}

#[derive(Subcommand)]
enum Command {
    /// E-value and p-value of a single observation.
    Evalue {
        /// The observation.
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[command(flatten)]
        hypothesis: HypothesisArgs,
    },
    /// Run a betting e-process over a file of observations.
    Eprocess {
        /// Input file: one observation per line, or a CSV (see --column).
        #[arg(long)]
        input: PathBuf,
        /// Read this CSV column instead of plain lines.
        #[arg(long)]
        column: Option<String>,
        #[command(flatten)]
        hypothesis: HypothesisArgs,
        #[command(flatten)]
        strategy: StrategyArgs,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        /// Also write the log-wealth trajectory to this CSV file.
        #[arg(long)]
        trajectory_out: Option<PathBuf>,
    },
    /// Monte Carlo rejection rates and average growth curves.
    Simulate {
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Data-generating process.
        #[arg(long, value_enum, default_value_t = GenArg::Nl)]
        gen: GenArg,
        /// Generator mean (nl, beta; pre-break mean for regime-nl).
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        gen_mean: f64,
        /// Generator variance (nl, beta, regime-nl).
        #[arg(long, default_value_t = 1.0)]
        gen_var: f64,
        /// Level parameter of the extremal plain/symmetric generators.
        #[arg(long)]
        gen_alpha: Option<f64>,
        /// Atom location of the extremal unimodal generator.
        #[arg(long)]
        gen_a: Option<f64>,
        /// Positive-tail mass of the extremal unimodal-symmetric generator.
        #[arg(long)]
        gen_p: Option<f64>,
        /// Post-break mean for regime-nl.
        #[arg(long, allow_hyphen_values = true)]
        post_mean: Option<f64>,
        /// Last observation index drawn from the pre-break law (regime-nl).
        #[arg(long)]
        break_index: Option<usize>,
        /// Observations per run.
        #[arg(long)]
        n: usize,
        /// Monte Carlo repetitions.
        #[arg(long, default_value_t = 1000)]
        runs: usize,
        /// Rejection threshold (p-methods reject at level 1/threshold).
        #[arg(long, default_value_t = 20.0, conflicts_with = "alpha")]
        threshold: f64,
        /// Test level; translated to the threshold 1/alpha.
        #[arg(long, value_parser = parse_alpha)]
        alpha: Option<f64>,
        #[command(flatten)]
        hypothesis: HypothesisArgs,
        /// Stake cap for the e-GREE methods.
        #[arg(long, default_value_t = 0.5)]
        cap: f64,
        /// Stake-fraction bound c for the GRAPA methods.
        #[arg(long, default_value_t = 0.5)]
        stake_bound: f64,
        /// Emit the run-averaged log-wealth curve instead of the rate.
        #[arg(long)]
        curve: bool,
    },
    /// Monitor a price series for loss-regime shifts.
    Monitor {
        /// Price CSV with a header row.
        #[arg(long)]
        prices: PathBuf,
        /// Header name of the date column.
        #[arg(long, default_value = "date")]
        date_column: String,
        /// Header name of the price column.
        #[arg(long, default_value = "close")]
        price_column: String,
        /// First date of the null estimation window (inclusive).
        #[arg(long)]
        window_from: NaiveDate,
        /// Last date of the null estimation window (inclusive).
        #[arg(long)]
        window_to: NaiveDate,
        /// First monitored date (default: the day after the window).
        #[arg(long)]
        test_from: Option<NaiveDate>,
        /// Last monitored date (default: end of data).
        #[arg(long)]
        test_to: Option<NaiveDate>,
        /// Monitor log losses -ln(S_next/S_prev) instead of fractional ones.
        #[arg(long)]
        log_losses: bool,
        /// Shape restriction for the estimated null.
        #[arg(long, value_enum, default_value_t = ShapeArg::Plain)]
        shape: ShapeArg,
        #[command(flatten)]
        strategy: StrategyArgs,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        /// Also write the dated log-wealth trajectory to this CSV file.
        #[arg(long)]
        trajectory_out: Option<PathBuf>,
    },
    /// Combine per-observation evidence into one number.
    Combine {
        /// Input file, one value per line: p-values for fisher/simes, raw
        /// observations for the batch methods.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        method: CombineMethod,
        #[command(flatten)]
        hypothesis: HypothesisArgs,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum CombineMethod {
    Fisher,
    Simes,
    EBatch,
    PBatch,
}

/// Fully rendered command result; nothing is printed until the command
/// has succeeded, so errors never leave partial output behind.
struct Output {
    stdout: String,
    files: Vec<(PathBuf, String)>,
}

impl Output {
    fn stdout_only(s: String) -> Self {
        Self {
            stdout: s,
            files: Vec::new(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        // Ignore the error when a pool already exists (tests call run twice).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    match run(&cli) {
        Ok(output) => {
            for (path, content) in &output.files {
                if let Err(err) = fs::write(path, content) {
                    eprintln!("error: cannot write {}: {err}", path.display());
                    return ExitCode::from(1);
                }
            }
            print!("{}", output.stdout);
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: &Cli) -> Result<Output> {
    match &cli.command {
        Command::Evalue { x, hypothesis } => cmd_evalue(cli.format, *x, hypothesis),
        Command::Eprocess {
            input,
            column,
            hypothesis,
            strategy,
            thresholds,
            trajectory_out,
        } => cmd_eprocess(
            cli.format,
            input,
            column.as_deref(),
            hypothesis,
            strategy,
            &thresholds.effective(),
            trajectory_out.as_deref(),
        ),
        Command::Simulate { .. } => cmd_simulate(cli),
        Command::Monitor {
            prices,
            date_column,
            price_column,
            window_from,
            window_to,
            test_from,
            test_to,
            log_losses,
            shape,
            strategy,
            thresholds,
            trajectory_out,
        } => cmd_monitor(MonitorParams {
            format: cli.format,
            prices,
            columns: ColumnSpec {
                date: date_column.clone(),
                price: price_column.clone(),
            },
            window_from: *window_from,
            window_to: *window_to,
            test_from: *test_from,
            test_to: *test_to,
            log_losses: *log_losses,
            shape: (*shape).into(),
            strategy: strategy.build(),
            thresholds: thresholds.effective(),
            trajectory_out: trajectory_out.as_deref(),
        }),
        Command::Combine {
            input,
            method,
            hypothesis,
        } => cmd_combine(cli.format, input, *method, hypothesis),
    }
}

fn cmd_evalue(format: Format, x: f64, hypothesis: &HypothesisArgs) -> Result<Output> {
    let evidence = hypothesis.build()?.evidence(x)?;
    let stdout = match format {
        Format::Csv => format!("e,p\n{},{}\n", sig12(evidence.e), sig12(evidence.p)),
        Format::Json => format!(
            "{{\"e\":{},\"p\":{}}}\n",
            sig12(evidence.e),
            sig12(evidence.p)
        ),
    };
    Ok(Output::stdout_only(stdout))
}

fn read_values_plain(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let value: f64 = trimmed
            .parse()
            .map_err(|_| anyhow!("line {}: cannot parse {trimmed:?} as a number", i + 1))?;
        values.push(value);
    }
    Ok(values)
}

fn read_values_column(path: &Path, column: &str) -> Result<Vec<f64>> {
    let file =
        fs::File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers()?.clone();
    let idx = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| anyhow!("column {column:?} not found in header"))?;
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record?;
        let raw = record.get(idx).unwrap_or("");
        let value: f64 = raw
            .parse()
            .map_err(|_| anyhow!("line {row}: cannot parse {raw:?} as a number"))?;
        values.push(value);
    }
    Ok(values)
}

fn cmd_eprocess(
    format: Format,
    input: &Path,
    column: Option<&str>,
    hypothesis: &HypothesisArgs,
    strategy: &StrategyArgs,
    thresholds: &[f64],
    trajectory_out: Option<&Path>,
) -> Result<Output> {
    let xs = match column {
        Some(col) => read_values_column(input, col)?,
        None => read_values_plain(input)?,
    };
    let wealth = EProcess::run(hypothesis.build()?, strategy.build(), &xs)?;
    let report = first_crossing(&wealth, thresholds)?;

    let stdout = match format {
        Format::Csv => report.to_csv(),
        Format::Json => {
            let rows: Vec<String> = report
                .thresholds
                .iter()
                .zip(&report.crossings)
                .map(|(t, c)| {
                    let idx = c.map_or("null".to_string(), |i| i.to_string());
                    format!("{{\"threshold\":{},\"crossing_index\":{idx}}}", sig12(*t))
                })
                .collect();
            format!("{{\"crossings\":[{}]}}\n", rows.join(","))
        }
    };

    let mut files = Vec::new();
    if let Some(path) = trajectory_out {
        let mut csv = String::from("t,log_wealth\n");
        for (t, w) in wealth.iter().enumerate() {
            let _ = writeln!(csv, "{},{}", t + 1, sig12(w.ln()));
        }
        files.push((path.to_path_buf(), csv));
    }
    Ok(Output { stdout, files })
}

fn cmd_simulate(cli: &Cli) -> Result<Output> {
    let Command::Simulate {
        method,
        gen,
        gen_mean,
        gen_var,
        gen_alpha,
        gen_a,
        gen_p,
        post_mean,
        break_index,
        n,
        runs,
        threshold,
        alpha,
        hypothesis,
        cap,
        stake_bound,
        curve,
    } = &cli.command
    else {
        unreachable!("dispatched on Simulate");
    };

    let need = |v: &Option<f64>, flag: &str| {
        v.ok_or_else(|| usage(format!("--gen {} requires {flag}", gen_name(*gen))))
    };
    let generator = match gen {
        GenArg::Nl => Generator::NormalLaplace {
            mean: *gen_mean,
            variance: *gen_var,
        },
        GenArg::Beta => Generator::BetaMeanVar {
            mean: *gen_mean,
            variance: *gen_var,
        },
        GenArg::ExtremalPlain => Generator::ExtremalPlain {
            alpha: need(gen_alpha, "--gen-alpha")?,
        },
        GenArg::ExtremalSymmetric => Generator::ExtremalSymmetric {
            alpha: need(gen_alpha, "--gen-alpha")?,
        },
        GenArg::ExtremalUnimodal => Generator::ExtremalUnimodal {
            a: need(gen_a, "--gen-a")?,
        },
        GenArg::ExtremalUs => Generator::ExtremalUnimodalSymmetric {
            p: need(gen_p, "--gen-p")?,
        },
        GenArg::RegimeNl => {
            let post = need(post_mean, "--post-mean")?;
            let break_index = break_index
                .ok_or_else(|| usage("--gen regime-nl requires --break-index"))?;
            Generator::RegimeShift {
                pre: Box::new(Generator::NormalLaplace {
                    mean: *gen_mean,
                    variance: *gen_var,
                }),
                post: Box::new(Generator::NormalLaplace {
                    mean: post,
                    variance: *gen_var,
                }),
                break_index,
            }
        }
    };

    let method: Method = (*method).into();
    let two_sided_method = matches!(method, Method::EGree2s | Method::EMixture2s);
    let hyp = if two_sided_method && !hypothesis.is_two_sided() {
        // Point interval at the null mean; the common two-sided case.
        Hypothesis::two_sided(hypothesis.mu, hypothesis.mu, hypothesis.sigma)?
    } else {
        hypothesis.build()?
    };

    let mut config = SimConfig::new(
        generator,
        *n,
        *runs,
        alpha.map_or(*threshold, |a| 1.0 / a),
        cli.seed,
        method,
        hyp,
    );
    config.gree_cap = *cap;
    config.grapa_c = *stake_bound;

    if *curve {
        let result = sim::run_avg_log_trajectory(&config)?;
        let stdout = match cli.format {
            Format::Csv => sim::trajectory_csv(&result)?,
            Format::Json => {
                let rows: Vec<String> = result
                    .avg_log_trajectory
                    .as_ref()
                    .expect("trajectory mode")
                    .iter()
                    .enumerate()
                    .map(|(t, v)| {
                        format!("{{\"t\":{},\"mean_log_wealth\":{}}}", t + 1, sig12(*v))
                    })
                    .collect();
                format!("{{\"trajectory\":[{}]}}\n", rows.join(","))
            }
        };
        return Ok(Output::stdout_only(stdout));
    }

    let result = sim::run_rejection_experiment(&config)?;
    let stdout = match cli.format {
        Format::Csv => sim::rejection_csv(&config, &result),
        Format::Json => format!(
            "{{\"method\":\"{}\",\"shape\":\"{}\",\"generator\":\"{}\",\"param\":\"{}\",\"n\":{},\"runs\":{},\"threshold\":{},\"rate\":{},\"se\":{}}}\n",
            config.method.name(),
            config.hypothesis.shape().name(),
            config.generator.name(),
            config.generator.param_string(),
            config.n,
            config.runs,
            sig12(config.threshold),
            sig12(result.rejection_rate),
            sig12(result.standard_error),
        ),
    };
    Ok(Output::stdout_only(stdout))
}

fn gen_name(gen: GenArg) -> &'static str {
    match gen {
        GenArg::Nl => "nl",
        GenArg::Beta => "beta",
        GenArg::ExtremalPlain => "extremal-plain",
        GenArg::ExtremalSymmetric => "extremal-symmetric",
        GenArg::ExtremalUnimodal => "extremal-unimodal",
        GenArg::ExtremalUs => "extremal-us",
        GenArg::RegimeNl => "regime-nl",
    }
}

struct MonitorParams<'a> {
    format: Format,
    prices: &'a Path,
    columns: ColumnSpec,
    window_from: NaiveDate,
    window_to: NaiveDate,
    test_from: Option<NaiveDate>,
    test_to: Option<NaiveDate>,
    log_losses: bool,
    shape: ShapeClass,
    strategy: BettingStrategy<f64>,
    thresholds: Vec<f64>,
    trajectory_out: Option<&'a Path>,
}

fn cmd_monitor(params: MonitorParams<'_>) -> Result<Output> {
    if params.window_from > params.window_to {
        return Err(usage("--window-from must not exceed --window-to"));
    }
    let series = monitor::load_prices(params.prices, &params.columns)?;
    let losses = if params.log_losses {
        series.to_log_losses()
    } else {
        series.to_losses()
    };
    let estimate = monitor::estimate_null(&losses, params.window_from, params.window_to)?;
    let test_start = params
        .test_from
        .unwrap_or_else(|| params.window_to + Days::new(1));
    let test = losses.restrict(Some(test_start), params.test_to);
    if test.is_empty() {
        return Err(anyhow!("no observations in the testing window"));
    }
    let report = monitor::detect(
        &test,
        &estimate,
        params.strategy,
        params.shape,
        &params.thresholds,
    )?;

    let stdout = match params.format {
        Format::Csv => report.crossings_csv(),
        Format::Json => {
            let rows: Vec<String> = report
                .thresholds
                .iter()
                .zip(&report.crossings)
                .map(|(t, c)| match c {
                    Some((day, date)) => format!(
                        "{{\"threshold\":{},\"crossing_day\":{day},\"crossing_date\":\"{date}\"}}",
                        sig12(*t)
                    ),
                    None => format!(
                        "{{\"threshold\":{},\"crossing_day\":null,\"crossing_date\":null}}",
                        sig12(*t)
                    ),
                })
                .collect();
            format!("{{\"crossings\":[{}]}}\n", rows.join(","))
        }
    };

    let mut files = Vec::new();
    if let Some(path) = params.trajectory_out {
        files.push((path.to_path_buf(), report.trajectory_csv()));
    }
    Ok(Output { stdout, files })
}

fn cmd_combine(
    format: Format,
    input: &Path,
    method: CombineMethod,
    hypothesis: &HypothesisArgs,
) -> Result<Output> {
    let values = read_values_plain(input)?;
    let (name, value) = match method {
        CombineMethod::Fisher => {
            ("fisher", pcombine::fisher_combine(&PVector::new(values)?))
        }
        CombineMethod::Simes => ("simes", pcombine::simes_combine(&PVector::new(values)?)),
        CombineMethod::EBatch => {
            let spec = MeanVarSpec::new(hypothesis.mu, hypothesis.sigma)?;
            (
                "e-batch",
                pcombine::e_batch(&values, &spec, hypothesis.shape.into())?,
            )
        }
        CombineMethod::PBatch => {
            let spec = MeanVarSpec::new(hypothesis.mu, hypothesis.sigma)?;
            (
                "p-batch",
                pcombine::p_batch(&values, &spec, hypothesis.shape.into())?,
            )
        }
    };
    let stdout = match format {
        Format::Csv => format!("method,value\n{name},{}\n", sig12(value)),
        Format::Json => format!("{{\"method\":\"{name}\",\"value\":{}}}\n", sig12(value)),
    };
    Ok(Output::stdout_only(stdout))
}
