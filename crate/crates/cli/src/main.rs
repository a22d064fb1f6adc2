//! `ccef`: evaluate, approximate and estimate cumulative conditional
//! expectations of copulas from the command line.

mod grid;
mod input;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ccef_core::asymptotics::confidence_band;
use ccef_core::bernstein::{empirical_rate_sweep, estimate_lipschitz_constant};
use ccef_core::ccef::{MethodOptions, MethodRegistry};
use ccef_core::empirical::{choose_order, compute_ranks, EstimatorConfig};
use ccef_core::validate::{SuiteRegistry, ValidationContext};
use ccef_core::{BernsteinOrder, CopulaModel, Error, QuadratureSpec, Sample};

use grid::GridSpec;

/// An error with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub const SUITE_FAILED: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const NUMERIC: u8 = 3;
    pub const EMPTY_SUPPORT: u8 = 4;

    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: Self::USAGE, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_)
            | Error::ParamOutOfRange { .. }
            | Error::UnknownName { .. }
            | Error::InvalidDomain(_)
            | Error::NonFiniteInput { .. }
            | Error::Empty(_)
            | Error::NoClosedForm { .. }
            | Error::NoCrossSections { .. }
            | Error::UnsupportedFamily { .. } => Self::USAGE,
            Error::EmptyConditioningSet { .. } => Self::EMPTY_SUPPORT,
            _ => Self::NUMERIC,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::usage(format!("write failed: {e}"))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::usage(format!("write failed: {e}"))
    }
}

#[derive(Debug, Parser)]
#[command(name = "ccef", version, about = "Cumulative conditional expectation E[V | U <= u] of copula models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Serialize)]
struct Shared {
    /// Output path; a `<out>.manifest.json` sidecar is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Absolute quadrature tolerance.
    #[arg(long, default_value_t = QuadratureSpec::DEFAULT_TOLERANCE)]
    tol: f64,
    /// `start:stop:step`
    #[arg(long, default_value_t = GridSpec::default())]
    grid: GridSpec,
}

impl Shared {
    fn quadrature(&self) -> Result<QuadratureSpec, CliError> {
        Ok(QuadratureSpec::default().with_tolerance(self.tol)?)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate R_C on a grid.
    Eval(EvalArgs),
    /// Bernstein approximation errors over several orders.
    Approx(ApproxArgs),
    /// Rank-based estimate with plug-in confidence bands from a CSV sample.
    Estimate(EstimateArgs),
    /// Run a named validation suite and print its JSON report.
    Validate(ValidateArgs),
}

#[derive(Debug, Args, Serialize)]
struct EvalArgs {
    /// JSON model description, e.g. '{"family":"fgm","theta":1}'.
    #[arg(long)]
    model: String,
    /// closed, integral, regression, polynomial or bernstein.
    #[arg(long, default_value = "closed")]
    method: String,
    /// Order for the bernstein method.
    #[arg(long, default_value_t = 50)]
    m: usize,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Debug, Args, Serialize)]
struct ApproxArgs {
    #[arg(long)]
    model: String,
    /// Comma-separated orders.
    #[arg(long, value_delimiter = ',', default_value = "50,100,200,400")]
    m_list: Vec<usize>,
    /// Constant M of the rate bound; estimated on a grid when omitted.
    #[arg(long)]
    lipschitz: Option<f64>,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum MRule {
    Sqrt,
}

#[derive(Debug, Args, Serialize)]
struct EstimateArgs {
    /// Two-column CSV of observations, optional header row.
    data: PathBuf,
    /// Explicit Bernstein order.
    #[arg(long, conflicts_with = "m_rule")]
    m: Option<usize>,
    /// Order rule m = round(√n / d).
    #[arg(long, value_enum)]
    m_rule: Option<MRule>,
    #[arg(long, default_value_t = 1.0)]
    d: f64,
    /// Confidence level of the bands.
    #[arg(long, default_value_t = 0.95)]
    band: f64,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Debug, Args, Serialize)]
struct ValidateArgs {
    /// representations, bernstein-rate, asymptotics or covariance-consistency.
    #[arg(long)]
    suite: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = QuadratureSpec::DEFAULT_TOLERANCE)]
    tol: f64,
}

fn parse_model(text: &str) -> Result<Box<dyn ccef_core::Copula>, CliError> {
    Ok(CopulaModel::from_json(text)?.build()?)
}

fn eval(args: &EvalArgs) -> Result<(), CliError> {
    let copula = parse_model(&args.model)?;
    let options = MethodOptions { quadrature: args.shared.quadrature()?, bernstein_order: BernsteinOrder::new(args.m)? };
    let method = MethodRegistry::default().create(&args.method, &options)?;
    let curve = method.curve(copula.as_ref(), &args.shared.grid.points())?;
    let out = args.shared.out.as_deref();
    let mut w = output::csv_writer(out)?;
    w.write_record(["u", "value", "provenance"])?;
    let provenance = curve.provenance().to_string();
    for (u, r) in curve.points() {
        w.write_record([u.to_string(), r.to_string(), provenance.clone()])?;
    }
    w.flush()?;
    output::write_manifest(out, "eval", args, args.shared.seed)
}

fn approx(args: &ApproxArgs) -> Result<(), CliError> {
    let copula = parse_model(&args.model)?;
    let orders = args.m_list.iter().map(|&m| BernsteinOrder::new(m)).collect::<Result<Vec<_>, _>>()?;
    // families without second derivatives simply get no bound column
    let lipschitz = match args.lipschitz {
        Some(m) => Some(m),
        None => estimate_lipschitz_constant(copula.as_ref()).ok(),
    };
    let spec = args.shared.quadrature()?;
    let rows = empirical_rate_sweep(copula.as_ref(), &args.shared.grid.points(), &orders, lipschitz, &spec)?;
    let out = args.shared.out.as_deref();
    let mut w = output::csv_writer(out)?;
    w.write_record(["u", "m", "value", "abs_error", "bound"])?;
    for r in rows {
        let bound = r.bound.map(|b| b.to_string()).unwrap_or_default();
        w.write_record([r.u.to_string(), r.m.to_string(), r.value.to_string(), r.abs_error.to_string(), bound])?;
    }
    w.flush()?;
    output::write_manifest(out, "approx", args, args.shared.seed)
}

fn estimate(args: &EstimateArgs) -> Result<(), CliError> {
    let sample = Sample::new(input::read_pairs(&args.data)?)?;
    let ranks = compute_ranks(&sample);
    let config = match args.m {
        Some(m) => EstimatorConfig::explicit(BernsteinOrder::new(m)?),
        None => EstimatorConfig::sqrt_n(args.d)?,
    };
    let m = choose_order(ranks.n(), &config);
    let grid = args.shared.grid.points();
    if let Some(&u) = grid.iter().find(|&&u| ranks.support_count(u) == 0) {
        return Err(Error::EmptyConditioningSet { u }.into());
    }
    let bands = confidence_band(&ranks, m, &grid, args.band, &args.shared.quadrature()?)?;
    let out = args.shared.out.as_deref();
    let mut w = output::csv_writer(out)?;
    w.write_record(["u", "r_hat", "bias_correction", "std_error", "lower", "upper", "level"])?;
    for b in bands {
        w.write_record(
            [b.u, b.r_hat, b.bias_correction, b.std_error, b.lower, b.upper, b.level].map(|x| x.to_string()),
        )?;
    }
    w.flush()?;
    #[derive(Serialize)]
    struct Echo<'a> {
        #[serde(flatten)]
        args: &'a EstimateArgs,
        n: usize,
        m_used: usize,
    }
    output::write_manifest(out, "estimate", &Echo { args, n: ranks.n(), m_used: m.get() }, args.shared.seed)
}

fn validate(args: &ValidateArgs) -> Result<(), CliError> {
    let suite = SuiteRegistry::default().create(&args.suite)?;
    let ctx = ValidationContext { quadrature: QuadratureSpec::default().with_tolerance(args.tol)?, seed: args.seed };
    let report = suite.run(&ctx)?;
    let out = args.out.as_deref();
    let mut sink = output::sink(out)?;
    serde_json::to_writer_pretty(&mut sink, &report).map_err(|e| CliError::usage(e.to_string()))?;
    writeln!(sink)?;
    sink.flush()?;
    drop(sink);
    output::write_manifest(out, "validate", args, args.seed)?;
    if report.passed {
        Ok(())
    } else {
        Err(CliError { code: CliError::SUITE_FAILED, message: format!("suite {} failed", report.suite) })
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Eval(a) => eval(a),
        Command::Approx(a) => approx(a),
        Command::Estimate(a) => estimate(a),
        Command::Validate(a) => validate(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ccef: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
