//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage, parse, configuration or failed
//! verification, 2 breakdown, 3 non-convergence.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hankel::build_hankel_table;
use crate::identities::{check_identities, IdentityReport, Window};
use crate::io::{parse_matrix_market, parse_spectral, parse_state, read_trace_file, write_trace, write_trace_file};
use crate::lattice::{
    convergence_report, solve_eigen, solve_singular, ConvergenceReport, ShiftStrategy, Solution,
    SolveOptions, Spectrum,
};
use crate::matrix::{build_lr, BidiagonalMatrix, TridiagonalMatrix};
use crate::scalar::{Rational, Scalar};
use crate::solutions::{toda_from_hankel, StateDocument};
use crate::spectral::build_moment_table;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_BREAKDOWN: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;

pub const PRECISION_ENV: &str = "TLS_PRECISION";

#[derive(Debug, Parser)]
#[command(name = "toda-lattice", version, about = "qd / shifted qd / dLV eigenvalue and singular value solvers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues of a tridiagonal matrix.
    Eig(SolveArgs),
    /// Singular values of an upper bidiagonal matrix.
    Svd(SolveArgs),
    /// Exact identity and solution checks on spectral data.
    Verify(VerifyArgs),
    /// Empirical vs. predicted convergence rates from a solver trace.
    TraceRates(RatesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    MatrixMarket,
    JsonSpectral,
    JsonState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults from the file extension: .mtx is matrix-market, .json is json-state.
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// none | constant:S | johnson | aggressive
    #[arg(long, default_value = "none")]
    pub shift: String,
    /// Write the per-iteration trace CSV here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub output_format: OutputFormat,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
    #[arg(long, default_value_t = 2)]
    pub s_max: usize,
    #[arg(long, default_value_t = 2)]
    pub t_max: usize,
    /// Number of random exact z values per polynomial identity.
    #[arg(long, default_value_t = 5)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Solver {
    Eig,
    Svd,
}

#[derive(Debug, Clone, Args)]
pub struct RatesArgs {
    /// Matrix to solve inline; without it `--trace` is read instead.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
    #[arg(long, value_enum, default_value = "eig")]
    pub solver: Solver,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long, default_value = "none")]
    pub shift: String,
    /// Trace CSV to read, or to write when solving inline.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Single,
    Double,
}

impl Precision {
    pub fn from_env_value(value: Option<&str>) -> Result<Self> {
        match value.map(str::trim) {
            None | Some("") | Some("64") => Ok(Precision::Double),
            Some("32") => Ok(Precision::Single),
            Some(other) => Err(Error::Config(format!("{PRECISION_ENV} must be 32 or 64, got {other:?}"))),
        }
    }

    pub fn from_env() -> Result<Self> {
        Self::from_env_value(std::env::var(PRECISION_ENV).ok().as_deref())
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Breakdown { .. } => EXIT_BREAKDOWN,
        Error::NonConvergence { .. } => EXIT_NONCONVERGENCE,
        _ => EXIT_USAGE,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Eig(a) => cmd_eig(a),
        Command::Svd(a) => cmd_svd(a),
        Command::Verify(a) => cmd_verify(a),
        Command::TraceRates(a) => cmd_trace_rates(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn detect_format(path: &Path, given: Option<InputFormat>) -> Result<InputFormat> {
    if let Some(f) = given {
        return Ok(f);
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("mtx") | Some("mm") => Ok(InputFormat::MatrixMarket),
        Some("json") => Ok(InputFormat::JsonState),
        _ => Err(Error::Config(format!("cannot infer input format of {}; pass --format", path.display()))),
    }
}

fn read_input(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

fn load_tridiagonal(path: &Path, format: Option<InputFormat>) -> Result<TridiagonalMatrix<Rational>> {
    let text = read_input(path)?;
    match detect_format(path, format)? {
        InputFormat::MatrixMarket => parse_matrix_market(&text)?.to_tridiagonal(),
        InputFormat::JsonState => {
            let doc = parse_state(&text)?;
            let mut a = build_lr(&doc.to_toda()?);
            // (Q, E) describe the matrix minus mu; put the shift back.
            if let StateDocument::Shifted { mu, .. } = &doc {
                a.diag.iter_mut().for_each(|d| *d += mu);
            }
            Ok(a)
        }
        InputFormat::JsonSpectral => {
            let (spec, shifts) = parse_spectral(&text)?;
            let m = spec.m();
            let moments = build_moment_table(&spec, &shifts, 2 * m + 1, 0)?;
            Ok(build_lr(&toda_from_hankel(&build_hankel_table(&moments)?, 0, 0)?))
        }
    }
}

fn load_bidiagonal(path: &Path, format: Option<InputFormat>) -> Result<BidiagonalMatrix<Rational>> {
    let text = read_input(path)?;
    match detect_format(path, format)? {
        InputFormat::MatrixMarket => parse_matrix_market(&text)?.to_bidiagonal(),
        other => Err(Error::Config(format!("svd reads matrix-market input, got {other:?}"))),
    }
}

fn to_float<T: Scalar>(v: &[Rational]) -> Vec<T> {
    v.iter().map(T::from_rational).collect()
}

fn options(tol: f64, max_iters: Option<usize>, shift: &str, record_trace: bool) -> Result<SolveOptions> {
    let opts = SolveOptions { tol, max_iters, shift: shift.parse::<ShiftStrategy>()?, record_trace };
    opts.validate()?;
    Ok(opts)
}

fn eig_with<T: Scalar + Float>(a: &TridiagonalMatrix<Rational>, opts: &SolveOptions) -> Result<Solution> {
    let a = TridiagonalMatrix::new(to_float::<T>(&a.diag), to_float(&a.sub), to_float(&a.sup))?;
    solve_eigen(&a, opts)
}

fn svd_with<T: Scalar + Float>(b: &BidiagonalMatrix<Rational>, opts: &SolveOptions) -> Result<Solution> {
    let b = BidiagonalMatrix::new(to_float::<T>(&b.diag), to_float(&b.sup))?;
    solve_singular(&b, opts)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

fn spectrum_text(spectrum: &Spectrum, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => to_json(spectrum),
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["index", "value"])?;
            for (i, v) in spectrum.values.iter().enumerate() {
                w.write_record([(i + 1).to_string(), v.to_string()])?;
            }
            String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
                .map_err(|e| Error::Parse(e.to_string()))
        }
    }
}

/// Writes the spectrum (partial on non-convergence) and trace, and maps the
/// outcome to an exit code.
fn finish_solve(args: &SolveArgs, outcome: Result<Solution>) -> Result<i32> {
    match outcome {
        Ok(sol) => {
            if let (Some(path), Some(trace)) = (&args.trace, &sol.trace) {
                write_trace_file(trace, path)?;
            }
            write_output(args.output.as_deref(), &spectrum_text(&sol.spectrum, args.output_format)?)?;
            Ok(EXIT_OK)
        }
        Err(Error::NonConvergence { partial }) => {
            write_output(args.output.as_deref(), &spectrum_text(&partial, args.output_format)?)?;
            eprintln!("error: no convergence after {} iterations", partial.iterations);
            Ok(EXIT_NONCONVERGENCE)
        }
        Err(e) => Err(e),
    }
}

pub fn cmd_eig(args: &SolveArgs) -> Result<i32> {
    let precision = Precision::from_env()?;
    let opts = options(args.tol, args.max_iters, &args.shift, args.trace.is_some())?;
    let a = load_tridiagonal(&args.input, args.format)?;
    let outcome = match precision {
        Precision::Double => eig_with::<f64>(&a, &opts),
        Precision::Single => eig_with::<f32>(&a, &opts),
    };
    finish_solve(args, outcome)
}

pub fn cmd_svd(args: &SolveArgs) -> Result<i32> {
    let precision = Precision::from_env()?;
    let opts = options(args.tol, args.max_iters, &args.shift, args.trace.is_some())?;
    let b = load_bidiagonal(&args.input, args.format)?;
    let outcome = match precision {
        Precision::Double => svd_with::<f64>(&b, &opts),
        Precision::Single => svd_with::<f32>(&b, &opts),
    };
    finish_solve(args, outcome)
}

#[derive(Debug, Serialize)]
struct VerifyOutput<'a> {
    passed: bool,
    m: usize,
    #[serde(flatten)]
    report: &'a IdentityReport,
}

pub fn verify_report(args: &VerifyArgs) -> Result<IdentityReport> {
    let text = read_input(&args.input)?;
    match args.format.unwrap_or(InputFormat::JsonSpectral) {
        InputFormat::JsonSpectral => {}
        other => return Err(Error::Config(format!("verify reads json-spectral input, got {other:?}"))),
    }
    let (spec, shifts) = parse_spectral(&text)?;
    let window = Window { s_max: args.s_max, t_max: args.t_max };
    let (s_need, t_need) = window.required_moments(spec.m());
    let moments = build_moment_table(&spec, &shifts, s_need, t_need)?;
    check_identities(&moments, window, args.samples, args.seed)
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<i32> {
    let report = verify_report(args)?;
    let passed = report.all_passed();
    let m = report_m(&args.input)?;
    write_output(args.output.as_deref(), &to_json(&VerifyOutput { passed, m, report: &report })?)?;
    if !passed {
        for r in report.identities.iter().filter(|r| !r.passed) {
            eprintln!("identity {} failed at {} cell(s)", r.name, r.failed);
        }
        return Ok(EXIT_USAGE);
    }
    Ok(EXIT_OK)
}

fn report_m(path: &Path) -> Result<usize> {
    Ok(parse_spectral(&read_input(path)?)?.0.m())
}

pub fn rates_report(args: &RatesArgs) -> Result<ConvergenceReport> {
    match &args.input {
        Some(input) => {
            let opts = options(args.tol, args.max_iters, &args.shift, true)?;
            let precision = Precision::from_env()?;
            let sol = match args.solver {
                Solver::Eig => {
                    let a = load_tridiagonal(input, args.format)?;
                    match precision {
                        Precision::Double => eig_with::<f64>(&a, &opts),
                        Precision::Single => eig_with::<f32>(&a, &opts),
                    }
                }
                Solver::Svd => {
                    let b = load_bidiagonal(input, args.format)?;
                    match precision {
                        Precision::Double => svd_with::<f64>(&b, &opts),
                        Precision::Single => svd_with::<f32>(&b, &opts),
                    }
                }
            }?;
            let trace = sol.trace.unwrap_or_default();
            if let Some(path) = &args.trace {
                write_trace(&trace, std::fs::File::create(path)?)?;
            }
            // dLV limits are squared singular values.
            let spectrum: Vec<f64> = match args.solver {
                Solver::Eig => sol.spectrum.values.clone(),
                Solver::Svd => sol.spectrum.values.iter().map(|v| v * v).collect(),
            };
            let mut report = convergence_report(&trace, Some(&spectrum))?;
            report.trace = args.trace.as_ref().map(|p| p.display().to_string());
            Ok(report)
        }
        None => {
            let path = args
                .trace
                .as_ref()
                .ok_or_else(|| Error::Config("trace-rates needs --input or --trace".into()))?;
            let trace = read_trace_file(path)?;
            let mut report = convergence_report(&trace, None)?;
            report.trace = Some(path.display().to_string());
            Ok(report)
        }
    }
}

pub fn cmd_trace_rates(args: &RatesArgs) -> Result<i32> {
    let report = rates_report(args)?;
    write_output(args.output.as_deref(), &to_json(&report)?)?;
    Ok(EXIT_OK)
}
