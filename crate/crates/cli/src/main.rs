use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;

use config::RunConfig;

pub const EXIT_CHECKS: u8 = 1;
pub const EXIT_POST_CRITICAL: u8 = 2;
pub const EXIT_PRECISION: u8 = 3;
pub const EXIT_RUNTIME: u8 = 4;
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    PostCritical(String),
    Precision(String),
    Checks(Vec<u32>),
    Runtime(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::PostCritical(_) => EXIT_POST_CRITICAL,
            Failure::Precision(_) => EXIT_PRECISION,
            Failure::Checks(_) => EXIT_CHECKS,
            Failure::Runtime(_) | Failure::Io(_) => EXIT_RUNTIME,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => format!("usage error: {m}"),
            Failure::PostCritical(m) => format!("post-critical: {m}"),
            Failure::Precision(m) => format!("precision failure: {m}"),
            Failure::Checks(ids) => {
                let ids: Vec<String> = ids.iter().map(u32::to_string).collect();
                format!("failed checks: {}", ids.join(", "))
            }
            Failure::Runtime(m) => format!("error: {m}"),
            Failure::Io(m) => format!("i/o error: {m}"),
        }
    }
}

impl From<mothersolve::Error> for Failure {
    fn from(e: mothersolve::Error) -> Self {
        match e {
            mothersolve::Error::PostCritical { .. } => Failure::PostCritical(e.to_string()),
            mothersolve::Error::Precision(_) => Failure::Precision(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "mothersolve",
    version,
    about = "Droplet, mother body and orthogonal polynomials for the two-insertion spherical ensemble"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "mothersolve-out")]
    out: PathBuf,
    /// Working decimal digits of the polynomial layer (default 40 + 3n).
    #[arg(long, global = true)]
    precision: Option<u32>,
    /// Comma-separated N values, e.g. 10,20,40.
    #[arg(long, global = true)]
    n_list: Option<String>,
    /// Seed for probe-point jitter.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Curve parameters, droplet boundary, trajectories and the μ0 density.
    Solve,
    /// Moments, coefficients, norms and zeros per N, plus the field error table.
    Poly,
    /// Run the acceptance checks and write a report.
    Verify,
    /// Plot data for the droplet, trajectory structure, contour and zeros.
    Figures,
}

fn parse_n_list(s: &str) -> Result<Vec<u32>, Failure> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<u32>().map_err(|_| Failure::Usage(format!("bad N value {t:?}"))))
        .collect()
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("MOTHERSOLVE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("MOTHERSOLVE_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::Runtime(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = &cli.n_list {
        cfg.n_list = parse_n_list(s)?;
    }
    if cli.precision.is_some() {
        cfg.precision = cli.precision;
    }
    cfg.validate()?;
    commands::require_precritical_all(&cfg)?;
    match cli.command {
        Command::Solve => commands::solve(&cfg, &cli.out),
        Command::Poly => commands::poly(&cfg, &cli.out, cli.seed),
        Command::Verify => commands::verify(&cfg, &cli.out),
        Command::Figures => commands::figures(&cfg, &cli.out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("mothersolve: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
