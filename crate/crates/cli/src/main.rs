//! `weingarten`: integrate, transform, classify and export rotational
//! Weingarten surfaces from the command line.

mod commands;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_branch, parse_calibration, parse_list, RunConfig};
use weingarten::mobius::{Branch, CalibrationChoice};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub msg: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError { code: 1, msg: msg.into() }
    }
    pub fn io(msg: impl Into<String>) -> Self {
        CliError { code: 2, msg: msg.into() }
    }
}

impl From<weingarten::Error> for CliError {
    fn from(e: weingarten::Error) -> Self {
        CliError { code: e.exit_code() as u8, msg: e.to_string() }
    }
}

#[derive(Parser, Debug)]
#[command(name = "weingarten", version, about = "Rotational Weingarten surfaces in radius-of-curvature space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a relation and print its canonical form.
    Parse(Opts),
    /// Integrate the Codazzi-Mainardi equation and write the profile CSV.
    Integrate(Opts),
    /// Apply an SL2 matrix to a profile CSV.
    Transform(Opts),
    /// Semi-quadratic invariants and class of a relation.
    Classify(Opts),
    /// Matrix carrying a relation onto k2 = lambda k1.
    Reduce(Opts),
    /// Euler-Lagrange, Helmholtz, first integral and second variation checks.
    Variational(Opts),
    /// Revolve a profile CSV into an OBJ mesh.
    ExportMesh(Opts),
    /// Residuals, umbilic slopes and invariants of a profile CSV.
    Report(Opts),
}

#[derive(Args, Debug, Default)]
#[command(allow_negative_numbers = true)]
struct Opts {
    /// JSON config; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    relation: Option<String>,
    #[arg(long)]
    theta0: Option<f64>,
    #[arg(long)]
    r1: Option<f64>,
    /// Integration interval "a,b".
    #[arg(long, value_parser = parse_list::<2>, allow_hyphen_values = true)]
    interval: Option<[f64; 2]>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Output intervals of the integrator grid.
    #[arg(long)]
    intervals: Option<usize>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// JSON report path.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Matrix "a,b,c,d" with ad - bc = 1.
    #[arg(long, value_parser = parse_list::<4>, allow_hyphen_values = true)]
    matrix: Option<[f64; 4]>,
    /// "auto" or the constant A.
    #[arg(long, value_parser = parse_calibration, allow_hyphen_values = true)]
    calibration: Option<CalibrationChoice>,
    /// standard or reversed.
    #[arg(long, value_parser = parse_branch)]
    branch: Option<Branch>,
    /// l0, l1 or general.
    #[arg(long)]
    lagrangian: Option<String>,
    /// Exponent p in f = I^p for the general Lagrangian.
    #[arg(long)]
    f_power: Option<f64>,
    /// Window "a,b" for the variational checks.
    #[arg(long, value_parser = parse_list::<2>, allow_hyphen_values = true)]
    window: Option<[f64; 2]>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    combos: Option<usize>,
    #[arg(long)]
    segments: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Opts {
    fn resolve(self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p).map_err(CliError::usage)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        macro_rules! set_opt {
            ($($f:ident),*) => { $(if self.$f.is_some() { c.$f = self.$f; })* };
        }
        set!(theta0, interval, calibration, branch, lagrangian, window, samples, combos, segments, seed);
        set_opt!(relation, r1, input, output, report, matrix);
        if let Some(v) = self.rel_tol {
            c.step.rel_tol = v;
        }
        if let Some(v) = self.abs_tol {
            c.step.abs_tol = v;
        }
        if let Some(v) = self.intervals {
            c.step.intervals = v;
        }
        if let Some(p) = self.f_power {
            c.f.i_pow = p;
        }
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    use Command::*;
    let (name, opts) = match cli.command {
        Parse(o) => ("parse", o),
        Integrate(o) => ("integrate", o),
        Transform(o) => ("transform", o),
        Classify(o) => ("classify", o),
        Reduce(o) => ("reduce", o),
        Variational(o) => ("variational", o),
        ExportMesh(o) => ("export-mesh", o),
        Report(o) => ("report", o),
    };
    let cfg = opts.resolve()?;
    commands::dispatch(name, &cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}
