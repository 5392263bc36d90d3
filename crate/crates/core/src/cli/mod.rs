//! Command-line front end: `gen-set`, `width`, `build`, `analyze`, `verify`.
//!
//! Exit codes: 0 pass, 1 assertion or threshold failure, 2 usage or input error.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{cmd_analyze, cmd_build, cmd_gen_set, cmd_verify, cmd_width, Status};
pub use config::RunConfig;

use crate::error::{Error, Result};

/// Thread-count override for the global rayon pool.
pub const THREADS_ENV: &str = "CONEWIDTH_THREADS";

#[derive(Parser, Debug)]
#[command(name = "conewidth", version, about = "Cone widths and non-differentiability constructions on planar grids")]
pub struct Cli {
    /// Flat TOML config; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a point set (CSV) or a rasterized set (PBM).
    GenSet(GenSetArgs),
    /// Width of a PBM grid set or of a CSV point set.
    Width(WidthArgs),
    /// Run a construction pipeline and write its trace directory.
    Build(BuildArgs),
    /// Residual and gap certificates for a trace or a field.
    Analyze(AnalyzeArgs),
    /// Run the acceptance suite.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct GenSetArgs {
    /// Output path; `.csv` for point sets, `.pbm` for grid sets.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct WidthArgs {
    /// Input `.pbm` grid set or `.csv` point set.
    #[arg(long)]
    pub input: PathBuf,
    /// Also run the brute-force oracle and require equality.
    #[arg(long)]
    pub oracle: bool,
    /// Report path; stdout when absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    /// Point set CSV.
    #[arg(long = "set")]
    pub set: PathBuf,
    /// Trace directory.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Trace directory written by `build`.
    #[arg(long, conflicts_with = "field")]
    pub trace: Option<PathBuf>,
    /// Field file (`.cwf`); residuals are taken against its own gradient.
    #[arg(long)]
    pub field: Option<PathBuf>,
    /// Point set CSV.
    #[arg(long = "set")]
    pub set: PathBuf,
    /// Output directory for CSV files and summary.toml.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Report path for the per-criterion results.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

/// Comma-separated reals as one flag value.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatList(pub Vec<f64>);

fn parse_list(s: &str) -> std::result::Result<FloatList, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<std::result::Result<_, _>>()
        .map(FloatList)
}

/// Every config key as an optional flag.
#[derive(Args, Debug, Default)]
pub struct Overrides {
    #[arg(long, global = true)]
    pub h: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub lo: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub hi: Option<f64>,
    #[arg(long, global = true)]
    pub padding: Option<usize>,
    /// Comma-separated cone axis, e.g. `0,1`.
    #[arg(long, global = true, value_parser = parse_list, allow_hyphen_values = true)]
    pub axis: Option<FloatList>,
    #[arg(long, global = true)]
    pub aperture: Option<f64>,
    #[arg(long, global = true)]
    pub s_max: Option<usize>,
    /// four-corner, cantor-product, graph-family, line-neighborhood, random.
    #[arg(long, global = true)]
    pub kind: Option<String>,
    #[arg(long, global = true)]
    pub depth: Option<u32>,
    #[arg(long, global = true)]
    pub ratio: Option<f64>,
    #[arg(long, global = true)]
    pub y_samples: Option<usize>,
    #[arg(long, global = true)]
    pub k_max: Option<u32>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub lines: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub density: Option<f64>,
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    /// theorem4 or theorem9.
    #[arg(long, global = true)]
    pub pipeline: Option<String>,
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    #[arg(long, global = true)]
    pub stages: Option<usize>,
    #[arg(long, global = true)]
    pub i_max: Option<usize>,
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    #[arg(long, global = true)]
    pub gap_slack: Option<f64>,
    #[arg(long, global = true)]
    pub residual_slack: Option<f64>,
    #[arg(long, global = true)]
    pub pass_rate: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub j_min: Option<i32>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub j_max: Option<i32>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub radius_j_min: Option<i32>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub radius_j_max: Option<i32>,
    #[arg(long, global = true)]
    pub directions: Option<usize>,
    #[arg(long, global = true)]
    pub ball_directions: Option<usize>,
    #[arg(long, global = true)]
    pub ball_shells: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, c: &mut RunConfig) {
        macro_rules! set {
            ($($k:ident),*) => {$(
                if let Some(v) = &self.$k {
                    c.$k = v.clone();
                }
            )*};
        }
        set!(
            h, lo, hi, padding, aperture, s_max, kind, depth, ratio, y_samples, k_max, samples, lines, seed,
            density, radius, pipeline, eps, stages, i_max, threshold, gap_slack, residual_slack, pass_rate, j_min,
            j_max, radius_j_min, radius_j_max, directions, ball_directions, ball_shells
        );
        if let Some(FloatList(v)) = &self.axis {
            c.axis = v.clone();
        }
    }
}

/// Config file values with flags applied on top, validated.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut c = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cli.overrides.apply(&mut c);
    c.validate()?;
    Ok(c)
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{THREADS_ENV}={v:?} is not a thread count")))?;
    // a second initialization in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Input and usage problems exit with 2, everything else with 1.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::InvalidInput(_)
        | Error::Io(_)
        | Error::Csv(_)
        | Error::Format { .. }
        | Error::DimensionMismatch { .. }
        | Error::OutsideDomain { .. }
        | Error::NodeBudgetExceeded { .. }
        | Error::MissingNormal { .. }
        | Error::EmptyStepSet { .. } => 2,
        _ => 1,
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = init_threads().and_then(|_| resolve_config(&cli)).and_then(|cfg| match &cli.command {
        Command::GenSet(a) => cmd_gen_set(&cfg, a),
        Command::Width(a) => cmd_width(&cfg, a),
        Command::Build(a) => cmd_build(&cfg, a),
        Command::Analyze(a) => cmd_analyze(&cfg, a),
        Command::Verify(a) => cmd_verify(&cfg, a),
    });
    match result {
        Ok(Status::Pass) => 0,
        Ok(Status::Fail(msg)) => {
            eprintln!("conewidth: {msg}");
            1
        }
        Err(e) => {
            eprintln!("conewidth: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_defaults() {
        let cli = Cli::try_parse_from(["conewidth", "gen-set", "--out", "x.csv", "--axis", "0,1", "--depth", "2"]).unwrap();
        let c = resolve_config(&cli).unwrap();
        assert_eq!(c.axis, vec![0.0, 1.0]);
        assert_eq!(c.depth, 2);
        assert_eq!(c.aperture, RunConfig::default().aperture);
    }

    #[test]
    fn bad_values_are_usage_errors() {
        assert_eq!(run(["conewidth", "gen-set", "--out", "x.csv", "--aperture", "3"]), 2);
        assert_eq!(run(["conewidth", "frobnicate"]), 2);
        assert_eq!(run(["conewidth", "gen-set", "--out", "x.csv", "--axis", "1,x"]), 2);
    }
}
