//! Experiment driver for broadcasting on trees with random couplings.
//!
//! The `glassy` binary is a thin wrapper around [`run`]. Each subcommand is
//! also callable as a library function so tests can drive it in-process.

// `!(x <= y)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod config;
pub mod error;
pub mod parse;
pub mod plot;
pub mod scan;
pub mod threshold;
pub mod verify;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use glassy_core::distributions::KsSettings;
use glassy_core::estimators::EstimatorKind;

use crate::config::{ScanConfig, Settings, SharedArgs};
pub use crate::error::{CliError, CliResult, EXIT_OK, EXIT_USAGE, EXIT_VERIFY_FAILED};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "GLASSY_THREADS";

const JOINT_EXPECTATION_NOTE: &str = "\
Each trial draws a fresh tree (on Galton-Watson cells), fresh couplings and a \
single broadcast, then scores |P(root=+|leaves) - P(root=-|leaves)|. The mean \
is one joint expectation over tree, couplings and spins rather than nested \
averages; both estimate the same quantity. Trials whose tree exceeds \
--max-vertices are dropped from the mean and reported in truncation_rate.";

#[derive(Debug, Parser)]
#[command(name = "glassy", version, about = "Broadcasting with random couplings on trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate E[tanh²(βJ/2)] and the threshold degree over a β grid.
    Threshold(ThresholdArgs),
    /// Estimate the expected leaf TV on a (β, degree, depth) grid.
    #[command(after_long_help = JOINT_EXPECTATION_NOTE)]
    Scan(ScanArgs),
    /// Root-recovery accuracy of the leaf estimators on a grid.
    EstimatorBench(BenchArgs),
    /// Run the randomized oracle suite.
    Verify(VerifyArgs),
    /// Draw a scan CSV as an SVG line chart.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub shared: SharedArgs,
    /// auto, closed-form, quadrature or monte-carlo.
    #[arg(long, default_value = "auto")]
    pub method: String,
    /// Gauss-Hermite nodes for the Gaussian law.
    #[arg(long, default_value_t = glassy_core::quadrature::DEFAULT_NODES)]
    pub nodes: usize,
    /// Samples for the Monte Carlo method.
    #[arg(long, default_value_t = 1_000_000)]
    pub mc_samples: usize,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub shared: SharedArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub shared: SharedArgs,
    /// Comma list of estimators; all four by default.
    #[arg(long)]
    pub kinds: Option<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random instances per check; 0 runs nothing.
    #[arg(long, default_value_t = 200)]
    pub sizes: usize,
    /// Deliberately break the code under test to show the suite notices.
    #[arg(long, value_parser = ["negate-signed-influence"])]
    pub inject_fault: Option<String>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Scan CSV to draw.
    pub csv: PathBuf,
    /// Output SVG path.
    #[arg(long)]
    pub out: PathBuf,
}

/// Worker count: the request (or all cores) capped by `GLASSY_THREADS`.
pub fn worker_count(requested: Option<usize>) -> CliResult<usize> {
    let cap = match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => Some(
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?,
        ),
        _ => None,
    };
    let want = match requested {
        Some(0) => return Err(CliError::Usage("--threads must be positive".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    Ok(cap.map_or(want, |c| want.min(c)))
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            }
            Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::io(p, e))?))
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn csv_failure(path: Option<&Path>, e: csv::Error) -> CliError {
    let path = path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Usage(format!("{}: {other:?}", path.display())),
    }
}

pub fn parse_kinds(s: &str) -> CliResult<Vec<EstimatorKind>> {
    s.split(',')
        .map(|k| EstimatorKind::parse(k.trim()).ok_or_else(|| CliError::Usage(format!("unknown estimator `{k}`"))))
        .collect()
}

/// Writes the scan CSV for `cfg`, on the configured number of workers.
pub fn cmd_scan(cfg: &ScanConfig) -> CliResult<()> {
    let workers = worker_count(cfg.threads)?;
    let rows = with_workers(workers, || scan::run_scan(cfg))??;
    let path = cfg.output_path.as_deref();
    let out = open_output(path)?;
    scan::write_scan_csv(&rows, out).map_err(|e| csv_failure(path, e))
}

pub fn cmd_estimator_bench(cfg: &ScanConfig, kinds: &[EstimatorKind]) -> CliResult<()> {
    let workers = worker_count(cfg.threads)?;
    let rows = with_workers(workers, || bench::run_bench(cfg, kinds))??;
    let path = cfg.output_path.as_deref();
    let out = open_output(path)?;
    bench::write_bench_csv(&rows, out).map_err(|e| csv_failure(path, e))
}

pub fn cmd_plot(csv_path: &Path, out: &Path) -> CliResult<usize> {
    let file = File::open(csv_path).map_err(|e| CliError::io(csv_path, e))?;
    let rows = scan::read_scan_csv(file, &csv_path.display().to_string())?;
    let svg = plot::render_svg(&rows);
    fs::write(out, svg).map_err(|e| CliError::io(out, e))?;
    Ok(plot::series(&rows).len())
}

fn dispatch(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Threshold(args) => {
            let settings = Settings::load(&args.shared)?;
            let phi = settings.phi()?;
            let method = threshold::parse_method(&args.method)?;
            let ks = KsSettings {
                quadrature_nodes: args.nodes,
                mc_samples: args.mc_samples,
                seed: settings.seed()?,
            };
            let rows = threshold::threshold_table(&phi, &settings.beta_grid()?, method, &ks)?;
            let path = settings.out();
            let out = open_output(path.as_deref())?;
            threshold::write_threshold_csv(&rows, out).map_err(|e| csv_failure(path.as_deref(), e))?;
        }
        Command::Scan(args) => {
            let cfg = ScanConfig::from_settings(&Settings::load(&args.shared)?)?;
            cmd_scan(&cfg)?;
        }
        Command::EstimatorBench(args) => {
            let mut settings = Settings::load(&args.shared)?;
            if let Some(k) = &args.kinds {
                settings.set("kinds", k.clone())?;
            }
            let kinds = match settings.get("kinds") {
                Some(k) => parse_kinds(k)?,
                None => EstimatorKind::ALL.to_vec(),
            };
            cmd_estimator_bench(&ScanConfig::from_settings(&settings)?, &kinds)?;
        }
        Command::Verify(args) => {
            let fault = args.inject_fault.map(|_| verify::Fault::NegatedSignedInfluence);
            let outcomes = verify::run_all(args.seed, args.sizes, fault);
            let ok = verify::report(&outcomes, io::stdout().lock()).map_err(|e| CliError::io("<stdout>", e))?;
            if !ok {
                return Ok(EXIT_VERIFY_FAILED);
            }
        }
        Command::Plot(args) => {
            cmd_plot(&args.csv, &args.out)?;
        }
    }
    Ok(EXIT_OK)
}

/// Parses `args` (program name first) and runs the subcommand, returning the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimator_lists() {
        assert_eq!(parse_kinds("flip_majority,majority").unwrap().len(), 2);
        assert_eq!(parse_kinds("flip-majority").unwrap(), vec![EstimatorKind::FlipMajority]);
        assert!(parse_kinds("median").is_err());
    }

    #[test]
    fn explicit_worker_counts() {
        // the environment cap is exercised by the binary tests
        if std::env::var(THREADS_ENV).is_err() {
            assert_eq!(worker_count(Some(3)).unwrap(), 3);
        }
        assert!(worker_count(Some(0)).is_err());
    }

    #[test]
    fn help_mentions_the_joint_expectation() {
        use clap::CommandFactory;
        let mut cmd = Cli::command();
        let scan = cmd.find_subcommand_mut("scan").unwrap();
        let help = scan.render_long_help().to_string();
        assert!(help.contains("joint expectation"));
        Cli::command().debug_assert();
    }
}
