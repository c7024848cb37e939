//! `kac`: convergence, certification and approximation experiments for the
//! doubling map.
//!
//! Exit status is 0 on success, 2 when an empirical inequality is violated and
//! 1 on any other error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kac_clt::experiments::{self, ConfigFile, FunctionSource, Mode};
use kac_clt::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "kac", version, about = "CLT experiments for the angle-doubling map")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// TOML experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Mode, when no subcommand is given.
    #[arg(long, global = true)]
    mode: Option<Mode>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// CSV destination; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Comma-separated horizons.
    #[arg(long, global = true, value_delimiter = ',')]
    n_grid: Option<Vec<u64>>,

    #[arg(long, global = true)]
    replicates: Option<usize>,

    /// Write raw samples, one per line (simulate, single horizon).
    #[arg(long, global = true)]
    dump_samples: Option<PathBuf>,

    /// Comma-separated projection levels.
    #[arg(long, global = true, value_delimiter = ',')]
    levels: Option<Vec<u32>>,

    /// Step function values, comma-separated; the count must be 2^r.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    step: Option<Vec<f64>>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Sample W_n and summarise each horizon.
    Simulate,
    /// Exact moments, correlations and dependency size of a step function.
    ExactStats,
    /// Compare empirical W1 with the Stein bound.
    Certify,
    /// Empirical W1 across the grid, with the log-log slope.
    Convergence,
    /// Couple a cosine series with its step projections.
    Approximate,
    /// Step projections of a cosine series.
    Project,
}

impl From<Command> for Mode {
    fn from(c: Command) -> Mode {
        match c {
            Command::Simulate => Mode::Simulate,
            Command::ExactStats => Mode::ExactStats,
            Command::Certify => Mode::Certify,
            Command::Convergence => Mode::Convergence,
            Command::Approximate => Mode::Approximate,
            Command::Project => Mode::Project,
        }
    }
}

fn overrides(cli: &Cli) -> Result<ConfigFile> {
    let mode = match (cli.command.map(Mode::from), cli.mode) {
        (Some(a), Some(b)) if a != b => {
            return Err(Error::Config(format!(
                "subcommand {} conflicts with --mode {}",
                a.name(),
                b.name()
            )))
        }
        (a, b) => a.or(b),
    };
    let function = match &cli.step {
        Some(values) if values.len().is_power_of_two() => Some(FunctionSource::Step {
            level: values.len().ilog2(),
            values: values.clone(),
        }),
        Some(values) => {
            return Err(Error::Config(format!(
                "--step needs a power-of-two number of values, got {}",
                values.len()
            )))
        }
        None => None,
    };
    Ok(ConfigFile {
        mode,
        function,
        n_grid: cli.n_grid.clone(),
        replicates: cli.replicates,
        seed: cli.seed,
        out: cli.out.clone(),
        levels: cli.levels.clone(),
        dump_samples: cli.dump_samples.clone(),
        budget: None,
    })
}

fn run(cli: &Cli) -> Result<bool> {
    let base = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let config = base.merge(overrides(cli)?).resolve()?;
    let threads = experiments::threads_from_env()?;
    let outcome = experiments::with_threads(threads, || experiments::run(&config))??;
    match &config.out {
        Some(path) => {
            experiments::write_table(&outcome, path)?;
            print!("{}", outcome.summary);
        }
        None => {
            print!("{}", outcome.table.to_csv_string());
            eprint!("{}", outcome.summary);
        }
    }
    Ok(outcome.violation)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("kac: empirical bound violated");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("kac: {e}");
            ExitCode::from(1)
        }
    }
}
