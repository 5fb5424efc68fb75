mod config;
mod report;

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vanet_connectivity::montecarlo::{self, SweepOptions, TrialOptions};

use config::{parse_decider, CommonArgs, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Numerical(#[from] vanet_connectivity::Error),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

/// Connectivity of 1D vehicular ad-hoc networks under unit-disc and
/// Rayleigh-fading channels.
#[derive(Debug, Parser)]
#[command(name = "vanet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the analytic metrics on a (ρ, Ψ) grid.
    Analytic {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Estimate connectivity metrics by Monte-Carlo simulation.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Snapshots per grid point and model.
        #[arg(long, default_value_t = montecarlo::DEFAULT_TRIALS)]
        trials: usize,
        /// Master seed; every trial stream is derived from it.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Connectivity test: eigen, components or both.
        #[arg(long, default_value = "eigen")]
        decider: String,
        /// Relative zero tolerance of the eigenvalue test.
        #[arg(long = "zero-tol", default_value_t = 1e-8)]
        zero_tol: f64,
        /// Worker threads; all cores when omitted.
        #[arg(long)]
        threads: Option<usize>,
        /// Write A and L of the first snapshot at each point into this
        /// directory.
        #[arg(long = "dump-dir")]
        dump_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Analytic { common } => {
            let config = RunConfig::from_args(&common)?;
            let mut out = open_output(config.out.as_deref())?;
            let failures = report::write_analytic(&config, &mut out)?;
            out.flush()?;
            Ok(exit_for(failures))
        }
        Command::Simulate {
            common,
            trials,
            seed,
            decider,
            zero_tol,
            threads,
            dump_dir,
        } => {
            let config = RunConfig::from_args(&common)?;
            if trials == 0 {
                return Err(CliError::Usage("--trials must be at least 1".into()));
            }
            let decider = parse_decider(&decider)?;
            let zero_tol =
                vanet_connectivity::ZeroTolerance::new(zero_tol).map_err(|e| CliError::Usage(e.to_string()))?;
            let options = SweepOptions {
                trials,
                seed,
                big_m: config.big_m,
                trial: TrialOptions { decider, zero_tol },
            };
            let grid: Vec<_> = config.grid.iter().map(|(_, _, p)| *p).collect();
            let rows = match threads {
                Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
                Some(n) => rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| CliError::Usage(e.to_string()))?
                    .install(|| montecarlo::sweep(&grid, &config.models, options))?,
                None => montecarlo::sweep(&grid, &config.models, options)?,
            };
            if let Some(dir) = dump_dir {
                dump_graphs(&dir, &config, seed)?;
            }
            let mut out = open_output(config.out.as_deref())?;
            let failures = report::write_simulation(&config, &rows, decider, &mut out)?;
            out.flush()?;
            Ok(exit_for(failures))
        }
    }
}

fn exit_for(failures: usize) -> ExitCode {
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        eprintln!("{failures} grid point(s) failed; see the error rows");
        ExitCode::from(1)
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(File::create(p)?)),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

fn dump_graphs(dir: &Path, config: &RunConfig, seed: u64) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    for (rho, psi_db, params) in &config.grid {
        for &model in &config.models {
            let g = montecarlo::sample_graph(params, model, &mut montecarlo::trial_rng(seed, 0))?;
            let stem = format!("{model}_rho{rho}_psi{psi_db}");
            g.write_adjacency(io::BufWriter::new(File::create(dir.join(format!("A_{stem}.txt")))?))?;
            g.write_laplacian(io::BufWriter::new(File::create(dir.join(format!("L_{stem}.txt")))?))?;
        }
    }
    Ok(())
}
