use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hetnet_da::experiment::{
    parse_sweep_spec, run_checks, run_figure, run_sweep, validate_config, FigureTable, RunOptions, FIGURES,
};
use hetnet_da::NetworkConfig;

/// Uplink spectral efficiency of decoupled vs coupled access in two-tier
/// multiuser MIMO networks.
///
/// Every flag can also be set through an environment variable with the
/// `HETNET_` prefix, e.g. `HETNET_TRIALS=500`.
#[derive(Parser, Debug)]
#[command(name = "hetnet-da", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the data behind one figure (2..=9) or `all`.
    Figure {
        /// Figure number or `all`.
        id: String,
        #[command(flatten)]
        run: RunArgs,
        /// Config document whose values replace the defaults.
        #[arg(long, env = "HETNET_CONFIG")]
        config: Option<PathBuf>,
    },
    /// Run a sweep spec document.
    Sweep {
        spec: PathBuf,
        /// Worker threads (0: all cores).
        #[arg(long, env = "HETNET_JOBS", default_value_t = 0)]
        jobs: usize,
        /// Report spectral efficiency in bit/s/Hz.
        #[arg(long, env = "HETNET_BITS")]
        bits: bool,
        /// Replace the spec's trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Replace the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Replace the spec's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the analytic identity self-tests.
    Check {
        /// Monte Carlo size of the channel-statistics checks.
        #[arg(long, env = "HETNET_TRIALS", default_value_t = 20_000)]
        trials: usize,
        #[arg(long, env = "HETNET_SEED", default_value_t = 1)]
        seed: u64,
        #[arg(long, env = "HETNET_CONFIG")]
        config: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Paired trials per sweep point (sampled users for figure 2).
    #[arg(long, env = "HETNET_TRIALS", default_value_t = 2000)]
    trials: usize,
    #[arg(long, env = "HETNET_SEED", default_value_t = 1)]
    seed: u64,
    /// Output directory.
    #[arg(long, env = "HETNET_OUT", default_value = ".")]
    out: PathBuf,
    /// Worker threads (0: all cores).
    #[arg(long, env = "HETNET_JOBS", default_value_t = 0)]
    jobs: usize,
    /// Report spectral efficiency in bit/s/Hz.
    #[arg(long, env = "HETNET_BITS")]
    bits: bool,
}

impl RunArgs {
    fn options(&self) -> RunOptions {
        RunOptions {
            trials: self.trials,
            seed: self.seed,
            jobs: self.jobs,
            bits: self.bits,
            out_dir: self.out.clone(),
        }
    }
}

fn load_config(path: Option<&PathBuf>) -> Result<NetworkConfig> {
    match path {
        None => Ok(NetworkConfig::default()),
        Some(p) => {
            let raw = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            validate_config(&raw).with_context(|| format!("invalid config {}", p.display()))
        }
    }
}

/// Print where the table went and return the number of failed points.
fn report(path: &std::path::Path, table: &FigureTable) -> usize {
    let failed: Vec<_> = table.rows.iter().filter(|r| !r.error.is_empty()).collect();
    println!("wrote {} ({} points)", path.display(), table.rows.len());
    for r in &failed {
        let series = if r.series.is_empty() { String::new() } else { format!("{} ", r.series) };
        eprintln!("  point {series}x={}: {}", r.x, r.error);
    }
    failed.len()
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Figure { id, run, config } => {
            let base = load_config(config.as_ref())?;
            let ids: Vec<u32> = if id == "all" {
                FIGURES.to_vec()
            } else {
                let n: u32 = id.parse().with_context(|| format!("figure id `{id}` is not a number"))?;
                if !FIGURES.contains(&n) {
                    bail!("no figure {n}; choose one of 2..=9 or `all`");
                }
                vec![n]
            };
            let opts = run.options();
            let mut failed = 0;
            for id in ids {
                let (path, table) = run_figure(id, &base, &opts)?;
                failed += report(&path, &table);
            }
            if failed > 0 {
                eprintln!("{failed} sweep point(s) failed; see the error column");
            }
            Ok(failed == 0)
        }
        Command::Sweep {
            spec,
            jobs,
            bits,
            trials,
            seed,
            out,
        } => {
            let raw = fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let mut parsed = parse_sweep_spec(&raw).with_context(|| format!("invalid sweep spec {}", spec.display()))?;
            if let Some(t) = trials {
                parsed.trials = t;
            }
            if let Some(s) = seed {
                parsed.seed = s;
            }
            if let Some(o) = out {
                parsed.out_dir = o;
            }
            let opts = RunOptions {
                jobs,
                bits,
                ..RunOptions::default()
            };
            let (path, table) = run_sweep(&parsed, &opts)?;
            let failed = report(&path, &table);
            if failed > 0 {
                eprintln!("{failed} sweep point(s) failed; see the error column");
            }
            Ok(failed == 0)
        }
        Command::Check { trials, seed, config } => {
            let cfg = load_config(config.as_ref())?;
            let outcomes = run_checks(&cfg, trials, seed)?;
            for c in &outcomes {
                println!("{} {:<26} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            Ok(outcomes.iter().all(|c| c.passed))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
