use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flbra::sim::{self, RunConfig};
use flbra::Error;

/// Fuzzy link-cost routing (FLBRA) vs RSSI-based forwarding simulator.
#[derive(Parser)]
#[command(name = "flbra-sim", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config file; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Iterations per scenario (overrides the config).
    #[arg(long, global = true)]
    iterations: Option<usize>,
    /// Restrict to one scenario by name.
    #[arg(long, global = true)]
    scenario: Option<String>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write protocol trace files.
    #[arg(long, global = true)]
    trace: bool,
    /// Measure success with per-packet Bernoulli trials instead of 1 - PEP.
    #[arg(long, global = true)]
    monte_carlo_delivery: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario suite and write result tables.
    Run,
    /// Exercise the operation phase under link drift.
    Drift {
        #[arg(long, default_value_t = 0)]
        iteration: usize,
    },
    /// Print the edge list of one seeded graph.
    DumpGraph {
        #[arg(long, default_value_t = 0)]
        iteration: usize,
    },
    /// Load and check a config file, then print it with defaults filled in.
    ValidateConfig,
}

impl Common {
    fn config(&self) -> flbra::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(n) = self.iterations {
            cfg.iterations = n;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        cfg.trace |= self.trace;
        cfg.monte_carlo_delivery |= self.monte_carlo_delivery;
        cfg.validate()?;
        Ok(cfg)
    }

    fn selected(&self, cfg: &RunConfig) -> flbra::Result<Vec<usize>> {
        match &self.scenario {
            Some(name) => Ok(vec![cfg.scenario_index(name)?]),
            None => Ok((0..cfg.scenarios.len()).collect()),
        }
    }
}

fn run(cli: Cli) -> flbra::Result<()> {
    let cfg = cli.common.config()?;
    let selected = cli.common.selected(&cfg)?;
    match cli.command {
        Command::Run => {
            let runs = sim::run_scenarios(&cfg, &selected)?;
            let results: Vec<_> = runs.iter().map(|r| r.result.clone()).collect();
            print!("{}", sim::format_summary(&results));
            for path in sim::emit_outputs(&runs, &cfg)? {
                eprintln!("wrote {}", path.display());
            }
        }
        Command::Drift { iteration } => {
            fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
            for si in selected {
                let report = sim::run_drift(&cfg, si, iteration)?;
                print!("{}", report.to_csv());
                let path = cfg
                    .output_dir
                    .join(format!("drift_{}.csv", report.scenario));
                fs::write(&path, report.to_csv()).map_err(|e| Error::io(&path, e))?;
                eprintln!(
                    "{}: {} faults, wrote {}",
                    report.scenario,
                    report.faults(),
                    path.display()
                );
                if cfg.trace {
                    let tpath = cfg
                        .output_dir
                        .join(format!("drift_{}.log", report.scenario));
                    let text: String = report.trace.iter().map(|l| format!("{l}\n")).collect();
                    fs::write(&tpath, text).map_err(|e| Error::io(&tpath, e))?;
                }
            }
        }
        Command::DumpGraph { iteration } => {
            for si in selected {
                print!("{}", sim::dump_graph(&cfg, si, iteration)?);
            }
        }
        Command::ValidateConfig => {
            print!("{}", cfg.to_toml_string());
            eprintln!(
                "config ok: {} scenario(s), {} iteration(s)",
                cfg.scenarios.len(),
                cfg.iterations
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
