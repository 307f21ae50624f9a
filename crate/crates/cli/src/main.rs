//! `conoma-sim`: single solves, Monte-Carlo sweeps and oracle comparisons.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 on I/O errors,
//! 1 on any other failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use conoma::sim::{self, Axis, SweepConfig};
use conoma::solver::Method;
use conoma::Error;

/// Environment variable naming the default configuration file.
const CONFIG_ENV: &str = "CONOMA_CONFIG";

#[derive(Debug, Parser)]
#[command(name = "conoma-sim", version, about = "Cooperative NOMA hybrid VLC/RF downlink optimizer")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one sampled scenario and print a JSON report.
    Solve(Common),
    /// Run a Monte-Carlo sweep and write CSV and JSON results.
    Sweep(Common),
    /// Compare the heuristics with exhaustive search.
    Oracle(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Configuration file (TOML).
    #[arg(long, env = CONFIG_ENV, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    axis: Option<AxisArg>,
    /// Axis values, comma separated and ascending.
    #[arg(long, value_delimiter = ',', value_name = "CSV-LIST")]
    values: Option<Vec<f64>>,
    #[arg(long, value_name = "N")]
    trials: Option<usize>,
    /// Methods, comma separated: co-noma, noma, baseline2, exhaustive.
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    methods: Option<Vec<String>>,
    /// Output file: the CSV for `sweep`, the JSON report otherwise.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    shadowing: Option<Toggle>,
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AxisArg {
    Fov,
    Users,
    Blockage,
    Radius,
}

impl From<AxisArg> for Axis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::Fov => Axis::Fov,
            AxisArg::Users => Axis::Users,
            AxisArg::Blockage => Axis::Blockage,
            AxisArg::Radius => Axis::Radius,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

impl Common {
    fn resolve(&self) -> Result<SweepConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => SweepConfig::load(path)?,
            None => SweepConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(axis) = self.axis {
            cfg.axis = axis.into();
        }
        if let Some(values) = &self.values {
            cfg.values = values.clone();
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        if let Some(methods) = &self.methods {
            cfg.methods = methods.iter().map(|m| m.parse()).collect::<Result<Vec<Method>, _>>()?;
        }
        if let Some(out) = &self.out {
            cfg.output = Some(out.clone());
        }
        if let Some(s) = self.shadowing {
            cfg.scenario.rf.shadowing = matches!(s, Toggle::On);
        }
        if let Some(w) = self.workers {
            cfg.workers = Some(w);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_json(json: serde_json::Result<String>, out: Option<&Path>) -> Result<(), Error> {
    let text = json.expect("reports serialize") + "\n";
    match out {
        Some(path) => fs::write(path, text).map_err(|source| Error::Io { path: path.to_owned(), source }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| Error::Io { path: PathBuf::from("<stdout>"), source }),
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Solve(args) => {
            let cfg = args.resolve()?;
            let single = sim::solve_single(&cfg)?;
            for o in &single.outcomes {
                eprintln!("{:<10} sum-rate {:>10.3} Mbit/s  jain {:.4}", o.method, o.sum_rate / 1e6, o.jain);
            }
            write_json(serde_json::to_string_pretty(&single), cfg.output.as_deref())
        }
        Command::Sweep(args) => {
            let cfg = args.resolve()?;
            let out = cfg.output.clone().unwrap_or_else(|| PathBuf::from("sweep.csv"));
            let result = sim::run_sweep(&cfg)?;
            for notice in &result.notices {
                eprintln!("notice: {notice}");
            }
            let json = sim::write_results(&result, &out)?;
            eprintln!("wrote {} and {}", out.display(), json.display());
            Ok(())
        }
        Command::Oracle(args) => {
            let cfg = args.resolve()?;
            let (summaries, trials) = sim::run_oracle(&cfg)?;
            for s in &summaries {
                eprintln!(
                    "{:<10} mean ratio {:.6}  min ratio {:.6}  within 2%: {:.1}% of {} trials",
                    s.method,
                    s.mean_ratio,
                    s.min_ratio,
                    100.0 * s.within_two_percent,
                    s.trials
                );
            }
            let report =
                serde_json::json!({ "seed": cfg.seed, "config": cfg, "summaries": summaries, "trials": trials });
            write_json(serde_json::to_string_pretty(&report), cfg.output.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();

    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 2,
                Error::Io { .. } => 3,
                _ => 1,
            })
        }
    }
}
