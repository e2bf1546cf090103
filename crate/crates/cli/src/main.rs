use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ineqpanel::simulate::SyntheticConfig;
use ineqpanel_cli::config::{parse_formats, OUT_ENV};
use ineqpanel_cli::{pipeline, CliError, CommandOutput, RunConfig};

#[derive(Parser)]
#[command(name = "ineqpanel", version, about = "Institution-clustered inequality panel pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Median split on institution scores and sub-index stability.
    Cluster(Common),
    /// Twelve-test stationarity battery per cluster.
    Unitroot(Common),
    /// Fixed-effects EGLS with cross-section weights per cluster.
    Estimate(Common),
    /// Estimation followed by the residual diagnostic battery.
    Diagnose(Common),
    /// Every stage in order, with a summary and a manifest.
    Replicate(Common),
    /// Write a synthetic panel and scores with known coefficients.
    Simulate {
        #[arg(long, env = OUT_ENV, default_value = ineqpanel_cli::config::DEFAULT_OUT)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Entities in each cluster.
        #[arg(long)]
        entities: Option<usize>,
        #[arg(long)]
        periods: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Panel CSV (long or wide).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Institution scores CSV.
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(long, env = OUT_ENV)]
    out: Option<PathBuf>,
    /// Comma-separated subset of text,csv,json.
    #[arg(long)]
    format: Option<String>,
    /// Seed for Monte Carlo calibration.
    #[arg(long)]
    seed: Option<u64>,
    /// Compare results with the reference vintage (warnings only).
    #[arg(long)]
    reference_diff: bool,
}

impl Common {
    fn resolve(self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(d) = self.data {
            cfg.data = Some(d);
        }
        if let Some(s) = self.scores {
            cfg.scores = Some(s);
        }
        if let Some(o) = self.out {
            cfg.out = o;
        }
        if let Some(f) = self.format {
            cfg.formats = parse_formats(&f).map_err(CliError::Config)?;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if self.reference_diff {
            cfg.reference_diff = true;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<CommandOutput, CliError> {
    match cli.command {
        Command::Cluster(c) => pipeline::cmd_cluster(&c.resolve()?),
        Command::Unitroot(c) => pipeline::cmd_unitroot(&c.resolve()?),
        Command::Estimate(c) => pipeline::cmd_estimate(&c.resolve()?),
        Command::Diagnose(c) => pipeline::cmd_diagnose(&c.resolve()?),
        Command::Replicate(c) => pipeline::cmd_replicate(&c.resolve()?),
        Command::Simulate {
            out,
            seed,
            entities,
            periods,
        } => {
            let mut s = SyntheticConfig::default();
            if let Some(v) = seed {
                s.seed = v;
            }
            if let Some(v) = entities {
                s.entities_per_cluster = v;
            }
            if let Some(v) = periods {
                s.periods = v;
            }
            pipeline::cmd_simulate(&out, &s)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{}", out.text);
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::from(out.status.code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_status().code() as u8)
        }
    }
}
