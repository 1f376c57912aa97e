//! Command-line front end for the scenario pipeline.
//!
//! Exit status: 0 when every checked claim holds, 1 when a mathematical
//! check fails, 2 on configuration, I/O or numerical infrastructure errors.

mod commands;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "inwave", version, about = "Blow-up certification for supersonic inward radial Euler flow")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub struct Global {
    /// Scenario config (TOML). Defaults to the built-in scenario.
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,
    /// Built-in scenario used when no config file is given.
    #[arg(long, global = true, value_enum, default_value_t = Builtin::Canonical)]
    pub scenario: Builtin,
    /// Output directory. Overrides `output.dir`; defaults to `out`.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Repeat for more log output.
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Builtin {
    Canonical,
    Control,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the algebraic identities on random samples.
    VerifyIdentities {
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Generate initial data; writes `profile.csv` and `hypotheses.toml`.
    MakeIc,
    /// Check the hypotheses on generated data or on a profile table.
    CheckHypotheses {
        /// CSV with columns r, h, u, h_r, u_r.
        #[arg(long)]
        profile: Option<PathBuf>,
    },
    /// Simulate one grid; writes `snapshots.csv` and `run.json`.
    Simulate(SimArgs),
    /// Trace one characteristic through a simulated field.
    Trace {
        #[command(flatten)]
        sim: SimArgs,
        /// 1 for `u - h`, 2 for `u + h`.
        #[arg(long, default_value_t = 1)]
        family: u8,
        /// Start radius; defaults to `r*`.
        #[arg(long)]
        r: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        /// Defaults to the end of the simulation.
        #[arg(long)]
        t_stop: Option<f64>,
    },
    /// Boundary curves of the domain of determinacy.
    Omega(SimArgs),
    /// Full pipeline with every report file.
    Certify {
        /// Also write the simulated fields for later `--report-only` runs.
        #[arg(long)]
        store_fields: bool,
        /// Recompute the report from fields stored in this directory.
        #[arg(long, value_name = "DIR")]
        report_only: Option<PathBuf>,
    },
    /// Stationary refinement study, optionally with the Riccati residual study.
    Convergence {
        #[arg(long, value_delimiter = ',', default_values_t = vec![256, 512, 1024])]
        grids: Vec<usize>,
        /// Also run the residual study on the scenario refinement grids.
        #[arg(long)]
        riccati: bool,
    },
    /// Print the effective config as TOML.
    PrintConfig,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SimArgs {
    /// Grid size; defaults to `solver.n`.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub cfl: Option<f64>,
    /// Simulated time; defaults to the scenario horizon.
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub pad_left: Option<f64>,
    #[arg(long)]
    pub pad_right: Option<f64>,
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub trigger_ceiling: Option<f64>,
}

/// Result of a command that ran to completion.
pub enum Outcome {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match commands::run(&cli) {
        Ok(Outcome::Pass) => ExitCode::from(0),
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            // Library errors often embed their source in the message already.
            let mut msg = String::new();
            for cause in e.chain().map(|c| c.to_string()) {
                if !msg.contains(&cause) {
                    msg = if msg.is_empty() { cause } else { format!("{msg}: {cause}") };
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
