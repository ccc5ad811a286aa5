use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::RunConfig;

/// Simulate the driven-dissipative chiral Bose-Hubbard chain.
#[derive(Parser)]
#[command(name = "bhchain", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set chain.N=60`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (overrides `output.directory`).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Worker threads for sweeps (overrides `sweep.workers`).
    #[arg(long, env = "BHCHAIN_WORKERS")]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Time-evolve one configuration to its steady state.
    Simulate(Common),
    /// Phase diagram over the (Δ, ε) grid, or a per-site critical-drive scan.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Scan ε at `chain.delta_base` with `sweep.epsilon_step` instead.
        #[arg(long)]
        critical: bool,
    },
    /// Local winding numbers and singular values at the steady state.
    Winding(Common),
    /// Green's function and normalized correlations at the steady state.
    Green {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        omega: f64,
        /// Largest |j - k| in the correlation profile.
        #[arg(long, default_value_t = 20)]
        max_distance: usize,
    },
    /// Single-site ansatz errors against the truncated-Fock master equation.
    Oracle(Common),
    /// Finite-size scaling of the central-site response.
    Scaling(Common),
}

impl Common {
    fn load(&self) -> Result<RunConfig, config::ConfigError> {
        let mut overrides = self.overrides.clone();
        if let Some(o) = &self.output {
            overrides.push(format!("output.directory={:?}", o.display().to_string()));
        }
        if let Some(w) = self.workers {
            overrides.push(format!("sweep.workers={w}"));
        }
        RunConfig::load(self.config.as_deref(), &overrides)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Simulate(c) | Command::Winding(c) | Command::Oracle(c) | Command::Scaling(c) => c,
        Command::Sweep { common, .. } | Command::Green { common, .. } => common,
    };
    let cfg = match common.load() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::Simulate(_) => commands::simulate(&cfg),
        Command::Sweep { critical, .. } => commands::sweep(&cfg, *critical),
        Command::Winding(_) => commands::winding(&cfg),
        Command::Green { omega, max_distance, .. } => commands::green(&cfg, *omega, *max_distance),
        Command::Oracle(_) => commands::oracle(&cfg),
        Command::Scaling(_) => commands::scaling(&cfg),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("some requested points did not complete; see the log");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
