mod commands;
mod config;

use clap::{Args, Parser, Subcommand, ValueEnum};
use config::{ConfigError, RunConfig};
use nested_tess::geom::Dim;
use nested_tess::validate::Suite;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "tessellate",
    version,
    about = "Nested Markov tessellations: simulation, statistics, validation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every command; they override the config file.
#[derive(Args, Clone, Debug, Default)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of replications.
    #[arg(long)]
    reps: Option<usize>,
    /// Main output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_dim)]
    dim: Option<Dim>,
    /// Time horizon.
    #[arg(long)]
    t: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Source {
    /// Single-body continuous shrink dynamics.
    Csd,
    /// Population form of the shrink dynamics.
    Population,
    /// Minus-sampled cells of simulated windows.
    Census,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one tessellation and write it as JSON lines.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also write an SVG drawing (planar runs only).
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Estimate mean values over replications; CSV report.
    Stats {
        #[command(flatten)]
        common: Common,
    },
    /// Sample the typical cell; JSON lines, one cell per line.
    TypicalCell {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Source::Csd)]
        source: Source,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = nested_tess::shrink::DEFAULT_BURN_IN)]
        burn_in: usize,
        #[arg(long, default_value_t = nested_tess::shrink::DEFAULT_THIN)]
        thin: usize,
        /// Bodies in the population form.
        #[arg(long, default_value_t = 500)]
        particles: usize,
    },
    /// Run a validation suite; exits 1 if any asserted tolerance fails.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_suite)]
        suite: Suite,
    },
    /// Monte Carlo ζ-constants of the directional distribution.
    Zeta {
        #[command(flatten)]
        common: Common,
        /// Use isotropic directions regardless of the config.
        #[arg(long)]
        isotropic: bool,
        #[arg(short = 'n', long, default_value_t = 1_000_000)]
        samples: usize,
    },
}

fn parse_dim(s: &str) -> Result<Dim, String> {
    s.parse::<u8>()
        .map_err(|e| e.to_string())
        .and_then(Dim::try_from)
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse()
}

/// Loads the config and applies command-line overrides.
fn resolve(common: &Common) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(r) = common.reps {
        cfg.replications = r;
    }
    if let Some(d) = common.dim {
        cfg.dim = d;
    }
    if let Some(t) = common.t {
        cfg.t = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Simulate { common, .. }
        | Command::Stats { common }
        | Command::TypicalCell { common, .. }
        | Command::Validate { common, .. }
        | Command::Zeta { common, .. } => common.clone(),
    };
    let cfg = match resolve(&common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let out = common.out.clone();
    let result = match cli.command {
        Command::Simulate { svg, .. } => commands::simulate(&cfg, out, svg),
        Command::Stats { .. } => commands::stats(&cfg, out),
        Command::TypicalCell {
            source,
            samples,
            burn_in,
            thin,
            particles,
            ..
        } => commands::typical_cell(
            &cfg,
            out,
            commands::TypicalCellOpts {
                source,
                samples,
                burn_in,
                thin,
                particles,
            },
        ),
        Command::Validate { suite, .. } => commands::validate(&cfg, common.reps, suite, out),
        Command::Zeta {
            isotropic, samples, ..
        } => commands::zeta(&cfg, isotropic, samples, out),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(commands::CmdError::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
