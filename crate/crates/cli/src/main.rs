use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fusekit_cli::config::{validate_scenario, Emit};
use fusekit_cli::{execute, parse_config, render_table, CliError, ConfigError, RunConfig, Seeds};
use fusekit_core::scenarios::{PendulumParams, Scenario, TrackingParams};

/// Exit status when `--check` finds pooled containment below the gate.
const EXIT_CHECK_FAILED: u8 = 2;

#[derive(Parser)]
#[command(name = "fusekit", about = "Kalman filter scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Run a single seed.
        #[arg(long, conflicts_with = "seeds")]
        seed: Option<u64>,
        /// Run this many consecutive seeds.
        #[arg(long)]
        seeds: Option<u64>,
        #[arg(long, requires = "seeds")]
        base_seed: Option<u64>,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit nonzero if pooled 3-sigma containment is below 0.95.
        #[arg(long)]
        check: bool,
    },
    /// Run a scenario with default parameters.
    Demo {
        scenario: DemoScenario,
        /// Initial pendulum angle in degrees.
        #[arg(long)]
        theta0_deg: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write trace and summary files here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the version.
    Version,
}

#[derive(Clone, Copy, ValueEnum)]
enum DemoScenario {
    Pendulum,
    Tracking,
}

fn load_run_config(
    path: &PathBuf,
    seed: Option<u64>,
    seeds: Option<u64>,
    base_seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    let mut config = parse_config(&text)?;
    if let Some(s) = seed {
        config.seeds = Seeds::List(vec![s]);
    }
    if let Some(count) = seeds {
        if count == 0 {
            return Err(ConfigError::Domain {
                key: "--seeds".into(),
                reason: "must be at least 1".into(),
            }
            .into());
        }
        config.seeds = Seeds::Count {
            count,
            base: base_seed.unwrap_or(0),
        };
    }
    if let Some(dir) = out {
        config.output_dir = dir;
    }
    Ok(config)
}

fn demo_config(scenario: DemoScenario, theta0_deg: Option<f64>, seed: u64, out: Option<PathBuf>) -> Result<RunConfig, CliError> {
    let scenario = match scenario {
        DemoScenario::Pendulum => {
            let mut p = PendulumParams::default();
            if let Some(d) = theta0_deg {
                p.theta0 = d.to_radians();
            }
            Scenario::Pendulum(p)
        }
        DemoScenario::Tracking => Scenario::Tracking(TrackingParams::default()),
    };
    validate_scenario(&scenario)?;
    let mut config = RunConfig::new(scenario);
    config.seeds = Seeds::List(vec![seed]);
    match out {
        Some(dir) => config.output_dir = dir,
        None => {
            config.emit = Emit {
                trace_csv: false,
                summary: false,
                plot_data: false,
            }
        }
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let (config, check) = match cli.command {
        Command::Version => {
            println!("fusekit {}", env!("CARGO_PKG_VERSION"));
            return Ok(ExitCode::SUCCESS);
        }
        Command::Run {
            config,
            seed,
            seeds,
            base_seed,
            out,
            check,
        } => (load_run_config(&config, seed, seeds, base_seed, out)?, check),
        Command::Demo {
            scenario,
            theta0_deg,
            seed,
            out,
        } => (demo_config(scenario, theta0_deg, seed, out)?, false),
    };
    let report = execute(&config)?;
    print!("{}", render_table(&report));
    if check && !report.passes_check() {
        eprintln!(
            "check failed: pooled containment {:.4} < {}",
            report.pooled.min_containment(),
            fusekit_cli::run::CHECK_MIN_CONTAINMENT
        );
        return Ok(ExitCode::from(EXIT_CHECK_FAILED));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
