use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use allelo::cli::{self, CliError, ExperimentConfig, Outcome};
use allelo::M0Denominator;

#[derive(Parser)]
#[command(name = "allelo", version, about = "Periodic solutions of a seasonal allelopathic competition model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the bounds and the conditions A1-A3; exit 1 if any fails.
    Check(RunArgs),
    /// Integrate from the initial state over the horizon and write t,x1,x2.
    Simulate(RunArgs),
    /// Search for the positive periodic solution and classify its stability.
    FindOrbit(RunArgs),
    /// Re-run a bundled experiment and compare against published values.
    Reproduce {
        /// example1, remark-constant or coexistence
        name: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Interval for the coefficient extrema (overrides the config).
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true)]
    interval: Option<Vec<f64>>,
    /// Denominator of m0 (overrides the config).
    #[arg(long, value_enum)]
    m0_variant: Option<M0Variant>,
}

#[derive(Clone, Copy, ValueEnum)]
enum M0Variant {
    K1,
    K2,
}

impl RunArgs {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(iv) = &self.interval {
            cfg.extremum_interval = Some([iv[0], iv[1]]);
        }
        if let Some(v) = self.m0_variant {
            cfg.m0_denominator = match v {
                M0Variant::K1 => M0Denominator::K1,
                M0Variant::K2 => M0Denominator::K2PaperVariant,
            };
        }
        cfg.validate()
            .map_err(|(field, msg)| CliError::Usage(format!("--interval / field `{field}`: {msg}")))?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Check(a) => cli::cmd_check(&a.load()?, &a.out),
        Command::Simulate(a) => cli::cmd_simulate(&a.load()?, &a.out),
        Command::FindOrbit(a) => cli::cmd_find_orbit(&a.load()?, &a.out),
        Command::Reproduce { name, out } => cli::cmd_reproduce(&name, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
