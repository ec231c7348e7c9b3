//! `rbstark`: simulate, fit and model the 5D Stark-shift measurement.
//!
//! Exit codes: 0 success, 1 I/O or input failure, 2 configuration error,
//! 3 numerical failure.

mod config;
mod plot;
mod report;
mod verbs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ConfigError, RunConfig};
use report::Run;

#[derive(Parser)]
#[command(name = "rbstark", version, about = "Stark-shift spectroscopy of the Rb 5D levels")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,

    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Overrides the `seed` key of the configuration.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = "rbstark_out")]
    out: PathBuf,

    /// Also write SVG plots next to the CSV files.
    #[arg(long, global = true)]
    plot: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Verb {
    /// Synthesize spectra for every configured line and field.
    Simulate,
    /// Fit spectra and solve for scalar and tensor polarizabilities.
    Extract,
    /// Optical pumping time series and field sweep.
    Pump,
    /// Capacitor field map and uniformity report.
    Field,
    /// Every verb with the reference settings, into one bundle.
    Paper,
}

impl Verb {
    fn name(self) -> &'static str {
        match self {
            Verb::Simulate => "simulate",
            Verb::Extract => "extract",
            Verb::Pump => "pump",
            Verb::Field => "field",
            Verb::Paper => "paper",
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use rbstark::Error as E;
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::InvalidConfig(_) | E::InvalidQuantumNumbers(_) | E::NonPositiveStep(_) => 2,
                E::Io(_) | E::Csv(_) | E::Parse(_) => 1,
                _ => 3,
            };
        }
    }
    1
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let mut run = Run::start(&cli.out, cli.verb.name(), cfg.seed, &cfg.to_toml()?)?;
    if let Some(path) = &cli.config {
        run.record_input(path)?;
    }
    let result = match cli.verb {
        Verb::Simulate => verbs::simulate(&cfg, &mut run, "", cli.plot),
        Verb::Extract => verbs::extract(&cfg, &mut run, "", cli.plot),
        Verb::Pump => verbs::pump(&cfg, &mut run, "", cli.plot),
        Verb::Field => verbs::field(&cfg, &mut run, "", cli.plot),
        Verb::Paper => verbs::bundle(&cfg, &mut run, cli.plot),
    };
    run.finish(result.as_ref().err())?;
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
