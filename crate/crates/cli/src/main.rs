//! `crlab`: seeded experiments on multiplier norms over finite
//! restrictions of complete Pick kernels.
//!
//! Exit codes: 0 when every check passes, 1 when a suite fails, 2 for
//! usage and configuration errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crlab::config::{load_config, Command, ConfigError, Overrides, ReportFormat};
use crlab::runner::run_command;

#[derive(Parser)]
#[command(
    name = "crlab",
    version,
    about = "Numerical laboratory for column-row properties of multipliers"
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
    /// JSON config file; explicit flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Largest ambient ball dimension sampled per trial.
    #[arg(long, global = true)]
    d: Option<usize>,
    /// Largest point count sampled per trial.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Largest column length sampled per trial.
    #[arg(long = "N", global = true)]
    big_n: Option<usize>,
    /// Number of trials (per dimension or sweep step where applicable).
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Master seed; every trial derives its own substream from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Pass/fail tolerance for the property suites.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, global = true, value_enum)]
    format: Option<ReportFormat>,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Property-suite verification commands.
    Verify {
        #[command(subcommand)]
        suite: VerifySuite,
    },
    /// Constructive Leech factorization postconditions on random
    /// instances, plus origin factorizations with norm equality.
    LeechCheck,
    /// Ball-automorphism identity residuals per dimension.
    Moebius,
    /// Reproduce a bundled example against its expected values.
    Reproduce {
        #[command(subcommand)]
        example: ReproduceExample,
    },
    /// Parameter sweeps.
    Sweep {
        #[command(subcommand)]
        target: SweepTarget,
    },
}

#[derive(Subcommand)]
enum VerifySuite {
    /// Row norm of the transpose never exceeds the column norm.
    ColumnRow,
    /// Reshaping a column into a matrix never increases the norm.
    ColumnMatrix,
    /// The same inequality for multipliers from Szego into squared Szego.
    Pairs,
}

#[derive(Subcommand)]
enum ReproduceExample {
    /// The column (z1, z2)/sqrt(2) on the documented 40-point set.
    ExampleRowColumn,
    /// Scaled 2x2 matrix units: row and column norms 1, block norm sqrt(2).
    MatrixUnits,
    /// Weighted-Hardy alpha family: closed-form norms and the Pick test.
    Alpha {
        /// Weight parameter (> 1); a_2 = 1/alpha.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Extreme-point witness search on a documented disc configuration.
    Extreme,
    /// Interpolation operator, Carleson cross-check, weak separation.
    Interpolation,
}

#[derive(Subcommand)]
enum SweepTarget {
    /// Row/column norms on power kernels (1 - <z,w>)^(-a) over a range
    /// of exponents.
    PowerKernel {
        /// Smallest exponent of the sweep.
        #[arg(long = "a-min")]
        a_min: Option<f64>,
        /// Largest exponent of the sweep.
        #[arg(long = "a-max")]
        a_max: Option<f64>,
        /// Number of sweep steps (exponents are evenly spaced).
        #[arg(long)]
        steps: Option<usize>,
    },
}

fn command_of(cli: &CliCommand) -> Command {
    match cli {
        CliCommand::Verify { suite } => match suite {
            VerifySuite::ColumnRow => Command::VerifyColumnRow,
            VerifySuite::ColumnMatrix => Command::VerifyColumnMatrix,
            VerifySuite::Pairs => Command::VerifyPairs,
        },
        CliCommand::LeechCheck => Command::LeechCheck,
        CliCommand::Moebius => Command::MoebiusIdentities,
        CliCommand::Reproduce { example } => match example {
            ReproduceExample::ExampleRowColumn => Command::ReproduceExampleRowColumn,
            ReproduceExample::MatrixUnits => Command::ReproduceMatrixUnits,
            ReproduceExample::Alpha { .. } => Command::ReproduceAlpha,
            ReproduceExample::Extreme => Command::ReproduceExtreme,
            ReproduceExample::Interpolation => Command::ReproduceInterpolation,
        },
        CliCommand::Sweep {
            target: SweepTarget::PowerKernel { .. },
        } => Command::SweepPowerKernel,
    }
}

fn overrides_of(cli: &Cli) -> Overrides {
    let mut over = Overrides {
        d: cli.d,
        n: cli.n,
        big_n: cli.big_n,
        trials: cli.trials,
        seed: cli.seed,
        tol: cli.tol,
        out: cli.out.clone(),
        format: cli.format,
        ..Overrides::default()
    };
    match &cli.command {
        CliCommand::Reproduce {
            example: ReproduceExample::Alpha { alpha },
        } => over.alpha = *alpha,
        CliCommand::Sweep {
            target:
                SweepTarget::PowerKernel {
                    a_min,
                    a_max,
                    steps,
                },
        } => {
            over.a_min = *a_min;
            over.a_max = *a_max;
            over.steps = *steps;
        }
        _ => {}
    }
    over
}

#[derive(Debug, thiserror::Error)]
enum MainError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("cannot write report to {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn run(cli: &Cli) -> Result<bool, MainError> {
    let command = command_of(&cli.command);
    let over = overrides_of(cli);
    let config = load_config(command, cli.config.as_deref(), &over)?;
    let report = run_command(&config);
    let rendered = report.render(config.format);
    match &config.out {
        Some(path) => {
            std::fs::write(path, &rendered).map_err(|source| MainError::Write {
                path: path.clone(),
                source,
            })?;
            println!(
                "{}: {}   ({} records, {} failures); report written to {}",
                config.command.name(),
                if report.summary.pass { "PASS" } else { "FAIL" },
                report.summary.records,
                report.summary.failures,
                path.display()
            );
        }
        None => print!("{rendered}"),
    }
    Ok(report.summary.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
