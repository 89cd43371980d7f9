//! `qmlab`: command-line harness for the microstate-counting and EPRB
//! experiments.
//!
//! Exit status is 0 on success, 1 when a requested check fails and 2 on a
//! configuration or input error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ScenarioArgs;

#[derive(Parser, Debug)]
#[command(
    name = "qmlab",
    version,
    about = "Microstate counting and EPRB locality lab"
)]
struct Cli {
    /// Directory for report files (created if missing).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Equiamplitude expansion of a state, with residuals.
    Expand(commands::ExpandArgs),
    /// Born probability of a projector.
    Born(commands::BornArgs),
    /// EPRB joint distributions and CHSH.
    #[command(subcommand)]
    Eprb(EprbCommand),
    /// Locality-condition checks.
    #[command(subcommand)]
    Conditions(ConditionsCommand),
    /// One-world Monte Carlo.
    #[command(subcommand, name = "lambda-one")]
    LambdaOne(LambdaOneCommand),
    /// Parameter sweeps.
    #[command(subcommand)]
    Sweep(SweepCommand),
    /// Run the acceptance suite.
    Verify(commands::VerifyArgs),
}

#[derive(Subcommand, Debug)]
enum EprbCommand {
    /// Joint outcome distributions for the four setting pairs.
    Dist(ScenarioCommand),
    /// The CHSH combination `S`.
    Chsh(ScenarioCommand),
}

#[derive(clap::Args, Debug)]
struct ScenarioCommand {
    /// Scenario file (.json or .toml); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    scenario: ScenarioArgs,
}

#[derive(Subcommand, Debug)]
enum ConditionsCommand {
    /// Condition table for one or more models.
    Report(commands::ReportArgs),
}

#[derive(Subcommand, Debug)]
enum LambdaOneCommand {
    /// Sample trials from the counting ensembles.
    Run(commands::RunArgs),
}

#[derive(Subcommand, Debug)]
enum SweepCommand {
    /// Singlet correlation against the angle between a = z and b.
    Theta(commands::ThetaArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = output::Out::new(cli.out).and_then(|out| match cli.command {
        Command::Expand(a) => commands::expand(&a, &out),
        Command::Born(a) => commands::born(&a, &out),
        Command::Eprb(EprbCommand::Dist(a)) => {
            commands::eprb_dist(&a.scenario.resolve(a.config.as_deref())?, &out)
        }
        Command::Eprb(EprbCommand::Chsh(a)) => {
            commands::eprb_chsh(&a.scenario.resolve(a.config.as_deref())?, &out)
        }
        Command::Conditions(ConditionsCommand::Report(a)) => commands::report(&a, &out),
        Command::LambdaOne(LambdaOneCommand::Run(a)) => commands::lambda_one_run(&a, &out),
        Command::Sweep(SweepCommand::Theta(a)) => commands::sweep_theta(&a, &out),
        Command::Verify(a) => commands::verify(&a, &out),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
