//! `roomac`: batch analysis of room-acoustics measurement sessions.
//!
//! Exit codes: 0 complete, 1 partial (some files failed), 2 unusable.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod error;
mod manifest;
mod report;
mod session;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

use roomacoustics::signal::BandFraction;
use roomacoustics::sti::Gender;

use crate::report::Output;

#[derive(Parser)]
#[command(name = "roomac", version, about = "Room impulse response, STI and treatment analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Directory for report.json and CSV tables.
    #[arg(long, global = true, default_value = "roomac-out")]
    out: PathBuf,
    /// Analysis bands, overriding the manifest.
    #[arg(long, global = true, value_enum)]
    bands: Option<BandsArg>,
    /// Omit the generation time so reports are reproducible.
    #[arg(long, global = true)]
    no_timestamp: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum BandsArg {
    Octave,
    Third,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenderArg {
    Male,
    Female,
}

#[derive(Subcommand)]
enum Command {
    /// T30, T20, EDT and C50 per position, spatial averages and verdicts.
    Analyze {
        manifest: PathBuf,
        /// Also export Schroeder decay curves per position and band.
        #[arg(long)]
        curves: bool,
    },
    /// Speech transmission index per position.
    Sti {
        manifest: PathBuf,
        #[arg(long, conflicts_with = "no_noise")]
        with_noise: bool,
        #[arg(long)]
        no_noise: bool,
        /// Weighting shown in tables; both are always computed.
        #[arg(long, value_enum)]
        gender: Option<GenderArg>,
    },
    /// Before/after deltas between two sessions.
    Compare { before: PathBuf, after: PathBuf },
    /// Absorption needed to reach a target profile.
    Advise {
        manifest: PathBuf,
        /// Usage name (hybrid_meeting, lecture, custom) or a profile TOML file.
        #[arg(long)]
        target: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = Output { dir: cli.common.out.clone(), timestamp: !cli.common.no_timestamp };
    let bands = cli.common.bands.map(|b| match b {
        BandsArg::Octave => BandFraction::Octave,
        BandsArg::Third => BandFraction::Third,
    });
    let result = match &cli.command {
        Command::Analyze { manifest, curves } => commands::analyze(manifest, bands, *curves, &out),
        Command::Sti { manifest, with_noise, no_noise, gender } => {
            let noise = match (with_noise, no_noise) {
                (true, _) => Some(true),
                (_, true) => Some(false),
                _ => None,
            };
            let gender = gender.map(|g| match g {
                GenderArg::Male => Gender::Male,
                GenderArg::Female => Gender::Female,
            });
            commands::sti(manifest, noise, gender, bands, &out)
        }
        Command::Compare { before, after } => commands::compare(before, after, bands, &out),
        Command::Advise { manifest, target } => commands::advise(manifest, target.as_deref(), bands, &out),
    };
    match result {
        Ok(status) => {
            if status == report::Status::Partial {
                eprintln!("warning: some files could not be analyzed; see issues in report.json");
            }
            ExitCode::from(status.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
