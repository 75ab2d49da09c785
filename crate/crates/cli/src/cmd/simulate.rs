use std::path::PathBuf;

use clap::Args;
use tomnet_core::synth::{default_generating_config, simulate_ensemble, RoundKind, SynthConfig};

use crate::config::{write_run_json, ModelArgs};
use crate::errors::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of teams (cycles through the 21-topology catalog)
    #[arg(long, default_value_t = 29)]
    pub teams: usize,
    /// Root seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Round schedule: comma-separated private|public|opinion
    #[arg(long, default_value = "private,public,opinion")]
    pub rounds: String,
    /// Output directory
    #[arg(long, default_value = "out/synthetic")]
    pub out: PathBuf,
    /// Generating model (defaults to the built-in communicator config)
    #[command(flatten)]
    pub model: ModelArgs,
}

pub fn run(args: SimulateArgs) -> CliResult<()> {
    let rounds = args
        .rounds
        .split(',')
        .map(|s| {
            RoundKind::parse(s).ok_or_else(|| CliError::Input(format!("unknown round kind `{s}`")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    if rounds.is_empty() {
        return Err(CliError::Input("at least one round is required".into()));
    }
    let generating = if args.model.config.is_none() && args.model.w_sn.is_none() {
        default_generating_config()
    } else {
        args.model.resolve()?
    };
    let synth = SynthConfig { teams: args.teams, seed: args.seed, generating, rounds };
    let recs = simulate_ensemble(&synth)?;
    tomnet_core::io::write_dataset(&args.out, &recs)?;
    write_run_json(
        &args.out,
        "simulate",
        serde_json::json!({
            "teams": synth.teams,
            "seed": synth.seed,
            "rounds": synth.rounds,
            "generating": synth.generating,
            "out": args.out,
        }),
    )?;
    println!(
        "wrote {} teams ({} messages) to {}",
        recs.len(),
        recs.iter().map(|r| r.transcript.len()).sum::<usize>(),
        args.out.display()
    );
    Ok(())
}
