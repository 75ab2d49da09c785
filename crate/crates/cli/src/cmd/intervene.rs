use std::path::PathBuf;

use clap::Args;
use tomnet_core::intervene::{plan_dataset, run_counterfactual, CandidateSet, Policy};

use crate::config::{fmt_f64, load_dataset, write_json, write_run_json, ModelArgs};
use crate::errors::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct InterveneArgs {
    /// Directory with the four canonical CSVs
    #[arg(long)]
    pub data_dir: PathBuf,
    /// Policy: targeted | random
    #[arg(long, default_value = "targeted")]
    pub policy: String,
    /// Candidate set: sent-or-received | received-only
    #[arg(long, default_value = "sent-or-received")]
    pub candidates: String,
    /// Trials
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Root seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory
    #[arg(long, default_value = "out/intervene")]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
}

pub fn run(args: InterveneArgs) -> CliResult<()> {
    let cfg = args.model.resolve()?;
    let policy = Policy::parse(&args.policy)
        .ok_or_else(|| CliError::Input(format!("unknown policy `{}`", args.policy)))?;
    let candidates = CandidateSet::parse(&args.candidates)
        .ok_or_else(|| CliError::Input(format!("unknown candidate set `{}`", args.candidates)))?;
    let recs = load_dataset(&args.data_dir)?;

    let summary = run_counterfactual(&recs, &cfg, policy, candidates, args.trials, args.seed)?;
    std::fs::create_dir_all(&args.out)?;
    write_json(&args.out.join("summary.json"), &summary)?;

    // First-trial plan, one row per (sender, recipient) pair.
    let plans = plan_dataset(&recs, &cfg, policy, candidates, args.seed)?;
    let path = args.out.join("plan.csv");
    let mut writer = csv::Writer::from_path(&path)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
    writer
        .write_record(["team", "sender", "recipient", "choice", "kl_before", "kl_after"])
        .map_err(|e| CliError::Input(e.to_string()))?;
    let by_id: std::collections::BTreeMap<&str, &tomnet_core::TeamRecord> =
        recs.iter().map(|r| (r.team_id.as_str(), r)).collect();
    for (team_id, plan) in &plans {
        let rec = by_id[team_id.as_str()];
        for pair in plan {
            let choice = match &pair.choice {
                None => "none".to_string(),
                Some(m) => format!(
                    "{}@{}:{}",
                    rec.players[m.sender],
                    m.time,
                    tomnet_core::io::format_codes(&m.codes)
                ),
            };
            writer
                .write_record([
                    team_id.clone(),
                    rec.players[pair.sender].clone(),
                    rec.players[pair.recipient].clone(),
                    choice,
                    fmt_f64(pair.kl_before),
                    fmt_f64(pair.kl_after),
                ])
                .map_err(|e| CliError::Input(e.to_string()))?;
        }
    }
    writer.flush()?;

    write_run_json(
        &args.out,
        "intervene",
        serde_json::json!({
            "data_dir": args.data_dir,
            "policy": policy,
            "candidates": candidates,
            "trials": args.trials,
            "seed": args.seed,
            "model": cfg,
            "out": args.out,
        }),
    )?;
    println!(
        "{} intervention: accuracy {:.3} ± {:.3} over {} trials",
        policy.as_str(),
        summary.accuracy_mean,
        summary.accuracy_sd,
        summary.trials,
    );
    Ok(())
}
