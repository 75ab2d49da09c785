use std::path::PathBuf;

use clap::Args;
use tomnet_core::fit::{fit_alpha_per_individual, team_alpha_means, AxisSpec};

use crate::config::{fmt_f64, load_dataset, write_run_json, ModelArgs};
use crate::errors::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct AlphaArgs {
    /// Directory with the four canonical CSVs
    #[arg(long)]
    pub data_dir: PathBuf,
    /// alpha_d grid step on [0, 1]
    #[arg(long, default_value_t = 0.05)]
    pub alpha_step: f64,
    /// Output directory
    #[arg(long, default_value = "out/alpha")]
    pub out: PathBuf,
    /// Model supplying the fixed information weights (alpha_d/lesion ignored)
    #[command(flatten)]
    pub model: ModelArgs,
}

pub fn run(args: AlphaArgs) -> CliResult<()> {
    let cfg = args.model.resolve()?;
    let recs = load_dataset(&args.data_dir)?;
    let grid = AxisSpec::new(0.0, 1.0, args.alpha_step)?.values();
    let estimates = fit_alpha_per_individual(&recs, &cfg.weights, &grid)?;

    std::fs::create_dir_all(&args.out)?;
    let path = args.out.join("alpha_d_individual.csv");
    let mut writer = csv::Writer::from_path(&path)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
    writer
        .write_record(["team_id", "player_id", "alpha_d", "loglik", "uninformative"])
        .map_err(|e| CliError::Input(e.to_string()))?;
    for e in &estimates {
        writer
            .write_record([
                e.team_id.clone(),
                e.player_id.clone(),
                fmt_f64(e.alpha),
                fmt_f64(e.loglik),
                e.uninformative.to_string(),
            ])
            .map_err(|e| CliError::Input(e.to_string()))?;
    }
    writer.flush()?;

    // Team means next to the human team accuracy, ready for regression.
    let team_acc: std::collections::BTreeMap<&str, f64> = recs
        .iter()
        .map(|rec| {
            let n = rec.topology.node_count() as f64;
            let correct = rec
                .human_answers
                .iter()
                .filter(|(_, &a)| a == rec.correct_answer)
                .count() as f64;
            (rec.team_id.as_str(), correct / n)
        })
        .collect();
    let path = args.out.join("alpha_d_team.csv");
    let mut writer = csv::Writer::from_path(&path)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
    writer
        .write_record(["team_id", "alpha_d_team", "n_members", "team_accuracy"])
        .map_err(|e| CliError::Input(e.to_string()))?;
    for (team, mean, n) in team_alpha_means(&estimates) {
        writer
            .write_record([
                team.clone(),
                fmt_f64(mean),
                n.to_string(),
                fmt_f64(*team_acc.get(team.as_str()).unwrap_or(&f64::NAN)),
            ])
            .map_err(|e| CliError::Input(e.to_string()))?;
    }
    writer.flush()?;

    write_run_json(
        &args.out,
        "alpha",
        serde_json::json!({
            "data_dir": args.data_dir,
            "alpha_step": args.alpha_step,
            "weights": cfg.weights,
            "out": args.out,
        }),
    )?;
    println!("estimated alpha_d for {} individuals", estimates.len());
    Ok(())
}
