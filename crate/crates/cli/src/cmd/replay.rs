use std::path::PathBuf;

use clap::Args;
use tomnet_core::replay::{evaluate_dataset, player_rows};

use crate::config::{fmt_opt, load_dataset, write_json, write_run_json, ModelArgs};
use crate::errors::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Directory with the four canonical CSVs
    #[arg(long)]
    pub data_dir: PathBuf,
    /// Tie-breaking trials
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Root seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory
    #[arg(long, default_value = "out/replay")]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
}

pub fn run(args: ReplayArgs) -> CliResult<()> {
    let cfg = args.model.resolve()?;
    let recs = load_dataset(&args.data_dir)?;
    let summary = evaluate_dataset(&recs, &cfg, args.trials, args.seed)?;
    std::fs::create_dir_all(&args.out)?;
    write_json(&args.out.join("summary.json"), &summary)?;

    let rows = player_rows(&recs, &cfg, args.trials, args.seed)?;
    let path = args.out.join("per_player.csv");
    let mut writer = csv::Writer::from_path(&path)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
    writer
        .write_record([
            "team_id",
            "player_id",
            "prediction",
            "correct",
            "agrees",
            "loglik",
            "n_partners",
            "difficulty_bin",
            "betweenness",
        ])
        .map_err(|e| CliError::Input(e.to_string()))?;
    for r in &rows {
        writer
            .write_record([
                r.team_id.clone(),
                r.player_id.clone(),
                r.prediction.to_string(),
                format!("{}", r.correct),
                fmt_opt(r.agrees),
                fmt_opt(r.loglik),
                r.n_partners.to_string(),
                r.difficulty_bin.to_string(),
                format!("{}", r.betweenness),
            ])
            .map_err(|e| CliError::Input(e.to_string()))?;
    }
    writer.flush()?;

    write_run_json(
        &args.out,
        "replay",
        serde_json::json!({
            "data_dir": args.data_dir,
            "trials": args.trials,
            "seed": args.seed,
            "model": cfg,
            "out": args.out,
        }),
    )?;
    println!(
        "accuracy {:.3} ± {:.3}, agreement {}, loglik {:.3}, human {:.3}",
        summary.accuracy_mean,
        summary.accuracy_sd,
        summary
            .agreement_mean
            .map(|m| format!("{m:.3}"))
            .unwrap_or_else(|| "n/a".into()),
        summary.total_loglik,
        summary.human_accuracy,
    );
    Ok(())
}
