use std::path::PathBuf;

use clap::Args;
use tomnet_core::tom_measures::{
    alpha_c_individual, alpha_c_team, median_accuracy_split, score_messages_with,
    temporal_profile, SurpriseKind,
};

use crate::config::{fmt_f64, fmt_opt, load_dataset, write_run_json, ModelArgs};
use crate::errors::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// Directory with the four canonical CSVs
    #[arg(long)]
    pub data_dir: PathBuf,
    /// Headline prefix for the alpha_C summary (fraction of messages seen)
    #[arg(long, default_value_t = 0.25)]
    pub prefix_fraction: f64,
    /// Surprise definition: bayesian-kl | neg-log-evidence
    #[arg(long, default_value = "bayesian-kl")]
    pub surprise: String,
    /// Temporal profile bins
    #[arg(long, default_value_t = 4)]
    pub bins: usize,
    /// Output directory
    #[arg(long, default_value = "out/measure")]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
}

const PREFIX_SWEEP_STEPS: usize = 20; // 0.05, 0.10, ..., 1.00

pub fn run(args: MeasureArgs) -> CliResult<()> {
    let cfg = args.model.resolve()?;
    let surprise = SurpriseKind::parse(&args.surprise)
        .ok_or_else(|| CliError::Input(format!("unknown surprise kind `{}`", args.surprise)))?;
    let recs = load_dataset(&args.data_dir)?;
    std::fs::create_dir_all(&args.out)?;

    let wrap = |e: csv::Error| CliError::Input(e.to_string());
    let mut indiv = csv::Writer::from_path(args.out.join("alpha_c_individual.csv"))
        .map_err(|e| CliError::Input(e.to_string()))?;
    indiv
        .write_record(["team_id", "player_id", "prefix_fraction", "alpha_c"])
        .map_err(wrap)?;
    let mut team = csv::Writer::from_path(args.out.join("alpha_c_team.csv"))
        .map_err(|e| CliError::Input(e.to_string()))?;
    team.write_record(["team_id", "prefix_fraction", "alpha_c"]).map_err(wrap)?;
    let mut profile = csv::Writer::from_path(args.out.join("temporal_profile.csv"))
        .map_err(|e| CliError::Input(e.to_string()))?;
    profile
        .write_record(["team_id", "bin", "bin_start", "bin_end", "mean_surprise", "group"])
        .map_err(wrap)?;

    let split = median_accuracy_split(&recs)?;
    let mut headline: Vec<(String, Option<f64>, f64)> = Vec::new();
    for rec in &recs {
        let scores = score_messages_with(rec, &cfg, surprise)?;
        let team_accuracy = {
            let n = rec.topology.node_count() as f64;
            rec.human_answers
                .iter()
                .filter(|(_, &a)| a == rec.correct_answer)
                .count() as f64
                / n
        };
        headline.push((
            rec.team_id.clone(),
            alpha_c_team(&scores, args.prefix_fraction)?,
            team_accuracy,
        ));
        for step in 1..=PREFIX_SWEEP_STEPS {
            let prefix = step as f64 / PREFIX_SWEEP_STEPS as f64;
            for (node, value) in alpha_c_individual(&scores, rec.players.len(), prefix)?
                .into_iter()
                .enumerate()
            {
                indiv
                    .write_record([
                        rec.team_id.clone(),
                        rec.players[node].clone(),
                        fmt_f64(prefix),
                        fmt_opt(value),
                    ])
                    .map_err(wrap)?;
            }
            team.write_record([
                rec.team_id.clone(),
                fmt_f64(prefix),
                fmt_opt(alpha_c_team(&scores, prefix)?),
            ])
            .map_err(wrap)?;
        }
        let group = if split[&rec.team_id] { "high" } else { "low" };
        for (bin, value) in temporal_profile(&scores, args.bins)?.into_iter().enumerate() {
            profile
                .write_record([
                    rec.team_id.clone(),
                    bin.to_string(),
                    fmt_f64(bin as f64 / args.bins as f64),
                    fmt_f64((bin + 1) as f64 / args.bins as f64),
                    fmt_opt(value),
                    group.to_string(),
                ])
                .map_err(wrap)?;
        }
    }
    indiv.flush()?;
    team.flush()?;
    profile.flush()?;

    // Headline: how well early alpha_C predicts final human team accuracy.
    let pairs: Vec<(f64, f64)> = headline
        .iter()
        .filter_map(|(_, a, acc)| a.map(|a| (a, *acc)))
        .collect();
    let regression = if pairs.len() >= 3 {
        let xs: Vec<f64> = pairs.iter().map(|(a, _)| *a).collect();
        let ys: Vec<f64> = pairs.iter().map(|(_, acc)| *acc).collect();
        let (slope, intercept, r2) = tomnet_core::stats::ols(&xs, &ys);
        serde_json::json!({ "slope": slope, "intercept": intercept, "r_squared": r2, "n_teams": pairs.len() })
    } else {
        serde_json::Value::Null
    };
    crate::config::write_json(
        &args.out.join("alpha_c_summary.json"),
        &serde_json::json!({
            "prefix_fraction": args.prefix_fraction,
            "teams": headline
                .iter()
                .map(|(team, a, acc)| serde_json::json!({
                    "team_id": team, "alpha_c": a, "team_accuracy": acc
                }))
                .collect::<Vec<_>>(),
            "accuracy_regression": regression,
        }),
    )?;

    write_run_json(
        &args.out,
        "measure",
        serde_json::json!({
            "data_dir": args.data_dir,
            "prefix_fraction": args.prefix_fraction,
            "surprise": surprise,
            "bins": args.bins,
            "model": cfg,
            "out": args.out,
        }),
    )?;
    println!("wrote alpha_c and temporal profiles for {} teams", recs.len());
    Ok(())
}
