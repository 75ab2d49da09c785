use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use tomnet_core::fit::{grid_search, AxisSpec, EvalOptions, GridSpec, Objective, Stage};
use tomnet_core::LesionMode;

use crate::config::{fmt_f64, load_dataset, write_json, write_run_json};
use crate::errors::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Directory with the four canonical CSVs
    #[arg(long)]
    pub data_dir: PathBuf,
    /// Lesion: random | prior-only | self-only | partner-only | full
    #[arg(long, default_value = "full")]
    pub lesion: String,
    /// Objective: loglik | accuracy | agreement
    #[arg(long, default_value = "loglik")]
    pub objective: String,
    /// Trials for the accuracy/agreement objectives
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    /// Evaluation seed for the accuracy/agreement objectives
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Weight axes: min,max,step
    #[arg(long, default_value = "0.05,2.0,0.05", value_parser = parse_axis)]
    pub weight_axis: AxisSpec,
    /// alpha_d axis: min,max,step
    #[arg(long, default_value = "0.0,1.0,0.05", value_parser = parse_axis)]
    pub alpha_axis: AxisSpec,
    /// Output directory
    #[arg(long, default_value = "out/fit")]
    pub out: PathBuf,
}

fn parse_axis(s: &str) -> Result<AxisSpec, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err("expected min,max,step".into());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<_, String>>()?;
    AxisSpec::new(nums[0], nums[1], nums[2]).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct FitSummary {
    best: tomnet_core::ModelConfig,
    value: f64,
    objective: Objective,
    lesion: LesionMode,
    points_evaluated: usize,
    free_parameters: usize,
}

pub fn run(args: FitArgs) -> CliResult<()> {
    let lesion = LesionMode::parse(&args.lesion)
        .ok_or_else(|| CliError::Input(format!("unknown lesion `{}`", args.lesion)))?;
    let objective = Objective::parse(&args.objective)
        .ok_or_else(|| CliError::Input(format!("unknown objective `{}`", args.objective)))?;
    let spec = GridSpec {
        w_sn: args.weight_axis,
        w_mn: args.weight_axis,
        w_my: args.weight_axis,
        w_sy: args.weight_axis,
        alpha_d: args.alpha_axis,
    };
    spec.validate()?;
    let recs = load_dataset(&args.data_dir)?;
    println!(
        "grid: {} coarse points, <= {} refined points, {} teams",
        spec.coarse_point_count(lesion),
        spec.refined_point_count_bound(lesion),
        recs.len()
    );

    let eval = EvalOptions { trials: args.trials, seed: args.seed };
    let fit = grid_search(&recs, &spec, lesion, objective, &eval)?;

    std::fs::create_dir_all(&args.out)?;
    write_json(
        &args.out.join("fit.json"),
        &FitSummary {
            best: fit.best,
            value: fit.value,
            objective,
            lesion,
            points_evaluated: fit.points_evaluated,
            free_parameters: lesion.free_parameters(),
        },
    )?;

    let path = args.out.join("grid.csv");
    let mut writer = csv::Writer::from_path(&path)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
    writer
        .write_record(["stage", "w_sn", "w_mn", "w_my", "w_sy", "alpha_d", "value"])
        .map_err(|e| CliError::Input(e.to_string()))?;
    for p in &fit.per_point {
        writer
            .write_record([
                match p.stage {
                    Stage::Coarse => "coarse",
                    Stage::Refined => "refined",
                },
                &fmt_f64(p.config.weights.sn),
                &fmt_f64(p.config.weights.mn),
                &fmt_f64(p.config.weights.my),
                &fmt_f64(p.config.weights.sy),
                &fmt_f64(p.config.alpha_d),
                &fmt_f64(p.value),
            ])
            .map_err(|e| CliError::Input(e.to_string()))?;
    }
    writer.flush()?;

    write_run_json(
        &args.out,
        "fit",
        serde_json::json!({
            "data_dir": args.data_dir,
            "lesion": lesion,
            "objective": objective,
            "trials": args.trials,
            "seed": args.seed,
            "grid": spec,
            "out": args.out,
        }),
    )?;
    println!(
        "best {} = {:.4} at (w_sn {}, w_mn {}, w_my {}, w_sy {}, alpha_d {}) over {} points",
        objective.as_str(),
        fit.value,
        fit.best.weights.sn,
        fit.best.weights.mn,
        fit.best.weights.my,
        fit.best.weights.sy,
        fit.best.alpha_d,
        fit.points_evaluated,
    );
    Ok(())
}
