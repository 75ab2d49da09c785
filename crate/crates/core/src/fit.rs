//! Maximum-likelihood estimation of information weights and alpha_d by grid
//! search, nested-model likelihood-ratio tests, and per-individual alpha_d
//! estimation.
//!
//! The search runs in two stages: a coarse pass over the full domain (step
//! multiplied by [`COARSE_FACTOR`]), then a fine pass on a box of
//! [`COARSE_FACTOR`] fine steps around the coarse optimum. Replay posteriors
//! do not depend on alpha_d, so each weight point replays the dataset once
//! and sweeps alpha over the cached final states.

use rayon::prelude::*;
use serde::Serialize;

use crate::agent::{LesionMode, ModelConfig};
use crate::belief::InfoWeights;
use crate::error::{Error, Result};
use crate::replay::TeamSim;
use crate::rng::substream;
use crate::stats::chi2_sf;
use crate::task::TeamRecord;

/// Refinement box half-width, in fine steps; also the coarse step multiplier.
pub const COARSE_FACTOR: usize = 5;

/// Inclusive lattice over one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl AxisSpec {
    pub fn new(min: f64, max: f64, step: f64) -> Result<AxisSpec> {
        let axis = AxisSpec { min, max, step };
        axis.validate()?;
        Ok(axis)
    }

    pub fn singleton(value: f64) -> AxisSpec {
        AxisSpec { min: value, max: value, step: 1.0 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.step.is_finite()) {
            return Err(Error::DegenerateGrid("axis bounds must be finite".into()));
        }
        if self.step <= 0.0 {
            return Err(Error::DegenerateGrid(format!("step must be positive, got {}", self.step)));
        }
        if self.min > self.max {
            return Err(Error::DegenerateGrid(format!(
                "axis min {} exceeds max {}",
                self.min, self.max
            )));
        }
        Ok(())
    }

    fn lattice(&self, step: f64) -> Vec<f64> {
        let count = ((self.max - self.min) / step + 1e-9).floor() as usize;
        let mut values: Vec<f64> = (0..=count).map(|i| self.min + i as f64 * step).collect();
        if let Some(&last) = values.last() {
            if last < self.max - 1e-9 {
                values.push(self.max);
            }
        }
        values
    }

    /// Fine lattice over the full axis.
    pub fn values(&self) -> Vec<f64> {
        self.lattice(self.step)
    }

    /// Coarse lattice: step multiplied by [`COARSE_FACTOR`].
    pub fn coarse_values(&self) -> Vec<f64> {
        self.lattice(self.step * COARSE_FACTOR as f64)
    }

    /// Fine lattice centered on `center`, clamped to the axis bounds. Always
    /// contains `center` itself.
    pub fn refined_values(&self, center: f64) -> Vec<f64> {
        let half = COARSE_FACTOR as i64;
        (-half..=half)
            .map(|i| center + i as f64 * self.step)
            .filter(|v| *v >= self.min - 1e-12 && *v <= self.max + 1e-12)
            .collect()
    }
}

/// Grid domain for the four information weights and alpha_d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub w_sn: AxisSpec,
    pub w_mn: AxisSpec,
    pub w_my: AxisSpec,
    pub w_sy: AxisSpec,
    pub alpha_d: AxisSpec,
}

impl Default for GridSpec {
    /// Weights on [0.05, 2] and alpha_d on [0, 1], fine step 0.05.
    fn default() -> GridSpec {
        GridSpec {
            w_sn: AxisSpec { min: 0.05, max: 2.0, step: 0.05 },
            w_mn: AxisSpec { min: 0.05, max: 2.0, step: 0.05 },
            w_my: AxisSpec { min: 0.05, max: 2.0, step: 0.05 },
            w_sy: AxisSpec { min: 0.05, max: 2.0, step: 0.05 },
            alpha_d: AxisSpec { min: 0.0, max: 1.0, step: 0.05 },
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, axis) in self.weight_axes() {
            axis.validate()?;
            if axis.min <= 0.0 {
                return Err(Error::DegenerateGrid(format!(
                    "{name} axis must stay positive (a zero weight zeroes the likelihood), got min {}",
                    axis.min
                )));
            }
        }
        self.alpha_d.validate()?;
        if self.alpha_d.min < 0.0 || self.alpha_d.max > 1.0 {
            return Err(Error::DegenerateGrid("alpha_d axis must lie within [0, 1]".into()));
        }
        Ok(())
    }

    fn weight_axes(&self) -> [(&'static str, &AxisSpec); 4] {
        [
            ("w_sn", &self.w_sn),
            ("w_mn", &self.w_mn),
            ("w_my", &self.w_my),
            ("w_sy", &self.w_sy),
        ]
    }

    fn alpha_values(&self, lesion: LesionMode, coarse: bool) -> Vec<f64> {
        match lesion {
            LesionMode::Random | LesionMode::PriorOnly | LesionMode::SelfOnly => vec![0.0],
            LesionMode::PartnerOnly => vec![1.0],
            LesionMode::Full => {
                if coarse {
                    self.alpha_d.coarse_values()
                } else {
                    self.alpha_d.values()
                }
            }
        }
    }

    /// Number of configurations the coarse stage will evaluate.
    pub fn coarse_point_count(&self, lesion: LesionMode) -> usize {
        if lesion == LesionMode::Random {
            return 1;
        }
        self.weight_axes()
            .iter()
            .map(|(_, a)| a.coarse_values().len())
            .product::<usize>()
            * self.alpha_values(lesion, true).len()
    }

    /// Upper bound on the refinement stage size.
    pub fn refined_point_count_bound(&self, lesion: LesionMode) -> usize {
        if lesion == LesionMode::Random {
            return 0;
        }
        let per_axis = 2 * COARSE_FACTOR + 1;
        let alpha = match lesion {
            LesionMode::Full => per_axis.min(self.alpha_d.values().len()),
            _ => 1,
        };
        per_axis.pow(4) * alpha
    }
}

/// What the search maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    #[serde(rename = "loglik")]
    LogLik,
    Accuracy,
    Agreement,
}

impl Objective {
    pub fn parse(s: &str) -> Option<Objective> {
        match s.trim().to_ascii_lowercase().as_str() {
            "loglik" | "log_lik" | "likelihood" => Some(Objective::LogLik),
            "accuracy" => Some(Objective::Accuracy),
            "agreement" => Some(Objective::Agreement),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Objective::LogLik => "loglik",
            Objective::Accuracy => "accuracy",
            Objective::Agreement => "agreement",
        }
    }
}

/// Evaluation settings for the trial-averaged objectives. LogLik ignores
/// them: the posterior is deterministic.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EvalOptions {
    pub trials: usize,
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> EvalOptions {
        EvalOptions { trials: 10, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Coarse,
    Refined,
}

/// One evaluated configuration.
#[derive(Debug, Clone, Serialize)]
pub struct GridPoint {
    pub config: ModelConfig,
    pub value: f64,
    pub stage: Stage,
}

/// Outcome of a grid search.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub best: ModelConfig,
    /// Objective value at `best`.
    pub value: f64,
    pub objective: Objective,
    pub points_evaluated: usize,
    /// Every evaluated point (both stages), in evaluation order.
    pub per_point: Vec<GridPoint>,
}

fn config_key(cfg: &ModelConfig) -> [f64; 5] {
    [cfg.weights.sn, cfg.weights.mn, cfg.weights.my, cfg.weights.sy, cfg.alpha_d]
}

/// Objective values for one weight point, one entry per alpha. The dataset
/// is replayed once; alpha only enters the final aggregation.
fn eval_weights(
    recs: &[TeamRecord],
    weights: &InfoWeights,
    lesion: LesionMode,
    alphas: &[f64],
    objective: Objective,
    eval: &EvalOptions,
) -> Result<Vec<f64>> {
    let cfg0 = ModelConfig { weights: *weights, alpha_d: 0.0, lesion };
    let sims = recs
        .iter()
        .map(|rec| TeamSim::run(rec, &cfg0))
        .collect::<Result<Vec<_>>>()?;

    let mut values = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        match objective {
            Objective::LogLik => {
                let mut loglik = 0.0;
                for (rec, sim) in recs.iter().zip(&sims) {
                    for agent in sim.agents() {
                        if let Some(&h) = rec.human_answers.get(&agent.owner()) {
                            loglik += agent.aggregate_with_alpha(alpha).ln_prob(h);
                        }
                    }
                }
                values.push(loglik);
            }
            Objective::Accuracy | Objective::Agreement => {
                let mut per_trial = vec![(0usize, 0usize); eval.trials];
                let mut n_individuals = 0usize;
                let mut n_answered = 0usize;
                for (rec, sim) in recs.iter().zip(&sims) {
                    n_individuals += sim.agents().len();
                    let aggregates: Vec<_> =
                        sim.agents().iter().map(|a| a.aggregate_with_alpha(alpha)).collect();
                    n_answered += rec.human_answers.len();
                    for (trial, counts) in per_trial.iter_mut().enumerate() {
                        let mut rng = substream(eval.seed, "tie", &rec.team_id, trial as u64);
                        for (node, agg) in aggregates.iter().enumerate() {
                            let set = agg.argmax_set();
                            let pick = if set.len() == 1 {
                                set[0]
                            } else {
                                use rand::Rng;
                                set[rng.gen_range(0..set.len())]
                            };
                            counts.0 += (pick == rec.correct_answer) as usize;
                            if let Some(&h) = rec.human_answers.get(&node) {
                                counts.1 += (pick == h) as usize;
                            }
                        }
                    }
                }
                if objective == Objective::Agreement && n_answered == 0 {
                    return Err(Error::InvalidArgument(
                        "agreement objective requires human answers".into(),
                    ));
                }
                let denom = match objective {
                    Objective::Accuracy => n_individuals,
                    _ => n_answered,
                } as f64;
                let mean = per_trial
                    .iter()
                    .map(|(c, a)| {
                        (match objective {
                            Objective::Accuracy => *c,
                            _ => *a,
                        }) as f64
                            / denom
                    })
                    .sum::<f64>()
                    / eval.trials as f64;
                values.push(mean);
            }
        }
    }
    Ok(values)
}

fn eval_stage(
    recs: &[TeamRecord],
    weight_values: [&[f64]; 4],
    alphas: &[f64],
    lesion: LesionMode,
    objective: Objective,
    eval: &EvalOptions,
    stage: Stage,
) -> Result<Vec<GridPoint>> {
    let mut weight_points = Vec::new();
    for &sn in weight_values[0] {
        for &mn in weight_values[1] {
            for &my in weight_values[2] {
                for &sy in weight_values[3] {
                    weight_points.push((sn, mn, my, sy));
                }
            }
        }
    }
    let nested: Vec<Vec<GridPoint>> = weight_points
        .par_iter()
        .map(|&(sn, mn, my, sy)| {
            let weights = InfoWeights::new(sn, mn, my, sy)?;
            let values = eval_weights(recs, &weights, lesion, alphas, objective, eval)?;
            Ok(alphas
                .iter()
                .zip(values)
                .map(|(&alpha_d, value)| GridPoint {
                    config: ModelConfig { weights, alpha_d, lesion },
                    value,
                    stage,
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(nested.into_iter().flatten().collect())
}

fn best_of(points: &[GridPoint]) -> &GridPoint {
    let mut best = &points[0];
    for p in &points[1..] {
        let better = p.value > best.value
            || (p.value == best.value && config_key(&p.config) < config_key(&best.config));
        if better {
            best = p;
        }
    }
    best
}

/// Two-stage grid search over (weights, alpha_d) for the given lesion.
///
/// Ties go to the lexicographically smallest configuration, so the result is
/// deterministic. For the Random lesion the space collapses to a single
/// point. LogLik requires human answers in the dataset.
pub fn grid_search(
    recs: &[TeamRecord],
    spec: &GridSpec,
    lesion: LesionMode,
    objective: Objective,
    eval: &EvalOptions,
) -> Result<FitResult> {
    if recs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    spec.validate()?;
    if eval.trials == 0 {
        return Err(Error::InvalidArgument("eval trials must be >= 1".into()));
    }
    if objective == Objective::LogLik && recs.iter().all(|r| r.human_answers.is_empty()) {
        return Err(Error::InvalidArgument(
            "loglik objective requires human answers".into(),
        ));
    }

    let mut per_point: Vec<GridPoint>;
    if lesion == LesionMode::Random {
        let w = [spec.w_sn.min, spec.w_mn.min, spec.w_my.min, spec.w_sy.min];
        per_point = eval_stage(
            recs,
            [&w[0..1], &w[1..2], &w[2..3], &w[3..4]],
            &[0.0],
            lesion,
            objective,
            eval,
            Stage::Coarse,
        )?;
    } else {
        let coarse = [
            spec.w_sn.coarse_values(),
            spec.w_mn.coarse_values(),
            spec.w_my.coarse_values(),
            spec.w_sy.coarse_values(),
        ];
        let alphas = spec.alpha_values(lesion, true);
        per_point = eval_stage(
            recs,
            [&coarse[0], &coarse[1], &coarse[2], &coarse[3]],
            &alphas,
            lesion,
            objective,
            eval,
            Stage::Coarse,
        )?;
        let center = best_of(&per_point).config;
        let refined = [
            spec.w_sn.refined_values(center.weights.sn),
            spec.w_mn.refined_values(center.weights.mn),
            spec.w_my.refined_values(center.weights.my),
            spec.w_sy.refined_values(center.weights.sy),
        ];
        let alphas = match lesion {
            LesionMode::Full => spec.alpha_d.refined_values(center.alpha_d),
            _ => spec.alpha_values(lesion, false),
        };
        let refined_points = eval_stage(
            recs,
            [&refined[0], &refined[1], &refined[2], &refined[3]],
            &alphas,
            lesion,
            objective,
            eval,
            Stage::Refined,
        )?;
        per_point.extend(refined_points);
    }

    let best = best_of(&per_point);
    Ok(FitResult {
        best: best.config,
        value: best.value,
        objective,
        points_evaluated: per_point.len(),
        per_point,
    })
}

/// Likelihood-ratio test of nested models: the statistic is
/// `2 (loglik_alt - loglik_null)` and the p-value is the chi-square upper
/// tail with `df` degrees of freedom.
pub fn lr_test(loglik_null: f64, loglik_alt: f64, df: usize) -> Result<(f64, f64)> {
    if df == 0 {
        return Err(Error::InvalidArgument("lr_test requires df >= 1".into()));
    }
    if loglik_alt < loglik_null {
        return Err(Error::NotNested { null: loglik_null, alt: loglik_alt });
    }
    let statistic = 2.0 * (loglik_alt - loglik_null);
    Ok((statistic, chi2_sf(statistic, df)))
}

/// Per-individual alpha_d estimate at fixed weights.
#[derive(Debug, Clone, Serialize)]
pub struct AlphaEstimate {
    pub team_id: String,
    pub player_id: String,
    pub node: usize,
    pub alpha: f64,
    /// ln p(human answer) at the chosen alpha.
    pub loglik: f64,
    /// True when the likelihood is flat across the grid (e.g. no incoming
    /// messages); the smallest grid value is reported.
    pub uninformative: bool,
}

/// Pick the maximum-likelihood alpha_d separately for each answered
/// individual, holding the information weights fixed. Ties (and flat
/// profiles) resolve to the smallest grid value.
pub fn fit_alpha_per_individual(
    recs: &[TeamRecord],
    fixed_weights: &InfoWeights,
    alpha_values: &[f64],
) -> Result<Vec<AlphaEstimate>> {
    if recs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if alpha_values.is_empty() {
        return Err(Error::DegenerateGrid("alpha grid is empty".into()));
    }
    let mut alphas = alpha_values.to_vec();
    alphas.sort_by(|a, b| a.partial_cmp(b).expect("alpha grid values are comparable"));

    let per_team: Vec<Vec<AlphaEstimate>> = recs
        .par_iter()
        .map(|rec| {
            let cfg = ModelConfig { weights: *fixed_weights, alpha_d: 0.0, lesion: LesionMode::Full };
            let sim = TeamSim::run(rec, &cfg)?;
            let mut estimates = Vec::new();
            for agent in sim.agents() {
                let node = agent.owner();
                let Some(&h) = rec.human_answers.get(&node) else { continue };
                let lls: Vec<f64> = alphas
                    .iter()
                    .map(|&a| agent.aggregate_with_alpha(a).ln_prob(h))
                    .collect();
                let max = lls.iter().cloned().fold(f64::MIN, f64::max);
                let min = lls.iter().cloned().fold(f64::MAX, f64::min);
                let idx = lls
                    .iter()
                    .position(|&ll| ll >= max - 1e-12)
                    .expect("max exists");
                estimates.push(AlphaEstimate {
                    team_id: rec.team_id.clone(),
                    player_id: rec.players[node].clone(),
                    node,
                    alpha: alphas[idx],
                    loglik: lls[idx],
                    uninformative: max - min <= 1e-12,
                });
            }
            Ok(estimates)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_team.into_iter().flatten().collect())
}

/// Team-level mean of the per-individual alpha_d estimates.
pub fn team_alpha_means(estimates: &[AlphaEstimate]) -> Vec<(String, f64, usize)> {
    let mut by_team: std::collections::BTreeMap<String, (f64, usize)> = Default::default();
    for e in estimates {
        let entry = by_team.entry(e.team_id.clone()).or_insert((0.0, 0));
        entry.0 += e.alpha;
        entry.1 += 1;
    }
    by_team
        .into_iter()
        .map(|(team, (sum, n))| (team, sum / n as f64, n))
        .collect()
}
