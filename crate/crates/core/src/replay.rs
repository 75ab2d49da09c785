//! Replay recorded (or synthetic) transcripts through a team of shadow
//! agents and score accuracy, human agreement, and per-individual
//! likelihoods.
//!
//! Message routing follows the Markov blanket: a message reaches the
//! sender's own agent (self-actualization) and the agents of the sender's
//! topology neighbors (partner-actualization). Nothing else ever sees it.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::agent::{Agent, ModelConfig};
use crate::belief::{Belief, CodedMessage};
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::stats::mean_sd;
use crate::task::{AnswerOption, TeamRecord};

/// A team of shadow agents stepping through a transcript together.
#[derive(Debug, Clone)]
pub struct TeamSim {
    agents: Vec<Agent>,
    neighbors: Vec<Vec<usize>>,
}

impl TeamSim {
    /// Validate the record and initialize one agent per player.
    pub fn new(rec: &TeamRecord, cfg: &ModelConfig) -> Result<TeamSim> {
        rec.validate()?;
        let n = rec.topology.node_count();
        let neighbors: Vec<Vec<usize>> = (0..n).map(|v| rec.topology.neighbors(v)).collect();
        let agents = (0..n)
            .map(|v| Agent::new(v, &rec.endowments[v], &neighbors[v], cfg))
            .collect::<Result<Vec<_>>>()?;
        Ok(TeamSim { agents, neighbors })
    }

    /// Route one transcript message. Neutral messages are skipped.
    pub fn deliver(&mut self, m: &CodedMessage) -> Result<()> {
        if m.is_neutral() {
            return Ok(());
        }
        self.agents[m.sender].observe(m)?;
        for j in self.neighbors[m.sender].clone() {
            self.agents[j].observe(m)?;
        }
        Ok(())
    }

    /// Replay the full transcript in time order.
    pub fn run(rec: &TeamRecord, cfg: &ModelConfig) -> Result<TeamSim> {
        let mut sim = TeamSim::new(rec, cfg)?;
        for m in &rec.transcript {
            sim.deliver(m)?;
        }
        Ok(sim)
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn agent(&self, node: usize) -> &Agent {
        &self.agents[node]
    }

    pub fn agent_mut(&mut self, node: usize) -> &mut Agent {
        &mut self.agents[node]
    }
}

/// Scores for one shadowed player after replay.
#[derive(Debug, Clone)]
pub struct PlayerOutcome {
    pub node: usize,
    pub final_posterior: Belief,
    pub prediction: AnswerOption,
    pub correct: bool,
    /// None when the player never submitted an answer.
    pub agrees_with_human: Option<bool>,
    /// ln p(human answer); None when the player never submitted an answer.
    pub loglik_of_human_answer: Option<f64>,
}

/// Replay scores for one team.
#[derive(Debug, Clone)]
pub struct ReplayResult {
    pub per_player: Vec<PlayerOutcome>,
    /// Mean of the per-player correctness indicators.
    pub team_accuracy: f64,
}

/// Score a set of final agent states against a record.
pub fn score_team(agents: &[Agent], rec: &TeamRecord, tie_rng: &mut impl Rng) -> ReplayResult {
    let mut per_player = Vec::with_capacity(agents.len());
    let mut n_correct = 0usize;
    for agent in agents {
        let node = agent.owner();
        let final_posterior = agent.aggregate();
        let prediction = agent.predict(tie_rng);
        let correct = prediction == rec.correct_answer;
        n_correct += correct as usize;
        let human = rec.human_answers.get(&node).copied();
        per_player.push(PlayerOutcome {
            node,
            final_posterior,
            prediction,
            correct,
            agrees_with_human: human.map(|h| prediction == h),
            loglik_of_human_answer: human.map(|h| final_posterior.ln_prob(h)),
        });
    }
    let team_accuracy = n_correct as f64 / agents.len() as f64;
    ReplayResult { per_player, team_accuracy }
}

/// Replay one team's transcript and score every player.
pub fn replay_team(rec: &TeamRecord, cfg: &ModelConfig, tie_rng: &mut impl Rng) -> Result<ReplayResult> {
    let sim = TeamSim::run(rec, cfg)?;
    Ok(score_team(sim.agents(), rec, tie_rng))
}

/// Dataset-level evaluation summary.
#[derive(Debug, Clone, Serialize)]
pub struct DatasetSummary {
    pub n_teams: usize,
    pub n_individuals: usize,
    /// Individuals with a recorded human answer (agreement and log-likelihood
    /// are computed over these).
    pub n_answered: usize,
    pub trials: usize,
    pub accuracy_mean: f64,
    pub accuracy_sd: f64,
    pub agreement_mean: Option<f64>,
    pub agreement_sd: Option<f64>,
    /// Sum over answered individuals of ln p(human answer). Deterministic:
    /// the posterior does not depend on tie-breaking.
    pub total_loglik: f64,
    /// Fraction of individuals whose recorded answer is correct, counting
    /// missing answers as incorrect. Computed from the data alone.
    pub human_accuracy: f64,
}

struct TeamEval {
    aggregates: Vec<Belief>,
    loglik: f64,
    n_players: usize,
    n_answered: usize,
    n_human_correct: usize,
}

fn evaluate_team(rec: &TeamRecord, cfg: &ModelConfig) -> Result<TeamEval> {
    let sim = TeamSim::run(rec, cfg)?;
    let aggregates: Vec<Belief> = sim.agents().iter().map(|a| a.aggregate()).collect();
    let mut loglik = 0.0;
    let mut n_answered = 0;
    let mut n_human_correct = 0;
    for (node, agg) in aggregates.iter().enumerate() {
        if let Some(&h) = rec.human_answers.get(&node) {
            loglik += agg.ln_prob(h);
            n_answered += 1;
            n_human_correct += (h == rec.correct_answer) as usize;
        }
    }
    Ok(TeamEval {
        aggregates,
        loglik,
        n_players: rec.topology.node_count(),
        n_answered,
        n_human_correct,
    })
}

/// Evaluate a model configuration over a dataset: mean and standard
/// deviation of accuracy and human agreement over `trials` tie-breaking
/// substreams, plus the (trial-independent) total log-likelihood.
pub fn evaluate_dataset(
    recs: &[TeamRecord],
    cfg: &ModelConfig,
    trials: usize,
    seed: u64,
) -> Result<DatasetSummary> {
    if recs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }

    // Per-team counts for every trial; teams evaluated in parallel, reduced
    // in team order so results do not depend on scheduling.
    let per_team: Vec<(TeamEval, Vec<(usize, usize)>)> = recs
        .par_iter()
        .map(|rec| {
            let eval = evaluate_team(rec, cfg)?;
            let mut trial_counts = Vec::with_capacity(trials);
            for trial in 0..trials {
                let mut rng = substream(seed, "tie", &rec.team_id, trial as u64);
                let mut n_correct = 0usize;
                let mut n_agree = 0usize;
                for (node, agg) in eval.aggregates.iter().enumerate() {
                    let set = agg.argmax_set();
                    let pick = if set.len() == 1 {
                        set[0]
                    } else {
                        set[rng.gen_range(0..set.len())]
                    };
                    n_correct += (pick == rec.correct_answer) as usize;
                    if let Some(&h) = rec.human_answers.get(&node) {
                        n_agree += (pick == h) as usize;
                    }
                }
                trial_counts.push((n_correct, n_agree));
            }
            Ok((eval, trial_counts))
        })
        .collect::<Result<Vec<_>>>()?;

    let n_individuals: usize = per_team.iter().map(|(e, _)| e.n_players).sum();
    let n_answered: usize = per_team.iter().map(|(e, _)| e.n_answered).sum();
    let n_human_correct: usize = per_team.iter().map(|(e, _)| e.n_human_correct).sum();
    let total_loglik: f64 = per_team.iter().map(|(e, _)| e.loglik).sum();

    let mut accuracy = Vec::with_capacity(trials);
    let mut agreement = Vec::with_capacity(trials);
    for trial in 0..trials {
        let correct: usize = per_team.iter().map(|(_, t)| t[trial].0).sum();
        let agree: usize = per_team.iter().map(|(_, t)| t[trial].1).sum();
        accuracy.push(correct as f64 / n_individuals as f64);
        if n_answered > 0 {
            agreement.push(agree as f64 / n_answered as f64);
        }
    }

    let (accuracy_mean, accuracy_sd) = mean_sd(&accuracy);
    let (agreement_mean, agreement_sd) = if n_answered > 0 {
        let (m, s) = mean_sd(&agreement);
        (Some(m), Some(s))
    } else {
        (None, None)
    };

    Ok(DatasetSummary {
        n_teams: recs.len(),
        n_individuals,
        n_answered,
        trials,
        accuracy_mean,
        accuracy_sd,
        agreement_mean,
        agreement_sd,
        total_loglik,
        human_accuracy: n_human_correct as f64 / n_individuals as f64,
    })
}

/// Fraction of individuals whose recorded answer matches the correct one;
/// individuals without an answer count as incorrect.
pub fn human_accuracy(recs: &[TeamRecord]) -> Result<f64> {
    if recs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut n = 0usize;
    let mut correct = 0usize;
    for rec in recs {
        n += rec.topology.node_count();
        correct += rec
            .human_answers
            .iter()
            .filter(|(_, &a)| a == rec.correct_answer)
            .count();
    }
    Ok(correct as f64 / n as f64)
}

/// One row of the per-player report emitted by the `replay` command.
#[derive(Debug, Clone, Serialize)]
pub struct PlayerRow {
    pub team_id: String,
    pub player_id: String,
    /// Prediction under the first tie-breaking trial.
    pub prediction: u32,
    /// Fraction of trials in which the prediction was correct.
    pub correct: f64,
    /// Fraction of trials agreeing with the human answer, if any.
    pub agrees: Option<f64>,
    pub loglik: Option<f64>,
    pub n_partners: usize,
    pub difficulty_bin: usize,
    pub betweenness: f64,
}

/// Per-player rows for downstream difficulty / partner-count analyses.
pub fn player_rows(
    recs: &[TeamRecord],
    cfg: &ModelConfig,
    trials: usize,
    seed: u64,
) -> Result<Vec<PlayerRow>> {
    if recs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let per_team: Vec<Vec<PlayerRow>> = recs
        .par_iter()
        .map(|rec| {
            let eval = evaluate_team(rec, cfg)?;
            let n = eval.n_players;
            let betweenness = crate::task::betweenness_centrality(&rec.topology)?;
            let mut first_pred = vec![0u32; n];
            let mut correct_count = vec![0usize; n];
            let mut agree_count = vec![0usize; n];
            for trial in 0..trials {
                let mut rng = substream(seed, "tie", &rec.team_id, trial as u64);
                for (node, agg) in eval.aggregates.iter().enumerate() {
                    let set = agg.argmax_set();
                    let pick = if set.len() == 1 {
                        set[0]
                    } else {
                        set[rng.gen_range(0..set.len())]
                    };
                    if trial == 0 {
                        first_pred[node] = pick.number();
                    }
                    correct_count[node] += (pick == rec.correct_answer) as usize;
                    if let Some(&h) = rec.human_answers.get(&node) {
                        agree_count[node] += (pick == h) as usize;
                    }
                }
            }
            (0..n)
                .map(|node| {
                    let d = crate::task::difficulty(
                        &rec.endowments[node],
                        rec.correct_answer,
                        &cfg.weights,
                    )?;
                    let human = rec.human_answers.get(&node);
                    Ok(PlayerRow {
                        team_id: rec.team_id.clone(),
                        player_id: rec.players[node].clone(),
                        prediction: first_pred[node],
                        correct: correct_count[node] as f64 / trials as f64,
                        agrees: human.map(|_| agree_count[node] as f64 / trials as f64),
                        loglik: human.map(|&h| eval.aggregates[node].ln_prob(h)),
                        n_partners: rec.topology.degree(node),
                        difficulty_bin: crate::task::difficulty_bin(d),
                        betweenness: betweenness[node],
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_team.into_iter().flatten().collect())
}
