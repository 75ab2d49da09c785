//! Counterfactual human-AI simulation: after replaying the recorded
//! transcript, each agent picks one message per neighbor that minimizes the
//! KL divergence between its Ego posterior and that neighbor's Alter
//! posterior counterfactually updated with the message. All chosen messages
//! are then delivered in one simultaneous round (partner-actualization only,
//! no second-round reactions) and team performance is re-scored.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::agent::ModelConfig;
use crate::belief::{kl_divergence, likelihood_vector, surprise_update, CodedMessage};
use crate::error::{Error, Result};
use crate::replay::TeamSim;
use crate::rng::substream;
use crate::stats::mean_sd;
use crate::task::TeamRecord;

/// How the intervention message is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Minimize Ego-Alter KL divergence.
    Targeted,
    /// Uniform draw from the candidate set plus "no message".
    Random,
}

impl Policy {
    pub fn parse(s: &str) -> Option<Policy> {
        match s.trim().to_ascii_lowercase().as_str() {
            "targeted" => Some(Policy::Targeted),
            "random" => Some(Policy::Random),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Policy::Targeted => "targeted",
            Policy::Random => "random",
        }
    }
}

/// Which transcript messages an agent may forward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateSet {
    /// Messages the agent sent or received (the default).
    SentOrReceived,
    /// Only messages the agent received from neighbors.
    ReceivedOnly,
}

impl CandidateSet {
    pub fn parse(s: &str) -> Option<CandidateSet> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "sent-or-received" => Some(CandidateSet::SentOrReceived),
            "received-only" => Some(CandidateSet::ReceivedOnly),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CandidateSet::SentOrReceived => "sent-or-received",
            CandidateSet::ReceivedOnly => "received-only",
        }
    }
}

/// The decision for one (sender, recipient) pair.
#[derive(Debug, Clone)]
pub struct PairPlan {
    pub sender: usize,
    pub recipient: usize,
    /// The forwarded transcript message, or None for "no message".
    pub choice: Option<CodedMessage>,
    /// Ego-Alter KL divergence before the counterfactual delivery.
    pub kl_before: f64,
    /// Divergence after it; equals `kl_before` when nothing is sent.
    pub kl_after: f64,
}

/// Transcript messages visible to `node` during the replay, in order.
fn candidates(rec: &TeamRecord, node: usize, kind: CandidateSet) -> Vec<&CodedMessage> {
    rec.transcript
        .iter()
        .filter(|m| !m.is_neutral())
        .filter(|m| match kind {
            CandidateSet::SentOrReceived => {
                m.sender == node || rec.topology.has_edge(m.sender, node)
            }
            CandidateSet::ReceivedOnly => rec.topology.has_edge(m.sender, node),
        })
        .collect()
}

/// Evaluate every candidate for the pair (sender, recipient) and return the
/// KL-minimizing choice. A message is sent only if it strictly lowers the
/// divergence; exact ties among messages are broken uniformly at random.
pub fn select_message(
    sim: &TeamSim,
    rec: &TeamRecord,
    sender: usize,
    recipient: usize,
    kind: CandidateSet,
    rng: &mut impl Rng,
) -> Result<PairPlan> {
    let agent = sim.agent(sender);
    let ego = agent.ego_belief();
    let alter = agent.alter_belief(recipient)?;
    let kl_before = kl_divergence(ego, alter);
    let weights = agent.config().weights;

    let mut best_kl = f64::INFINITY;
    let mut best: Vec<&CodedMessage> = Vec::new();
    for m in candidates(rec, sender, kind) {
        let updated = surprise_update(alter, &likelihood_vector(m, &weights)?)?;
        let kl = kl_divergence(ego, &updated);
        if kl < best_kl {
            best_kl = kl;
            best = vec![m];
        } else if kl == best_kl {
            best.push(m);
        }
    }

    if best.is_empty() || best_kl >= kl_before {
        return Ok(PairPlan {
            sender,
            recipient,
            choice: None,
            kl_before,
            kl_after: kl_before,
        });
    }
    let choice = if best.len() == 1 {
        best[0]
    } else {
        best[rng.gen_range(0..best.len())]
    };
    Ok(PairPlan {
        sender,
        recipient,
        choice: Some(choice.clone()),
        kl_before,
        kl_after: best_kl,
    })
}

fn random_pair_plan(
    sim: &TeamSim,
    rec: &TeamRecord,
    sender: usize,
    recipient: usize,
    kind: CandidateSet,
    rng: &mut impl Rng,
) -> Result<PairPlan> {
    let agent = sim.agent(sender);
    let ego = agent.ego_belief();
    let alter = agent.alter_belief(recipient)?;
    let kl_before = kl_divergence(ego, alter);
    let weights = agent.config().weights;
    let cands = candidates(rec, sender, kind);

    // One uniform atom per candidate plus "no message".
    let pick = rng.gen_range(0..=cands.len());
    if pick == cands.len() {
        return Ok(PairPlan { sender, recipient, choice: None, kl_before, kl_after: kl_before });
    }
    let m = cands[pick];
    let updated = surprise_update(alter, &likelihood_vector(m, &weights)?)?;
    Ok(PairPlan {
        sender,
        recipient,
        choice: Some(m.clone()),
        kl_before,
        kl_after: kl_divergence(ego, &updated),
    })
}

/// Build one plan entry per (agent, neighbor) pair, in node order.
pub fn plan_team(
    sim: &TeamSim,
    rec: &TeamRecord,
    policy: Policy,
    kind: CandidateSet,
    rng: &mut impl Rng,
) -> Result<Vec<PairPlan>> {
    let mut plan = Vec::new();
    for sender in 0..rec.topology.node_count() {
        for recipient in rec.topology.neighbors(sender) {
            let pair = match policy {
                Policy::Targeted => select_message(sim, rec, sender, recipient, kind, rng)?,
                Policy::Random => random_pair_plan(sim, rec, sender, recipient, kind, rng)?,
            };
            debug_assert!(
                policy != Policy::Targeted || pair.kl_after <= pair.kl_before,
                "targeted choice increased KL"
            );
            plan.push(pair);
        }
    }
    Ok(plan)
}

/// Deliver every planned message simultaneously: the pair (i -> j) updates
/// agent j's Alter model of i. Senders' own models are untouched and no
/// second-round reactions occur.
pub fn apply_plan(sim: &mut TeamSim, plan: &[PairPlan]) -> Result<()> {
    for pair in plan {
        if let Some(m) = &pair.choice {
            sim.agent_mut(pair.recipient).actualize_alter(pair.sender, m)?;
        }
    }
    Ok(())
}

/// Intervention evaluation over a dataset.
#[derive(Debug, Clone, Serialize)]
pub struct CounterfactualSummary {
    pub policy: Policy,
    pub candidates: CandidateSet,
    pub n_teams: usize,
    pub n_individuals: usize,
    pub n_answered: usize,
    pub trials: usize,
    pub accuracy_mean: f64,
    pub accuracy_sd: f64,
    pub agreement_mean: Option<f64>,
    pub agreement_sd: Option<f64>,
    /// Dataset accuracy for each trial, for significance testing.
    pub per_trial_accuracy: Vec<f64>,
}

/// Replay every team, apply one round of interventions per trial, and score
/// the post-intervention predictions.
pub fn run_counterfactual(
    recs: &[TeamRecord],
    cfg: &ModelConfig,
    policy: Policy,
    kind: CandidateSet,
    trials: usize,
    seed: u64,
) -> Result<CounterfactualSummary> {
    if recs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }

    // (players, answered, per-trial (correct, agree) counts)
    type TeamCounts = (usize, usize, Vec<(usize, usize)>);
    let per_team: Vec<TeamCounts> = recs
        .par_iter()
        .map(|rec| {
            let base = TeamSim::run(rec, cfg)?;
            let n = rec.topology.node_count();
            let mut trial_counts = Vec::with_capacity(trials);
            for trial in 0..trials {
                let mut rng = substream(seed, "intervention", &rec.team_id, trial as u64);
                let mut sim = base.clone();
                let plan = plan_team(&sim, rec, policy, kind, &mut rng)?;
                apply_plan(&mut sim, &plan)?;
                let mut n_correct = 0usize;
                let mut n_agree = 0usize;
                for agent in sim.agents() {
                    let pick = agent.predict(&mut rng);
                    n_correct += (pick == rec.correct_answer) as usize;
                    if let Some(&h) = rec.human_answers.get(&agent.owner()) {
                        n_agree += (pick == h) as usize;
                    }
                }
                trial_counts.push((n_correct, n_agree));
            }
            Ok((n, rec.human_answers.len(), trial_counts))
        })
        .collect::<Result<Vec<_>>>()?;

    let n_individuals: usize = per_team.iter().map(|(n, _, _)| n).sum();
    let n_answered: usize = per_team.iter().map(|(_, a, _)| a).sum();
    let mut accuracy = Vec::with_capacity(trials);
    let mut agreement = Vec::with_capacity(trials);
    for trial in 0..trials {
        let correct: usize = per_team.iter().map(|(_, _, t)| t[trial].0).sum();
        let agree: usize = per_team.iter().map(|(_, _, t)| t[trial].1).sum();
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

    Ok(CounterfactualSummary {
        policy,
        candidates: kind,
        n_teams: recs.len(),
        n_individuals,
        n_answered,
        trials,
        accuracy_mean,
        accuracy_sd,
        agreement_mean,
        agreement_sd,
        per_trial_accuracy: accuracy,
    })
}

/// First-trial plans for every team, for the plan report.
pub fn plan_dataset(
    recs: &[TeamRecord],
    cfg: &ModelConfig,
    policy: Policy,
    kind: CandidateSet,
    seed: u64,
) -> Result<Vec<(String, Vec<PairPlan>)>> {
    recs.par_iter()
        .map(|rec| {
            let sim = TeamSim::run(rec, cfg)?;
            let mut rng = substream(seed, "intervention", &rec.team_id, 0);
            let plan = plan_team(&sim, rec, policy, kind, &mut rng)?;
            Ok((rec.team_id.clone(), plan))
        })
        .collect()
}
