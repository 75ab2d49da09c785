//! Communication-based theory-of-mind measures: per-message Bayesian
//! surprise evaluated against the sender's own Alter model of each recipient,
//! prefix-restricted averages (alpha_C), and temporal profiles.
//!
//! Everything here is computed strictly inside the sender's Markov blanket:
//! the score asks how useful the sender should expect a message to be given
//! what the sender thinks the recipient knows, not how the recipient actually
//! reacted.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::agent::ModelConfig;
use crate::belief::{bayesian_surprise, likelihood_vector, Belief, CodedMessage, InfoWeights};
use crate::error::{Error, Result};
use crate::replay::TeamSim;
use crate::task::{TeamRecord, NUM_OPTIONS};

/// How a message's surprise is operationalized. The default is Bayesian
/// surprise; the predictive-evidence reading is available as an alternative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SurpriseKind {
    /// KL divergence from the surprise-updated posterior back to the prior.
    BayesianKl,
    /// Negative log predictive probability of the message under the prior,
    /// normalized over the alphabet of 20 single-code observations (4
    /// strengths x 5 options). The normalizer has the closed form
    /// `16 + w_sn + w_mn + w_my + w_sy`.
    NegLogEvidence,
}

impl SurpriseKind {
    pub fn parse(s: &str) -> Option<SurpriseKind> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "bayesian-kl" | "bayesian" => Some(SurpriseKind::BayesianKl),
            "neg-log-evidence" | "evidence" => Some(SurpriseKind::NegLogEvidence),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SurpriseKind::BayesianKl => "bayesian-kl",
            SurpriseKind::NegLogEvidence => "neg-log-evidence",
        }
    }
}

fn message_surprise(
    prior: &Belief,
    m: &CodedMessage,
    w: &InfoWeights,
    kind: SurpriseKind,
) -> Result<f64> {
    match kind {
        SurpriseKind::BayesianKl => bayesian_surprise(prior, m, w),
        SurpriseKind::NegLogEvidence => {
            let l = likelihood_vector(m, w)?;
            let evidence: f64 = (0..NUM_OPTIONS).map(|s| prior.probs()[s] * l[s]).sum();
            let z = 16.0 + w.sn + w.mn + w.my + w.sy;
            Ok(-(evidence / z).ln())
        }
    }
}

/// Surprise of one (message, recipient) pair.
#[derive(Debug, Clone, Serialize)]
pub struct MessageScore {
    /// Index among the team's codable (non-neutral) messages, 0-based.
    pub msg_index: usize,
    pub time: f64,
    pub sender: usize,
    pub recipient: usize,
    /// Position in the codable transcript: (msg_index + 1) / total, in (0, 1].
    pub time_fraction: f64,
    pub surprise: f64,
}

/// Replay a team and score every outgoing codable message against the
/// sender's Alter model of each neighbor as of that moment, as Bayesian
/// surprise. One score per (message, neighbor-recipient) pair.
pub fn score_messages(rec: &TeamRecord, cfg: &ModelConfig) -> Result<Vec<MessageScore>> {
    score_messages_with(rec, cfg, SurpriseKind::BayesianKl)
}

/// [`score_messages`] with an explicit surprise definition.
pub fn score_messages_with(
    rec: &TeamRecord,
    cfg: &ModelConfig,
    kind: SurpriseKind,
) -> Result<Vec<MessageScore>> {
    let mut sim = TeamSim::new(rec, cfg)?;
    let total = rec.codable_messages().count();
    let mut scores = Vec::new();
    let mut index = 0usize;
    for m in &rec.transcript {
        if m.is_neutral() {
            continue;
        }
        let time_fraction = (index + 1) as f64 / total as f64;
        let sender_agent = sim.agent(m.sender);
        for recipient in rec.topology.neighbors(m.sender) {
            let alter = sender_agent.alter_belief(recipient)?;
            let surprise = message_surprise(alter, m, &cfg.weights, kind)?;
            scores.push(MessageScore {
                msg_index: index,
                time: m.time,
                sender: m.sender,
                recipient,
                time_fraction,
                surprise,
            });
        }
        sim.deliver(m)?;
        index += 1;
    }
    Ok(scores)
}

/// A message's scores averaged over its recipients.
#[derive(Debug, Clone, Copy)]
pub struct MessageMean {
    pub msg_index: usize,
    pub sender: usize,
    pub time_fraction: f64,
    pub surprise: f64,
}

/// Collapse per-recipient scores to one mean per message. A broadcast's
/// usefulness differs per recipient, so scores are averaged within each
/// message before any higher-level aggregation. Scores for one message are
/// contiguous in the input, which `score_messages` guarantees.
pub fn per_message_means(scores: &[MessageScore]) -> Vec<MessageMean> {
    let mut acc: Vec<(MessageMean, usize)> = Vec::new();
    for s in scores {
        match acc.last_mut() {
            Some((last, n)) if last.msg_index == s.msg_index => {
                last.surprise += s.surprise;
                *n += 1;
            }
            _ => acc.push((
                MessageMean {
                    msg_index: s.msg_index,
                    sender: s.sender,
                    time_fraction: s.time_fraction,
                    surprise: s.surprise,
                },
                1,
            )),
        }
    }
    acc.into_iter()
        .map(|(mut m, n)| {
            m.surprise /= n as f64;
            m
        })
        .collect()
}

fn check_prefix(prefix_fraction: f64) -> Result<()> {
    if !(prefix_fraction > 0.0 && prefix_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "prefix fraction must lie in (0, 1], got {prefix_fraction}"
        )));
    }
    Ok(())
}

/// Mean surprise per sender over the transcript prefix. `None` marks senders
/// with no qualifying messages.
pub fn alpha_c_individual(
    scores: &[MessageScore],
    n_players: usize,
    prefix_fraction: f64,
) -> Result<Vec<Option<f64>>> {
    check_prefix(prefix_fraction)?;
    let mut sums = vec![(0.0, 0usize); n_players];
    for m in per_message_means(scores) {
        if m.time_fraction <= prefix_fraction + 1e-12 {
            sums[m.sender].0 += m.surprise;
            sums[m.sender].1 += 1;
        }
    }
    Ok(sums
        .into_iter()
        .map(|(sum, n)| if n > 0 { Some(sum / n as f64) } else { None })
        .collect())
}

/// Mean surprise over the whole team's transcript prefix. `None` when no
/// message qualifies.
pub fn alpha_c_team(scores: &[MessageScore], prefix_fraction: f64) -> Result<Option<f64>> {
    check_prefix(prefix_fraction)?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for m in per_message_means(scores) {
        if m.time_fraction <= prefix_fraction + 1e-12 {
            sum += m.surprise;
            n += 1;
        }
    }
    Ok(if n > 0 { Some(sum / n as f64) } else { None })
}

/// Mean surprise per equal-width time bin. Empty bins are `None`.
pub fn temporal_profile(scores: &[MessageScore], bins: usize) -> Result<Vec<Option<f64>>> {
    if bins < 2 {
        return Err(Error::InvalidArgument(format!(
            "temporal profile needs at least 2 bins, got {bins}"
        )));
    }
    let mut sums = vec![(0.0, 0usize); bins];
    for m in per_message_means(scores) {
        let bin = ((m.time_fraction * bins as f64).ceil() as usize).clamp(1, bins) - 1;
        sums[bin].0 += m.surprise;
        sums[bin].1 += 1;
    }
    Ok(sums
        .into_iter()
        .map(|(sum, n)| if n > 0 { Some(sum / n as f64) } else { None })
        .collect())
}

/// Split teams at the median human accuracy: true marks teams at or above
/// the median. Used to contrast temporal profiles of high and low performers.
pub fn median_accuracy_split(recs: &[TeamRecord]) -> Result<BTreeMap<String, bool>> {
    if recs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let acc: Vec<(String, f64)> = recs
        .iter()
        .map(|rec| {
            let n = rec.topology.node_count() as f64;
            let correct = rec
                .human_answers
                .iter()
                .filter(|(_, &a)| a == rec.correct_answer)
                .count() as f64;
            (rec.team_id.clone(), correct / n)
        })
        .collect();
    let mut sorted: Vec<f64> = acc.iter().map(|(_, a)| *a).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("accuracies are comparable"));
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
    };
    Ok(acc.into_iter().map(|(team, a)| (team, a >= median)).collect())
}
