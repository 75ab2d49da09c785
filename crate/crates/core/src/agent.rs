//! Shadow agents: one Ego model plus one Alter model per network neighbor,
//! with self-/partner-actualization routing, product aggregation weighted by
//! `alpha_d`, decision readout, and lesioned variants for model comparison.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::belief::{from_clues, likelihood_vector, surprise_update, Belief, CodedMessage, InfoWeights};
use crate::error::{Error, Result};
use crate::task::{AnswerOption, Clue};

/// Which updating loops are enabled. Used for nested model comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LesionMode {
    /// Ignore all structure; the agent guesses uniformly.
    Random,
    /// Freeze the ego at the clue prior and ignore every message.
    PriorOnly,
    /// Self-actualization only; alters never enter the aggregate.
    SelfOnly,
    /// Partner-actualization only; the ego is replaced by a uniform belief.
    PartnerOnly,
    /// Both loops enabled.
    Full,
}

impl LesionMode {
    pub fn parse(s: &str) -> Option<LesionMode> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "random" => Some(LesionMode::Random),
            "prior_only" | "prior" => Some(LesionMode::PriorOnly),
            "self_only" | "self" => Some(LesionMode::SelfOnly),
            "partner_only" | "partner" => Some(LesionMode::PartnerOnly),
            "full" => Some(LesionMode::Full),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LesionMode::Random => "random",
            LesionMode::PriorOnly => "prior_only",
            LesionMode::SelfOnly => "self_only",
            LesionMode::PartnerOnly => "partner_only",
            LesionMode::Full => "full",
        }
    }

    pub fn allows_self_actualization(self) -> bool {
        matches!(self, LesionMode::SelfOnly | LesionMode::Full)
    }

    pub fn allows_partner_actualization(self) -> bool {
        matches!(self, LesionMode::PartnerOnly | LesionMode::Full)
    }

    /// Number of free parameters under this lesion, used as the degrees of
    /// freedom bookkeeping for likelihood-ratio tests: the four information
    /// weights are free everywhere except Random, and `alpha_d` is free only
    /// in the full model.
    pub fn free_parameters(self) -> usize {
        match self {
            LesionMode::Random => 0,
            LesionMode::PriorOnly | LesionMode::SelfOnly | LesionMode::PartnerOnly => 4,
            LesionMode::Full => 5,
        }
    }
}

impl std::fmt::Display for LesionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A point in fit space: information weights, alpha_d, and the lesion.
///
/// Serializes flat, e.g.
/// `{"w_sn":0.1,"w_mn":1.0,"w_my":1.45,"w_sy":2.0,"alpha_d":0.95,"lesion":"full"}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(flatten)]
    pub weights: InfoWeights,
    pub alpha_d: f64,
    pub lesion: LesionMode,
}

impl ModelConfig {
    pub fn new(weights: InfoWeights, alpha_d: f64, lesion: LesionMode) -> Result<ModelConfig> {
        let cfg = ModelConfig { weights, alpha_d, lesion };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        InfoWeights::new(self.weights.sn, self.weights.mn, self.weights.my, self.weights.sy)?;
        if !self.alpha_d.is_finite() || !(0.0..=1.0).contains(&self.alpha_d) {
            return Err(Error::InvalidAlpha(self.alpha_d));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Ego,
    Alter,
}

/// One mental model: a belief attributed to a subject.
#[derive(Debug, Clone)]
pub struct MentalModel {
    pub subject: usize,
    pub kind: ModelKind,
    pub belief: Belief,
}

/// A shadow agent for one player: its Ego model, one Alter model per
/// neighbor, and the model configuration.
#[derive(Debug, Clone)]
pub struct Agent {
    owner: usize,
    ego: MentalModel,
    alters: BTreeMap<usize, MentalModel>,
    config: ModelConfig,
}

impl Agent {
    /// Build an agent for `owner`. The ego is initialized by plain Bayes over
    /// the clue endowment; alter models start uniform.
    pub fn new(
        owner: usize,
        endowment: &[Clue],
        neighbors: &[usize],
        config: &ModelConfig,
    ) -> Result<Agent> {
        config.validate()?;
        let ego = MentalModel {
            subject: owner,
            kind: ModelKind::Ego,
            belief: from_clues(endowment, &config.weights)?,
        };
        let alters = neighbors
            .iter()
            .map(|&j| {
                (j, MentalModel { subject: j, kind: ModelKind::Alter, belief: Belief::uniform() })
            })
            .collect();
        Ok(Agent { owner, ego, alters, config: *config })
    }

    pub fn owner(&self) -> usize {
        self.owner
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn ego_belief(&self) -> &Belief {
        &self.ego.belief
    }

    pub fn alter_belief(&self, neighbor: usize) -> Result<&Belief> {
        self.alters
            .get(&neighbor)
            .map(|m| &m.belief)
            .ok_or(Error::NotANeighbor { owner: self.owner, node: neighbor })
    }

    pub fn neighbors(&self) -> impl Iterator<Item = usize> + '_ {
        self.alters.keys().copied()
    }

    /// Observe one message crossing the owner's Markov blanket.
    ///
    /// The owner's own messages update the ego (self-actualization), a
    /// neighbor's messages update that neighbor's alter model
    /// (partner-actualization), and the lesion gates either loop. A sender
    /// that is neither the owner nor a neighbor is an error regardless of
    /// the lesion.
    pub fn observe(&mut self, m: &CodedMessage) -> Result<()> {
        if m.is_neutral() {
            return Err(Error::NoInferentialContent);
        }
        if m.sender == self.owner {
            if self.config.lesion.allows_self_actualization() {
                let l = likelihood_vector(m, &self.config.weights)?;
                self.ego.belief = surprise_update(&self.ego.belief, &l)?;
            }
        } else if let Some(alter) = self.alters.get_mut(&m.sender) {
            if self.config.lesion.allows_partner_actualization() {
                let l = likelihood_vector(m, &self.config.weights)?;
                alter.belief = surprise_update(&alter.belief, &l)?;
            }
        } else {
            return Err(Error::OutsideMarkovBlanket { sender: m.sender, owner: self.owner });
        }
        Ok(())
    }

    /// Counterfactually update one alter model in place (used when an
    /// intervention message is delivered outside the recorded transcript).
    pub fn actualize_alter(&mut self, neighbor: usize, m: &CodedMessage) -> Result<()> {
        if !self.alters.contains_key(&neighbor) {
            return Err(Error::NotANeighbor { owner: self.owner, node: neighbor });
        }
        if !self.config.lesion.allows_partner_actualization() {
            return Ok(());
        }
        let l = likelihood_vector(m, &self.config.weights)?;
        let alter = self.alters.get_mut(&neighbor).expect("presence checked above");
        alter.belief = surprise_update(&alter.belief, &l)?;
        Ok(())
    }

    /// Final posterior with the configured alpha_d.
    pub fn aggregate(&self) -> Belief {
        self.aggregate_with_alpha(self.config.alpha_d)
    }

    /// Final posterior with an explicit alpha_d, honoring the lesion:
    /// Random is uniform, PriorOnly/SelfOnly force alpha to 0 (ego only),
    /// PartnerOnly replaces the ego with a uniform belief and forces alpha
    /// to 1, and Full combines ego and alters as
    /// `p(s) ∝ ego(s) · Π_j alter_j(s)^alpha`.
    pub fn aggregate_with_alpha(&self, alpha: f64) -> Belief {
        match self.config.lesion {
            LesionMode::Random => Belief::uniform(),
            LesionMode::PriorOnly | LesionMode::SelfOnly => self.ego.belief,
            LesionMode::PartnerOnly => product_aggregate(&Belief::uniform(), self.alter_beliefs(), 1.0),
            LesionMode::Full => product_aggregate(&self.ego.belief, self.alter_beliefs(), alpha),
        }
    }

    fn alter_beliefs(&self) -> impl Iterator<Item = &Belief> {
        self.alters.values().map(|m| &m.belief)
    }

    /// Decision readout: argmax of the aggregate posterior, ties broken
    /// uniformly at random.
    pub fn predict(&self, tie_rng: &mut impl Rng) -> AnswerOption {
        let set = self.aggregate().argmax_set();
        if set.len() == 1 {
            set[0]
        } else {
            *set.choose(tie_rng).expect("argmax set is never empty")
        }
    }
}

fn product_aggregate<'a>(
    ego: &Belief,
    alters: impl Iterator<Item = &'a Belief>,
    alpha: f64,
) -> Belief {
    let mut unnorm = *ego.probs();
    for alter in alters {
        for (u, p) in unnorm.iter_mut().zip(alter.probs()) {
            *u *= p.powf(alpha);
        }
    }
    Belief::from_probs(unnorm).expect("aggregate masses are positive and finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::StrengthCode;
    use crate::rng::StreamKey;
    use crate::task::{Visibility, NUM_OPTIONS};

    fn opt(n: u32) -> AnswerOption {
        AnswerOption::new(n).unwrap()
    }

    fn cfg(lesion: LesionMode) -> ModelConfig {
        ModelConfig::new(InfoWeights::new(0.5, 1.0, 2.0, 2.0).unwrap(), 0.95, lesion).unwrap()
    }

    fn endowment(option: u32) -> Vec<Clue> {
        vec![
            Clue::new(vec![(opt(option), StrengthCode::Sy)], Visibility::Public).unwrap(),
            Clue::new(vec![(opt(1), StrengthCode::Sn)], Visibility::Private).unwrap(),
        ]
    }

    fn msg(sender: usize, option: u32, strength: StrengthCode) -> CodedMessage {
        CodedMessage::new(0.0, sender, vec![(opt(option), strength)]).unwrap()
    }

    #[test]
    fn own_message_under_self_only_updates_ego_only() {
        let mut a = Agent::new(0, &endowment(3), &[1, 2], &cfg(LesionMode::SelfOnly)).unwrap();
        let ego_before = *a.ego_belief();
        let alter_before = *a.alter_belief(1).unwrap();
        a.observe(&msg(0, 3, StrengthCode::My)).unwrap();
        assert_ne!(*a.ego_belief(), ego_before);
        assert_eq!(*a.alter_belief(1).unwrap(), alter_before);
    }

    #[test]
    fn neighbor_message_under_prior_only_is_a_no_op() {
        let mut a = Agent::new(0, &endowment(3), &[1], &cfg(LesionMode::PriorOnly)).unwrap();
        let before = a.clone();
        a.observe(&msg(1, 2, StrengthCode::Sy)).unwrap();
        assert_eq!(*a.ego_belief(), *before.ego_belief());
        assert_eq!(*a.alter_belief(1).unwrap(), *before.alter_belief(1).unwrap());
    }

    #[test]
    fn neighbor_message_updates_only_that_alter() {
        let mut a = Agent::new(0, &endowment(1), &[1, 2], &cfg(LesionMode::Full)).unwrap();
        let w = InfoWeights::new(0.5, 1.0, 2.0, 2.0).unwrap();
        assert_eq!(w.my, 2.0);
        a.observe(&msg(1, 3, StrengthCode::My)).unwrap();
        let expected = [
            0.14181723033958438,
            0.14181723033958438,
            0.4327310786416625,
            0.14181723033958438,
            0.14181723033958438,
        ];
        let got = a.alter_belief(1).unwrap().probs();
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-12);
        }
        assert_eq!(*a.alter_belief(2).unwrap(), Belief::uniform());
    }

    #[test]
    fn sender_outside_blanket_is_an_error() {
        let mut a = Agent::new(0, &endowment(1), &[1], &cfg(LesionMode::Full)).unwrap();
        let e = a.observe(&msg(3, 2, StrengthCode::My));
        assert!(matches!(e, Err(Error::OutsideMarkovBlanket { sender: 3, owner: 0 })));
    }

    #[test]
    fn aggregate_with_alpha_zero_is_exactly_ego() {
        let mut a = Agent::new(0, &endowment(4), &[1, 2], &cfg(LesionMode::Full)).unwrap();
        a.observe(&msg(1, 2, StrengthCode::Sy)).unwrap();
        a.observe(&msg(2, 5, StrengthCode::Sn)).unwrap();
        let agg = a.aggregate_with_alpha(0.0);
        for s in 0..NUM_OPTIONS {
            assert_eq!(agg.probs()[s].to_bits(), a.ego_belief().probs()[s].to_bits());
        }
    }

    #[test]
    fn aggregate_with_uniform_alters_is_ego() {
        let a = Agent::new(0, &endowment(4), &[1, 2, 3], &cfg(LesionMode::Full)).unwrap();
        for &alpha in &[0.0, 0.3, 0.95, 1.0] {
            let agg = a.aggregate_with_alpha(alpha);
            for s in 0..NUM_OPTIONS {
                assert!((agg.probs()[s] - a.ego_belief().probs()[s]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn aggregate_hand_example() {
        // ego (0.6, 0.1, ...), one alter (0.1, 0.6, ...), alpha 1
        // -> (0.4, 0.4, 1/15, 1/15, 1/15)
        let ego = Belief::from_probs([0.6, 0.1, 0.1, 0.1, 0.1]).unwrap();
        let alter = Belief::from_probs([0.1, 0.6, 0.1, 0.1, 0.1]).unwrap();
        let agg = product_aggregate(&ego, std::iter::once(&alter), 1.0);
        let expected = [0.4, 0.4, 1.0 / 15.0, 1.0 / 15.0, 1.0 / 15.0];
        for (g, e) in agg.probs().iter().zip(&expected) {
            assert!((g - e).abs() < 1e-12);
        }
    }

    #[test]
    fn partner_only_ignores_the_endowment() {
        let mut a = Agent::new(0, &endowment(2), &[1], &cfg(LesionMode::PartnerOnly)).unwrap();
        let mut b = Agent::new(0, &endowment(5), &[1], &cfg(LesionMode::PartnerOnly)).unwrap();
        for agent in [&mut a, &mut b] {
            agent.observe(&msg(1, 3, StrengthCode::Sy)).unwrap();
        }
        assert_eq!(a.aggregate(), b.aggregate());
    }

    #[test]
    fn predict_is_deterministic_for_peaked_posterior() {
        let mut a = Agent::new(0, &endowment(3), &[1], &cfg(LesionMode::Full)).unwrap();
        a.observe(&msg(0, 3, StrengthCode::Sy)).unwrap();
        for seed in 0..20u64 {
            let mut rng = StreamKey::new(seed).with("t").rng();
            assert_eq!(a.predict(&mut rng).number(), 3);
        }
    }

    #[test]
    fn predict_breaks_exact_ties_uniformly() {
        // Two-way tie via symmetric ego/alter from the hand example.
        let mut a = Agent::new(0, &endowment(1), &[1], &cfg(LesionMode::Full)).unwrap();
        a.ego.belief = Belief::from_probs([0.6, 0.1, 0.1, 0.1, 0.1]).unwrap();
        a.alters.get_mut(&1).unwrap().belief =
            Belief::from_probs([0.1, 0.6, 0.1, 0.1, 0.1]).unwrap();
        let mut a_cfg = a.config;
        a_cfg.alpha_d = 1.0;
        a.config = a_cfg;

        let mut rng = StreamKey::new(99).with("tie").rng();
        let mut first = 0u32;
        let n = 10_000;
        for _ in 0..n {
            match a.predict(&mut rng).number() {
                1 => first += 1,
                2 => {}
                other => panic!("tie-break escaped the tied set: {other}"),
            }
        }
        let freq = first as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.05, "tie frequency {freq}");
    }

    #[test]
    fn random_lesion_predicts_uniformly() {
        let a = Agent::new(0, &endowment(3), &[1], &cfg(LesionMode::Random)).unwrap();
        assert_eq!(a.aggregate(), Belief::uniform());
        let mut rng = StreamKey::new(5).with("r").rng();
        let mut counts = [0u64; NUM_OPTIONS];
        for _ in 0..10_000 {
            counts[a.predict(&mut rng).index()] += 1;
        }
        let (_, p) = crate::stats::chi2_gof_test(&counts, &[0.2; NUM_OPTIONS]);
        assert!(p > 0.01);
    }

    #[test]
    fn alpha_monotonicity_when_alters_agree() {
        // Uniform ego, two alters peaked on option 4.
        let mut a = Agent::new(
            0,
            &[
                Clue::new(vec![(opt(1), StrengthCode::Neutral)], Visibility::Public).unwrap(),
                Clue::new(vec![(opt(1), StrengthCode::Neutral)], Visibility::Private).unwrap(),
            ],
            &[1, 2],
            &cfg(LesionMode::Full),
        )
        .unwrap();
        a.observe(&msg(1, 4, StrengthCode::Sy)).unwrap();
        a.observe(&msg(2, 4, StrengthCode::Sy)).unwrap();
        let mut last = 0.0;
        for i in 0..=20 {
            let alpha = i as f64 / 20.0;
            let p = a.aggregate_with_alpha(alpha).prob(opt(4));
            assert!(p >= last - 1e-12, "alpha {alpha}: {p} < {last}");
            last = p;
        }
    }

    #[test]
    fn config_validation_rejects_bad_alpha() {
        let w = InfoWeights::identity();
        assert!(ModelConfig::new(w, -0.1, LesionMode::Full).is_err());
        assert!(ModelConfig::new(w, 1.5, LesionMode::Full).is_err());
        assert!(ModelConfig::new(w, f64::NAN, LesionMode::Full).is_err());
    }

    #[test]
    fn config_json_round_trip_is_flat() {
        let cfg = cfg(LesionMode::Full);
        let json = serde_json::to_string(&cfg).unwrap();
        assert!(json.contains("\"w_sn\":0.5"));
        assert!(json.contains("\"lesion\":\"full\""));
        let back: ModelConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }
}
