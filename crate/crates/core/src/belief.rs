//! The inference core: belief states over the five answer options, coded
//! message likelihoods, the surprise-weighted Bayesian update, and
//! information-theoretic utilities.
//!
//! A [`Belief`] is a posterior distribution over the five options. Updates
//! never return raw vectors: every operation re-canonicalizes so that
//! components sum to 1 and stay above a small floor, keeping `ln p` finite
//! for the surprise exponent and for KL divergences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::task::{AnswerOption, Clue, NUM_OPTIONS};

/// Lower bound enforced on every belief component.
pub const EPS_FLOOR: f64 = 1e-9;

/// Renormalization is skipped when the component sum is already within this
/// distance of 1, so canonicalization is idempotent at the bit level.
const NORM_SKIP_TOL: f64 = 1e-12;

/// Relative tolerance used to detect tied maxima in [`Belief::argmax_set`].
const TIE_REL_TOL: f64 = 1e-12;

/// Strength of a coded statement about one answer option.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum StrengthCode {
    /// Strong no.
    Sn,
    /// Maybe no.
    Mn,
    /// Maybe yes.
    My,
    /// Strong yes.
    Sy,
    /// No inferential content; dropped before inference.
    Neutral,
}

impl StrengthCode {
    pub fn parse(s: &str) -> Option<StrengthCode> {
        match s.trim().to_ascii_uppercase().as_str() {
            "SN" => Some(StrengthCode::Sn),
            "MN" => Some(StrengthCode::Mn),
            "MY" => Some(StrengthCode::My),
            "SY" => Some(StrengthCode::Sy),
            "NEUTRAL" => Some(StrengthCode::Neutral),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StrengthCode::Sn => "SN",
            StrengthCode::Mn => "MN",
            StrengthCode::My => "MY",
            StrengthCode::Sy => "SY",
            StrengthCode::Neutral => "NEUTRAL",
        }
    }
}

impl std::fmt::Display for StrengthCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Likelihood multipliers for the four informative strength codes.
///
/// A weight above 1 pulls belief toward the mentioned option, below 1 pushes
/// it away. Neutral always maps to 1. No semantic ordering is enforced; a fit
/// is free to discover, say, a `mn` above `my`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoWeights {
    #[serde(rename = "w_sn")]
    pub sn: f64,
    #[serde(rename = "w_mn")]
    pub mn: f64,
    #[serde(rename = "w_my")]
    pub my: f64,
    #[serde(rename = "w_sy")]
    pub sy: f64,
}

impl InfoWeights {
    pub fn new(sn: f64, mn: f64, my: f64, sy: f64) -> Result<InfoWeights> {
        for (name, value) in [("w_sn", sn), ("w_mn", mn), ("w_my", my), ("w_sy", sy)] {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidWeight { name, value });
            }
        }
        Ok(InfoWeights { sn, mn, my, sy })
    }

    /// Identity weights: every message becomes uninformative.
    pub fn identity() -> InfoWeights {
        InfoWeights { sn: 1.0, mn: 1.0, my: 1.0, sy: 1.0 }
    }

    /// Likelihood multiplier for a strength code.
    pub fn weight(&self, code: StrengthCode) -> f64 {
        match code {
            StrengthCode::Sn => self.sn,
            StrengthCode::Mn => self.mn,
            StrengthCode::My => self.my,
            StrengthCode::Sy => self.sy,
            StrengthCode::Neutral => 1.0,
        }
    }
}

/// A timestamped, sender-attributed list of (option, strength) codes; the
/// only observable the agents ever see.
#[derive(Debug, Clone, PartialEq)]
pub struct CodedMessage {
    /// Seconds or ordinal position; only the order matters.
    pub time: f64,
    /// Node index of the sending player within the team.
    pub sender: usize,
    /// At most one code per option. May be empty or all-Neutral, in which
    /// case the message is skipped by the replay engine.
    pub codes: Vec<(AnswerOption, StrengthCode)>,
}

impl CodedMessage {
    pub fn new(
        time: f64,
        sender: usize,
        codes: Vec<(AnswerOption, StrengthCode)>,
    ) -> Result<CodedMessage> {
        if !time.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "message timestamp must be finite, got {time}"
            )));
        }
        let mut seen = [false; NUM_OPTIONS];
        for (opt, _) in &codes {
            if seen[opt.index()] {
                return Err(Error::InvalidArgument(format!(
                    "option {opt} appears more than once in one message"
                )));
            }
            seen[opt.index()] = true;
        }
        Ok(CodedMessage { time, sender, codes })
    }

    /// True when the message carries no inferential content.
    pub fn is_neutral(&self) -> bool {
        self.codes.iter().all(|(_, s)| *s == StrengthCode::Neutral)
    }
}

/// Posterior distribution over the five answer options.
///
/// Always canonical: components sum to 1 (within 1e-9) and every component
/// is at least [`EPS_FLOOR`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Belief {
    p: [f64; NUM_OPTIONS],
}

impl Belief {
    pub fn uniform() -> Belief {
        Belief { p: [1.0 / NUM_OPTIONS as f64; NUM_OPTIONS] }
    }

    /// Build a belief from raw non-negative masses, normalizing and flooring.
    pub fn from_probs(p: [f64; NUM_OPTIONS]) -> Result<Belief> {
        for &v in &p {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "belief component must be finite and >= 0, got {v}"
                )));
            }
        }
        canonicalized(p)
    }

    pub fn probs(&self) -> &[f64; NUM_OPTIONS] {
        &self.p
    }

    pub fn prob(&self, option: AnswerOption) -> f64 {
        self.p[option.index()]
    }

    pub fn ln_prob(&self, option: AnswerOption) -> f64 {
        self.p[option.index()].ln()
    }

    /// Options whose probability ties the maximum (relative tolerance
    /// 1e-12), in option order. Never empty.
    pub fn argmax_set(&self) -> Vec<AnswerOption> {
        let max = self.p.iter().cloned().fold(f64::MIN, f64::max);
        let cut = max * (1.0 - TIE_REL_TOL);
        (0..NUM_OPTIONS)
            .filter(|&i| self.p[i] >= cut)
            .map(|i| AnswerOption::from_index(i).expect("index in range"))
            .collect()
    }
}

impl Default for Belief {
    fn default() -> Self {
        Belief::uniform()
    }
}

impl std::fmt::Display for Belief {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "({:.4}, {:.4}, {:.4}, {:.4}, {:.4})",
            self.p[0], self.p[1], self.p[2], self.p[3], self.p[4]
        )
    }
}

/// Floor-and-normalize raw masses into a canonical belief.
///
/// Two floor passes are needed: renormalizing after the first clamp can push
/// a clamped component a few ulps back under the floor.
fn canonicalized(mut p: [f64; NUM_OPTIONS]) -> Result<Belief> {
    let mut sum: f64 = p.iter().sum();
    if !sum.is_finite() || sum <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "belief mass must be positive and finite, got sum {sum}"
        )));
    }
    if (sum - 1.0).abs() > NORM_SKIP_TOL {
        for v in &mut p {
            *v /= sum;
        }
    }
    for _ in 0..2 {
        if p.iter().all(|&v| v >= EPS_FLOOR) {
            return Ok(Belief { p });
        }
        for v in &mut p {
            if *v < EPS_FLOOR {
                *v = EPS_FLOOR;
            }
        }
        sum = p.iter().sum();
        if (sum - 1.0).abs() > NORM_SKIP_TOL {
            for v in &mut p {
                *v /= sum;
            }
        }
    }
    for v in &mut p {
        if *v < EPS_FLOOR {
            *v = EPS_FLOOR;
        }
    }
    Ok(Belief { p })
}

fn check_likelihood(l: &[f64; NUM_OPTIONS]) -> Result<()> {
    for (index, &value) in l.iter().enumerate() {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::NonPositiveLikelihood { index, value });
        }
    }
    Ok(())
}

/// Translate a coded message into a likelihood vector over the five options.
///
/// Mentioned options get their strength's weight, unmentioned options stay
/// at 1, and multiple codes in one message multiply onto their respective
/// options. An all-Neutral message is an error: it has no inferential
/// content and should have been skipped upstream.
pub fn likelihood_vector(m: &CodedMessage, w: &InfoWeights) -> Result<[f64; NUM_OPTIONS]> {
    let mut l = [1.0; NUM_OPTIONS];
    let mut informative = false;
    for (opt, strength) in &m.codes {
        if *strength == StrengthCode::Neutral {
            continue;
        }
        informative = true;
        l[opt.index()] *= w.weight(*strength);
    }
    if !informative {
        return Err(Error::NoInferentialContent);
    }
    Ok(l)
}

/// Surprise-weighted Bayesian update: each likelihood component is raised to
/// the negative natural log of the prior before multiplying, damping evidence
/// the prior already expects:
///
/// ```text
/// posterior[s] ∝ prior[s] · L[s]^(−ln prior[s])
/// ```
///
/// The prior's floor keeps the exponent finite. An identity likelihood is an
/// exact no-op.
pub fn surprise_update(prior: &Belief, l: &[f64; NUM_OPTIONS]) -> Result<Belief> {
    check_likelihood(l)?;
    let mut unnorm = [0.0; NUM_OPTIONS];
    for s in 0..NUM_OPTIONS {
        let exponent = -prior.p[s].ln();
        unnorm[s] = prior.p[s] * l[s].powf(exponent);
    }
    canonicalized(unnorm)
}

/// Plain (unweighted) Bayesian update: `posterior[s] ∝ prior[s] · L[s]`.
pub fn plain_update(prior: &Belief, l: &[f64; NUM_OPTIONS]) -> Result<Belief> {
    check_likelihood(l)?;
    let mut unnorm = [0.0; NUM_OPTIONS];
    for s in 0..NUM_OPTIONS {
        unnorm[s] = prior.p[s] * l[s];
    }
    canonicalized(unnorm)
}

/// Initial belief implied by a clue endowment: start uniform and apply one
/// plain Bayes step per clue. Plain updates commute, so the endowment order
/// does not matter. Clues with no informative codes are skipped.
pub fn from_clues(clues: &[Clue], w: &InfoWeights) -> Result<Belief> {
    let mut belief = Belief::uniform();
    for clue in clues {
        let mut l = [1.0; NUM_OPTIONS];
        let mut informative = false;
        for (opt, strength) in &clue.codes {
            if *strength == StrengthCode::Neutral {
                continue;
            }
            informative = true;
            l[opt.index()] *= w.weight(*strength);
        }
        if informative {
            belief = plain_update(&belief, &l)?;
        }
    }
    Ok(belief)
}

/// KL divergence `D(q ‖ p) = Σ q ln(q/p)` in nats.
///
/// Both arguments are canonical beliefs, so every component is positive and
/// the sum is finite. Rounding can produce a tiny negative value for nearly
/// identical arguments; the result is clamped at 0.
pub fn kl_divergence(q: &Belief, p: &Belief) -> f64 {
    let mut sum = 0.0;
    for s in 0..NUM_OPTIONS {
        sum += q.p[s] * (q.p[s] / p.p[s]).ln();
    }
    sum.max(0.0)
}

/// Bayesian surprise of a message for a holder of `prior`: the KL divergence
/// from the surprise-updated posterior back to the prior.
pub fn bayesian_surprise(prior: &Belief, m: &CodedMessage, w: &InfoWeights) -> Result<f64> {
    let posterior = surprise_update(prior, &likelihood_vector(m, w)?)?;
    Ok(kl_divergence(&posterior, prior))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opt(n: u32) -> AnswerOption {
        AnswerOption::new(n).unwrap()
    }

    fn msg(codes: Vec<(u32, StrengthCode)>) -> CodedMessage {
        CodedMessage::new(
            0.0,
            0,
            codes.into_iter().map(|(o, s)| (opt(o), s)).collect(),
        )
        .unwrap()
    }

    fn assert_close(belief: &Belief, expected: &[f64; 5], tol: f64) {
        for (s, (got, want)) in belief.probs().iter().zip(expected).enumerate() {
            assert!((got - want).abs() < tol, "component {s}: got {got} expected {want}");
        }
    }

    #[test]
    fn likelihood_single_my_code() {
        let w = InfoWeights::new(1.0, 1.0, 1.4, 1.0).unwrap();
        let l = likelihood_vector(&msg(vec![(3, StrengthCode::My)]), &w).unwrap();
        assert_eq!(l, [1.0, 1.0, 1.4, 1.0, 1.0]);
    }

    #[test]
    fn likelihood_multi_code_message() {
        let w = InfoWeights::new(0.1, 1.0, 1.45, 2.0).unwrap();
        let l = likelihood_vector(
            &msg(vec![(1, StrengthCode::Sn), (4, StrengthCode::Sy)]),
            &w,
        )
        .unwrap();
        assert_eq!(l, [0.1, 1.0, 1.0, 2.0, 1.0]);
    }

    #[test]
    fn likelihood_identity_weights() {
        let w = InfoWeights::identity();
        let l = likelihood_vector(&msg(vec![(2, StrengthCode::Sy)]), &w).unwrap();
        assert_eq!(l, [1.0; 5]);
    }

    #[test]
    fn likelihood_all_neutral_is_error() {
        let w = InfoWeights::identity();
        let err = likelihood_vector(&msg(vec![(2, StrengthCode::Neutral)]), &w);
        assert!(matches!(err, Err(Error::NoInferentialContent)));
    }

    #[test]
    fn duplicate_option_in_message_rejected() {
        let r = CodedMessage::new(
            0.0,
            0,
            vec![(opt(2), StrengthCode::Sy), (opt(2), StrengthCode::Sn)],
        );
        assert!(r.is_err());
    }

    // Expected components computed with 60-digit arithmetic (mpmath).
    #[test]
    fn surprise_update_reference_case_upweight() {
        let posterior = surprise_update(&Belief::uniform(), &[1.0, 1.0, 2.0, 1.0, 1.0]).unwrap();
        let expected = [
            0.14181723033958438,
            0.14181723033958438,
            0.4327310786416625,
            0.14181723033958438,
            0.14181723033958438,
        ];
        assert_close(&posterior, &expected, 1e-12);
    }

    #[test]
    fn surprise_update_reference_case_downweight() {
        let posterior = surprise_update(&Belief::uniform(), &[0.05, 1.0, 1.0, 1.0, 1.0]).unwrap();
        let expected = [
            0.0020097373897712734,
            0.24949756565255718,
            0.24949756565255718,
            0.24949756565255718,
            0.24949756565255718,
        ];
        assert_close(&posterior, &expected, 1e-12);
    }

    #[test]
    fn surprise_update_identity_is_exact() {
        let prior = Belief::from_probs([0.37, 0.03, 0.4, 0.1, 0.1]).unwrap();
        let posterior = surprise_update(&prior, &[1.0; 5]).unwrap();
        for s in 0..5 {
            assert_eq!(posterior.probs()[s].to_bits(), prior.probs()[s].to_bits());
        }
    }

    #[test]
    fn surprise_update_rejects_nonpositive_likelihood() {
        let e = surprise_update(&Belief::uniform(), &[1.0, 0.0, 1.0, 1.0, 1.0]);
        assert!(matches!(e, Err(Error::NonPositiveLikelihood { index: 1, .. })));
    }

    #[test]
    fn plain_update_one_step_bayes() {
        let p = plain_update(&Belief::uniform(), &[1.0, 2.0, 1.0, 1.0, 1.0]).unwrap();
        assert_close(&p, &[1.0 / 6.0, 1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0], 1e-15);
        let prior = Belief::from_probs([0.5, 0.125, 0.125, 0.125, 0.125]).unwrap();
        let p = plain_update(&prior, &[2.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_close(&p, &[2.0 / 3.0, 1.0 / 12.0, 1.0 / 12.0, 1.0 / 12.0, 1.0 / 12.0], 1e-15);
    }

    #[test]
    fn from_clues_empty_is_uniform() {
        let w = InfoWeights::identity();
        let b = from_clues(&[], &w).unwrap();
        assert_eq!(b, Belief::uniform());
    }

    #[test]
    fn from_clues_single_strong_yes() {
        use crate::task::Visibility;
        let w = InfoWeights::new(1.0, 1.0, 1.0, 2.0).unwrap();
        let clue = Clue::new(vec![(opt(2), StrengthCode::Sy)], Visibility::Private).unwrap();
        let b = from_clues(&[clue], &w).unwrap();
        assert_close(&b, &[1.0 / 6.0, 1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0], 1e-15);
    }

    #[test]
    fn from_clues_order_invariant() {
        use crate::task::Visibility;
        let w = InfoWeights::new(0.3, 0.8, 1.5, 2.0).unwrap();
        let a = Clue::new(vec![(opt(1), StrengthCode::Sn)], Visibility::Public).unwrap();
        let b = Clue::new(
            vec![(opt(3), StrengthCode::Sy), (opt(4), StrengthCode::Mn)],
            Visibility::Private,
        )
        .unwrap();
        let fwd = from_clues(&[a.clone(), b.clone()], &w).unwrap();
        let rev = from_clues(&[b, a], &w).unwrap();
        assert_close(&fwd, rev.probs(), 1e-15);
    }

    #[test]
    fn kl_reference_value_and_asymmetry() {
        let q = Belief::from_probs([0.4, 0.15, 0.15, 0.15, 0.15]).unwrap();
        let u = Belief::uniform();
        assert_eq!(kl_divergence(&q, &q), 0.0);
        assert!((kl_divergence(&q, &u) - 0.10464962875290957).abs() < 1e-12);
        assert!(kl_divergence(&q, &u) != kl_divergence(&u, &q));
    }

    #[test]
    fn bayesian_surprise_reference_value() {
        let w = InfoWeights::new(1.0, 1.0, 2.0, 1.0).unwrap();
        let m = msg(vec![(3, StrengthCode::My)]);
        let s = bayesian_surprise(&Belief::uniform(), &m, &w).unwrap();
        assert!((s - 0.13896674226263502).abs() < 1e-12);
    }

    #[test]
    fn bayesian_surprise_of_identity_message_is_zero() {
        let w = InfoWeights::identity();
        let m = msg(vec![(3, StrengthCode::My)]);
        assert_eq!(bayesian_surprise(&Belief::uniform(), &m, &w).unwrap(), 0.0);
    }

    #[test]
    fn repeated_message_is_less_surprising() {
        let w = InfoWeights::new(1.0, 1.0, 2.0, 1.0).unwrap();
        let m = msg(vec![(3, StrengthCode::My)]);
        let prior = Belief::uniform();
        let first = bayesian_surprise(&prior, &m, &w).unwrap();
        let once = surprise_update(&prior, &likelihood_vector(&m, &w).unwrap()).unwrap();
        let second = bayesian_surprise(&once, &m, &w).unwrap();
        assert!(second < first, "second {second} not below first {first}");
        assert!((second - 0.04180140188239967).abs() < 1e-12);
    }

    #[test]
    fn floor_is_enforced_under_extreme_evidence() {
        let mut b = Belief::uniform();
        for _ in 0..6 {
            b = surprise_update(&b, &[1e-6, 1.0, 1.0, 1.0, 1.0]).unwrap();
        }
        assert!(b.probs().iter().all(|&p| p >= EPS_FLOOR));
        let sum: f64 = b.probs().iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn argmax_set_detects_exact_ties() {
        let b = Belief::from_probs([0.4, 0.4, 0.1, 0.05, 0.05]).unwrap();
        let set = b.argmax_set();
        assert_eq!(set.len(), 2);
        assert_eq!(set[0].number(), 1);
        assert_eq!(set[1].number(), 2);
    }

    #[test]
    fn weights_reject_negative_or_nonfinite() {
        assert!(InfoWeights::new(-0.1, 1.0, 1.0, 1.0).is_err());
        assert!(InfoWeights::new(1.0, f64::NAN, 1.0, 1.0).is_err());
        assert!(InfoWeights::new(0.0, 1.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn model_config_json_shape() {
        let w = InfoWeights::new(0.1, 1.0, 1.45, 2.0).unwrap();
        let json = serde_json::to_value(w).unwrap();
        assert_eq!(json["w_sn"], 0.1);
        assert_eq!(json["w_my"], 1.45);
    }
}
