//! Networked Bayesian belief agents for team communication.
//!
//! A team of humans solves a hidden-profile task over a chat network whose
//! messages have been coded into (option, strength) statements. This crate
//! replays such transcripts through shadow agents that maintain one Ego
//! model (what my player knows) and one Alter model per network neighbor
//! (what I think that neighbor knows), updated by a surprise-weighted
//! Bayesian rule. On top of the replay engine it provides:
//!
//! - scoring of accuracy, human agreement, and per-individual likelihoods
//!   ([`replay`]);
//! - grid-search maximum-likelihood fitting of the information weights and
//!   the alpha_d ability parameter, with nested-model likelihood-ratio
//!   tests ([`fit`]);
//! - message-level theory-of-mind measures based on Bayesian surprise
//!   ([`tom_measures`]);
//! - counterfactual KL-guided interventions against a random baseline
//!   ([`intervene`]);
//! - synthetic ensembles with scripted communicators ([`synth`]) and the
//!   canonical CSV data formats ([`io`]).

pub mod agent;
pub mod belief;
pub mod error;
pub mod fit;
pub mod intervene;
pub mod io;
pub mod replay;
pub mod rng;
pub mod stats;
pub mod synth;
pub mod task;
pub mod tom_measures;

pub use agent::{Agent, LesionMode, ModelConfig};
pub use belief::{Belief, CodedMessage, InfoWeights, StrengthCode};
pub use error::{Error, Result};
pub use task::{AnswerOption, Clue, TeamRecord, Topology, NUM_OPTIONS};
