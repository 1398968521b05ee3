//! Probabilistic Dixit agents.
//!
//! Decisions are built from three pieces: an [`AssociationModel`] scoring
//! card/phrase fit, a Monte-Carlo estimate of how many votes a card draws
//! ([`estimate_vote_distribution`]), and the objective for the current role
//! (storyteller, decoy, voter). Every decision carries an [`Explanation`].

mod association;
mod decision;
mod estimate;
mod fallback;
mod lexicon;
mod player;
mod strategy;

pub use association::{AssociationModel, FeatureCosine, ModelKind, SeededRandom, TagJaccard};
pub use decision::{Action, AgentDecision, Alternative, BeliefEntry, Explanation};
pub use estimate::{estimate_vote_distribution, unseen_pool, VoteEstimate};
pub use fallback::fallback_decision;
pub use lexicon::{generate_candidate_phrases, CandidateLexicon, LexiconEntry, LexiconError};
pub use player::{
    Agent, AgentKind, AgentSpec, AgentSpecError, DixitAgent, RandomAgent, SeatView, StorytellerPolicy,
};
pub use strategy::{
    choose_decoy, choose_vote, endgame_objective, storyteller_move_strategy1,
    storyteller_move_strategy2, vote_belief, ObjectiveMode, VoteBelief,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::card::{Card, CardId};
use crate::parallel::Execution;
use crate::vote_model::VoteModelError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error("no unseen cards to simulate opponents from")]
    EmptyUnseenPool,
    #[error("the hand is empty")]
    EmptyHand,
    #[error("sample count must be at least 1")]
    ZeroSamples,
    #[error("only the agent's own card is on the table")]
    OwnCardOnlyCard,
    #[error("card {0} is not on the table")]
    NotOnTable(CardId),
    #[error("no candidate phrase fits the phrase limit")]
    NoCandidates,
    #[error(transparent)]
    VoteModel(#[from] VoteModelError),
}

fn default_temperature() -> f64 {
    1.0
}
fn default_samples() -> usize {
    2000
}
fn default_epsilon() -> f64 {
    0.05
}
fn default_candidate_limit() -> usize {
    5
}

/// Tunables shared by every agent decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentParams {
    /// Softmax temperature of the voter model.
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    /// Monte-Carlo samples per vote-count estimate.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Strategy #2 keeps only pairs with `P(n_V >= 1) > epsilon`.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Candidate phrases evaluated per hand card.
    #[serde(default = "default_candidate_limit")]
    pub candidate_limit: usize,
    #[serde(default)]
    pub execution: Execution,
}

impl Default for AgentParams {
    fn default() -> Self {
        AgentParams {
            temperature: default_temperature(),
            samples: default_samples(),
            epsilon: default_epsilon(),
            candidate_limit: default_candidate_limit(),
            execution: Execution::default(),
        }
    }
}

/// Everything an agent may know when deciding.
#[derive(Clone)]
pub struct GameContext<'a> {
    pub n_players: usize,
    pub me: usize,
    pub storyteller: usize,
    pub hand: Vec<Card>,
    pub scores: Vec<u32>,
    pub target_score: u32,
    pub phrase_limit: usize,
    /// Cards the agent has not seen: undrawn deck plus other players' hands
    /// and unrevealed submissions. Disjoint from `hand`.
    pub unseen: Vec<Card>,
    pub model: &'a dyn AssociationModel,
    pub params: AgentParams,
    /// Root of the Monte-Carlo sample streams for this decision.
    pub seed: u64,
}

impl GameContext<'_> {
    pub fn is_storyteller(&self) -> bool {
        self.me == self.storyteller
    }
}
