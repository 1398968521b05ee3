//! Rules engine, vote-count model and agents for the Dixit captioning game.
//!
//! The crate is split along the lines of the game itself:
//!
//! * [`engine`] holds the authoritative rules: dealing, submissions, voting,
//!   scoring and turn rotation.
//! * [`vote_model`] is the probability machinery used to reason about how many
//!   voters pick a given card.
//! * [`agents`] builds playing agents on top of pluggable card/phrase
//!   association models.
//! * [`transcript`] and [`tournament`] run seeded self-play and make every
//!   game replayable.

pub mod agents;
pub mod card;
pub mod config;
pub mod engine;
pub mod parallel;
pub mod phrase;
pub mod seed;
pub mod tournament;
pub mod transcript;
pub mod vote_model;

pub use card::{Card, CardId, Deck, DeckError};
pub use config::{ConfigError, GameConfig};
pub use engine::{score_round, EngineError, GameState, Phase, RoundScore, RoundState};
pub use parallel::Execution;
pub use phrase::{Phrase, PhraseError};
pub use vote_model::{VoteCountDistribution, VoteModelError, VoterChoiceProbabilities};
