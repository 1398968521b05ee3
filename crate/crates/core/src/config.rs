use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const HAND_SIZE: usize = 6;
pub const MIN_PLAYERS: usize = 4;
pub const MAX_PLAYERS: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("player count {0} outside 4..=6")]
    PlayerCount(usize),
    #[error("phrase limit must be at least 1")]
    PhraseLimit,
    #[error("target score must be positive")]
    TargetScore,
}

fn default_phrase_limit() -> usize {
    4
}

fn default_target_score() -> u32 {
    30
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameConfig {
    pub n_players: usize,
    /// Maximum phrase length in tokens.
    #[serde(default = "default_phrase_limit")]
    pub phrase_limit: usize,
    #[serde(default = "default_target_score")]
    pub target_score: u32,
    #[serde(default)]
    pub rng_seed: u64,
}

impl GameConfig {
    pub fn new(n_players: usize, rng_seed: u64) -> Self {
        GameConfig {
            n_players,
            phrase_limit: default_phrase_limit(),
            target_score: default_target_score(),
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(MIN_PLAYERS..=MAX_PLAYERS).contains(&self.n_players) {
            return Err(ConfigError::PlayerCount(self.n_players));
        }
        if self.phrase_limit == 0 {
            return Err(ConfigError::PhraseLimit);
        }
        if self.target_score == 0 {
            return Err(ConfigError::TargetScore);
        }
        Ok(())
    }
}
