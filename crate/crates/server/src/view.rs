//! Per-player projection of the authoritative state.
//!
//! A [`PlayerView`] has no field that could hold another player's hand, and
//! table ownership and votes only appear once the round is scored.

use dixit_core::engine::TableEntry;
use dixit_core::{Card, CardId, GameState, Phase};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no player at seat {0}")]
pub struct UnknownPlayer(pub usize);

/// Disclosed only in `RoundScored`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevealedRound {
    pub owners: Vec<TableEntry>,
    pub votes: Vec<Option<CardId>>,
    pub points: Vec<u32>,
    pub storyteller_votes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerView {
    pub seat: usize,
    pub n_players: usize,
    pub round: u32,
    pub phase: Phase,
    pub storyteller: usize,
    pub phrase_limit: usize,
    pub target_score: u32,
    pub hand: Vec<Card>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phrase: Option<String>,
    /// Revealed table in shuffled order, owners withheld.
    pub table: Vec<Card>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub own_submission: Option<CardId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub own_vote: Option<CardId>,
    pub scores: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revealed: Option<RevealedRound>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub winners: Vec<usize>,
}

pub fn project_state_for_player(state: &GameState, player: usize) -> Result<PlayerView, UnknownPlayer> {
    if player >= state.n_players() {
        return Err(UnknownPlayer(player));
    }
    let round = state.round();
    let phase = state.phase();
    let table_visible = matches!(phase, Phase::AwaitVotes | Phase::RoundScored);

    let revealed = match (phase, state.last_score()) {
        (Phase::RoundScored, Some(score)) => Some(RevealedRound {
            owners: round.table.clone(),
            votes: round.votes.clone(),
            points: score.points.clone(),
            storyteller_votes: score.storyteller_votes,
        }),
        _ => None,
    };

    Ok(PlayerView {
        seat: player,
        n_players: state.n_players(),
        round: state.round_number(),
        phase,
        storyteller: state.storyteller(),
        phrase_limit: state.config().phrase_limit,
        target_score: state.config().target_score,
        hand: state.hand(player).to_vec(),
        phrase: round.phrase.as_ref().map(|p| p.text()),
        table: if table_visible {
            state.table_cards().into_iter().cloned().collect()
        } else {
            Vec::new()
        },
        own_submission: round.submission_id(player).cloned(),
        own_vote: round.votes[player].clone(),
        scores: state.scores().to_vec(),
        revealed,
        winners: state.winners().to_vec(),
    })
}
