use super::decision::{Action, AgentDecision, Explanation};
use crate::card::CardId;
use crate::engine::{GameState, Phase};
use crate::phrase::Phrase;

/// The deterministic move played for a seat that failed to act in time:
/// lowest card id, and the given (lexicographically least) phrase when
/// storytelling. `None` when the seat has nothing to do in this phase.
pub fn fallback_decision(state: &GameState, seat: usize, least_phrase: &Phrase) -> Option<AgentDecision> {
    let lowest_in_hand = || state.hand(seat).iter().map(|c| c.id.clone()).min();
    let (action, what) = match state.phase() {
        Phase::AwaitStoryteller if seat == state.storyteller() => {
            let card = lowest_in_hand()?;
            let mut phrase = least_phrase.clone();
            if phrase.len() > state.config().phrase_limit {
                phrase = Phrase::new(phrase.tokens()[..state.config().phrase_limit].to_vec())
                    .expect("prefix of a valid phrase");
            }
            (Action::Storytell { card, phrase }, "lowest card id and least phrase")
        }
        Phase::AwaitDecoys
            if seat != state.storyteller() && state.round().submissions[seat].is_none() =>
        {
            (Action::Decoy { card: lowest_in_hand()? }, "lowest card id")
        }
        Phase::AwaitVotes if seat != state.storyteller() && state.round().votes[seat].is_none() => {
            let own = state.round().submission_id(seat);
            let card: CardId = state
                .round()
                .table
                .iter()
                .map(|e| &e.card)
                .filter(|c| Some(*c) != own)
                .min()?
                .clone();
            (Action::Vote { card }, "lowest eligible card id")
        }
        _ => return None,
    };
    Some(AgentDecision {
        explanation: Explanation {
            strategy: "timeout_fallback".into(),
            objective: "none".into(),
            value: 0.0,
            standard_error: None,
            distribution: None,
            belief: Vec::new(),
            evaluated: 1,
            rejected: Vec::new(),
            notes: vec!["no decision within the move deadline".into()],
            summary: format!("Played the default move ({what}) after the move deadline passed."),
        },
        action,
    })
}
