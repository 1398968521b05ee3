//! Authoritative game rules.
//!
//! A [`GameState`] moves through the phases of a round:
//!
//! ```text
//! AwaitStoryteller -> AwaitDecoys -> AwaitVotes -> RoundScored -> AwaitStoryteller ...
//!                                                              \-> GameOver
//! ```
//!
//! Every mutation goes through one of the operations on `GameState`; an
//! operation that returns an error leaves the state untouched.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::card::{Card, CardId};
use crate::config::{ConfigError, GameConfig, HAND_SIZE};
use crate::phrase::Phrase;
use crate::seed;

const DECK_STREAM: u64 = 0xDEC;
const TABLE_STREAM: u64 = 0x7AB1E;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    AwaitStoryteller,
    AwaitDecoys,
    AwaitVotes,
    RoundScored,
    GameOver,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("deck has {have} cards, need at least {need}")]
    DeckTooSmall { need: usize, have: usize },
    #[error("duplicate card id {0}")]
    DuplicateCardId(CardId),
    #[error("action not allowed in phase {actual:?}")]
    WrongPhase { actual: Phase },
    #[error("card {0} is not in the player's hand")]
    CardNotInHand(CardId),
    #[error("phrase has {len} tokens, limit is {limit}")]
    PhraseTooLong { len: usize, limit: usize },
    #[error("player {0} does not exist")]
    UnknownPlayer(usize),
    #[error("the storyteller cannot submit a decoy or vote")]
    StorytellerNotAllowed,
    #[error("player {0} has already submitted this round")]
    AlreadySubmitted(usize),
    #[error("player {0} has already voted this round")]
    AlreadyVoted(usize),
    #[error("players cannot vote for their own card")]
    OwnCardVote,
    #[error("card {0} is not on the table")]
    UnknownCard(CardId),
}

/// A revealed table slot. `owner` is authoritative state; what a client may
/// see of it is decided by the server's projection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableEntry {
    pub card: CardId,
    pub owner: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundState {
    pub phrase: Option<Phrase>,
    /// Indexed by player. The storyteller's entry is the target card.
    pub submissions: Vec<Option<Card>>,
    /// Empty until every decoy is in, then a seeded permutation of submissions.
    pub table: Vec<TableEntry>,
    /// Indexed by player; the storyteller's entry stays `None`.
    pub votes: Vec<Option<CardId>>,
}

impl RoundState {
    fn empty(n: usize) -> Self {
        RoundState {
            phrase: None,
            submissions: vec![None; n],
            table: Vec::new(),
            votes: vec![None; n],
        }
    }

    pub fn owner_of(&self, card: &CardId) -> Option<usize> {
        self.table.iter().find(|e| &e.card == card).map(|e| e.owner)
    }

    pub fn submission_id(&self, player: usize) -> Option<&CardId> {
        self.submissions
            .get(player)
            .and_then(|s| s.as_ref())
            .map(|c| &c.id)
    }

    /// Count of votes on the storyteller's card so far.
    pub fn storyteller_votes(&self, storyteller: usize) -> usize {
        let Some(target) = self.submission_id(storyteller) else {
            return 0;
        };
        self.votes.iter().flatten().filter(|v| *v == target).count()
    }
}

/// Points earned by each player in one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundScore {
    pub points: Vec<u32>,
    pub storyteller: usize,
    /// Number of voters who picked the storyteller's card.
    pub storyteller_votes: usize,
    /// Votes each player's submitted card received.
    pub votes_received: Vec<u32>,
}

impl RoundScore {
    pub fn storyteller_scored(&self) -> bool {
        self.points[self.storyteller] > 0
    }
}

/// Scores one round.
///
/// `submissions[p]` is the card player `p` put on the table and `votes[p]` the
/// card they voted for (`None` for the storyteller). Preconditions (one vote
/// per non-storyteller, never on the voter's own card) are enforced by the
/// state machine, not here.
pub fn score_round(submissions: &[CardId], votes: &[Option<CardId>], storyteller: usize) -> RoundScore {
    let n = submissions.len();
    debug_assert_eq!(votes.len(), n);
    let target = &submissions[storyteller];

    let mut votes_received = vec![0u32; n];
    for vote in votes.iter().flatten() {
        if let Some(owner) = submissions.iter().position(|s| s == vote) {
            votes_received[owner] += 1;
        }
    }
    let n_v = votes_received[storyteller] as usize;
    let all_or_none = n_v == 0 || n_v == n - 1;

    let points = (0..n)
        .map(|p| {
            if p == storyteller {
                return if all_or_none { 0 } else { 3 };
            }
            let base = if all_or_none {
                2
            } else if votes[p].as_ref() == Some(target) {
                3
            } else {
                0
            };
            base + votes_received[p]
        })
        .collect();

    RoundScore {
        points,
        storyteller,
        storyteller_votes: n_v,
        votes_received,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    config: GameConfig,
    deck: Vec<Card>,
    hands: Vec<Vec<Card>>,
    scores: Vec<u32>,
    storyteller: usize,
    phase: Phase,
    round: RoundState,
    round_number: u32,
    discard: Vec<Card>,
    last_score: Option<RoundScore>,
    winners: Vec<usize>,
    initial_cards: usize,
}

impl GameState {
    /// Shuffles `deck` with the configured seed and deals six cards to each
    /// player. Player 0 is the first storyteller.
    pub fn new_game(deck: Vec<Card>, config: GameConfig) -> Result<Self, EngineError> {
        config.validate()?;
        let need = HAND_SIZE * config.n_players;
        if deck.len() < need {
            return Err(EngineError::DeckTooSmall {
                need,
                have: deck.len(),
            });
        }
        let mut seen = HashSet::with_capacity(deck.len());
        for card in &deck {
            if !seen.insert(&card.id) {
                return Err(EngineError::DuplicateCardId(card.id.clone()));
            }
        }

        let mut deck = deck;
        let initial_cards = deck.len();
        deck.shuffle(&mut seed::stream(config.rng_seed, &[DECK_STREAM]));

        let n = config.n_players;
        let hands = (0..n)
            .map(|_| deck.drain(..HAND_SIZE).collect())
            .collect();

        Ok(GameState {
            deck,
            hands,
            scores: vec![0; n],
            storyteller: 0,
            phase: Phase::AwaitStoryteller,
            round: RoundState::empty(n),
            round_number: 0,
            discard: Vec::new(),
            last_score: None,
            winners: Vec::new(),
            initial_cards,
            config,
        })
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn n_players(&self) -> usize {
        self.config.n_players
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn storyteller(&self) -> usize {
        self.storyteller
    }

    pub fn round_number(&self) -> u32 {
        self.round_number
    }

    pub fn round(&self) -> &RoundState {
        &self.round
    }

    pub fn scores(&self) -> &[u32] {
        &self.scores
    }

    pub fn hand(&self, player: usize) -> &[Card] {
        &self.hands[player]
    }

    pub fn hands(&self) -> &[Vec<Card>] {
        &self.hands
    }

    pub fn deck(&self) -> &[Card] {
        &self.deck
    }

    pub fn discard(&self) -> &[Card] {
        &self.discard
    }

    /// The score of the most recently completed round, available from
    /// `RoundScored` until the next round is scored.
    pub fn last_score(&self) -> Option<&RoundScore> {
        self.last_score.as_ref()
    }

    /// Players tied for the highest score; empty until `GameOver`.
    pub fn winners(&self) -> &[usize] {
        &self.winners
    }

    pub fn is_draw(&self) -> bool {
        self.winners.len() > 1
    }

    pub fn initial_card_count(&self) -> usize {
        self.initial_cards
    }

    /// Cards currently accounted for across deck, hands, submissions and
    /// discard. Always equals [`initial_card_count`](Self::initial_card_count).
    pub fn card_count(&self) -> usize {
        self.deck.len()
            + self.hands.iter().map(Vec::len).sum::<usize>()
            + self.round.submissions.iter().flatten().count()
            + self.discard.len()
    }

    /// Looks up a card anywhere in the game.
    pub fn find_card(&self, id: &CardId) -> Option<&Card> {
        self.deck
            .iter()
            .chain(self.hands.iter().flatten())
            .chain(self.round.submissions.iter().flatten())
            .chain(self.discard.iter())
            .find(|c| &c.id == id)
    }

    /// Cards on the table in reveal order.
    pub fn table_cards(&self) -> Vec<&Card> {
        self.round
            .table
            .iter()
            .map(|e| {
                self.round.submissions[e.owner]
                    .as_ref()
                    .expect("table entries are backed by submissions")
            })
            .collect()
    }

    fn expect_phase(&self, phase: Phase) -> Result<(), EngineError> {
        if self.phase != phase {
            return Err(EngineError::WrongPhase { actual: self.phase });
        }
        Ok(())
    }

    fn check_player(&self, player: usize) -> Result<(), EngineError> {
        if player >= self.n_players() {
            return Err(EngineError::UnknownPlayer(player));
        }
        Ok(())
    }

    fn hand_position(&self, player: usize, card: &CardId) -> Result<usize, EngineError> {
        self.hands[player]
            .iter()
            .position(|c| &c.id == card)
            .ok_or_else(|| EngineError::CardNotInHand(card.clone()))
    }

    pub fn storyteller_submit(&mut self, card: &CardId, phrase: Phrase) -> Result<(), EngineError> {
        self.expect_phase(Phase::AwaitStoryteller)?;
        let pos = self.hand_position(self.storyteller, card)?;
        if phrase.len() > self.config.phrase_limit {
            return Err(EngineError::PhraseTooLong {
                len: phrase.len(),
                limit: self.config.phrase_limit,
            });
        }
        let card = self.hands[self.storyteller].remove(pos);
        self.round.submissions[self.storyteller] = Some(card);
        self.round.phrase = Some(phrase);
        self.phase = Phase::AwaitDecoys;
        Ok(())
    }

    pub fn decoy_submit(&mut self, player: usize, card: &CardId) -> Result<(), EngineError> {
        self.expect_phase(Phase::AwaitDecoys)?;
        self.check_player(player)?;
        if player == self.storyteller {
            return Err(EngineError::StorytellerNotAllowed);
        }
        if self.round.submissions[player].is_some() {
            return Err(EngineError::AlreadySubmitted(player));
        }
        let pos = self.hand_position(player, card)?;
        let card = self.hands[player].remove(pos);
        self.round.submissions[player] = Some(card);

        if self.round.submissions.iter().all(Option::is_some) {
            self.reveal();
        }
        Ok(())
    }

    fn reveal(&mut self) {
        let n = self.n_players();
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = seed::stream(
            self.config.rng_seed,
            &[TABLE_STREAM, u64::from(self.round_number)],
        );
        order.shuffle(&mut rng);
        self.round.table = order
            .into_iter()
            .map(|owner| TableEntry {
                card: self.round.submissions[owner]
                    .as_ref()
                    .expect("all submissions present")
                    .id
                    .clone(),
                owner,
            })
            .collect();
        self.phase = Phase::AwaitVotes;
    }

    pub fn vote_submit(&mut self, player: usize, card: &CardId) -> Result<(), EngineError> {
        self.expect_phase(Phase::AwaitVotes)?;
        self.check_player(player)?;
        if player == self.storyteller {
            return Err(EngineError::StorytellerNotAllowed);
        }
        let owner = self
            .round
            .owner_of(card)
            .ok_or_else(|| EngineError::UnknownCard(card.clone()))?;
        if owner == player {
            return Err(EngineError::OwnCardVote);
        }
        if self.round.votes[player].is_some() {
            return Err(EngineError::AlreadyVoted(player));
        }
        self.round.votes[player] = Some(card.clone());

        let cast = self.round.votes.iter().flatten().count();
        if cast == self.n_players() - 1 {
            let submissions: Vec<CardId> = (0..self.n_players())
                .map(|p| self.round.submission_id(p).expect("submitted").clone())
                .collect();
            self.last_score = Some(score_round(&submissions, &self.round.votes, self.storyteller));
            self.phase = Phase::RoundScored;
        }
        Ok(())
    }

    /// Banks the round score, replenishes hands and passes the storyteller
    /// role on, or ends the game.
    ///
    /// The game ends after scoring when any player has reached the target, or
    /// when the deck is empty once hands have been replenished.
    pub fn advance_round(&mut self) -> Result<(), EngineError> {
        self.expect_phase(Phase::RoundScored)?;
        let score = self.last_score.as_ref().expect("scored round has a score");
        for (total, pts) in self.scores.iter_mut().zip(&score.points) {
            *total += pts;
        }

        let n = self.n_players();
        let round = std::mem::replace(&mut self.round, RoundState::empty(n));
        self.discard.extend(round.submissions.into_iter().flatten());

        for hand in &mut self.hands {
            let want = HAND_SIZE.saturating_sub(hand.len()).min(self.deck.len());
            hand.extend(self.deck.drain(..want));
        }

        let target = self.config.target_score;
        if self.scores.iter().any(|&s| s >= target) || self.deck.is_empty() {
            let best = *self.scores.iter().max().expect("at least one player");
            self.winners = (0..n).filter(|&p| self.scores[p] == best).collect();
            self.phase = Phase::GameOver;
        } else {
            self.storyteller = (self.storyteller + 1) % n;
            self.round_number += 1;
            self.phase = Phase::AwaitStoryteller;
        }
        Ok(())
    }
}
