use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use super::association::{AssociationModel, ModelKind};
use super::decision::{Action, AgentDecision, Explanation};
use super::estimate::{estimate_vote_distribution, unseen_pool};
use super::lexicon::CandidateLexicon;
use super::strategy::{choose_decoy, choose_vote, storyteller_move_strategy1, storyteller_move_strategy2};
use super::{AgentError, AgentParams, GameContext};
use crate::card::{Card, CardId};
use crate::engine::GameState;
use crate::phrase::Phrase;
use crate::seed;

/// What one seat is allowed to know about the game.
#[derive(Debug, Clone, PartialEq)]
pub struct SeatView {
    pub seat: usize,
    pub n_players: usize,
    pub storyteller: usize,
    pub round: u32,
    pub hand: Vec<Card>,
    pub scores: Vec<u32>,
    pub target_score: u32,
    pub phrase_limit: usize,
    pub unseen: Vec<Card>,
}

impl SeatView {
    pub fn from_state(state: &GameState, seat: usize) -> Self {
        SeatView {
            seat,
            n_players: state.n_players(),
            storyteller: state.storyteller(),
            round: state.round_number(),
            hand: state.hand(seat).to_vec(),
            scores: state.scores().to_vec(),
            target_score: state.config().target_score,
            phrase_limit: state.config().phrase_limit,
            unseen: unseen_pool(state, seat),
        }
    }
}

/// A seat-playing bot.
pub trait Agent: Send {
    fn label(&self) -> &str;

    fn storytell(&mut self, view: &SeatView) -> Result<AgentDecision, AgentError>;

    fn decoy(&mut self, view: &SeatView, phrase: &Phrase) -> Result<AgentDecision, AgentError>;

    fn vote(
        &mut self,
        view: &SeatView,
        table: &[Card],
        own: &CardId,
        phrase: &Phrase,
    ) -> Result<AgentDecision, AgentError>;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StorytellerPolicy {
    #[default]
    Strategy1,
    Strategy2,
    /// Uniformly random hand card and lexicon phrase. A baseline.
    RandomPhrase,
}

const STORYTELL: u64 = 1;
const DECOY: u64 = 2;
const VOTE: u64 = 3;
const RANDOM_PICK: u64 = 4;

/// The model-driven agent.
pub struct DixitAgent {
    label: String,
    model: Arc<dyn AssociationModel>,
    lexicon: Arc<CandidateLexicon>,
    params: AgentParams,
    policy: StorytellerPolicy,
    seed: u64,
}

impl DixitAgent {
    pub fn new(
        label: impl Into<String>,
        model: Arc<dyn AssociationModel>,
        lexicon: Arc<CandidateLexicon>,
        params: AgentParams,
        policy: StorytellerPolicy,
        seed: u64,
    ) -> Self {
        DixitAgent {
            label: label.into(),
            model,
            lexicon,
            params,
            policy,
            seed,
        }
    }

    fn context(&self, view: &SeatView, stage: u64) -> GameContext<'_> {
        GameContext {
            n_players: view.n_players,
            me: view.seat,
            storyteller: view.storyteller,
            hand: view.hand.clone(),
            scores: view.scores.clone(),
            target_score: view.target_score,
            phrase_limit: view.phrase_limit,
            unseen: view.unseen.clone(),
            model: self.model.as_ref(),
            params: self.params.clone(),
            seed: seed::derive(self.seed, &[u64::from(view.round), stage]),
        }
    }

    fn random_phrase(&self, ctx: &GameContext<'_>) -> Result<AgentDecision, AgentError> {
        let mut rng = seed::stream(ctx.seed, &[RANDOM_PICK]);
        let card = ctx.hand.choose(&mut rng).ok_or(AgentError::EmptyHand)?;
        let phrases: Vec<&Phrase> = self
            .lexicon
            .phrases()
            .filter(|p| p.len() <= ctx.phrase_limit)
            .collect();
        let phrase = (*phrases.choose(&mut rng).ok_or(AgentError::NoCandidates)?).clone();
        let estimate = estimate_vote_distribution(card, &phrase, ctx)?;
        Ok(AgentDecision {
            action: Action::Storytell {
                card: card.id.clone(),
                phrase: phrase.clone(),
            },
            explanation: Explanation {
                strategy: "random_phrase".into(),
                objective: "p_scoring".into(),
                value: estimate.p_scoring,
                standard_error: Some(estimate.p_scoring_se),
                distribution: Some(estimate.distribution),
                belief: Vec::new(),
                evaluated: 1,
                rejected: Vec::new(),
                notes: vec!["card and phrase drawn uniformly at random".into()],
                summary: format!(
                    "Picked card {} and phrase \"{phrase}\" at random; estimated scoring chance {:.3}.",
                    card.id, estimate.p_scoring
                ),
            },
        })
    }
}

impl Agent for DixitAgent {
    fn label(&self) -> &str {
        &self.label
    }

    fn storytell(&mut self, view: &SeatView) -> Result<AgentDecision, AgentError> {
        let ctx = self.context(view, STORYTELL);
        match self.policy {
            StorytellerPolicy::Strategy1 => storyteller_move_strategy1(&ctx, &self.lexicon),
            StorytellerPolicy::Strategy2 => storyteller_move_strategy2(&ctx, &self.lexicon),
            StorytellerPolicy::RandomPhrase => self.random_phrase(&ctx),
        }
    }

    fn decoy(&mut self, view: &SeatView, phrase: &Phrase) -> Result<AgentDecision, AgentError> {
        choose_decoy(phrase, &self.context(view, DECOY))
    }

    fn vote(
        &mut self,
        view: &SeatView,
        table: &[Card],
        own: &CardId,
        phrase: &Phrase,
    ) -> Result<AgentDecision, AgentError> {
        choose_vote(table, own, phrase, &self.context(view, VOTE))
    }
}

/// Uniformly random play.
pub struct RandomAgent {
    label: String,
    lexicon: Arc<CandidateLexicon>,
    seed: u64,
}

impl RandomAgent {
    pub fn new(label: impl Into<String>, lexicon: Arc<CandidateLexicon>, seed: u64) -> Self {
        RandomAgent {
            label: label.into(),
            lexicon,
            seed,
        }
    }

    fn explain(options: usize, what: String) -> Explanation {
        Explanation {
            strategy: "uniform_random".into(),
            objective: "choice_probability".into(),
            value: 1.0 / options as f64,
            standard_error: None,
            distribution: None,
            belief: Vec::new(),
            evaluated: options,
            rejected: Vec::new(),
            notes: Vec::new(),
            summary: format!("Chose {what} uniformly at random from {options} options."),
        }
    }
}

impl Agent for RandomAgent {
    fn label(&self) -> &str {
        &self.label
    }

    fn storytell(&mut self, view: &SeatView) -> Result<AgentDecision, AgentError> {
        let mut rng = seed::stream(self.seed, &[u64::from(view.round), STORYTELL]);
        let card = view.hand.choose(&mut rng).ok_or(AgentError::EmptyHand)?;
        let phrases: Vec<&Phrase> = self
            .lexicon
            .phrases()
            .filter(|p| p.len() <= view.phrase_limit)
            .collect();
        let phrase = (*phrases.choose(&mut rng).ok_or(AgentError::NoCandidates)?).clone();
        Ok(AgentDecision {
            explanation: Self::explain(
                view.hand.len() * phrases.len(),
                format!("card {} and phrase \"{phrase}\"", card.id),
            ),
            action: Action::Storytell {
                card: card.id.clone(),
                phrase,
            },
        })
    }

    fn decoy(&mut self, view: &SeatView, _phrase: &Phrase) -> Result<AgentDecision, AgentError> {
        let mut rng = seed::stream(self.seed, &[u64::from(view.round), DECOY]);
        let card = view.hand.choose(&mut rng).ok_or(AgentError::EmptyHand)?;
        Ok(AgentDecision {
            explanation: Self::explain(view.hand.len(), format!("decoy {}", card.id)),
            action: Action::Decoy {
                card: card.id.clone(),
            },
        })
    }

    fn vote(
        &mut self,
        view: &SeatView,
        table: &[Card],
        own: &CardId,
        _phrase: &Phrase,
    ) -> Result<AgentDecision, AgentError> {
        let mut rng = seed::stream(self.seed, &[u64::from(view.round), VOTE]);
        let options: Vec<&Card> = table.iter().filter(|c| &c.id != own).collect();
        let card = options.choose(&mut rng).ok_or(AgentError::OwnCardOnlyCard)?;
        Ok(AgentDecision {
            explanation: Self::explain(options.len(), format!("vote {}", card.id)),
            action: Action::Vote {
                card: card.id.clone(),
            },
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    #[default]
    Dixit,
    Random,
}

/// Agent configuration as it appears in tournament, server and standalone
/// agent config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    #[serde(default)]
    pub kind: AgentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default)]
    pub storyteller: StorytellerPolicy,
    #[serde(default)]
    pub model: ModelKind,
    /// Mixed into the per-game seed; also salts the `seeded_random` model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Audience/language tag of the table. Carried along, not interpreted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
    #[serde(flatten)]
    pub params: AgentParams,
}

impl Default for AgentSpec {
    fn default() -> Self {
        AgentSpec {
            kind: AgentKind::Dixit,
            label: None,
            storyteller: StorytellerPolicy::default(),
            model: ModelKind::default(),
            seed: None,
            context: None,
            params: AgentParams::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AgentSpecError {
    #[error("failed to read agent config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("agent config {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: toml::de::Error,
    },
}

impl AgentSpec {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, AgentSpecError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| AgentSpecError::Io {
            path: path.display().to_string(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| AgentSpecError::Parse {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn display_label(&self) -> String {
        self.label.clone().unwrap_or_else(|| match self.kind {
            AgentKind::Random => "random".to_string(),
            AgentKind::Dixit => format!(
                "dixit/{}/{}",
                serde_json::to_value(self.storyteller).expect("enum").as_str().unwrap_or(""),
                serde_json::to_value(self.model).expect("enum").as_str().unwrap_or("")
            ),
        })
    }

    /// Instantiates the agent; `seed` is the per-game stream for this seat.
    pub fn build(&self, lexicon: Arc<CandidateLexicon>, seed: u64) -> Box<dyn Agent> {
        let salt = self.seed.unwrap_or(0);
        let seed = seed::derive(seed, &[salt]);
        match self.kind {
            AgentKind::Random => Box::new(RandomAgent::new(self.display_label(), lexicon, seed)),
            AgentKind::Dixit => Box::new(DixitAgent::new(
                self.display_label(),
                self.model.build(&lexicon, salt),
                lexicon,
                self.params.clone(),
                self.storyteller,
                seed,
            )),
        }
    }
}
