use serde::{Deserialize, Serialize};

use crate::card::CardId;
use crate::phrase::Phrase;
use crate::vote_model::VoteCountDistribution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    Storytell { card: CardId, phrase: Phrase },
    Decoy { card: CardId },
    Vote { card: CardId },
}

impl Action {
    pub fn card(&self) -> &CardId {
        match self {
            Action::Storytell { card, .. } | Action::Decoy { card } | Action::Vote { card } => card,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alternative {
    pub card: CardId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phrase: Option<Phrase>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefEntry {
    pub card: CardId,
    pub probability: f64,
}

/// Why an action was taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub strategy: String,
    /// Name of the quantity that was optimized.
    pub objective: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standard_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<VoteCountDistribution>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub belief: Vec<BeliefEntry>,
    /// Number of candidate actions scored.
    pub evaluated: usize,
    /// Best rejected candidates, at most three.
    pub rejected: Vec<Alternative>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub summary: String,
}

impl Explanation {
    pub fn is_populated(&self) -> bool {
        !self.strategy.is_empty()
            && !self.objective.is_empty()
            && !self.summary.is_empty()
            && self.value.is_finite()
            && self.evaluated >= 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentDecision {
    pub action: Action,
    pub explanation: Explanation,
}
