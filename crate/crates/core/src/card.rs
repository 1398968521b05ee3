use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier of a card, unique within a deck.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CardId(pub String);

impl CardId {
    pub fn new(id: impl Into<String>) -> Self {
        CardId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CardId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for CardId {
    fn from(s: &str) -> Self {
        CardId(s.to_string())
    }
}

/// One game card. The engine never looks past `id`; tags, features and the
/// image reference exist for association models and clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Card {
    pub id: CardId,
    #[serde(default)]
    pub tags: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
}

impl Card {
    pub fn new(id: impl Into<String>) -> Self {
        Card {
            id: CardId::new(id),
            tags: BTreeSet::new(),
            features: None,
            image_ref: None,
        }
    }

    pub fn with_tags<I, S>(mut self, tags: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.tags = tags.into_iter().map(|t| t.as_ref().to_lowercase()).collect();
        self
    }

    pub fn with_features(mut self, features: Vec<f64>) -> Self {
        self.features = Some(features);
        self
    }
}

#[derive(Debug, Error)]
pub enum DeckError {
    #[error("failed to read deck file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("deck line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("duplicate card id {0}")]
    DuplicateCardId(CardId),
    #[error("card {id} has {found} features, expected {expected}")]
    FeatureLength {
        id: CardId,
        expected: usize,
        found: usize,
    },
    #[error("deck is empty")]
    Empty,
}

/// An ordered, validated list of cards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Deck(Vec<Card>);

impl Deck {
    /// Validates id uniqueness and feature-length consistency. Tags are
    /// normalized to lowercase.
    pub fn new(cards: Vec<Card>) -> Result<Self, DeckError> {
        if cards.is_empty() {
            return Err(DeckError::Empty);
        }
        let mut seen = HashSet::with_capacity(cards.len());
        let mut feature_len = None;
        let mut normalized = Vec::with_capacity(cards.len());
        for mut card in cards {
            if !seen.insert(card.id.clone()) {
                return Err(DeckError::DuplicateCardId(card.id));
            }
            if let Some(features) = &card.features {
                match feature_len {
                    None => feature_len = Some(features.len()),
                    Some(expected) if expected != features.len() => {
                        return Err(DeckError::FeatureLength {
                            id: card.id.clone(),
                            expected,
                            found: features.len(),
                        })
                    }
                    _ => {}
                }
            }
            card.tags = card.tags.iter().map(|t| t.to_lowercase()).collect();
            normalized.push(card);
        }
        Ok(Deck(normalized))
    }

    /// Parses one JSON object per line. Blank lines are skipped; line numbers
    /// in errors are 1-based.
    pub fn parse_jsonl(text: &str) -> Result<Self, DeckError> {
        let mut cards = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let card: Card = serde_json::from_str(line).map_err(|source| DeckError::Parse {
                line: idx + 1,
                source,
            })?;
            cards.push(card);
        }
        Deck::new(cards)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DeckError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| DeckError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Deck::parse_jsonl(&text)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for card in &self.0 {
            out.push_str(&serde_json::to_string(card).expect("card serializes"));
            out.push('\n');
        }
        out
    }

    pub fn cards(&self) -> &[Card] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_cards(self) -> Vec<Card> {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_jsonl_with_optional_fields() {
        let text = r#"{"id":"a","tags":["Moon","door"]}

{"id":"b","tags":[],"features":[0.5,1.0],"image_ref":"img/b.png"}
"#;
        let deck = Deck::parse_jsonl(text).unwrap();
        assert_eq!(deck.len(), 2);
        assert!(deck.cards()[0].tags.contains("moon"));
        assert_eq!(deck.cards()[1].image_ref.as_deref(), Some("img/b.png"));
    }

    #[test]
    fn reports_line_number_on_bad_json() {
        let text = "{\"id\":\"a\"}\n{\"id\": }\n";
        match Deck::parse_jsonl(text) {
            Err(DeckError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicates_and_ragged_features() {
        let dup = vec![Card::new("x"), Card::new("x")];
        assert!(matches!(Deck::new(dup), Err(DeckError::DuplicateCardId(_))));

        let ragged = vec![
            Card::new("x").with_features(vec![1.0, 2.0]),
            Card::new("y").with_features(vec![1.0]),
        ];
        assert!(matches!(
            Deck::new(ragged),
            Err(DeckError::FeatureLength { found: 1, .. })
        ));
    }
}
