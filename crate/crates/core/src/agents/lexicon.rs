use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::association::AssociationModel;
use crate::card::Card;
use crate::phrase::Phrase;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("failed to read lexicon file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("lexicon line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("lexicon line {line}: phrase has {len} tokens, limit is {limit}")]
    TooLong { line: usize, len: usize, limit: usize },
    #[error("lexicon is empty")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconEntry {
    #[serde(rename = "tokens")]
    pub phrase: Phrase,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<Vec<f64>>,
}

/// The finite pool of phrases a storyteller may choose from.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateLexicon {
    entries: Vec<LexiconEntry>,
}

impl CandidateLexicon {
    pub fn new(entries: Vec<LexiconEntry>, phrase_limit: usize) -> Result<Self, LexiconError> {
        if entries.is_empty() {
            return Err(LexiconError::Empty);
        }
        if let Some((i, e)) = entries
            .iter()
            .enumerate()
            .find(|(_, e)| e.phrase.len() > phrase_limit)
        {
            return Err(LexiconError::TooLong {
                line: i + 1,
                len: e.phrase.len(),
                limit: phrase_limit,
            });
        }
        Ok(CandidateLexicon { entries })
    }

    /// One `{"tokens": [...], "vector": [...]?}` object per line.
    pub fn parse_jsonl(text: &str, phrase_limit: usize) -> Result<Self, LexiconError> {
        let mut entries = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: LexiconEntry =
                serde_json::from_str(line).map_err(|source| LexiconError::Parse {
                    line: idx + 1,
                    source,
                })?;
            if entry.phrase.len() > phrase_limit {
                return Err(LexiconError::TooLong {
                    line: idx + 1,
                    len: entry.phrase.len(),
                    limit: phrase_limit,
                });
            }
            entries.push(entry);
        }
        CandidateLexicon::new(entries, phrase_limit)
    }

    pub fn load(path: impl AsRef<Path>, phrase_limit: usize) -> Result<Self, LexiconError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        CandidateLexicon::parse_jsonl(&text, phrase_limit)
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn phrases(&self) -> impl Iterator<Item = &Phrase> {
        self.entries.iter().map(|e| &e.phrase)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The lexicographically least phrase.
    pub fn least_phrase(&self) -> &Phrase {
        self.phrases().min().expect("lexicon is non-empty")
    }
}

/// The `limit` phrases that best fit `card`, best first. Equal scores are
/// ordered lexicographically.
pub fn generate_candidate_phrases(
    card: &Card,
    lexicon: &CandidateLexicon,
    model: &dyn AssociationModel,
    limit: usize,
) -> Vec<Phrase> {
    let mut scored: Vec<(f64, &Phrase)> = lexicon
        .phrases()
        .map(|p| (model.score(card, p), p))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    scored
        .into_iter()
        .take(limit.max(1))
        .map(|(_, p)| p.clone())
        .collect()
}
