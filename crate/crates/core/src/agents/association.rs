//! Card/phrase association models.
//!
//! An [`AssociationModel`] scores how well a phrase fits a card. The agents
//! only ever see these scores; the baselines here are deliberately simple
//! stand-ins for real perception and language models.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::lexicon::CandidateLexicon;
use crate::card::Card;
use crate::phrase::Phrase;
use crate::seed;

pub trait AssociationModel: Send + Sync {
    /// Deterministic, finite score. Higher means a better fit.
    fn score(&self, card: &Card, phrase: &Phrase) -> f64;

    fn name(&self) -> &str;
}

/// `|tags ∩ tokens| / |tags ∪ tokens|`, tokens lowercased.
#[derive(Debug, Clone, Copy, Default)]
pub struct TagJaccard;

impl AssociationModel for TagJaccard {
    fn score(&self, card: &Card, phrase: &Phrase) -> f64 {
        let mut tokens: Vec<String> = phrase.tokens().iter().map(|t| t.to_lowercase()).collect();
        tokens.sort();
        tokens.dedup();
        let inter = tokens.iter().filter(|t| card.tags.contains(*t)).count();
        let union = card.tags.len() + tokens.len() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    fn name(&self) -> &str {
        "tag_jaccard"
    }
}

/// Cosine between card features and a phrase vector taken from the lexicon.
///
/// Phrases without their own vector fall back to the mean of their tokens'
/// single-word vectors. Anything still unresolved scores 0.
#[derive(Debug, Clone, Default)]
pub struct FeatureCosine {
    vectors: HashMap<Phrase, Vec<f64>>,
    words: HashMap<String, Vec<f64>>,
}

impl FeatureCosine {
    pub fn from_lexicon(lexicon: &CandidateLexicon) -> Self {
        let mut vectors = HashMap::new();
        let mut words = HashMap::new();
        for entry in lexicon.entries() {
            if let Some(v) = &entry.vector {
                if entry.phrase.len() == 1 {
                    words.insert(entry.phrase.tokens()[0].to_lowercase(), v.clone());
                }
                vectors.insert(entry.phrase.clone(), v.clone());
            }
        }
        FeatureCosine { vectors, words }
    }

    fn phrase_vector(&self, phrase: &Phrase) -> Option<Vec<f64>> {
        if let Some(v) = self.vectors.get(phrase) {
            return Some(v.clone());
        }
        let found: Vec<&Vec<f64>> = phrase
            .tokens()
            .iter()
            .filter_map(|t| self.words.get(&t.to_lowercase()))
            .collect();
        let first = found.first()?;
        let mut mean = vec![0.0; first.len()];
        for v in &found {
            for (m, x) in mean.iter_mut().zip(v.iter()) {
                *m += x / found.len() as f64;
            }
        }
        Some(mean)
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return 0.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

impl AssociationModel for FeatureCosine {
    fn score(&self, card: &Card, phrase: &Phrase) -> f64 {
        match (&card.features, self.phrase_vector(phrase)) {
            (Some(f), Some(v)) => cosine(f, &v),
            _ => 0.0,
        }
    }

    fn name(&self) -> &str {
        "feature_cosine"
    }
}

/// A fixed pseudo-random score in `[0, 1)` per (card id, phrase) pair.
#[derive(Debug, Clone, Copy, Default)]
pub struct SeededRandom {
    pub salt: u64,
}

impl AssociationModel for SeededRandom {
    fn score(&self, card: &Card, phrase: &Phrase) -> f64 {
        let mut bytes = Vec::with_capacity(64);
        bytes.extend_from_slice(&self.salt.to_le_bytes());
        bytes.extend_from_slice(card.id.as_str().as_bytes());
        bytes.push(0);
        bytes.extend_from_slice(phrase.text().as_bytes());
        let h = seed::mix64(seed::fnv1a(&bytes));
        (h >> 11) as f64 / (1u64 << 53) as f64
    }

    fn name(&self) -> &str {
        "seeded_random"
    }
}

/// Config-file selector for the baseline models.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    TagJaccard,
    FeatureCosine,
    SeededRandom,
}

impl ModelKind {
    pub fn build(self, lexicon: &CandidateLexicon, salt: u64) -> Arc<dyn AssociationModel> {
        match self {
            ModelKind::TagJaccard => Arc::new(TagJaccard),
            ModelKind::FeatureCosine => Arc::new(FeatureCosine::from_lexicon(lexicon)),
            ModelKind::SeededRandom => Arc::new(SeededRandom { salt }),
        }
    }
}
