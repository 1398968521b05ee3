//! Independent oracles. Nothing here calls the library's scoring, softmax,
//! DP or sampling code.

use dixit_core::agents::{AssociationModel, CandidateLexicon, LexiconEntry};
use dixit_core::{Card, Deck, Phrase};
use rand::Rng;

pub fn data(file: &str) -> String {
    format!("{}/../../data/{file}", env!("CARGO_MANIFEST_DIR"))
}

pub fn deck() -> Deck {
    Deck::load(data("deck.jsonl")).unwrap()
}

/// Scoring rules applied literally: storyteller submitted `subs[st]`,
/// `votes[p]` is the index (into `subs`) of the card player `p` voted for.
pub fn literal_scores(n: usize, st: usize, votes: &[Option<usize>]) -> Vec<u32> {
    let found = (0..n).filter(|&p| p != st && votes[p] == Some(st)).count();
    let mut pts = vec![0u32; n];
    if found == 0 || found == n - 1 {
        for (p, pt) in pts.iter_mut().enumerate() {
            if p != st {
                *pt += 2;
            }
        }
    } else {
        pts[st] += 3;
        for p in 0..n {
            if p != st && votes[p] == Some(st) {
                pts[p] += 3;
            }
        }
    }
    for (p, vote) in votes.iter().enumerate() {
        if p == st {
            continue;
        }
        if let Some(owner) = *vote {
            if owner != st {
                pts[owner] += 1;
            }
        }
    }
    pts
}

fn softmax_excluding(scores: &[f64], own: usize, t: f64) -> Vec<f64> {
    let w: Vec<f64> = scores
        .iter()
        .enumerate()
        .map(|(i, s)| if i == own { 0.0 } else { (s / t).exp() })
        .collect();
    let z: f64 = w.iter().sum();
    w.iter().map(|x| x / z).collect()
}

/// Probability of each pool index being the greedy pick of a six-card hand
/// drawn uniformly with replacement. Every one of the `m^6` ordered hands is
/// visited.
fn greedy_pick_distribution(pool_scores: &[f64]) -> Vec<f64> {
    let m = pool_scores.len();
    let total = m.pow(6);
    let mut counts = vec![0usize; m];
    for code in 0..total {
        let mut rest = code;
        let mut best = usize::MAX;
        for _ in 0..6 {
            let c = rest % m;
            rest /= m;
            if best == usize::MAX || pool_scores[c] > pool_scores[best] || (pool_scores[c] == pool_scores[best] && c < best) {
                best = c;
            }
        }
        counts[best] += 1;
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

/// Exact vote-count distribution for the candidate card under the sampling
/// model, for pools too small to deal distinct hands. With `storyteller_role`
/// every other player votes; otherwise the first simulated player is the
/// storyteller and abstains.
pub fn exact_vote_distribution(card_score: f64, pool_scores: &[f64], n: usize, storyteller_role: bool, t: f64) -> Vec<f64> {
    let m = pool_scores.len();
    let others = n - 1;
    let q = greedy_pick_distribution(pool_scores);
    let first_voter = usize::from(!storyteller_role);
    let voters = others - first_voter;
    let mut dist = vec![0.0; voters + 1];
    for code in 0..m.pow(others as u32) {
        let mut rest = code;
        let mut weight = 1.0;
        let mut table = vec![card_score];
        for _ in 0..others {
            let c = rest % m;
            rest /= m;
            weight *= q[c];
            table.push(pool_scores[c]);
        }
        if weight == 0.0 {
            continue;
        }
        let p: Vec<f64> = (first_voter..others)
            .map(|o| softmax_excluding(&table, o + 1, t)[0])
            .collect();
        for outcome in 0..(1usize << voters) {
            let mut prob = 1.0;
            for (j, pj) in p.iter().enumerate() {
                prob *= if outcome >> j & 1 == 1 { *pj } else { 1.0 - pj };
            }
            dist[outcome.count_ones() as usize] += weight * prob;
        }
    }
    dist
}

pub fn interior(dist: &[f64]) -> f64 {
    let v = dist.len() - 1;
    if v < 2 {
        0.0
    } else {
        dist[1..v].iter().sum()
    }
}

pub fn expectation(dist: &[f64]) -> f64 {
    dist.iter().enumerate().map(|(k, x)| k as f64 * x).sum()
}

/// Softmax belief over table cards with `own` excluded.
pub fn belief(table: &[Card], own: usize, phrase: &Phrase, model: &dyn AssociationModel, t: f64) -> Vec<f64> {
    let scores: Vec<f64> = table.iter().map(|c| model.score(c, phrase)).collect();
    softmax_excluding(&scores, own, t)
}

pub const VOCAB: [&str; 8] = ["moon", "door", "storm", "rabbit", "key", "sea", "tree", "fear"];

pub fn random_card(id: String, rng: &mut impl Rng) -> Card {
    let k = rng.random_range(1..=3);
    let tags: Vec<&str> = (0..k).map(|_| VOCAB[rng.random_range(0..VOCAB.len())]).collect();
    Card::new(id).with_tags(tags)
}

pub fn random_lexicon(size: usize, rng: &mut impl Rng) -> CandidateLexicon {
    let mut entries: Vec<LexiconEntry> = Vec::new();
    while entries.len() < size {
        let len = rng.random_range(1..=2);
        let tokens: Vec<String> = (0..len).map(|_| VOCAB[rng.random_range(0..VOCAB.len())].to_string()).collect();
        let phrase = Phrase::new(tokens).unwrap();
        if entries.iter().all(|e| e.phrase != phrase) {
            entries.push(LexiconEntry { phrase, vector: None });
        }
    }
    CandidateLexicon::new(entries, 4).unwrap()
}
