//! Voter choice and vote-count distributions.
//!
//! Voters are modeled as independent softmax choosers over the revealed table,
//! each excluding their own card. Under that model the number of votes a given
//! card receives is a Poisson-binomial count, computed exactly here by
//! convolving one voter at a time.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest instance [`brute_force_vote_count_distribution`] will enumerate.
pub const MAX_ENUMERATED_VOTERS: usize = 5;
pub const MAX_ENUMERATED_CARDS: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VoteModelError {
    #[error("need at least two table cards and one eligible card")]
    EmptyTable,
    #[error("temperature must be positive and finite, got {0}")]
    BadTemperature(f64),
    #[error("score {0} is not finite")]
    NonFiniteScore(f64),
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("distribution has {actual} entries, expected {expected}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("joint space too large to enumerate ({voters} voters, {cards} cards)")]
    TooLargeToEnumerate { voters: usize, cards: usize },
    #[error("card index {index} out of range for {len} cards")]
    IndexOutOfRange { index: usize, len: usize },
}

/// One voter's probability of picking each table card, in table order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoterChoiceProbabilities {
    probs: Vec<f64>,
}

impl VoterChoiceProbabilities {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, card: usize) -> f64 {
        self.probs[card]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Index of the most likely card; ties resolve to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.probs)
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Softmax over `scores / temperature` with `own` (if any) forced to zero.
pub fn voter_choice_probabilities(
    scores: &[f64],
    own: Option<usize>,
    temperature: f64,
) -> Result<VoterChoiceProbabilities, VoteModelError> {
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(VoteModelError::BadTemperature(temperature));
    }
    if let Some(&bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(VoteModelError::NonFiniteScore(bad));
    }
    if scores.len() < 2 {
        return Err(VoteModelError::EmptyTable);
    }
    if let Some(o) = own {
        if o >= scores.len() {
            return Err(VoteModelError::IndexOutOfRange {
                index: o,
                len: scores.len(),
            });
        }
    }
    let eligible = |i: usize| own != Some(i);
    let max = scores
        .iter()
        .enumerate()
        .filter(|(i, _)| eligible(*i))
        .map(|(_, &s)| s)
        .fold(f64::NEG_INFINITY, f64::max);

    let mut probs: Vec<f64> = scores
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            if eligible(i) {
                ((s - max) / temperature).exp()
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    Ok(VoterChoiceProbabilities { probs })
}

/// Probability mass over vote counts `0..=voters`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteCountDistribution {
    mass: Vec<f64>,
}

impl VoteCountDistribution {
    /// Wraps a mass vector, checking it is a probability distribution to
    /// within `1e-9`.
    pub fn from_mass(mass: Vec<f64>) -> Result<Self, VoteModelError> {
        if let Some(&bad) = mass.iter().find(|m| !(0.0..=1.0 + 1e-12).contains(*m)) {
            return Err(VoteModelError::ProbabilityOutOfRange(bad));
        }
        let total: f64 = mass.iter().sum();
        if mass.is_empty() || (total - 1.0).abs() > 1e-9 {
            return Err(VoteModelError::ProbabilityOutOfRange(total));
        }
        Ok(VoteCountDistribution { mass })
    }

    /// All mass on `count`, over `0..=voters`.
    pub fn point(count: usize, voters: usize) -> Self {
        let mut mass = vec![0.0; voters + 1];
        mass[count] = 1.0;
        VoteCountDistribution { mass }
    }

    /// Pointwise average of equally sized distributions.
    pub fn average<'a, I>(dists: I) -> Option<Self>
    where
        I: IntoIterator<Item = &'a VoteCountDistribution>,
    {
        let mut iter = dists.into_iter();
        let first = iter.next()?;
        let mut acc = first.mass.clone();
        let mut count = 1usize;
        for d in iter {
            debug_assert_eq!(d.mass.len(), acc.len());
            for (a, m) in acc.iter_mut().zip(&d.mass) {
                *a += m;
            }
            count += 1;
        }
        for a in &mut acc {
            *a /= count as f64;
        }
        Some(VoteCountDistribution { mass: acc })
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn get(&self, count: usize) -> f64 {
        self.mass.get(count).copied().unwrap_or(0.0)
    }

    /// Largest representable count (the number of voters).
    pub fn max_count(&self) -> usize {
        self.mass.len() - 1
    }

    pub fn prob_at_least_one(&self) -> f64 {
        1.0 - self.mass[0]
    }

    pub fn total_variation(&self, other: &VoteCountDistribution) -> f64 {
        let len = self.mass.len().max(other.mass.len());
        0.5 * (0..len)
            .map(|k| (self.get(k) - other.get(k)).abs())
            .sum::<f64>()
    }
}

/// Exact Poisson-binomial distribution of the number of successes among
/// independent voters with success probabilities `p`.
pub fn vote_count_distribution(p: &[f64]) -> Result<VoteCountDistribution, VoteModelError> {
    if let Some(&bad) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(VoteModelError::ProbabilityOutOfRange(bad));
    }
    let mut mass = vec![0.0; p.len() + 1];
    mass[0] = 1.0;
    for (j, &pj) in p.iter().enumerate() {
        for k in (1..=j + 1).rev() {
            mass[k] = mass[k] * (1.0 - pj) + mass[k - 1] * pj;
        }
        mass[0] *= 1.0 - pj;
    }
    Ok(VoteCountDistribution { mass })
}

/// Enumerates every joint choice of the voters and accumulates the count of
/// picks landing on `storyteller_card`. Exponential; meant as an oracle.
pub fn brute_force_vote_count_distribution(
    choice_models: &[VoterChoiceProbabilities],
    storyteller_card: usize,
) -> Result<VoteCountDistribution, VoteModelError> {
    let voters = choice_models.len();
    let cards = choice_models.iter().map(|m| m.len()).max().unwrap_or(0);
    if voters > MAX_ENUMERATED_VOTERS || cards > MAX_ENUMERATED_CARDS {
        return Err(VoteModelError::TooLargeToEnumerate { voters, cards });
    }
    if let Some(m) = choice_models.iter().find(|m| storyteller_card >= m.len()) {
        return Err(VoteModelError::IndexOutOfRange {
            index: storyteller_card,
            len: m.len(),
        });
    }

    let mut mass = vec![0.0; voters + 1];
    let mut choice = vec![0usize; voters];
    loop {
        let mut prob = 1.0;
        let mut hits = 0;
        for (model, &c) in choice_models.iter().zip(&choice) {
            prob *= model.get(c);
            if c == storyteller_card {
                hits += 1;
            }
        }
        mass[hits] += prob;

        // Odometer increment over the joint choice space.
        let mut j = 0;
        loop {
            if j == voters {
                return Ok(VoteCountDistribution { mass });
            }
            choice[j] += 1;
            if choice[j] < choice_models[j].len() {
                break;
            }
            choice[j] = 0;
            j += 1;
        }
    }
}

/// Probability that the storyteller scores: `0 < n_V < n - 1` for `n` players.
pub fn p_scoring(dist: &VoteCountDistribution, n: usize) -> Result<f64, VoteModelError> {
    if dist.mass.len() != n {
        return Err(VoteModelError::SizeMismatch {
            expected: n,
            actual: dist.mass.len(),
        });
    }
    Ok(dist.mass[1..n - 1].iter().sum())
}

pub fn expected_votes(dist: &VoteCountDistribution) -> f64 {
    dist.mass
        .iter()
        .enumerate()
        .map(|(k, m)| k as f64 * m)
        .sum()
}
