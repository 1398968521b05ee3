//! Monte-Carlo estimate of the vote count a card/phrase pair draws.
//!
//! Each sample deals every other player a six-card hand from the unseen pool,
//! lets each of them play the hand card that best fits the phrase, and then
//! computes the exact vote-count distribution for the simulated table under
//! the softmax voter model. The estimate is the average over samples.
//!
//! Sample `s` always uses the same random stream for a given context seed, so
//! candidates evaluated under one context share their simulated opponents.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AgentError, GameContext};
use crate::card::Card;
use crate::config::HAND_SIZE;
use crate::engine::{GameState, Phase};
use crate::parallel::map_indexed;
use crate::phrase::Phrase;
use crate::seed;
use crate::vote_model::{
    vote_count_distribution, voter_choice_probabilities, VoteCountDistribution, VoteModelError,
};

const ESTIMATE_STREAM: u64 = 0xE57;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteEstimate {
    pub distribution: VoteCountDistribution,
    pub samples: usize,
    /// Set when the pool was too small to deal distinct hands.
    pub with_replacement: bool,
    /// Mass strictly between zero votes and every voter; the storyteller's
    /// scoring probability when the agent is the storyteller.
    pub p_scoring: f64,
    pub p_scoring_se: f64,
    pub expected_votes: f64,
    pub expected_votes_se: f64,
}

/// Cards `seat` cannot see: the undrawn deck, other hands, and other players'
/// submissions while they are still face down. Sorted by id.
pub fn unseen_pool(state: &GameState, seat: usize) -> Vec<Card> {
    let revealed = matches!(state.phase(), Phase::AwaitVotes | Phase::RoundScored);
    let mut pool: Vec<Card> = state.deck().to_vec();
    for (p, hand) in state.hands().iter().enumerate() {
        if p != seat {
            pool.extend(hand.iter().cloned());
        }
    }
    if !revealed {
        for (p, sub) in state.round().submissions.iter().enumerate() {
            if p != seat {
                pool.extend(sub.iter().cloned());
            }
        }
    }
    pool.sort_by(|a, b| a.id.cmp(&b.id));
    pool
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn estimate_vote_distribution(
    card: &Card,
    phrase: &Phrase,
    ctx: &GameContext<'_>,
) -> Result<VoteEstimate, AgentError> {
    let samples = ctx.params.samples;
    if samples == 0 {
        return Err(AgentError::ZeroSamples);
    }
    if ctx.unseen.is_empty() {
        return Err(AgentError::EmptyUnseenPool);
    }
    let temperature = ctx.params.temperature;
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(VoteModelError::BadTemperature(temperature).into());
    }

    let mut pool: Vec<&Card> = ctx.unseen.iter().collect();
    pool.sort_by(|a, b| a.id.cmp(&b.id));
    let pool_scores: Vec<f64> = pool.iter().map(|c| ctx.model.score(c, phrase)).collect();
    let card_score = ctx.model.score(card, phrase);
    if let Some(&bad) = pool_scores
        .iter()
        .chain(std::iter::once(&card_score))
        .find(|s| !s.is_finite())
    {
        return Err(VoteModelError::NonFiniteScore(bad).into());
    }

    let others = ctx.n_players - 1;
    let need = others * HAND_SIZE;
    let with_replacement = pool.len() < need;
    // In a decoy estimate, simulated player 0 is the storyteller and does not vote.
    let first_voter = usize::from(!ctx.is_storyteller());

    let per_sample: Vec<Vec<f64>> = map_indexed(samples, ctx.params.execution, |s| {
        let mut rng = seed::stream(ctx.seed, &[ESTIMATE_STREAM, s as u64]);
        let draws: Vec<usize> = if with_replacement {
            (0..need).map(|_| rng.random_range(0..pool.len())).collect()
        } else {
            rand::seq::index::sample(&mut rng, pool.len(), need).into_vec()
        };

        let mut table = Vec::with_capacity(others + 1);
        table.push(card_score);
        for hand in draws.chunks(HAND_SIZE) {
            // Lowest pool index wins ties, i.e. lowest card id.
            let best = hand
                .iter()
                .copied()
                .reduce(|a, b| {
                    if pool_scores[b] > pool_scores[a] || (pool_scores[b] == pool_scores[a] && b < a) {
                        b
                    } else {
                        a
                    }
                })
                .expect("hands are non-empty");
            table.push(pool_scores[best]);
        }

        let p: Vec<f64> = (first_voter..others)
            .map(|o| {
                voter_choice_probabilities(&table, Some(o + 1), temperature)
                    .expect("inputs validated")
                    .get(0)
            })
            .collect();
        vote_count_distribution(&p)
            .expect("softmax output is a probability")
            .mass()
            .to_vec()
    });

    let voters = others - first_voter;
    let mut mass = vec![0.0; voters + 1];
    let mut interior = Vec::with_capacity(samples);
    let mut expectation = Vec::with_capacity(samples);
    for m in &per_sample {
        for (acc, x) in mass.iter_mut().zip(m) {
            *acc += x;
        }
        interior.push(if voters >= 2 { m[1..voters].iter().sum() } else { 0.0 });
        expectation.push(m.iter().enumerate().map(|(k, x)| k as f64 * x).sum());
    }
    for acc in &mut mass {
        *acc /= samples as f64;
    }
    let (p_scoring, p_scoring_se) = mean_and_se(&interior);
    let (expected_votes, expected_votes_se) = mean_and_se(&expectation);

    Ok(VoteEstimate {
        distribution: VoteCountDistribution::from_mass(mass)?,
        samples,
        with_replacement,
        p_scoring,
        p_scoring_se,
        expected_votes,
        expected_votes_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{AgentParams, AssociationModel, TagJaccard};
    use crate::parallel::Execution;
    use crate::vote_model::{expected_votes, p_scoring};

    fn ctx<'a>(
        model: &'a dyn AssociationModel,
        unseen: Vec<Card>,
        temperature: f64,
        me: usize,
    ) -> GameContext<'a> {
        GameContext {
            n_players: 4,
            me,
            storyteller: 0,
            hand: vec![],
            scores: vec![0; 4],
            target_score: 30,
            phrase_limit: 4,
            unseen,
            model,
            params: AgentParams {
                temperature,
                samples: 300,
                ..AgentParams::default()
            },
            seed: 42,
        }
    }

    fn pool(n: usize, tags: &[&str]) -> Vec<Card> {
        (0..n)
            .map(|i| Card::new(format!("p{i:02}")).with_tags(tags.iter().copied()))
            .collect()
    }

    #[test]
    fn dominant_card_draws_every_vote() {
        let phrase = Phrase::parse("moon").unwrap();
        let card = Card::new("me").with_tags(["moon"]);
        let c = ctx(&TagJaccard, pool(30, &["sea"]), 0.01, 0);
        let est = estimate_vote_distribution(&card, &phrase, &c).unwrap();
        assert!(est.distribution.get(3) > 0.999);
        assert!(!est.with_replacement);
        assert!(p_scoring(&est.distribution, 4).unwrap() < 1e-3);
    }

    #[test]
    fn weak_card_draws_nothing() {
        let phrase = Phrase::parse("moon").unwrap();
        let card = Card::new("me").with_tags(["sea"]);
        let c = ctx(&TagJaccard, pool(30, &["moon"]), 0.01, 0);
        let est = estimate_vote_distribution(&card, &phrase, &c).unwrap();
        assert!(est.distribution.get(0) > 0.999);
        assert!((est.expected_votes - expected_votes(&est.distribution)).abs() < 1e-12);
    }

    #[test]
    fn decoy_role_has_one_fewer_voter() {
        let phrase = Phrase::parse("moon").unwrap();
        let card = Card::new("me").with_tags(["moon"]);
        let c = ctx(&TagJaccard, pool(6, &["sea"]), 1.0, 2);
        let est = estimate_vote_distribution(&card, &phrase, &c).unwrap();
        assert_eq!(est.distribution.mass().len(), 3);
        assert!(est.with_replacement);
    }

    #[test]
    fn errors_and_determinism() {
        let phrase = Phrase::parse("moon").unwrap();
        let card = Card::new("me");
        let empty = ctx(&TagJaccard, vec![], 1.0, 0);
        assert_eq!(
            estimate_vote_distribution(&card, &phrase, &empty),
            Err(AgentError::EmptyUnseenPool)
        );
        let mut c = ctx(&TagJaccard, pool(10, &["moon", "x"]), 1.0, 0);
        c.params.samples = 0;
        assert_eq!(
            estimate_vote_distribution(&card, &phrase, &c),
            Err(AgentError::ZeroSamples)
        );
        c.params.samples = 200;
        let a = estimate_vote_distribution(&card, &phrase, &c).unwrap();
        c.params.execution = Execution::Sequential;
        let b = estimate_vote_distribution(&card, &phrase, &c).unwrap();
        assert_eq!(a, b);
    }
}
