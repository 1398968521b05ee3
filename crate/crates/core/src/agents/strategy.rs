//! Decision rules for each role.
//!
//! Candidates are always visited in (card id, phrase) order and replaced only
//! on a strict improvement, so ties resolve to the lexicographically least
//! candidate.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::decision::{Action, AgentDecision, Alternative, BeliefEntry, Explanation};
use super::estimate::{estimate_vote_distribution, VoteEstimate};
use super::lexicon::{generate_candidate_phrases, CandidateLexicon};
use super::{AgentError, GameContext};
use crate::card::{Card, CardId};
use crate::phrase::Phrase;
use crate::vote_model::voter_choice_probabilities;

/// How the agent votes this round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveMode {
    Normal,
    /// The storyteller is within three points of winning: vote for the card
    /// least believed to be theirs.
    Block,
}

pub fn endgame_objective(ctx: &GameContext<'_>) -> ObjectiveMode {
    if ctx.is_storyteller() {
        return ObjectiveMode::Normal;
    }
    let leader = ctx.scores.get(ctx.storyteller).copied().unwrap_or(0);
    if leader + 3 >= ctx.target_score {
        ObjectiveMode::Block
    } else {
        ObjectiveMode::Normal
    }
}

struct Candidate {
    card: CardId,
    phrase: Option<Phrase>,
    estimate: VoteEstimate,
}

impl Candidate {
    fn key_cmp(&self, other: &Candidate) -> Ordering {
        self.card
            .cmp(&other.card)
            .then_with(|| self.phrase.cmp(&other.phrase))
    }

    fn alternative(&self, value: f64) -> Alternative {
        Alternative {
            card: self.card.clone(),
            phrase: self.phrase.clone(),
            value,
        }
    }
}

fn sorted_hand<'c>(ctx: &'c GameContext<'_>) -> Result<Vec<&'c Card>, AgentError> {
    if ctx.hand.is_empty() {
        return Err(AgentError::EmptyHand);
    }
    let mut hand: Vec<&Card> = ctx.hand.iter().collect();
    hand.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(hand)
}

fn storyteller_candidates(
    ctx: &GameContext<'_>,
    lexicon: &CandidateLexicon,
) -> Result<Vec<Candidate>, AgentError> {
    let mut out = Vec::new();
    for card in sorted_hand(ctx)? {
        let mut phrases =
            generate_candidate_phrases(card, lexicon, ctx.model, ctx.params.candidate_limit);
        phrases.retain(|p| p.len() <= ctx.phrase_limit);
        phrases.sort();
        for phrase in phrases {
            let estimate = estimate_vote_distribution(card, &phrase, ctx)?;
            out.push(Candidate {
                card: card.id.clone(),
                phrase: Some(phrase),
                estimate,
            });
        }
    }
    if out.is_empty() {
        return Err(AgentError::NoCandidates);
    }
    Ok(out)
}

/// Index of the best candidate among `eligible`, given candidates in key order.
fn pick(cands: &[Candidate], eligible: &[usize], objective: impl Fn(&Candidate) -> f64, maximize: bool) -> usize {
    let mut best = eligible[0];
    for &i in &eligible[1..] {
        let (v, b) = (objective(&cands[i]), objective(&cands[best]));
        if (maximize && v > b) || (!maximize && v < b) {
            best = i;
        }
    }
    best
}

/// Up to three runners-up, best first.
fn rejected(
    cands: &[Candidate],
    chosen: usize,
    objective: impl Fn(&Candidate) -> f64,
    maximize: bool,
) -> Vec<Alternative> {
    let mut rest: Vec<usize> = (0..cands.len()).filter(|&i| i != chosen).collect();
    rest.sort_by(|&a, &b| {
        let (va, vb) = (objective(&cands[a]), objective(&cands[b]));
        let ord = if maximize { vb.total_cmp(&va) } else { va.total_cmp(&vb) };
        ord.then_with(|| cands[a].key_cmp(&cands[b]))
    });
    rest.into_iter()
        .take(3)
        .map(|i| cands[i].alternative(objective(&cands[i])))
        .collect()
}

fn describe(card: &CardId, phrase: Option<&Phrase>) -> String {
    match phrase {
        Some(p) => format!("card {card} with phrase \"{p}\""),
        None => format!("card {card}"),
    }
}

#[allow(clippy::too_many_arguments)]
fn storyteller_decision(
    cands: &[Candidate],
    chosen: usize,
    strategy: &str,
    objective_name: &str,
    objective: impl Fn(&Candidate) -> f64 + Copy,
    se: impl Fn(&Candidate) -> f64,
    maximize: bool,
    mut notes: Vec<String>,
) -> AgentDecision {
    let c = &cands[chosen];
    let phrase = c.phrase.clone().expect("storyteller candidates carry phrases");
    if c.estimate.with_replacement {
        notes.push("unseen pool too small for distinct hands; opponents sampled with replacement".into());
    }
    let summary = format!(
        "Chose {} because its estimated {} of {:.3} was the {} of {} candidate pairs.",
        describe(&c.card, Some(&phrase)),
        objective_name,
        objective(c),
        if maximize { "highest" } else { "lowest" },
        cands.len()
    );
    AgentDecision {
        action: Action::Storytell {
            card: c.card.clone(),
            phrase,
        },
        explanation: Explanation {
            strategy: strategy.to_string(),
            objective: objective_name.to_string(),
            value: objective(c),
            standard_error: Some(se(c)),
            distribution: Some(c.estimate.distribution.clone()),
            belief: Vec::new(),
            evaluated: cands.len(),
            rejected: rejected(cands, chosen, objective, maximize),
            notes,
            summary,
        },
    }
}

/// Storyteller Strategy #1: the (card, phrase) pair most likely to leave the
/// vote count strictly between zero and every voter.
pub fn storyteller_move_strategy1(
    ctx: &GameContext<'_>,
    lexicon: &CandidateLexicon,
) -> Result<AgentDecision, AgentError> {
    let cands = storyteller_candidates(ctx, lexicon)?;
    let all: Vec<usize> = (0..cands.len()).collect();
    let objective = |c: &Candidate| c.estimate.p_scoring;
    let chosen = pick(&cands, &all, objective, true);
    Ok(storyteller_decision(
        &cands,
        chosen,
        "storyteller_strategy1",
        "p_scoring",
        objective,
        |c| c.estimate.p_scoring_se,
        true,
        Vec::new(),
    ))
}

/// Storyteller Strategy #2: the pair with the fewest expected votes among
/// those whose chance of drawing at least one vote exceeds `epsilon`. Falls
/// back to Strategy #1 when no pair qualifies.
pub fn storyteller_move_strategy2(
    ctx: &GameContext<'_>,
    lexicon: &CandidateLexicon,
) -> Result<AgentDecision, AgentError> {
    let cands = storyteller_candidates(ctx, lexicon)?;
    let eps = ctx.params.epsilon;
    let eligible: Vec<usize> = (0..cands.len())
        .filter(|&i| cands[i].estimate.distribution.prob_at_least_one() > eps)
        .collect();

    if eligible.is_empty() {
        let all: Vec<usize> = (0..cands.len()).collect();
        let objective = |c: &Candidate| c.estimate.p_scoring;
        let chosen = pick(&cands, &all, objective, true);
        return Ok(storyteller_decision(
            &cands,
            chosen,
            "storyteller_strategy2",
            "p_scoring",
            objective,
            |c| c.estimate.p_scoring_se,
            true,
            vec![format!(
                "no pair had P(n_V >= 1) above {eps}; fell back to strategy 1"
            )],
        ));
    }

    let objective = |c: &Candidate| c.estimate.expected_votes;
    let chosen = pick(&cands, &eligible, objective, false);
    let excluded = cands.len() - eligible.len();
    let mut notes = Vec::new();
    if excluded > 0 {
        notes.push(format!(
            "{excluded} pairs excluded with P(n_V >= 1) at or below {eps}"
        ));
    }
    let mut decision = storyteller_decision(
        &cands,
        chosen,
        "storyteller_strategy2",
        "expected_votes",
        objective,
        |c| c.estimate.expected_votes_se,
        false,
        notes,
    );
    // Rejected alternatives come from the eligible set only.
    let eligible_cands: Vec<usize> = eligible.iter().copied().filter(|&i| i != chosen).collect();
    let mut alts: Vec<Alternative> = eligible_cands
        .iter()
        .map(|&i| cands[i].alternative(objective(&cands[i])))
        .collect();
    alts.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then_with(|| a.card.cmp(&b.card))
            .then_with(|| a.phrase.cmp(&b.phrase))
    });
    alts.truncate(3);
    decision.explanation.rejected = alts;
    Ok(decision)
}

/// The hand card expected to draw the most votes for `phrase`.
pub fn choose_decoy(phrase: &Phrase, ctx: &GameContext<'_>) -> Result<AgentDecision, AgentError> {
    let mut cands = Vec::new();
    for card in sorted_hand(ctx)? {
        let estimate = estimate_vote_distribution(card, phrase, ctx)?;
        cands.push(Candidate {
            card: card.id.clone(),
            phrase: None,
            estimate,
        });
    }
    let all: Vec<usize> = (0..cands.len()).collect();
    let objective = |c: &Candidate| c.estimate.expected_votes;
    let chosen = pick(&cands, &all, objective, true);
    let c = &cands[chosen];
    let mut notes = Vec::new();
    if c.estimate.with_replacement {
        notes.push("unseen pool too small for distinct hands; opponents sampled with replacement".into());
    }
    Ok(AgentDecision {
        action: Action::Decoy {
            card: c.card.clone(),
        },
        explanation: Explanation {
            strategy: "decoy_max_expected_votes".into(),
            objective: "expected_votes".into(),
            value: c.estimate.expected_votes,
            standard_error: Some(c.estimate.expected_votes_se),
            distribution: Some(c.estimate.distribution.clone()),
            belief: Vec::new(),
            evaluated: cands.len(),
            rejected: rejected(&cands, chosen, objective, true),
            notes,
            summary: format!(
                "Played {} as a decoy for \"{phrase}\": it is expected to lure {:.3} votes, the most of {} hand cards.",
                describe(&c.card, None),
                c.estimate.expected_votes,
                cands.len()
            ),
        },
    })
}

/// Posterior over table cards being the storyteller's, own card excluded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteBelief {
    pub entries: Vec<BeliefEntry>,
}

impl VoteBelief {
    pub fn probability(&self, card: &CardId) -> f64 {
        self.entries
            .iter()
            .find(|e| &e.card == card)
            .map_or(0.0, |e| e.probability)
    }
}

/// Uniform prior over the other table cards with a softmax likelihood of the
/// association scores.
pub fn vote_belief(
    table: &[Card],
    own_card: &CardId,
    phrase: &Phrase,
    ctx: &GameContext<'_>,
) -> Result<VoteBelief, AgentError> {
    let own = table
        .iter()
        .position(|c| &c.id == own_card)
        .ok_or_else(|| AgentError::NotOnTable(own_card.clone()))?;
    if table.len() < 2 {
        return Err(AgentError::OwnCardOnlyCard);
    }
    let scores: Vec<f64> = table.iter().map(|c| ctx.model.score(c, phrase)).collect();
    let probs = voter_choice_probabilities(&scores, Some(own), ctx.params.temperature)?;
    Ok(VoteBelief {
        entries: table
            .iter()
            .zip(probs.probs())
            .map(|(c, &p)| BeliefEntry {
                card: c.id.clone(),
                probability: p,
            })
            .collect(),
    })
}

/// Votes for the card most believed to be the storyteller's, or the least
/// believed one in block mode.
pub fn choose_vote(
    table: &[Card],
    own_card: &CardId,
    phrase: &Phrase,
    ctx: &GameContext<'_>,
) -> Result<AgentDecision, AgentError> {
    let belief = vote_belief(table, own_card, phrase, ctx)?;
    let mode = endgame_objective(ctx);

    let mut options: Vec<&BeliefEntry> = belief.entries.iter().filter(|e| &e.card != own_card).collect();
    options.sort_by(|a, b| a.card.cmp(&b.card));
    let mut best = 0;
    for i in 1..options.len() {
        let (v, b) = (options[i].probability, options[best].probability);
        let better = match mode {
            ObjectiveMode::Normal => v > b,
            ObjectiveMode::Block => v < b,
        };
        if better {
            best = i;
        }
    }
    let chosen = options[best];

    let mut rest: Vec<&BeliefEntry> = options.iter().copied().filter(|e| e.card != chosen.card).collect();
    rest.sort_by(|a, b| {
        let ord = match mode {
            ObjectiveMode::Normal => b.probability.total_cmp(&a.probability),
            ObjectiveMode::Block => a.probability.total_cmp(&b.probability),
        };
        ord.then_with(|| a.card.cmp(&b.card))
    });
    let rejected = rest
        .into_iter()
        .take(3)
        .map(|e| Alternative {
            card: e.card.clone(),
            phrase: None,
            value: e.probability,
        })
        .collect();

    let (strategy, summary) = match mode {
        ObjectiveMode::Normal => (
            "vote_max_belief",
            format!(
                "Voted for card {} as the most likely storyteller card for \"{phrase}\" (belief {:.3}).",
                chosen.card, chosen.probability
            ),
        ),
        ObjectiveMode::Block => (
            "vote_block_storyteller",
            format!(
                "The storyteller is within 3 points of winning, so voted for card {}, the least likely storyteller card for \"{phrase}\" (belief {:.3}).",
                chosen.card, chosen.probability
            ),
        ),
    };

    Ok(AgentDecision {
        action: Action::Vote {
            card: chosen.card.clone(),
        },
        explanation: Explanation {
            strategy: strategy.into(),
            objective: "vote_belief".into(),
            value: chosen.probability,
            standard_error: None,
            distribution: None,
            belief: belief.entries.clone(),
            evaluated: options.len(),
            rejected,
            notes: Vec::new(),
            summary,
        },
    })
}
