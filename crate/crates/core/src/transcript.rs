//! Replayable game transcripts.
//!
//! A transcript is a JSON-lines file: one `header` record carrying the deck,
//! the game config (including the seed) and the seating, then one record per
//! action in the order it was applied, then an `end` record with the final
//! scoreboard.
//!
//! ```text
//! {"record":"header","version":1,"config":{...},"deck":[...],"seats":[...]}
//! {"record":"storyteller","round":0,"player":0,"card":"c07","phrase":["moon"],"explanation":{...}}
//! {"record":"decoy","round":0,"player":1,"card":"c33","explanation":{...}}
//! {"record":"vote","round":0,"player":1,"card":"c07","explanation":{...}}
//! {"record":"advance","round":0,"score":{...}}
//! {"record":"end","scores":[31,22,18,25],"winners":[0]}
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{Action, Explanation};
use crate::card::{Card, CardId};
use crate::config::GameConfig;
use crate::engine::{EngineError, GameState, Phase, RoundScore};
use crate::phrase::Phrase;

pub const TRANSCRIPT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeatKind {
    Agent,
    Human,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeatInfo {
    pub label: String,
    pub kind: SeatKind,
    /// Index of the configured seat (tournament entrant) playing this
    /// position, when seats are rotated between games.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entrant: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub version: u32,
    pub config: GameConfig,
    /// Deck in the order handed to `new_game`, before the seeded shuffle.
    pub deck: Vec<Card>,
    pub seats: Vec<SeatInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub game_index: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum Record {
    Header(Header),
    Storyteller {
        round: u32,
        player: usize,
        card: CardId,
        phrase: Phrase,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        explanation: Option<Explanation>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        fallback: bool,
    },
    Decoy {
        round: u32,
        player: usize,
        card: CardId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        explanation: Option<Explanation>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        fallback: bool,
    },
    Vote {
        round: u32,
        player: usize,
        card: CardId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        explanation: Option<Explanation>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        fallback: bool,
    },
    Advance {
        round: u32,
        score: RoundScore,
    },
    End {
        scores: Vec<u32>,
        winners: Vec<usize>,
    },
}

impl Record {
    /// Acting player and the move, for the three action records.
    pub fn played(&self) -> Option<(usize, Action)> {
        match self {
            Record::Storyteller {
                player, card, phrase, ..
            } => Some((
                *player,
                Action::Storytell {
                    card: card.clone(),
                    phrase: phrase.clone(),
                },
            )),
            Record::Decoy { player, card, .. } => Some((*player, Action::Decoy { card: card.clone() })),
            Record::Vote { player, card, .. } => Some((*player, Action::Vote { card: card.clone() })),
            _ => None,
        }
    }

    /// Acting player and explanation, for the three action records.
    pub fn action(&self) -> Option<(usize, Option<&Explanation>)> {
        match self {
            Record::Storyteller {
                player, explanation, ..
            }
            | Record::Decoy {
                player, explanation, ..
            }
            | Record::Vote {
                player, explanation, ..
            } => Some((*player, explanation.as_ref())),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("failed to access transcript {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt transcript at line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
}

impl TranscriptError {
    fn corrupt(line: usize, reason: impl Into<String>) -> Self {
        TranscriptError::Corrupt {
            line,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub header: Header,
    /// Everything after the header, including the closing `end` record.
    pub records: Vec<Record>,
}

impl Transcript {
    pub fn new(header: Header) -> Self {
        Transcript {
            header,
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, record: Record) {
        self.records.push(record);
    }

    pub fn end(&self) -> Option<(&[u32], &[usize])> {
        self.records.iter().rev().find_map(|r| match r {
            Record::End { scores, winners } => Some((scores.as_slice(), winners.as_slice())),
            _ => None,
        })
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let header = Record::Header(self.header.clone());
        for record in std::iter::once(&header).chain(&self.records) {
            out.push_str(&serde_json::to_string(record).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn parse_jsonl(text: &str) -> Result<Self, TranscriptError> {
        let mut header = None;
        let mut records = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let record: Record = serde_json::from_str(line)
                .map_err(|e| TranscriptError::corrupt(line_no, e.to_string()))?;
            match (record, &header) {
                (Record::Header(h), None) => {
                    if h.version != TRANSCRIPT_VERSION {
                        return Err(TranscriptError::corrupt(
                            line_no,
                            format!("unsupported version {}", h.version),
                        ));
                    }
                    header = Some(h);
                }
                (Record::Header(_), Some(_)) => {
                    return Err(TranscriptError::corrupt(line_no, "second header"))
                }
                (_, None) => return Err(TranscriptError::corrupt(line_no, "missing header")),
                (r, Some(_)) => records.push(r),
            }
        }
        let header = header.ok_or_else(|| TranscriptError::corrupt(1, "empty transcript"))?;
        Ok(Transcript { header, records })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), TranscriptError> {
        let path = path.as_ref();
        let io = |source| TranscriptError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut file = fs::File::create(path).map_err(io)?;
        file.write_all(self.to_jsonl().as_bytes()).map_err(io)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TranscriptError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| TranscriptError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Transcript::parse_jsonl(&text)
    }

    /// Re-runs every action from the recorded deck and seed, checking each
    /// recorded round score and the final scoreboard along the way.
    pub fn replay(&self) -> Result<GameState, TranscriptError> {
        let engine = |line: usize, e: EngineError| TranscriptError::corrupt(line, e.to_string());
        let mut state = GameState::new_game(self.header.deck.clone(), self.header.config.clone())
            .map_err(|e| engine(1, e))?;

        for (idx, record) in self.records.iter().enumerate() {
            let line = idx + 2;
            match record {
                Record::Header(_) => return Err(TranscriptError::corrupt(line, "second header")),
                Record::Storyteller {
                    player, card, phrase, ..
                } => {
                    if *player != state.storyteller() {
                        return Err(TranscriptError::corrupt(line, "storyteller mismatch"));
                    }
                    state
                        .storyteller_submit(card, phrase.clone())
                        .map_err(|e| engine(line, e))?;
                }
                Record::Decoy { player, card, .. } => {
                    state.decoy_submit(*player, card).map_err(|e| engine(line, e))?
                }
                Record::Vote { player, card, .. } => {
                    state.vote_submit(*player, card).map_err(|e| engine(line, e))?
                }
                Record::Advance { score, .. } => {
                    if state.last_score() != Some(score) || state.phase() != Phase::RoundScored {
                        return Err(TranscriptError::corrupt(line, "round score mismatch"));
                    }
                    state.advance_round().map_err(|e| engine(line, e))?;
                }
                Record::End { scores, winners } => {
                    if state.phase() != Phase::GameOver
                        || state.scores() != scores.as_slice()
                        || state.winners() != winners.as_slice()
                    {
                        return Err(TranscriptError::corrupt(line, "final scoreboard mismatch"));
                    }
                    if idx + 1 != self.records.len() {
                        return Err(TranscriptError::corrupt(line + 1, "records after end"));
                    }
                    return Ok(state);
                }
            }
        }
        Err(TranscriptError::corrupt(
            self.records.len() + 1,
            "truncated: no end record",
        ))
    }
}

/// Loads and replays a transcript file.
pub fn replay(path: impl AsRef<Path>) -> Result<GameState, TranscriptError> {
    Transcript::load(path)?.replay()
}
