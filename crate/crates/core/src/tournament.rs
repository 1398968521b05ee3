//! Seeded headless self-play.
//!
//! Game `g` of a tournament is fully determined by the master seed and `g`:
//! its engine seed, the seat rotation and every agent's random streams are
//! derived from them. Games run independently (in parallel when available)
//! and the report is a fold over the resulting transcripts in game order.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{
    fallback_decision, Action, Agent, AgentDecision, AgentSpec, CandidateLexicon, LexiconError,
    SeatView,
};
use crate::card::{Card, Deck, DeckError};
use crate::config::{ConfigError, GameConfig};
use crate::engine::{EngineError, GameState, Phase};
use crate::parallel::{map_indexed, Execution};
use crate::phrase::Phrase;
use crate::seed;
use crate::transcript::{Header, Record, SeatInfo, SeatKind, Transcript, TranscriptError, TRANSCRIPT_VERSION};

const GAME_STREAM: u64 = 0x6A3E;
const ROTATION_STREAM: u64 = 0x2071;
const SEAT_STREAM: u64 = 0x5EA7;

#[derive(Debug, Error)]
pub enum TournamentError {
    #[error("failed to read tournament config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("tournament config {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: toml::de::Error,
    },
    #[error("games must be at least 1")]
    NoGames,
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Deck(#[from] DeckError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Transcript(#[from] TranscriptError),
    #[error("failed to write {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn default_games() -> usize {
    100
}
fn default_phrase_limit() -> usize {
    4
}
fn default_target() -> u32 {
    30
}

/// Tournament file contents. Deck and lexicon paths are resolved relative to
/// the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentConfig {
    #[serde(default = "default_games")]
    pub games: usize,
    #[serde(default)]
    pub seed: u64,
    pub deck: PathBuf,
    pub lexicon: PathBuf,
    #[serde(default = "default_phrase_limit")]
    pub phrase_limit: usize,
    #[serde(default = "default_target")]
    pub target_score: u32,
    /// Games run in parallel unless set to `sequential`.
    #[serde(default)]
    pub execution: Execution,
    /// One entrant per seat; the player count is the number of seats.
    pub seats: Vec<AgentSpec>,
}

impl TournamentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, TournamentError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| TournamentError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg: TournamentConfig = toml::from_str(&text).map_err(|source| TournamentError::Parse {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.deck = base.join(&cfg.deck);
        cfg.lexicon = base.join(&cfg.lexicon);
        Ok(cfg)
    }

    pub fn n_players(&self) -> usize {
        self.seats.len()
    }

    fn game_config(&self, rng_seed: u64) -> GameConfig {
        GameConfig {
            n_players: self.n_players(),
            phrase_limit: self.phrase_limit,
            target_score: self.target_score,
            rng_seed,
        }
    }
}

/// Plays one game to completion. Illegal or failed agent moves are replaced
/// by the deterministic fallback move and flagged in the transcript.
pub fn play_game(
    deck: Vec<Card>,
    config: GameConfig,
    agents: &mut [Box<dyn Agent>],
    seats: Vec<SeatInfo>,
    lexicon: &CandidateLexicon,
    game_index: Option<u64>,
) -> Result<Transcript, EngineError> {
    let mut state = GameState::new_game(deck.clone(), config.clone())?;
    let mut transcript = Transcript::new(Header {
        version: TRANSCRIPT_VERSION,
        config,
        deck,
        seats,
        game_index,
    });
    let least = lexicon.least_phrase().clone();

    loop {
        let round = state.round_number();
        match state.phase() {
            Phase::AwaitStoryteller => {
                let st = state.storyteller();
                let view = SeatView::from_state(&state, st);
                let proposed = agents[st].storytell(&view).ok();
                let record = apply_decision(&mut state, st, proposed, &least)?;
                transcript.push(record);
            }
            Phase::AwaitDecoys => {
                let phrase = state.round().phrase.clone().expect("phrase set");
                let st = state.storyteller();
                for (p, agent) in agents.iter_mut().enumerate().filter(|(p, _)| *p != st) {
                    let view = SeatView::from_state(&state, p);
                    let proposed = agent.decoy(&view, &phrase).ok();
                    let record = apply_decision(&mut state, p, proposed, &least)?;
                    transcript.push(record);
                }
            }
            Phase::AwaitVotes => {
                let phrase = state.round().phrase.clone().expect("phrase set");
                let table: Vec<Card> = state.table_cards().into_iter().cloned().collect();
                let st = state.storyteller();
                for (p, agent) in agents.iter_mut().enumerate().filter(|(p, _)| *p != st) {
                    let own = state.round().submission_id(p).expect("submitted").clone();
                    let view = SeatView::from_state(&state, p);
                    let proposed = agent.vote(&view, &table, &own, &phrase).ok();
                    let record = apply_decision(&mut state, p, proposed, &least)?;
                    transcript.push(record);
                }
            }
            Phase::RoundScored => {
                let score = state.last_score().expect("scored").clone();
                state.advance_round()?;
                transcript.push(Record::Advance { round, score });
            }
            Phase::GameOver => {
                transcript.push(Record::End {
                    scores: state.scores().to_vec(),
                    winners: state.winners().to_vec(),
                });
                return Ok(transcript);
            }
        }
    }
}

fn try_apply(state: &mut GameState, seat: usize, action: &Action) -> Result<(), EngineError> {
    match action {
        Action::Storytell { card, phrase } => {
            if seat != state.storyteller() {
                return Err(EngineError::WrongPhase {
                    actual: state.phase(),
                });
            }
            state.storyteller_submit(card, phrase.clone())
        }
        Action::Decoy { card } => state.decoy_submit(seat, card),
        Action::Vote { card } => state.vote_submit(seat, card),
    }
}

fn record_for(round: u32, seat: usize, decision: AgentDecision, fallback: bool) -> Record {
    let explanation = Some(decision.explanation);
    match decision.action {
        Action::Storytell { card, phrase } => Record::Storyteller {
            round,
            player: seat,
            card,
            phrase,
            explanation,
            fallback,
        },
        Action::Decoy { card } => Record::Decoy {
            round,
            player: seat,
            card,
            explanation,
            fallback,
        },
        Action::Vote { card } => Record::Vote {
            round,
            player: seat,
            card,
            explanation,
            fallback,
        },
    }
}

/// Applies `proposed` for `seat`, substituting the fallback move when the
/// proposal is missing or illegal. The record's `fallback` flag says which.
pub fn apply_decision(
    state: &mut GameState,
    seat: usize,
    proposed: Option<AgentDecision>,
    least: &Phrase,
) -> Result<Record, EngineError> {
    let round = state.round_number();
    if let Some(decision) = proposed {
        if try_apply(state, seat, &decision.action).is_ok() {
            return Ok(record_for(round, seat, decision, false));
        }
    }
    let decision = fallback_decision(state, seat, least).ok_or(EngineError::WrongPhase {
        actual: state.phase(),
    })?;
    try_apply(state, seat, &decision.action)?;
    Ok(record_for(round, seat, decision, true))
}

/// Per-entrant statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeatStats {
    pub label: String,
    pub games: usize,
    pub wins: usize,
    /// Games ending in a shared first place that included this entrant.
    pub draws: usize,
    /// Wins plus fractional credit for shared first places.
    pub win_share: f64,
    pub mean_score: f64,
    pub stddev_score: f64,
    pub storyteller_rounds: usize,
    /// Fraction of storyteller rounds in which the entrant scored 3.
    pub storyteller_success_rate: f64,
    /// Mean votes on the entrant's card per storyteller round.
    pub mean_storyteller_votes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentReport {
    pub games: usize,
    pub seed: u64,
    pub n_players: usize,
    pub mean_rounds: f64,
    pub seats: Vec<SeatStats>,
}

#[derive(Default)]
struct Acc {
    wins: usize,
    draws: usize,
    win_share: f64,
    scores: Vec<f64>,
    st_rounds: usize,
    st_success: usize,
    st_votes: usize,
}

fn ratio(num: f64, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num / den as f64
    }
}

impl TournamentReport {
    /// Folds finished transcripts into a report. Entrants are identified by
    /// the `entrant` field of each transcript seat, falling back to the seat
    /// position.
    pub fn from_transcripts(labels: &[String], seed: u64, transcripts: &[Transcript]) -> Self {
        let mut acc: Vec<Acc> = labels.iter().map(|_| Acc::default()).collect();
        let mut rounds = 0usize;
        for t in transcripts {
            let entrant = |pos: usize| t.header.seats[pos].entrant.unwrap_or(pos);
            if let Some((scores, winners)) = t.end() {
                for (pos, &s) in scores.iter().enumerate() {
                    acc[entrant(pos)].scores.push(f64::from(s));
                }
                for &w in winners {
                    let a = &mut acc[entrant(w)];
                    if winners.len() == 1 {
                        a.wins += 1;
                    } else {
                        a.draws += 1;
                    }
                    a.win_share += 1.0 / winners.len() as f64;
                }
            }
            for r in &t.records {
                if let Record::Advance { score, .. } = r {
                    rounds += 1;
                    let a = &mut acc[entrant(score.storyteller)];
                    a.st_rounds += 1;
                    a.st_votes += score.storyteller_votes;
                    if score.storyteller_scored() {
                        a.st_success += 1;
                    }
                }
            }
        }

        let seats = labels
            .iter()
            .zip(acc)
            .map(|(label, a)| {
                let games = a.scores.len();
                let mean = ratio(a.scores.iter().sum(), games);
                let var = if games > 1 {
                    a.scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (games - 1) as f64
                } else {
                    0.0
                };
                SeatStats {
                    label: label.clone(),
                    games,
                    wins: a.wins,
                    draws: a.draws,
                    win_share: ratio(a.win_share, games),
                    mean_score: mean,
                    stddev_score: var.sqrt(),
                    storyteller_rounds: a.st_rounds,
                    storyteller_success_rate: ratio(a.st_success as f64, a.st_rounds),
                    mean_storyteller_votes: ratio(a.st_votes as f64, a.st_rounds),
                }
            })
            .collect();

        TournamentReport {
            games: transcripts.len(),
            seed,
            n_players: labels.len(),
            mean_rounds: ratio(rounds as f64, transcripts.len()),
            seats,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

impl fmt::Display for TournamentReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} games, {} players, seed {}, {:.1} rounds/game",
            self.games, self.n_players, self.seed, self.mean_rounds
        )?;
        writeln!(
            f,
            "{:<4} {:<32} {:>5} {:>5} {:>7} {:>7} {:>6} {:>8} {:>6}",
            "seat", "entrant", "wins", "draws", "share", "score", "sd", "st-succ", "st-nV"
        )?;
        for (i, s) in self.seats.iter().enumerate() {
            writeln!(
                f,
                "{:<4} {:<32} {:>5} {:>5} {:>7.3} {:>7.2} {:>6.2} {:>8.3} {:>6.2}",
                i,
                s.label,
                s.wins,
                s.draws,
                s.win_share,
                s.mean_score,
                s.stddev_score,
                s.storyteller_success_rate,
                s.mean_storyteller_votes
            )?;
        }
        Ok(())
    }
}

pub struct TournamentOutcome {
    pub report: TournamentReport,
    pub transcripts: Vec<Transcript>,
}

/// Loaded deck and lexicon plus the config that drives them.
pub struct Tournament {
    pub config: TournamentConfig,
    deck: Vec<Card>,
    lexicon: Arc<CandidateLexicon>,
}

impl Tournament {
    pub fn new(config: TournamentConfig) -> Result<Self, TournamentError> {
        if config.games == 0 {
            return Err(TournamentError::NoGames);
        }
        config.game_config(0).validate()?;
        let deck = Deck::load(&config.deck)?.into_cards();
        let lexicon = Arc::new(CandidateLexicon::load(&config.lexicon, config.phrase_limit)?);
        Ok(Tournament {
            config,
            deck,
            lexicon,
        })
    }

    pub fn from_parts(config: TournamentConfig, deck: Deck, lexicon: CandidateLexicon) -> Result<Self, TournamentError> {
        if config.games == 0 {
            return Err(TournamentError::NoGames);
        }
        config.game_config(0).validate()?;
        Ok(Tournament {
            config,
            deck: deck.into_cards(),
            lexicon: Arc::new(lexicon),
        })
    }

    pub fn labels(&self) -> Vec<String> {
        self.config.seats.iter().map(AgentSpec::display_label).collect()
    }

    /// Position `p` of game `g` is played by entrant `(p + offset) % n`.
    pub fn rotation(&self, game: usize) -> usize {
        let n = self.config.n_players();
        let base = seed::derive(self.config.seed, &[ROTATION_STREAM]) % n as u64;
        (base as usize + game) % n
    }

    pub fn play(&self, game: usize) -> Result<Transcript, TournamentError> {
        let n = self.config.n_players();
        let game_seed = seed::derive(self.config.seed, &[GAME_STREAM, game as u64]);
        let offset = self.rotation(game);
        let labels = self.labels();
        let mut agents = Vec::with_capacity(n);
        let mut seats = Vec::with_capacity(n);
        for pos in 0..n {
            let entrant = (pos + offset) % n;
            let spec = &self.config.seats[entrant];
            agents.push(spec.build(
                Arc::clone(&self.lexicon),
                seed::derive(game_seed, &[SEAT_STREAM, entrant as u64]),
            ));
            seats.push(SeatInfo {
                label: labels[entrant].clone(),
                kind: SeatKind::Agent,
                entrant: Some(entrant),
            });
        }
        Ok(play_game(
            self.deck.clone(),
            self.config.game_config(game_seed),
            &mut agents,
            seats,
            &self.lexicon,
            Some(game as u64),
        )?)
    }

    /// Plays every game and, when `out` is given, writes
    /// `game_NNNNN.jsonl` transcripts plus `report.json` into it.
    pub fn run(&self, out: Option<&Path>) -> Result<TournamentOutcome, TournamentError> {
        let transcripts = map_indexed(self.config.games, self.config.execution, |g| self.play(g))
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
        let report = TournamentReport::from_transcripts(&self.labels(), self.config.seed, &transcripts);

        if let Some(dir) = out {
            let output = |path: &Path, source| TournamentError::Output {
                path: path.display().to_string(),
                source,
            };
            fs::create_dir_all(dir).map_err(|e| output(dir, e))?;
            for (g, t) in transcripts.iter().enumerate() {
                t.write(dir.join(format!("game_{g:05}.jsonl")))?;
            }
            let report_path = dir.join("report.json");
            fs::write(&report_path, report.to_json()).map_err(|e| output(&report_path, e))?;
        }
        Ok(TournamentOutcome {
            report,
            transcripts,
        })
    }
}

/// Loads everything named by `config` and runs it.
pub fn run_tournament(config: TournamentConfig, out: Option<&Path>) -> Result<TournamentOutcome, TournamentError> {
    Tournament::new(config)?.run(out)
}
