//! One game: lobby, seating, the authoritative [`GameState`], agent seats and
//! the per-member outbound message history.
//!
//! A session is driven entirely through [`Session::join`],
//! [`Session::seat_agent`], [`Session::start`], [`Session::handle_message`]
//! and [`Session::expire_pending`]. Each call is logged as an [`Inbound`]
//! event, so a fresh session fed the same log reproduces the same game.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::{Duration, Instant};

use dixit_core::agents::{
    Action, Agent, AgentDecision, AgentSpec, CandidateLexicon, Explanation, SeatView,
};
use dixit_core::config::{MAX_PLAYERS, MIN_PLAYERS};
use dixit_core::tournament::apply_decision;
use dixit_core::transcript::{Header, Record, SeatInfo, SeatKind, Transcript, TRANSCRIPT_VERSION};
use dixit_core::{seed, Card, EngineError, GameConfig, GameState, Phase, Phrase};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{ClientMessage, Envelope, ErrorCode, RoundResult, ServerMessage};
use crate::view::{project_state_for_player, PlayerView};

pub type MemberId = usize;

const SEATING_STREAM: u64 = 0x5117;
const GAME_STREAM: u64 = 0x6A3E;
const SEAT_STREAM: u64 = 0x5EA7;

fn default_phrase_limit() -> usize {
    4
}
fn default_target() -> u32 {
    30
}
fn default_max_agents() -> usize {
    MAX_PLAYERS - 1
}
fn default_move_timeout() -> u64 {
    60_000
}
fn default_agent_timeout() -> u64 {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LobbyConfig {
    #[serde(default = "default_phrase_limit")]
    pub phrase_limit: usize,
    #[serde(default = "default_target")]
    pub target_score: u32,
    #[serde(default = "default_max_agents")]
    pub max_agent_seats: usize,
    /// Audience/language/culture tag, handed to agent specs as is.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
    /// Deadline for a human move before the fallback move is played.
    #[serde(default = "default_move_timeout")]
    pub move_timeout_ms: u64,
    /// Deadline for an agent decision.
    #[serde(default = "default_agent_timeout")]
    pub agent_timeout_ms: u64,
    /// Start automatically once this many seats are filled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auto_start: Option<usize>,
    /// Session seed. Drawn at random when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for LobbyConfig {
    fn default() -> Self {
        LobbyConfig {
            phrase_limit: default_phrase_limit(),
            target_score: default_target(),
            max_agent_seats: default_max_agents(),
            context: None,
            move_timeout_ms: default_move_timeout(),
            agent_timeout_ms: default_agent_timeout(),
            auto_start: None,
            seed: None,
        }
    }
}

/// What is needed, besides deck, lexicon and log, to rebuild a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSetup {
    pub game_id: String,
    /// Always carries a resolved `seed`.
    pub config: LobbyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Inbound {
    Join { name: String },
    SeatAgent { spec: AgentSpec },
    Start,
    Message { member: MemberId, message: ClientMessage },
    Expire { epoch: u64 },
    /// An agent missed its deadline; replay plays the fallback move instead.
    AgentFallback { seat: usize, round: u32, phase: Phase },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("a game needs {MIN_PLAYERS} to {MAX_PLAYERS} seats, not {0}")]
    SeatCountInvalid(usize),
    #[error("at most {0} agent seats allowed")]
    AgentSeatLimit(usize),
    #[error("the game has already started")]
    AlreadyStarted,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

impl SessionError {
    pub fn code(&self) -> ErrorCode {
        match self {
            SessionError::SeatCountInvalid(_) => ErrorCode::SeatCountInvalid,
            SessionError::AgentSeatLimit(_) => ErrorCode::AgentSeatLimit,
            SessionError::AlreadyStarted => ErrorCode::ProtocolViolation,
            SessionError::Engine(e) => e.into(),
        }
    }
}

/// An envelope addressed to one member.
pub type Outbound = (MemberId, Envelope);

/// A stored agent explanation, disclosed at game end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationRecord {
    pub seat: usize,
    pub round: u32,
    pub action: Action,
    pub explanation: Explanation,
}

enum Role {
    Human { name: String, token: String },
    Agent { spec: AgentSpec },
}

struct Member {
    role: Role,
    seat: Option<usize>,
    outbox: Vec<Envelope>,
    last_view: Option<PlayerView>,
}

pub struct Session {
    setup: SessionSetup,
    deck: Vec<Card>,
    lexicon: Arc<CandidateLexicon>,
    least_phrase: Phrase,
    members: Vec<Member>,
    /// `seats[s]` is the member playing seat `s`.
    seats: Vec<MemberId>,
    agents: Vec<Option<Box<dyn Agent>>>,
    state: Option<GameState>,
    transcript: Option<Transcript>,
    explanations: Vec<ExplanationRecord>,
    round_results: Vec<RoundResult>,
    log: Vec<Inbound>,
    epoch: u64,
    epoch_key: Option<(u32, Phase)>,
    forced: BTreeSet<(usize, u32, u8)>,
    replaying: bool,
    finished: bool,
}

fn phase_code(phase: Phase) -> u8 {
    match phase {
        Phase::AwaitStoryteller => 0,
        Phase::AwaitDecoys => 1,
        Phase::AwaitVotes => 2,
        Phase::RoundScored => 3,
        Phase::GameOver => 4,
    }
}

fn new_token() -> String {
    format!("{:032x}", rand::random::<u128>())
}

impl Session {
    pub fn new(game_id: impl Into<String>, mut config: LobbyConfig, deck: Vec<Card>, lexicon: Arc<CandidateLexicon>) -> Self {
        config.seed.get_or_insert_with(rand::random);
        let least_phrase = lexicon.least_phrase().clone();
        Session {
            setup: SessionSetup {
                game_id: game_id.into(),
                config,
            },
            deck,
            lexicon,
            least_phrase,
            members: Vec::new(),
            seats: Vec::new(),
            agents: Vec::new(),
            state: None,
            transcript: None,
            explanations: Vec::new(),
            round_results: Vec::new(),
            log: Vec::new(),
            epoch: 0,
            epoch_key: None,
            forced: BTreeSet::new(),
            replaying: false,
            finished: false,
        }
    }

    /// Rebuilds a session from its setup and inbound log.
    pub fn replay(setup: &SessionSetup, deck: Vec<Card>, lexicon: Arc<CandidateLexicon>, log: &[Inbound]) -> Self {
        let mut s = Session::new(setup.game_id.clone(), setup.config.clone(), deck, lexicon);
        s.replaying = true;
        for event in log {
            if let Inbound::AgentFallback { seat, round, phase } = event {
                s.forced.insert((*seat, *round, phase_code(*phase)));
            }
        }
        for event in log {
            match event {
                Inbound::Join { name } => {
                    let _ = s.join(name.clone());
                }
                Inbound::SeatAgent { spec } => {
                    let _ = s.seat_agent(spec.clone());
                }
                Inbound::Start => {
                    let _ = s.start();
                }
                Inbound::Message { member, message } => {
                    s.handle_message(*member, message.clone());
                }
                Inbound::Expire { epoch } => {
                    s.expire_pending(*epoch);
                }
                Inbound::AgentFallback { .. } => {}
            }
        }
        s
    }

    pub fn setup(&self) -> &SessionSetup {
        &self.setup
    }

    pub fn game_id(&self) -> &str {
        &self.setup.game_id
    }

    pub fn config(&self) -> &LobbyConfig {
        &self.setup.config
    }

    pub fn log(&self) -> &[Inbound] {
        &self.log
    }

    pub fn state(&self) -> Option<&GameState> {
        self.state.as_ref()
    }

    pub fn transcript(&self) -> Option<&Transcript> {
        self.transcript.as_ref()
    }

    pub fn round_results(&self) -> &[RoundResult] {
        &self.round_results
    }

    pub fn explanations(&self) -> &[ExplanationRecord] {
        &self.explanations
    }

    pub fn started(&self) -> bool {
        self.state.is_some()
    }

    pub fn is_over(&self) -> bool {
        self.finished
    }

    /// Changes whenever the round or phase does; used to scope move deadlines.
    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// True while some human seat still owes a move in the current phase.
    pub fn awaiting_human(&self) -> bool {
        self.pending_seats().iter().any(|&s| !self.is_agent_seat(s))
    }

    pub fn member_count(&self) -> usize {
        self.members.len()
    }

    pub fn member_for_token(&self, token: &str) -> Option<MemberId> {
        self.members
            .iter()
            .position(|m| matches!(&m.role, Role::Human { token: t, .. } if t == token))
    }

    pub fn seat_of(&self, member: MemberId) -> Option<usize> {
        self.members.get(member).and_then(|m| m.seat)
    }

    pub fn is_human(&self, member: MemberId) -> bool {
        matches!(self.members.get(member).map(|m| &m.role), Some(Role::Human { .. }))
    }

    /// Every envelope sent to `member` with `seq > cursor`.
    pub fn messages_since(&self, member: MemberId, cursor: u64) -> &[Envelope] {
        match self.members.get(member) {
            Some(m) => {
                let from = (cursor as usize).min(m.outbox.len());
                &m.outbox[from..]
            }
            None => &[],
        }
    }

    pub fn join(&mut self, name: impl Into<String>) -> Result<(MemberId, String, Vec<Outbound>), SessionError> {
        let name = name.into();
        self.admit()?;
        self.log.push(Inbound::Join { name: name.clone() });
        let token = new_token();
        let id = self.add_member(Role::Human {
            name,
            token: token.clone(),
        });
        let mut out = Vec::new();
        self.broadcast_lobby(Some(id), &mut out);
        self.maybe_auto_start(&mut out);
        Ok((id, token, out))
    }

    pub fn seat_agent(&mut self, mut spec: AgentSpec) -> Result<(MemberId, Vec<Outbound>), SessionError> {
        self.admit()?;
        let agents = self
            .members
            .iter()
            .filter(|m| matches!(m.role, Role::Agent { .. }))
            .count();
        if agents >= self.config().max_agent_seats {
            return Err(SessionError::AgentSeatLimit(self.config().max_agent_seats));
        }
        if spec.context.is_none() {
            spec.context = self.config().context.clone();
        }
        self.log.push(Inbound::SeatAgent { spec: spec.clone() });
        let id = self.add_member(Role::Agent { spec });
        let mut out = Vec::new();
        self.broadcast_lobby(None, &mut out);
        self.maybe_auto_start(&mut out);
        Ok((id, out))
    }

    pub fn start(&mut self) -> Result<Vec<Outbound>, SessionError> {
        let mut out = Vec::new();
        self.start_game(&mut out)?;
        self.log.push(Inbound::Start);
        self.drive(&mut out);
        Ok(out)
    }

    /// Applies one client message from `member`. Rejections come back as an
    /// `Error` envelope to the sender and leave the game untouched.
    pub fn handle_message(&mut self, member: MemberId, message: ClientMessage) -> Vec<Outbound> {
        self.log.push(Inbound::Message {
            member,
            message: message.clone(),
        });
        let mut out = Vec::new();
        match self.apply_human(member, message) {
            Ok(()) => self.drive(&mut out),
            Err((code, text)) => self.send(member, ServerMessage::error(code, text), &mut out),
        }
        out
    }

    /// Sends an error to `member` without touching the game, for frames that
    /// never decoded into a [`ClientMessage`].
    pub fn reject(&mut self, member: MemberId, code: ErrorCode, message: impl Into<String>) -> Vec<Outbound> {
        let mut out = Vec::new();
        self.send(member, ServerMessage::error(code, message), &mut out);
        out
    }

    /// Setup line followed by one inbound event per line.
    pub fn message_log_jsonl(&self) -> String {
        let mut text = serde_json::to_string(&self.setup).expect("setup serializes");
        text.push('\n');
        for event in &self.log {
            text.push_str(&serde_json::to_string(event).expect("event serializes"));
            text.push('\n');
        }
        text
    }

    /// Plays the fallback move for every human seat still pending in
    /// `epoch`. A stale epoch is a no-op.
    pub fn expire_pending(&mut self, epoch: u64) -> Vec<Outbound> {
        let mut out = Vec::new();
        if epoch != self.epoch || !self.started() || self.finished {
            return out;
        }
        self.log.push(Inbound::Expire { epoch });
        for seat in self.pending_seats() {
            if self.is_agent_seat(seat) {
                continue;
            }
            let state = self.state.as_mut().expect("started");
            let round = state.round_number();
            match apply_decision(state, seat, None, &self.least_phrase) {
                Ok(record) => {
                    self.transcript.as_mut().expect("started").push(record);
                    let member = self.seats[seat];
                    self.send(
                        member,
                        ServerMessage::error(ErrorCode::Timeout, format!("move deadline passed in round {round}; default move played")),
                        &mut out,
                    );
                }
                Err(e) => tracing::warn!(game = %self.setup.game_id, seat, "fallback failed: {e}"),
            }
        }
        self.drive(&mut out);
        out
    }

    fn admit(&self) -> Result<(), SessionError> {
        if self.started() {
            return Err(SessionError::AlreadyStarted);
        }
        if self.members.len() >= MAX_PLAYERS {
            return Err(SessionError::SeatCountInvalid(self.members.len() + 1));
        }
        Ok(())
    }

    fn add_member(&mut self, role: Role) -> MemberId {
        self.members.push(Member {
            role,
            seat: None,
            outbox: Vec::new(),
            last_view: None,
        });
        self.members.len() - 1
    }

    fn maybe_auto_start(&mut self, out: &mut Vec<Outbound>) {
        if self.config().auto_start == Some(self.members.len()) && self.start_game(out).is_ok() {
            self.drive(out);
        }
    }

    fn send(&mut self, member: MemberId, message: ServerMessage, out: &mut Vec<Outbound>) {
        let m = &mut self.members[member];
        if !matches!(m.role, Role::Human { .. }) {
            return;
        }
        let env = Envelope {
            seq: m.outbox.len() as u64 + 1,
            message,
        };
        m.outbox.push(env.clone());
        out.push((member, env));
    }

    fn humans(&self) -> Vec<MemberId> {
        (0..self.members.len()).filter(|&m| self.is_human(m)).collect()
    }

    fn broadcast_lobby(&mut self, joiner: Option<MemberId>, out: &mut Vec<Outbound>) {
        for m in self.humans() {
            let token = match (&self.members[m].role, joiner) {
                (Role::Human { token, .. }, Some(j)) if j == m => Some(token.clone()),
                _ => None,
            };
            let msg = ServerMessage::LobbyState {
                game_id: self.setup.game_id.clone(),
                joined: self.members.len(),
                capacity: MAX_PLAYERS,
                started: self.started(),
                token,
                context: self.config().context.clone(),
            };
            self.send(m, msg, out);
        }
    }

    fn start_game(&mut self, out: &mut Vec<Outbound>) -> Result<(), SessionError> {
        if self.started() {
            return Err(SessionError::AlreadyStarted);
        }
        let n = self.members.len();
        if !(MIN_PLAYERS..=MAX_PLAYERS).contains(&n) {
            return Err(SessionError::SeatCountInvalid(n));
        }
        let session_seed = self.config().seed.expect("resolved in new");
        let game_seed = seed::derive(session_seed, &[GAME_STREAM]);
        let config = GameConfig {
            n_players: n,
            phrase_limit: self.config().phrase_limit,
            target_score: self.config().target_score,
            rng_seed: game_seed,
        };
        let state = GameState::new_game(self.deck.clone(), config.clone())?;

        let mut seats: Vec<MemberId> = (0..n).collect();
        seats.shuffle(&mut seed::stream(session_seed, &[SEATING_STREAM]));
        let mut infos = Vec::with_capacity(n);
        let mut agents = Vec::with_capacity(n);
        for (seat, &member) in seats.iter().enumerate() {
            self.members[member].seat = Some(seat);
            let (info, agent) = match &self.members[member].role {
                Role::Human { name, .. } => (
                    SeatInfo {
                        label: name.clone(),
                        kind: SeatKind::Human,
                        entrant: Some(member),
                    },
                    None,
                ),
                Role::Agent { spec } => (
                    SeatInfo {
                        label: spec.display_label(),
                        kind: SeatKind::Agent,
                        entrant: Some(member),
                    },
                    Some(spec.build(
                        Arc::clone(&self.lexicon),
                        seed::derive(game_seed, &[SEAT_STREAM, seat as u64]),
                    )),
                ),
            };
            infos.push(info);
            agents.push(agent);
        }
        self.transcript = Some(Transcript::new(Header {
            version: TRANSCRIPT_VERSION,
            config,
            deck: self.deck.clone(),
            seats: infos,
            game_index: None,
        }));
        self.seats = seats;
        self.agents = agents;
        self.state = Some(state);

        for m in self.humans() {
            let seat = self.members[m].seat.expect("seated");
            let msg = ServerMessage::GameStart {
                seat,
                n_players: n,
                phrase_limit: self.config().phrase_limit,
                target_score: self.config().target_score,
            };
            self.send(m, msg, out);
        }
        Ok(())
    }

    fn is_agent_seat(&self, seat: usize) -> bool {
        self.agents.get(seat).is_some_and(Option::is_some)
    }

    fn pending_seats(&self) -> Vec<usize> {
        let Some(state) = &self.state else {
            return Vec::new();
        };
        let st = state.storyteller();
        let round = state.round();
        match state.phase() {
            Phase::AwaitStoryteller => vec![st],
            Phase::AwaitDecoys => (0..state.n_players())
                .filter(|&p| p != st && round.submissions[p].is_none())
                .collect(),
            Phase::AwaitVotes => (0..state.n_players())
                .filter(|&p| p != st && round.votes[p].is_none())
                .collect(),
            Phase::RoundScored | Phase::GameOver => Vec::new(),
        }
    }

    fn apply_human(&mut self, member: MemberId, message: ClientMessage) -> Result<(), (ErrorCode, String)> {
        let violation = |text: &str| (ErrorCode::ProtocolViolation, text.to_string());
        if !self.is_human(member) {
            return Err(violation("unknown member"));
        }
        if matches!(message, ClientMessage::JoinLobby { .. }) {
            return Err(violation("already joined"));
        }
        let seat = self.seat_of(member).ok_or_else(|| violation("game not started"))?;
        let state = self.state.as_mut().ok_or_else(|| violation("game not started"))?;
        let phase = state.phase();
        let round = state.round_number();
        let engine = |e: EngineError| (ErrorCode::from(&e), e.to_string());
        let record = match message {
            ClientMessage::JoinLobby { .. } => unreachable!(),
            ClientMessage::SubmitPhrase { card, phrase } => {
                if phase != Phase::AwaitStoryteller || seat != state.storyteller() {
                    return Err(violation("not the storyteller's turn for this seat"));
                }
                let phrase = Phrase::parse(&phrase).map_err(|e| (ErrorCode::InvalidPhrase, e.to_string()))?;
                state.storyteller_submit(&card, phrase.clone()).map_err(engine)?;
                Record::Storyteller {
                    round,
                    player: seat,
                    card,
                    phrase,
                    explanation: None,
                    fallback: false,
                }
            }
            ClientMessage::SubmitCard { card } => {
                if phase != Phase::AwaitDecoys {
                    return Err(violation("not accepting decoys now"));
                }
                state.decoy_submit(seat, &card).map_err(|e| match e {
                    EngineError::StorytellerNotAllowed => violation("the storyteller does not play a decoy"),
                    e => engine(e),
                })?;
                Record::Decoy {
                    round,
                    player: seat,
                    card,
                    explanation: None,
                    fallback: false,
                }
            }
            ClientMessage::SubmitVote { card } => {
                if phase != Phase::AwaitVotes {
                    return Err(violation("not accepting votes now"));
                }
                state.vote_submit(seat, &card).map_err(|e| match e {
                    EngineError::StorytellerNotAllowed => violation("the storyteller does not vote"),
                    e => engine(e),
                })?;
                Record::Vote {
                    round,
                    player: seat,
                    card,
                    explanation: None,
                    fallback: false,
                }
            }
        };
        self.transcript.as_mut().expect("started").push(record);
        Ok(())
    }

    fn agent_decide(&mut self, seat: usize) -> Option<AgentDecision> {
        let state = self.state.as_ref().expect("started");
        let round = state.round_number();
        let phase = state.phase();
        if self.forced.remove(&(seat, round, phase_code(phase))) {
            self.log.push(Inbound::AgentFallback { seat, round, phase });
            return None;
        }
        let agent = self.agents[seat].as_mut().expect("agent seat");
        let view = SeatView::from_state(state, seat);
        let started = Instant::now();
        let proposed = match phase {
            Phase::AwaitStoryteller => agent.storytell(&view),
            Phase::AwaitDecoys => agent.decoy(&view, state.round().phrase.as_ref().expect("phrase set")),
            Phase::AwaitVotes => {
                let table: Vec<Card> = state.table_cards().into_iter().cloned().collect();
                let own = state.round().submission_id(seat).expect("submitted");
                agent.vote(&view, &table, own, state.round().phrase.as_ref().expect("phrase set"))
            }
            Phase::RoundScored | Phase::GameOver => return None,
        };
        let deadline = Duration::from_millis(self.config().agent_timeout_ms);
        if !self.replaying && started.elapsed() > deadline {
            tracing::warn!(game = %self.setup.game_id, seat, round, "agent missed its deadline");
            self.log.push(Inbound::AgentFallback { seat, round, phase });
            return None;
        }
        proposed.ok()
    }

    fn agent_act(&mut self, seat: usize) {
        let proposed = self.agent_decide(seat);
        let state = self.state.as_mut().expect("started");
        let round = state.round_number();
        match apply_decision(state, seat, proposed, &self.least_phrase) {
            Ok(record) => {
                if let (Some((_, action)), Some((_, Some(explanation)))) = (record.played(), record.action()) {
                    self.explanations.push(ExplanationRecord {
                        seat,
                        round,
                        action,
                        explanation: explanation.clone(),
                    });
                }
                self.transcript.as_mut().expect("started").push(record);
            }
            Err(e) => tracing::error!(game = %self.setup.game_id, seat, "agent move failed: {e}"),
        }
    }

    fn push_views(&mut self, out: &mut Vec<Outbound>) {
        let Some(state) = &self.state else { return };
        let key = (state.round_number(), state.phase());
        if self.epoch_key != Some(key) {
            self.epoch_key = Some(key);
            self.epoch += 1;
        }
        for m in self.humans() {
            let state = self.state.as_ref().expect("started");
            let seat = self.members[m].seat.expect("seated");
            let view = project_state_for_player(state, seat).expect("seat in range");
            if self.members[m].last_view.as_ref() != Some(&view) {
                self.members[m].last_view = Some(view.clone());
                self.send(m, ServerMessage::StateUpdate(view), out);
            }
        }
    }

    fn broadcast(&mut self, message: ServerMessage, out: &mut Vec<Outbound>) {
        for m in self.humans() {
            self.send(m, message.clone(), out);
        }
    }

    /// Runs agent seats and round bookkeeping until a human must act or the
    /// game ends.
    fn drive(&mut self, out: &mut Vec<Outbound>) {
        loop {
            self.push_views(out);
            let Some(state) = self.state.as_mut() else { return };
            match state.phase() {
                Phase::AwaitStoryteller | Phase::AwaitDecoys | Phase::AwaitVotes => {
                    let agents: Vec<usize> = self
                        .pending_seats()
                        .into_iter()
                        .filter(|&s| self.is_agent_seat(s))
                        .collect();
                    if agents.is_empty() {
                        return;
                    }
                    for seat in agents {
                        self.agent_act(seat);
                        self.push_views(out);
                    }
                }
                Phase::RoundScored => {
                    let round = state.round_number();
                    let score = state.last_score().expect("scored").clone();
                    let played = state.round().clone();
                    if let Err(e) = state.advance_round() {
                        tracing::error!(game = %self.setup.game_id, "advance failed: {e}");
                        return;
                    }
                    let result = RoundResult {
                        round,
                        storyteller: score.storyteller,
                        phrase: played.phrase.expect("phrase set"),
                        table: played.table,
                        votes: played.votes,
                        points: score.points.clone(),
                        scores: state.scores().to_vec(),
                    };
                    self.transcript
                        .as_mut()
                        .expect("started")
                        .push(Record::Advance { round, score });
                    self.round_results.push(result.clone());
                    self.broadcast(ServerMessage::RoundResult(result), out);
                }
                Phase::GameOver => {
                    if !self.finished {
                        self.finish(out);
                    }
                    return;
                }
            }
        }
    }

    fn finish(&mut self, out: &mut Vec<Outbound>) {
        self.finished = true;
        let state = self.state.as_ref().expect("started");
        let scores = state.scores().to_vec();
        let winners = state.winners().to_vec();
        self.transcript.as_mut().expect("started").push(Record::End {
            scores: scores.clone(),
            winners: winners.clone(),
        });
        let agent_seats: Vec<usize> = (0..self.seats.len()).filter(|&s| self.is_agent_seat(s)).collect();
        for e in self.explanations.clone() {
            self.broadcast(
                ServerMessage::Explanation {
                    seat: e.seat,
                    round: e.round,
                    action: e.action,
                    explanation: e.explanation,
                },
                out,
            );
        }
        self.broadcast(
            ServerMessage::GameEnd {
                scores,
                winners,
                agent_seats,
            },
            out,
        );
    }
}

/// Parses the output of [`Session::message_log_jsonl`].
pub fn parse_message_log(text: &str) -> Result<(SessionSetup, Vec<Inbound>), serde_json::Error> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let setup = serde_json::from_str(lines.next().unwrap_or(""))?;
    let events = lines.map(serde_json::from_str).collect::<Result<_, _>>()?;
    Ok((setup, events))
}

#[cfg(test)]
mod tests {
    use super::*;
    use dixit_core::agents::AgentKind;

    fn lexicon() -> Arc<CandidateLexicon> {
        Arc::new(CandidateLexicon::parse_jsonl("{\"tokens\":[\"sun\"]}\n{\"tokens\":[\"moon\",\"rise\"]}\n", 4).unwrap())
    }

    fn deck() -> Vec<Card> {
        (0..60)
            .map(|i| Card::new(format!("card-{i:02}")).with_tags(["sun", "moon", "rise"].iter().take(1 + i % 3).copied()))
            .collect()
    }

    fn random_spec() -> AgentSpec {
        AgentSpec {
            kind: AgentKind::Random,
            ..AgentSpec::default()
        }
    }

    fn session() -> Session {
        Session::new(
            "g1",
            LobbyConfig {
                seed: Some(5),
                target_score: 10,
                ..LobbyConfig::default()
            },
            deck(),
            lexicon(),
        )
    }

    #[test]
    fn three_seats_cannot_start() {
        let mut s = session();
        s.join("a").unwrap();
        s.seat_agent(random_spec()).unwrap();
        s.seat_agent(random_spec()).unwrap();
        assert_eq!(s.start().unwrap_err(), SessionError::SeatCountInvalid(3));
        assert_eq!(s.start().unwrap_err().code(), ErrorCode::SeatCountInvalid);
    }

    #[test]
    fn agent_seat_limit() {
        let mut s = Session::new(
            "g",
            LobbyConfig {
                max_agent_seats: 1,
                ..LobbyConfig::default()
            },
            deck(),
            lexicon(),
        );
        s.seat_agent(random_spec()).unwrap();
        assert_eq!(s.seat_agent(random_spec()).unwrap_err(), SessionError::AgentSeatLimit(1));
    }

    #[test]
    fn six_humans_is_a_game() {
        let mut s = session();
        for i in 0..6 {
            s.join(format!("p{i}")).unwrap();
        }
        assert!(s.join("p6").is_err());
        s.start().unwrap();
        assert!(s.awaiting_human());
    }

    #[test]
    fn messages_before_start_are_violations() {
        let mut s = session();
        let (m, _, _) = s.join("a").unwrap();
        let out = s.handle_message(m, ClientMessage::SubmitCard { card: "card-00".into() });
        assert!(matches!(
            out[0].1.message,
            ServerMessage::Error {
                code: ErrorCode::ProtocolViolation,
                ..
            }
        ));
    }

    #[test]
    fn token_only_reaches_the_joiner() {
        let mut s = session();
        let (a, ta, _) = s.join("a").unwrap();
        let (b, tb, out) = s.join("b").unwrap();
        assert_eq!(s.member_for_token(&ta), Some(a));
        assert_eq!(s.member_for_token(&tb), Some(b));
        for (to, env) in out {
            if let ServerMessage::LobbyState { token, .. } = env.message {
                assert_eq!(token.is_some(), to == b);
            }
        }
    }

    #[test]
    fn expire_plays_fallback_and_is_scoped_by_epoch() {
        let mut s = session();
        let (h, _, _) = s.join("a").unwrap();
        for _ in 0..3 {
            s.seat_agent(random_spec()).unwrap();
        }
        s.start().unwrap();
        let mut guard = 0;
        while !s.is_over() {
            let stale = s.epoch().wrapping_sub(1);
            assert!(s.expire_pending(stale).is_empty());
            let out = s.expire_pending(s.epoch());
            assert!(out.iter().any(|(m, e)| *m == h
                && matches!(
                    e.message,
                    ServerMessage::Error {
                        code: ErrorCode::Timeout,
                        ..
                    }
                )));
            guard += 1;
            assert!(guard < 500);
        }
        let transcript = s.transcript().unwrap();
        transcript.replay().unwrap();
        let seat = s.seat_of(h).unwrap();
        assert!(transcript
            .records
            .iter()
            .filter_map(|r| match r {
                Record::Storyteller { player, fallback, .. }
                | Record::Decoy { player, fallback, .. }
                | Record::Vote { player, fallback, .. } => Some((*player, *fallback)),
                _ => None,
            })
            .all(|(p, fallback)| fallback == (p == seat)));
    }
}
