//! HTTP lobby endpoints and the per-player websocket.
//!
//! Each game lives behind one mutex, which serializes every mutation of its
//! session. Connections never receive pushed envelopes directly: they are
//! woken by a change counter and pull `messages_since(cursor)`, so a client
//! that reconnects with its last cursor resumes without gaps.

use std::collections::HashMap;
use std::fs;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use dixit_core::agents::{AgentSpec, CandidateLexicon};
use dixit_core::{Card, Deck};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tokio::runtime::Handle;
use tokio::sync::watch;
use tower_http::services::ServeDir;

use crate::config::ServerConfig;
use crate::protocol::{ClientEnvelope, ClientMessage, Envelope, ErrorCode, ServerMessage};
use crate::session::{LobbyConfig, MemberId, Session, SessionError};
use crate::ServerError;

pub struct Game {
    session: Mutex<Session>,
    changed: watch::Sender<u64>,
    scheduled: Mutex<u64>,
}

impl Game {
    fn new(session: Session) -> Self {
        Game {
            session: Mutex::new(session),
            changed: watch::Sender::new(0),
            scheduled: Mutex::new(0),
        }
    }

    pub fn session(&self) -> std::sync::MutexGuard<'_, Session> {
        self.session.lock().expect("session lock")
    }
}

pub struct AppState {
    pub config: ServerConfig,
    deck: Vec<Card>,
    lexicon: Arc<CandidateLexicon>,
    games: Mutex<HashMap<String, Arc<Game>>>,
}

/// Body of `POST /api/games`. Everything else comes from the server config.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CreateGame {
    #[serde(default)]
    pub context: Option<String>,
    #[serde(default)]
    pub auto_start: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameSummary {
    pub game_id: String,
    pub joined: usize,
    pub started: bool,
    pub over: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
}

impl AppState {
    pub fn new(config: ServerConfig, deck: Vec<Card>, lexicon: CandidateLexicon) -> Arc<Self> {
        Arc::new(AppState {
            config,
            deck,
            lexicon: Arc::new(lexicon),
            games: Mutex::new(HashMap::new()),
        })
    }

    pub fn load(config: ServerConfig) -> Result<Arc<Self>, ServerError> {
        let deck = Deck::load(&config.deck)?.into_cards();
        let lexicon = CandidateLexicon::load(&config.lexicon, config.lobby.phrase_limit)?;
        Ok(AppState::new(config, deck, lexicon))
    }

    pub fn create_game(&self, req: CreateGame) -> String {
        let id = format!("{:016x}", rand::random::<u64>());
        let config = LobbyConfig {
            context: req.context,
            auto_start: req.auto_start,
            seed: req.seed,
            ..self.config.lobby.clone()
        };
        let session = Session::new(id.clone(), config, self.deck.clone(), Arc::clone(&self.lexicon));
        self.games
            .lock()
            .expect("games lock")
            .insert(id.clone(), Arc::new(Game::new(session)));
        id
    }

    pub fn game(&self, id: &str) -> Option<Arc<Game>> {
        self.games.lock().expect("games lock").get(id).cloned()
    }
}

/// Runs `f` against the session, then wakes connections, arms the human
/// move deadline and persists a finished game.
fn with_session<T>(app: &Arc<AppState>, game: &Arc<Game>, rt: &Handle, f: impl FnOnce(&mut Session) -> T) -> T {
    let mut session = game.session();
    let was_over = session.is_over();
    let result = f(&mut session);
    game.changed.send_modify(|v| *v += 1);
    if session.started() && !session.is_over() && session.awaiting_human() {
        arm_deadline(app, game, rt, session.epoch(), session.config().move_timeout_ms);
    }
    if session.is_over() && !was_over {
        persist(app, &session);
    }
    result
}

fn arm_deadline(app: &Arc<AppState>, game: &Arc<Game>, rt: &Handle, epoch: u64, timeout_ms: u64) {
    let mut scheduled = game.scheduled.lock().expect("deadline lock");
    if *scheduled == epoch {
        return;
    }
    *scheduled = epoch;
    let (app, game, handle) = (Arc::clone(app), Arc::clone(game), rt.clone());
    rt.spawn(async move {
        tokio::time::sleep(Duration::from_millis(timeout_ms)).await;
        let rt = handle.clone();
        let _ = tokio::task::spawn_blocking(move || with_session(&app, &game, &rt, |s| s.expire_pending(epoch))).await;
    });
}

fn persist(app: &AppState, session: &Session) {
    let Some(dir) = &app.config.transcript_dir else { return };
    let Some(transcript) = session.transcript() else { return };
    let write = || -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("{}.jsonl", session.game_id())), transcript.to_jsonl())?;
        fs::write(dir.join(format!("{}.log.jsonl", session.game_id())), session.message_log_jsonl())
    };
    if let Err(e) = write() {
        tracing::error!(game = session.game_id(), "failed to persist game: {e}");
    }
}

async fn blocking<T: Send + 'static>(
    app: &Arc<AppState>,
    game: &Arc<Game>,
    f: impl FnOnce(&mut Session) -> T + Send + 'static,
) -> T {
    let (app, game, rt) = (Arc::clone(app), Arc::clone(game), Handle::current());
    tokio::task::spawn_blocking(move || with_session(&app, &game, &rt, f))
        .await
        .expect("session task panicked")
}

fn api_error(status: StatusCode, code: ErrorCode, message: impl Into<String>) -> Response {
    (
        status,
        Json(ApiError {
            code,
            message: message.into(),
        }),
    )
        .into_response()
}

fn session_error(e: SessionError) -> Response {
    api_error(StatusCode::CONFLICT, e.code(), e.to_string())
}

fn unknown_game() -> Response {
    api_error(StatusCode::NOT_FOUND, ErrorCode::ProtocolViolation, "unknown game")
}

pub fn router(app: Arc<AppState>) -> Router {
    let static_dir = app.config.static_dir.clone();
    let router = Router::new()
        .route("/api/games", post(create_game))
        .route("/api/games/{id}", get(game_summary))
        .route("/api/games/{id}/agents", post(seat_agent))
        .route("/api/games/{id}/start", post(start_game))
        .route("/ws/{id}", get(ws_upgrade))
        .with_state(app);
    match static_dir {
        Some(dir) => router.fallback_service(ServeDir::new(dir)),
        None => router,
    }
}

/// An empty body means "use the defaults".
#[allow(clippy::result_large_err)]
fn optional_body<T: DeserializeOwned>(body: &Bytes) -> Result<Option<T>, Response> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(None);
    }
    serde_json::from_slice(body)
        .map(Some)
        .map_err(|e| api_error(StatusCode::BAD_REQUEST, ErrorCode::ProtocolViolation, e.to_string()))
}

async fn create_game(State(app): State<Arc<AppState>>, body: Bytes) -> Response {
    let req = match optional_body::<CreateGame>(&body) {
        Ok(req) => req.unwrap_or_default(),
        Err(resp) => return resp,
    };
    let id = app.create_game(req);
    (StatusCode::CREATED, Json(serde_json::json!({ "game_id": id }))).into_response()
}

async fn game_summary(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    let Some(game) = app.game(&id) else { return unknown_game() };
    let s = game.session();
    Json(GameSummary {
        game_id: id,
        joined: s.member_count(),
        started: s.started(),
        over: s.is_over(),
    })
    .into_response()
}

async fn seat_agent(State(app): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> Response {
    let Some(game) = app.game(&id) else { return unknown_game() };
    let spec = match optional_body::<AgentSpec>(&body) {
        Ok(spec) => spec.unwrap_or_else(|| app.config.agent.clone()),
        Err(resp) => return resp,
    };
    match blocking(&app, &game, move |s| s.seat_agent(spec)).await {
        Ok(_) => StatusCode::NO_CONTENT.into_response(),
        Err(e) => session_error(e),
    }
}

async fn start_game(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    let Some(game) = app.game(&id) else { return unknown_game() };
    match blocking(&app, &game, |s| s.start()).await {
        Ok(_) => StatusCode::NO_CONTENT.into_response(),
        Err(e) => session_error(e),
    }
}

#[derive(Debug, Deserialize)]
struct WsQuery {
    token: Option<String>,
    #[serde(default)]
    cursor: u64,
}

async fn ws_upgrade(
    ws: WebSocketUpgrade,
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(query): Query<WsQuery>,
) -> Response {
    let Some(game) = app.game(&id) else { return unknown_game() };
    ws.on_upgrade(move |socket| connection(app, game, socket, query))
}

/// Envelope for errors to a connection that has no member yet. `seq` 0 is
/// outside every member's sequence.
fn unsequenced(code: ErrorCode, message: impl Into<String>) -> Message {
    Message::Text(
        Envelope {
            seq: 0,
            message: ServerMessage::error(code, message),
        }
        .to_json()
        .into(),
    )
}

async fn await_join(app: &Arc<AppState>, game: &Arc<Game>, socket: &mut WebSocket) -> Option<MemberId> {
    loop {
        let text = match socket.recv().await? {
            Ok(Message::Text(text)) => text,
            Ok(Message::Close(_)) | Err(_) => return None,
            Ok(_) => continue,
        };
        match ClientEnvelope::parse(&text) {
            Ok(ClientEnvelope {
                message: ClientMessage::JoinLobby { name },
                ..
            }) => match blocking(app, game, move |s| s.join(name)).await {
                Ok((member, _, _)) => return Some(member),
                Err(e) => {
                    let _ = socket.send(unsequenced(e.code(), e.to_string())).await;
                    return None;
                }
            },
            Ok(_) => {
                let _ = socket
                    .send(unsequenced(ErrorCode::ProtocolViolation, "join the lobby first"))
                    .await;
            }
            Err(e) => {
                let _ = socket.send(unsequenced(ErrorCode::ProtocolViolation, e.to_string())).await;
            }
        }
    }
}

async fn connection(app: Arc<AppState>, game: Arc<Game>, mut socket: WebSocket, query: WsQuery) {
    let member = match &query.token {
        Some(token) => {
            let found = game.session().member_for_token(token);
            if found.is_none() {
                let _ = socket.send(unsequenced(ErrorCode::ProtocolViolation, "unknown token")).await;
                return;
            }
            found
        }
        None => await_join(&app, &game, &mut socket).await,
    };
    let Some(member) = member else { return };
    let mut cursor = query.cursor;
    let mut changed = game.changed.subscribe();

    loop {
        let pending: Vec<Envelope> = game.session().messages_since(member, cursor).to_vec();
        for env in pending {
            cursor = env.seq;
            if socket.send(Message::Text(env.to_json().into())).await.is_err() {
                return;
            }
        }
        tokio::select! {
            woke = changed.changed() => {
                if woke.is_err() {
                    return;
                }
            }
            frame = socket.recv() => match frame {
                Some(Ok(Message::Text(text))) => match ClientEnvelope::parse(&text) {
                    Ok(env) => {
                        blocking(&app, &game, move |s| s.handle_message(member, env.message)).await;
                    }
                    Err(e) => {
                        let reason = e.to_string();
                        blocking(&app, &game, move |s| s.reject(member, ErrorCode::ProtocolViolation, reason)).await;
                    }
                },
                Some(Ok(Message::Binary(_))) => {
                    blocking(&app, &game, move |s| s.reject(member, ErrorCode::ProtocolViolation, "text frames only")).await;
                }
                Some(Ok(Message::Close(_))) | Some(Err(_)) | None => return,
                Some(Ok(_)) => {}
            }
        }
    }
}

/// Binds `config.bind` and serves until the process ends.
pub async fn serve(config: ServerConfig) -> Result<(), ServerError> {
    let bind = config.bind.clone();
    let app = AppState::load(config)?;
    let listener = tokio::net::TcpListener::bind(&bind)
        .await
        .map_err(|source| ServerError::Io { path: bind.clone(), source })?;
    tracing::info!("listening on {}", bind);
    axum::serve(listener, router(app))
        .await
        .map_err(|source| ServerError::Io { path: bind, source })
}
