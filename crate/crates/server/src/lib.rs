//! Live Dixit tables for humans and agents.
//!
//! [`session::Session`] is the transport-free game host: it owns the engine
//! state, runs agent seats and keeps each member's outbound history.
//! [`transport`] puts sessions behind HTTP lobby endpoints and a websocket
//! carrying the envelopes defined in [`protocol`].

pub mod config;
pub mod protocol;
pub mod session;
pub mod transport;
pub mod view;

pub use config::ServerConfig;
pub use protocol::{ClientEnvelope, ClientMessage, Envelope, ErrorCode, RoundResult, ServerMessage};
pub use session::{Inbound, LobbyConfig, MemberId, Outbound, Session, SessionError, SessionSetup};
pub use view::{project_state_for_player, PlayerView, UnknownPlayer};

use dixit_core::agents::LexiconError;
use dixit_core::DeckError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("server config {path}: {source}")]
    Config {
        path: String,
        #[source]
        source: toml::de::Error,
    },
    #[error(transparent)]
    Deck(#[from] DeckError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
}
