//! Wire protocol. See `PROTOCOL.md` in this crate for the normative schema.
//!
//! Every frame is one JSON envelope: `{"seq": N, "type": "...", "payload": {...}}`.
//! Clients may only send the four action types in [`ClientMessage`]; there is
//! deliberately no chat or free-text channel.

use dixit_core::agents::{Action, Explanation};
use dixit_core::engine::TableEntry;
use dixit_core::{CardId, EngineError, Phrase};
use serde::{Deserialize, Serialize};

use crate::view::PlayerView;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload")]
pub enum ClientMessage {
    JoinLobby { name: String },
    SubmitPhrase { card: CardId, phrase: String },
    SubmitCard { card: CardId },
    SubmitVote { card: CardId },
}

/// Client frames carry a sequence number too, but the server only checks the
/// type and payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientEnvelope {
    #[serde(default)]
    pub seq: u64,
    #[serde(flatten)]
    pub message: ClientMessage,
}

impl ClientEnvelope {
    /// Parses a client frame; anything outside the four client types fails.
    pub fn parse(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorCode {
    ProtocolViolation,
    Timeout,
    OwnCardVote,
    PhraseTooLong,
    InvalidPhrase,
    CardNotInHand,
    UnknownCard,
    AlreadySubmitted,
    AlreadyVoted,
    SeatCountInvalid,
    AgentSeatLimit,
}

impl From<&EngineError> for ErrorCode {
    fn from(e: &EngineError) -> Self {
        match e {
            EngineError::OwnCardVote => ErrorCode::OwnCardVote,
            EngineError::PhraseTooLong { .. } => ErrorCode::PhraseTooLong,
            EngineError::CardNotInHand(_) => ErrorCode::CardNotInHand,
            EngineError::UnknownCard(_) => ErrorCode::UnknownCard,
            EngineError::AlreadySubmitted(_) => ErrorCode::AlreadySubmitted,
            EngineError::AlreadyVoted(_) => ErrorCode::AlreadyVoted,
            _ => ErrorCode::ProtocolViolation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundResult {
    pub round: u32,
    pub storyteller: usize,
    pub phrase: Phrase,
    /// Table in reveal order with owners disclosed.
    pub table: Vec<TableEntry>,
    /// Indexed by seat; `None` for the storyteller.
    pub votes: Vec<Option<CardId>>,
    pub points: Vec<u32>,
    /// Scoreboard including this round.
    pub scores: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload")]
pub enum ServerMessage {
    LobbyState {
        game_id: String,
        joined: usize,
        capacity: usize,
        started: bool,
        /// Present only in the copy sent to the participant who just joined.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        token: Option<String>,
        /// Audience/language/culture tag of the game, for information.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        context: Option<String>,
    },
    GameStart {
        seat: usize,
        n_players: usize,
        phrase_limit: usize,
        target_score: u32,
    },
    StateUpdate(PlayerView),
    RoundResult(RoundResult),
    Explanation {
        seat: usize,
        round: u32,
        action: Action,
        explanation: Explanation,
    },
    GameEnd {
        scores: Vec<u32>,
        winners: Vec<usize>,
        agent_seats: Vec<usize>,
    },
    Error {
        code: ErrorCode,
        message: String,
    },
}

impl ServerMessage {
    pub fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        ServerMessage::Error {
            code,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub seq: u64,
    #[serde(flatten)]
    pub message: ServerMessage,
}

impl Envelope {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("envelope serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn client_envelope_shape() {
        let env = ClientEnvelope::parse(r#"{"seq":3,"type":"SubmitVote","payload":{"card":"card-07"}}"#).unwrap();
        assert_eq!(
            env.message,
            ClientMessage::SubmitVote {
                card: "card-07".into()
            }
        );
        let round_trip = serde_json::to_value(&env).unwrap();
        assert_eq!(round_trip["type"], "SubmitVote");
        assert_eq!(round_trip["payload"]["card"], "card-07");
    }

    #[test]
    fn no_other_client_types_parse() {
        for bad in [
            r#"{"seq":1,"type":"Chat","payload":{"text":"hi"}}"#,
            r#"{"seq":1,"type":"StateUpdate","payload":{}}"#,
            r#"{"seq":1,"type":"GameEnd","payload":{"scores":[],"winners":[],"agent_seats":[]}}"#,
            r#"{"seq":1}"#,
        ] {
            assert!(ClientEnvelope::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn server_envelope_shape() {
        let env = Envelope {
            seq: 9,
            message: ServerMessage::error(ErrorCode::OwnCardVote, "no"),
        };
        let v: serde_json::Value = serde_json::from_str(&env.to_json()).unwrap();
        assert_eq!(v["seq"], 9);
        assert_eq!(v["type"], "Error");
        assert_eq!(v["payload"]["code"], "OwnCardVote");
    }
}
