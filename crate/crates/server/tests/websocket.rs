#[allow(dead_code)]
mod support;

use std::time::Duration;

use dixit_core::transcript::Transcript;
use dixit_core::Phase;
use dixit_server::transport::{router, AppState};
use dixit_server::{ClientEnvelope, ClientMessage, Envelope, ErrorCode, LobbyConfig, ServerConfig, ServerMessage};
use futures::{SinkExt, StreamExt};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;

async fn http(addr: &str, method: &str, path: &str, body: &str) -> (u16, String) {
    let mut stream = TcpStream::connect(addr).await.unwrap();
    let req = format!(
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    stream.write_all(req.as_bytes()).await.unwrap();
    let mut raw = String::new();
    stream.read_to_string(&mut raw).await.unwrap();
    let status = raw[9..12].parse().unwrap();
    let body = raw.split_once("\r\n\r\n").map(|(_, b)| b.to_string()).unwrap_or_default();
    (status, body)
}

async fn spawn_server(transcripts: &std::path::Path) -> String {
    let config = ServerConfig {
        bind: "127.0.0.1:0".into(),
        deck: support::data("deck.jsonl").into(),
        lexicon: support::data("lexicon.jsonl").into(),
        static_dir: None,
        transcript_dir: Some(transcripts.to_path_buf()),
        lobby: LobbyConfig {
            move_timeout_ms: 3_000,
            ..LobbyConfig::default()
        },
        agent: support::random_agent(),
    };
    let app = AppState::load(config).unwrap();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    tokio::spawn(async move { axum::serve(listener, router(app)).await.unwrap() });
    addr
}

fn frame(message: ClientMessage) -> Message {
    Message::Text(serde_json::to_string(&ClientEnvelope { seq: 0, message }).unwrap().into())
}

fn parse(msg: Message) -> Option<Envelope> {
    match msg {
        Message::Text(t) => Some(serde_json::from_str(&t).unwrap()),
        _ => None,
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn full_game_over_websocket() {
    let dir = tempfile::tempdir().unwrap();
    let addr = spawn_server(dir.path()).await;

    let (status, body) = http(&addr, "POST", "/api/games", r#"{"seed":7}"#).await;
    assert_eq!(status, 201);
    let id = serde_json::from_str::<serde_json::Value>(&body).unwrap()["game_id"]
        .as_str()
        .unwrap()
        .to_string();
    assert_eq!(http(&addr, "POST", "/api/games/nope/start", "").await.0, 404);
    for _ in 0..2 {
        assert_eq!(http(&addr, "POST", &format!("/api/games/{id}/agents"), "").await.0, 204);
    }
    let (status, body) = http(&addr, "POST", &format!("/api/games/{id}/start"), "").await;
    assert_eq!(status, 409);
    assert!(body.contains("SeatCountInvalid"));
    assert_eq!(
        http(&addr, "POST", &format!("/api/games/{id}/agents"), r#"{"kind":"dixit","samples":16,"candidate_limit":2}"#)
            .await
            .0,
        204
    );

    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws/{id}")).await.unwrap();
    ws.send(frame(ClientMessage::SubmitCard { card: "card-00".into() })).await.unwrap();
    let early = parse(ws.next().await.unwrap().unwrap()).unwrap();
    assert_eq!(early.seq, 0);
    assert!(matches!(early.message, ServerMessage::Error { code: ErrorCode::ProtocolViolation, .. }));

    ws.send(frame(ClientMessage::JoinLobby { name: "ada".into() })).await.unwrap();
    let first = parse(ws.next().await.unwrap().unwrap()).unwrap();
    let token = match first.message {
        ServerMessage::LobbyState { token: Some(t), joined: 4, .. } => t,
        other => panic!("unexpected {other:?}"),
    };
    assert_eq!(first.seq, 1);
    assert_eq!(http(&addr, "POST", &format!("/api/games/{id}/start"), "").await.0, 204);

    ws.send(Message::Text(r#"{"seq":1,"type":"Chat","payload":{"text":"hi"}}"#.into()))
        .await
        .unwrap();

    let mut rng = dixit_core::seed::stream(3, &[]);
    let mut last_seq = 1;
    let mut acted = None;
    let mut saw_violation = false;
    let mut reconnected = false;
    let mut end = None;
    while end.is_none() {
        let msg = tokio::time::timeout(Duration::from_secs(60), ws.next())
            .await
            .expect("server went quiet")
            .unwrap()
            .unwrap();
        let Some(env) = parse(msg) else { continue };
        assert_eq!(env.seq, last_seq + 1, "gap in sequence");
        last_seq = env.seq;
        match env.message {
            ServerMessage::StateUpdate(view) => {
                let key = (view.round, view.phase);
                if acted != Some(key) {
                    if let Some(m) = support::legal_move(&view, &mut rng) {
                        acted = Some(key);
                        ws.send(frame(m)).await.unwrap();
                    }
                }
                if !reconnected && view.round == 1 && view.phase == Phase::AwaitStoryteller {
                    reconnected = true;
                    ws.close(None).await.unwrap();
                    let url = format!("ws://{addr}/ws/{id}?token={token}&cursor={last_seq}");
                    ws = tokio_tungstenite::connect_async(url).await.unwrap().0;
                    acted = None;
                    let next = parse(ws.next().await.unwrap().unwrap()).unwrap();
                    assert_eq!(next.seq, last_seq + 1);
                    last_seq = next.seq;
                    if let ServerMessage::StateUpdate(v) = next.message {
                        if let Some(m) = support::legal_move(&v, &mut rng) {
                            acted = Some((v.round, v.phase));
                            ws.send(frame(m)).await.unwrap();
                        }
                    }
                }
            }
            ServerMessage::Error { code, .. } => saw_violation |= code == ErrorCode::ProtocolViolation,
            ServerMessage::GameEnd { scores, winners, agent_seats } => end = Some((scores, winners, agent_seats)),
            _ => {}
        }
    }
    assert!(saw_violation, "chat frame must be rejected");
    assert!(reconnected);
    let (scores, winners, agent_seats) = end.unwrap();
    assert_eq!(scores.len(), 4);
    assert!(!winners.is_empty());
    assert_eq!(agent_seats.len(), 3);

    let summary: serde_json::Value =
        serde_json::from_str(&http(&addr, "GET", &format!("/api/games/{id}"), "").await.1).unwrap();
    assert_eq!(summary["over"], true);
    let t = Transcript::load(dir.path().join(format!("{id}.jsonl"))).unwrap();
    assert_eq!(t.replay().unwrap().scores(), scores.as_slice());
    assert!(dir.path().join(format!("{id}.log.jsonl")).exists());
}

#[tokio::test]
async fn unknown_token_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let addr = spawn_server(dir.path()).await;
    let (_, body) = http(&addr, "POST", "/api/games", "").await;
    let id = serde_json::from_str::<serde_json::Value>(&body).unwrap()["game_id"]
        .as_str()
        .unwrap()
        .to_string();
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws/{id}?token=bogus")).await.unwrap();
    let env = parse(ws.next().await.unwrap().unwrap()).unwrap();
    assert!(matches!(env.message, ServerMessage::Error { code: ErrorCode::ProtocolViolation, .. }));
}
