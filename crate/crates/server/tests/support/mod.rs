//! Scripted humans and leak checks shared by the server tests.

use std::collections::BTreeSet;
use std::sync::Arc;

use dixit_core::agents::{AgentKind, AgentSpec, CandidateLexicon, ModelKind};
use dixit_core::{Card, Deck, Phase};
use dixit_server::{ClientMessage, LobbyConfig, MemberId, Outbound, PlayerView, ServerMessage, Session};
use rand::Rng;

pub fn data(file: &str) -> String {
    format!("{}/../../data/{file}", env!("CARGO_MANIFEST_DIR"))
}

pub fn deck() -> Vec<Card> {
    Deck::load(data("deck.jsonl")).unwrap().into_cards()
}

pub fn lexicon() -> Arc<CandidateLexicon> {
    Arc::new(CandidateLexicon::load(data("lexicon.jsonl"), 4).unwrap())
}

pub fn random_agent() -> AgentSpec {
    AgentSpec {
        kind: AgentKind::Random,
        ..AgentSpec::default()
    }
}

pub fn cheap_dixit(model: ModelKind) -> AgentSpec {
    let mut spec = AgentSpec {
        model,
        ..AgentSpec::default()
    };
    spec.params.samples = 16;
    spec.params.candidate_limit = 2;
    spec
}

fn pick(cards: &[&Card], rng: &mut impl Rng) -> dixit_core::CardId {
    cards[rng.random_range(0..cards.len())].id.clone()
}

/// A legal move for the seat behind `view`, if it owes one.
pub fn legal_move(view: &PlayerView, rng: &mut impl Rng) -> Option<ClientMessage> {
    let hand: Vec<&Card> = view.hand.iter().collect();
    let words = ["moon", "door", "rabbit", "storm", "lonely path", "quiet fear grows"];
    match view.phase {
        Phase::AwaitStoryteller if view.seat == view.storyteller => Some(ClientMessage::SubmitPhrase {
            card: pick(&hand, rng),
            phrase: words[rng.random_range(0..words.len())].to_string(),
        }),
        Phase::AwaitDecoys if view.seat != view.storyteller && view.own_submission.is_none() => {
            Some(ClientMessage::SubmitCard { card: pick(&hand, rng) })
        }
        Phase::AwaitVotes if view.seat != view.storyteller && view.own_vote.is_none() => {
            let options: Vec<&Card> = view
                .table
                .iter()
                .filter(|c| Some(&c.id) != view.own_submission.as_ref())
                .collect();
            Some(ClientMessage::SubmitVote { card: pick(&options, rng) })
        }
        _ => None,
    }
}

/// An illegal move a careless or hostile client might send.
pub fn bad_move(view: &PlayerView, rng: &mut impl Rng) -> ClientMessage {
    match rng.random_range(0..4) {
        0 => ClientMessage::SubmitVote {
            card: view
                .own_submission
                .clone()
                .unwrap_or_else(|| view.hand[0].id.clone()),
        },
        1 => ClientMessage::SubmitPhrase {
            card: view.hand[0].id.clone(),
            phrase: "one two three four five".into(),
        },
        2 => ClientMessage::SubmitCard {
            card: "card-99".into(),
        },
        _ => ClientMessage::JoinLobby { name: "again".into() },
    }
}

/// Latest view delivered to each member.
#[derive(Default)]
pub struct Views(pub Vec<Option<PlayerView>>);

impl Views {
    pub fn absorb(&mut self, out: &[Outbound]) {
        for (m, env) in out {
            if let ServerMessage::StateUpdate(v) = &env.message {
                if self.0.len() <= *m {
                    self.0.resize(*m + 1, None);
                }
                self.0[*m] = Some(v.clone());
            }
        }
    }

    pub fn get(&self, m: MemberId) -> Option<&PlayerView> {
        self.0.get(m).and_then(Option::as_ref)
    }
}

/// Checks every outbound envelope against the current hands. Cards only
/// ever move hand -> table -> discard, so a card now in another hand was in
/// that hand (or the deck) when the envelope was built.
pub fn scan_for_leaks(session: &Session, out: &[Outbound]) -> Result<(), String> {
    let state = session.state().ok_or("no game")?;
    for (m, env) in out {
        let text = env.to_json();
        let Some(seat) = session.seat_of(*m) else { continue };
        if matches!(env.message, ServerMessage::Explanation { .. } | ServerMessage::GameEnd { .. }) {
            if !session.is_over() {
                return Err(format!("{:?} sent before game end", env.message));
            }
            continue;
        }
        let forbidden: BTreeSet<String> = (0..state.n_players())
            .filter(|&p| p != seat)
            .flat_map(|p| state.hand(p).iter().map(|c| format!("\"{}\"", c.id)))
            .collect();
        if let Some(id) = forbidden.iter().find(|id| text.contains(id.as_str())) {
            return Err(format!("member {m} (seat {seat}) saw {id} from another hand: {text}"));
        }
        if let ServerMessage::StateUpdate(view) = &env.message {
            if view.phase != Phase::RoundScored && (text.contains("\"votes\"") || text.contains("\"owner\"")) {
                return Err(format!("votes or owners visible in {:?}: {text}", view.phase));
            }
            if view.seat != seat {
                return Err(format!("member {m} got the view for seat {}", view.seat));
            }
        }
    }
    Ok(())
}

pub struct SimOutcome {
    pub session: Session,
    pub envelopes: usize,
}

/// Plays one session to the end with `humans` scripted humans and the given
/// agents, checking every outbound batch with [`scan_for_leaks`].
pub fn simulate_session(seed: u64, humans: usize, agents: Vec<AgentSpec>, mischief: f64) -> Result<SimOutcome, String> {
    let mut rng = dixit_core::seed::stream(seed, &[0x7E57]);
    let mut s = Session::new(
        format!("sim-{seed}"),
        LobbyConfig {
            seed: Some(seed),
            ..LobbyConfig::default()
        },
        deck(),
        lexicon(),
    );
    let mut views = Views::default();
    let mut envelopes = 0;
    let mut check = |s: &Session, out: Vec<Outbound>, views: &mut Views| -> Result<(), String> {
        envelopes += out.len();
        views.absorb(&out);
        if s.started() {
            scan_for_leaks(s, &out)?;
        }
        Ok(())
    };
    let mut members = Vec::new();
    for h in 0..humans {
        let (m, _, out) = s.join(format!("human-{h}")).map_err(|e| e.to_string())?;
        members.push(m);
        check(&s, out, &mut views)?;
    }
    for spec in agents {
        let (_, out) = s.seat_agent(spec).map_err(|e| e.to_string())?;
        check(&s, out, &mut views)?;
    }
    let out = s.start().map_err(|e| e.to_string())?;
    check(&s, out, &mut views)?;

    let mut steps = 0;
    while !s.is_over() {
        steps += 1;
        if steps > 10_000 {
            return Err("session did not finish".into());
        }
        if rng.random_bool(mischief / 4.0) {
            let out = s.expire_pending(s.epoch());
            check(&s, out, &mut views)?;
            continue;
        }
        let mut moved = false;
        for &m in &members {
            let Some(view) = views.get(m).cloned() else { continue };
            let Some(msg) = legal_move(&view, &mut rng) else { continue };
            let msg = if rng.random_bool(mischief) { bad_move(&view, &mut rng) } else { msg };
            let out = s.handle_message(m, msg);
            check(&s, out, &mut views)?;
            moved = true;
            break;
        }
        if !moved {
            let out = s.expire_pending(s.epoch());
            check(&s, out, &mut views)?;
        }
    }
    Ok(SimOutcome { session: s, envelopes })
}
