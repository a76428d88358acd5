use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::HeaderMap;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use irsim_core::{GameEvent, TeamId, TurnOrders};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::{broadcast, Mutex, RwLock};

use crate::error::SessionError;
use crate::session::{Advance, CreateSession, FacilitatorOverride, Phase, Role, Session};

/// Server-side notifications fanned out to every connected seat of a session.
#[derive(Debug, Clone)]
pub enum Push {
    Ready(BTreeMap<TeamId, bool>),
    PhaseChanged,
    TurnResolved { turn: u32, events: Arc<Vec<GameEvent>> },
    Chat { from: String, to: Option<TeamId>, text: String },
}

pub struct SessionHandle {
    pub session: Mutex<Session>,
    push: broadcast::Sender<Push>,
}

#[derive(Clone, Default)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<String, Arc<SessionHandle>>>>,
    data_dir: Option<Arc<PathBuf>>,
}

impl AppState {
    pub fn new(data_dir: Option<PathBuf>) -> Self {
        Self {
            sessions: Arc::default(),
            data_dir: data_dir.map(Arc::new),
        }
    }

    pub async fn session(&self, id: &str) -> Result<Arc<SessionHandle>, SessionError> {
        self.sessions
            .read()
            .await
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::UnknownSession(id.to_owned()))
    }

    /// Resolves every session whose phase clock has run out.
    pub async fn expire_deadlines(&self) {
        let handles: Vec<_> = self.sessions.read().await.values().cloned().collect();
        let now = Instant::now();
        for handle in handles {
            let mut session = handle.session.lock().await;
            if session.deadline_passed(now) {
                if let Ok(step) = session.advance_on_deadline() {
                    drop(session);
                    handle.announce(step);
                }
            }
        }
    }
}

impl SessionHandle {
    fn notify(&self, push: Push) {
        let _ = self.push.send(push);
    }

    fn announce(&self, step: Advance) {
        if step.events.is_empty() {
            self.notify(Push::PhaseChanged);
        } else {
            self.notify(Push::TurnResolved {
                turn: step.turn,
                events: Arc::new(step.events),
            });
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/join", post(join))
        .route("/sessions/{id}/view", get(view))
        .route("/sessions/{id}/orders", post(submit_orders))
        .route("/sessions/{id}/advance", post(advance))
        .route("/sessions/{id}/override", post(facilitator_override))
        .route("/sessions/{id}/ws", get(push_channel))
        .with_state(state)
}

/// Background task enforcing optional per-phase deadlines.
pub fn spawn_deadline_ticker(state: AppState, every: Duration) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(every);
        loop {
            tick.tick().await;
            state.expire_deadlines().await;
        }
    })
}

#[derive(Debug, Default, Deserialize)]
pub struct TokenQuery {
    token: Option<String>,
}

fn seat_token(headers: &HeaderMap, query: &TokenQuery) -> Result<String, SessionError> {
    let header = headers
        .get(axum::http::header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .map(str::to_owned);
    header.or_else(|| query.token.clone()).ok_or(SessionError::NotYourSeat)
}

fn parse_body<T: serde::de::DeserializeOwned + Default>(body: &Bytes) -> Result<T, SessionError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| SessionError::BadRequest(e.to_string()))
}

fn parse_required<T: serde::de::DeserializeOwned>(body: &Bytes) -> Result<T, SessionError> {
    serde_json::from_slice(body).map_err(|e| SessionError::BadRequest(e.to_string()))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub session_id: String,
    pub facilitator_token: String,
    pub seed: u64,
    pub teams: Vec<TeamId>,
}

async fn create_session(State(app): State<AppState>, body: Bytes) -> Result<Json<Created>, SessionError> {
    let request: CreateSession = parse_body(&body)?;
    let data_dir = app.data_dir.clone();
    let (session, facilitator_token) = Session::create(request, data_dir.as_deref().map(|p| p.as_path()))?;
    let created = Created {
        session_id: session.id.clone(),
        facilitator_token,
        seed: session.seed(),
        teams: session.scenario().team_ids(),
    };
    let (push, _) = broadcast::channel(64);
    let handle = Arc::new(SessionHandle {
        session: Mutex::new(session),
        push,
    });
    app.sessions.write().await.insert(created.session_id.clone(), handle);
    Ok(Json(created))
}

#[derive(Debug, Deserialize)]
struct JoinRequest {
    team: TeamId,
}

async fn join(State(app): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Json<Value>, SessionError> {
    let request: JoinRequest = parse_required(&body)?;
    let handle = app.session(&id).await?;
    let mut session = handle.session.lock().await;
    let token = session.join(request.team.clone())?;
    let ready = session.ready();
    drop(session);
    handle.notify(Push::Ready(ready));
    Ok(Json(json!({ "token": token, "team": request.team })))
}

async fn view(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<TokenQuery>,
    headers: HeaderMap,
) -> Result<Response, SessionError> {
    let token = seat_token(&headers, &query)?;
    let handle = app.session(&id).await?;
    let session = handle.session.lock().await;
    Ok(Json(session.view(&token)?).into_response())
}

async fn submit_orders(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<TokenQuery>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Json<Value>, SessionError> {
    let token = seat_token(&headers, &query)?;
    let orders: TurnOrders = parse_required(&body)?;
    let handle = app.session(&id).await?;
    let mut session = handle.session.lock().await;
    let ready = session.submit(&token, orders)?;
    drop(session);
    handle.notify(Push::Ready(ready.clone()));
    Ok(Json(json!({ "accepted": true, "ready": ready })))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct AdvanceRequest {
    force: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AdvanceResponse {
    pub phase: Phase,
    pub turn: u32,
    pub events: Vec<GameEvent>,
    pub state_hash: String,
}

async fn advance(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<TokenQuery>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Json<AdvanceResponse>, SessionError> {
    let token = seat_token(&headers, &query)?;
    let request: AdvanceRequest = parse_body(&body)?;
    let handle = app.session(&id).await?;
    let mut session = handle.session.lock().await;
    let step = session.advance(&token, request.force)?;
    let response = AdvanceResponse {
        phase: step.phase,
        turn: step.turn,
        events: step.events.clone(),
        state_hash: session.state_hash(),
    };
    drop(session);
    handle.announce(step);
    Ok(Json(response))
}

async fn facilitator_override(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<TokenQuery>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Json<Value>, SessionError> {
    let token = seat_token(&headers, &query)?;
    let over: FacilitatorOverride = parse_required(&body)?;
    let handle = app.session(&id).await?;
    handle.session.lock().await.queue_override(&token, over.clone())?;
    Ok(Json(json!({ "queued": over })))
}

async fn push_channel(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<TokenQuery>,
    headers: HeaderMap,
    upgrade: WebSocketUpgrade,
) -> Result<Response, SessionError> {
    let token = seat_token(&headers, &query)?;
    let handle = app.session(&id).await?;
    let role = handle.session.lock().await.role(&token)?.clone();
    Ok(upgrade.on_upgrade(move |socket| seat_loop(socket, handle, role)))
}

fn frame(kind: &str, payload: Value) -> Message {
    let mut line = json!({ "type": kind, "payload": payload }).to_string();
    line.push('\n');
    Message::Text(line.into())
}

fn sender_name(role: &Role) -> String {
    match role {
        Role::Facilitator => "facilitator".to_owned(),
        Role::Team { team } => team.to_string(),
    }
}

fn chat_reaches(role: &Role, from: &str, to: Option<&TeamId>) -> bool {
    match role {
        Role::Facilitator => true,
        Role::Team { team } => to.is_none() || to == Some(team) || team.as_str() == from,
    }
}

#[derive(Debug, Deserialize)]
struct ClientMessage {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    payload: Value,
}

async fn current_view(handle: &SessionHandle, role: &Role) -> Message {
    let session = handle.session.lock().await;
    frame("view", json!(session.view_for(role)))
}

async fn seat_loop(mut socket: WebSocket, handle: Arc<SessionHandle>, role: Role) {
    let mut rx = handle.push.subscribe();
    let session_id = handle.session.lock().await.id.clone();
    let hello = frame("hello", json!({ "session_id": session_id, "seat": role }));
    if socket.send(hello).await.is_err() || socket.send(current_view(&handle, &role).await).await.is_err() {
        return;
    }
    let me = sender_name(&role);
    loop {
        let outgoing = tokio::select! {
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Text(text))) => client_message(&handle, &role, &me, text.as_str()).await,
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                Some(Ok(_)) => Vec::new(),
            },
            push = rx.recv() => match push {
                Ok(push) => push_frames(&handle, &role, push).await,
                Err(broadcast::error::RecvError::Lagged(_)) => vec![current_view(&handle, &role).await],
                Err(broadcast::error::RecvError::Closed) => return,
            },
        };
        for message in outgoing {
            if socket.send(message).await.is_err() {
                return;
            }
        }
    }
}

async fn client_message(handle: &SessionHandle, role: &Role, me: &str, text: &str) -> Vec<Message> {
    let message: ClientMessage = match serde_json::from_str(text.trim()) {
        Ok(m) => m,
        Err(e) => return vec![frame("error", json!({ "message": e.to_string() }))],
    };
    match message.kind.as_str() {
        "chat" => {
            let to = message
                .payload
                .get("to")
                .and_then(Value::as_str)
                .map(TeamId::new);
            let text = message
                .payload
                .get("text")
                .and_then(Value::as_str)
                .unwrap_or_default()
                .to_owned();
            handle.notify(Push::Chat {
                from: me.to_owned(),
                to,
                text,
            });
            Vec::new()
        }
        "view" => vec![current_view(handle, role).await],
        other => vec![frame("error", json!({ "message": format!("unsupported message type `{other}`") }))],
    }
}

async fn push_frames(handle: &SessionHandle, role: &Role, push: Push) -> Vec<Message> {
    match push {
        Push::Ready(ready) => vec![frame("ready_status", json!({ "ready": ready }))],
        Push::PhaseChanged => vec![current_view(handle, role).await],
        Push::TurnResolved { turn, events } => {
            let session = handle.session.lock().await;
            let visible = session.visible_events(role, &events);
            let view = session.view_for(role);
            vec![
                frame("turn_resolved", json!({ "turn": turn, "events": visible })),
                frame("view", json!(view)),
            ]
        }
        Push::Chat { from, to, text } => {
            if chat_reaches(role, &from, to.as_ref()) {
                vec![frame("chat", json!({ "from": from, "to": to, "text": text }))]
            } else {
                Vec::new()
            }
        }
    }
}
