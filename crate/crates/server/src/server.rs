//! HTTP and WebSocket front end.

use std::io;

use axum::Router;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Query, State};
use axum::http::{StatusCode, header};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use futures_util::{SinkExt, StreamExt};
use serde::Deserialize;
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc};

use crate::hub::Hub;
use crate::wire::{Body, Inbound, InboundParser, WireMessage};

pub const SESSION_OCCUPIED: &str = "session occupied";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Driver,
    #[default]
    Observer,
}

#[derive(Debug, Deserialize)]
struct WsParams {
    #[serde(default)]
    role: Role,
}

/// Routes: `/ws?role=driver|observer`, `/snapshot`, `/ssg`, `/transcript`.
pub fn router(hub: Hub) -> Router {
    Router::new()
        .route("/ws", get(ws))
        .route("/snapshot", get(snapshot))
        .route("/ssg", get(ssg))
        .route("/transcript", get(transcript))
        .with_state(hub)
}

/// Serves until the listener fails.
pub async fn serve(listener: TcpListener, hub: Hub) -> io::Result<()> {
    axum::serve(listener, router(hub)).await
}

fn unavailable() -> Response {
    (StatusCode::SERVICE_UNAVAILABLE, "session stopped").into_response()
}

async fn snapshot(State(hub): State<Hub>) -> Response {
    match hub.snapshot().await {
        Ok(scene) => axum::Json(scene).into_response(),
        Err(_) => unavailable(),
    }
}

async fn ssg(State(hub): State<Hub>) -> Response {
    match hub.ssg().await {
        Ok(text) => ([(header::CONTENT_TYPE, "application/json")], text).into_response(),
        Err(_) => unavailable(),
    }
}

async fn transcript(State(hub): State<Hub>) -> Response {
    match hub.transcript().await {
        Ok(text) => ([(header::CONTENT_TYPE, "application/jsonl")], text).into_response(),
        Err(_) => unavailable(),
    }
}

async fn ws(upgrade: WebSocketUpgrade, Query(params): Query<WsParams>, State(hub): State<Hub>) -> Response {
    upgrade.on_upgrade(move |socket| connection(socket, hub, params.role))
}

struct Outbox {
    socket: futures_util::stream::SplitSink<WebSocket, Message>,
    seq: u64,
}

impl Outbox {
    async fn send(&mut self, body: Body) -> bool {
        self.seq += 1;
        let text = serde_json::to_string(&WireMessage { seq: self.seq, body }).expect("wire messages serialize");
        self.socket.send(Message::Text(text.into())).await.is_ok()
    }

    async fn fail(mut self, message: impl Into<String>) {
        self.send(Body::error(message)).await;
        let _ = self.socket.send(Message::Close(None)).await;
    }
}

async fn connection(socket: WebSocket, hub: Hub, role: Role) {
    let (sink, mut stream) = socket.split();
    let mut out = Outbox { socket: sink, seq: 0 };
    let seat = match role {
        Role::Driver => match hub.claim_driver() {
            Some(seat) => Some(seat),
            None => return out.fail(SESSION_OCCUPIED).await,
        },
        Role::Observer => None,
    };
    let Ok((scene, mut events)) = hub.attach().await else {
        return out.fail("session stopped").await;
    };
    if !out.send(Body::Snapshot { scene }).await {
        return;
    }
    let (direct_tx, mut direct_rx) = mpsc::unbounded_channel();
    let mut parser = InboundParser::new(seat.is_some());
    loop {
        tokio::select! {
            event = events.recv() => match event {
                Ok(body) => if !out.send(body).await { break },
                Err(broadcast::error::RecvError::Lagged(_)) => {
                    return out.fail("connection fell behind; reconnect for a fresh snapshot").await;
                }
                Err(broadcast::error::RecvError::Closed) => return out.fail("session stopped").await,
            },
            Some(body) = direct_rx.recv() => if !out.send(body).await { break },
            frame = stream.next() => match frame {
                Some(Ok(Message::Text(text))) => {
                    let sent = match parser.parse(&text) {
                        Ok(Inbound::UserInput(text)) => hub.input(text, Some(direct_tx.clone())),
                        Ok(Inbound::Nav(cmd)) => hub.nav(cmd),
                        Ok(Inbound::SsgDump) => match hub.ssg().await {
                            Ok(ssg) => Ok(out.send(Body::SsgDump { ssg }).await).map(|_| ()),
                            Err(e) => Err(e),
                        },
                        Err(violation) => return out.fail(violation).await,
                    };
                    if sent.is_err() {
                        return out.fail("session stopped").await;
                    }
                }
                Some(Ok(Message::Binary(_))) => return out.fail("binary frames are not supported").await,
                Some(Ok(Message::Ping(_) | Message::Pong(_))) => {}
                Some(Ok(Message::Close(_)) | Err(_)) | None => break,
            },
        }
    }
    drop(seat);
}
