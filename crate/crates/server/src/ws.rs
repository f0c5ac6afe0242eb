//! Serving a session over WebSocket.
//!
//! One actor task owns the [`Session`]. Connections only forward parsed
//! client messages to it and relay what it sends back.

use std::net::SocketAddr;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc};
use tokio::time::MissedTickBehavior;

use crate::session::Session;
use crate::wire::{parse_client, ClientMessage, ServerMessage};

struct Request {
    msg: ClientMessage,
    reply: mpsc::UnboundedSender<String>,
}

#[derive(Clone)]
struct Hub {
    requests: mpsc::UnboundedSender<Request>,
    frames: broadcast::Sender<String>,
}

/// Handle on a running server.
pub struct Served {
    pub addr: SocketAddr,
    /// Resolves to the session once it has ended.
    pub session: tokio::task::JoinHandle<Session>,
}

/// Binds `addr` and serves `session`, ticking every `tick_ms` milliseconds.
/// The HTTP server keeps running after the session ends.
pub async fn serve(addr: SocketAddr, session: Session, tick_ms: u64) -> std::io::Result<Served> {
    let listener = TcpListener::bind(addr).await?;
    let addr = listener.local_addr()?;
    let (requests, inbox) = mpsc::unbounded_channel();
    let (frames, _) = broadcast::channel(4096);
    let hub = Hub { requests, frames: frames.clone() };
    let app = Router::new()
        .route("/", get(|| async { "interactive score session; connect a WebSocket to /ws\n" }))
        .route("/ws", get(upgrade))
        .with_state(hub);
    tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, app).await {
            log::error!("server stopped: {e}");
        }
    });
    log::info!("listening on {addr}");
    let session = tokio::spawn(actor(session, inbox, frames, tick_ms.max(1)));
    Ok(Served { addr, session })
}

async fn actor(
    mut session: Session,
    mut inbox: mpsc::UnboundedReceiver<Request>,
    frames: broadcast::Sender<String>,
    tick_ms: u64,
) -> Session {
    let mut clock = tokio::time::interval(Duration::from_millis(tick_ms));
    clock.set_missed_tick_behavior(MissedTickBehavior::Delay);
    let send_all = |msgs: Vec<ServerMessage>| {
        for m in msgs {
            // no subscriber is not an error
            let _ = frames.send(m.to_text());
        }
    };
    loop {
        tokio::select! {
            _ = clock.tick() => {
                if session.is_ticking() {
                    send_all(session.tick());
                    if session.ended().is_some() {
                        break;
                    }
                }
            }
            req = inbox.recv() => {
                let Some(Request { msg, reply }) = req else { break };
                log::debug!("client message {msg:?}");
                let out = session.handle(msg);
                for m in out.reply {
                    let _ = reply.send(m.to_text());
                }
            }
        }
    }
    session
}

async fn upgrade(ws: WebSocketUpgrade, State(hub): State<Hub>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| connection(socket, hub))
}

async fn connection(socket: WebSocket, hub: Hub) {
    let (mut sink, mut stream) = socket.split();
    let mut frames = hub.frames.subscribe();
    let (reply, mut replies) = mpsc::unbounded_channel::<String>();
    loop {
        tokio::select! {
            frame = frames.recv() => match frame {
                Ok(text) => {
                    if sink.send(Message::Text(text)).await.is_err() {
                        break;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(n)) => log::warn!("client lagged, {n} frames dropped"),
                Err(broadcast::error::RecvError::Closed) => break,
            },
            Some(text) = replies.recv() => {
                if sink.send(Message::Text(text)).await.is_err() {
                    break;
                }
            }
            incoming = stream.next() => match incoming {
                Some(Ok(Message::Text(text))) => match parse_client(&text) {
                    Ok(msg) => {
                        if hub.requests.send(Request { msg, reply: reply.clone() }).is_err() {
                            let _ = reply.send(ServerMessage::error(crate::wire::ErrorCode::Ended, "the session has ended").to_text());
                        }
                    }
                    Err(e) => {
                        let _ = reply.send(e.to_text());
                    }
                },
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => {}
            },
        }
    }
    log::debug!("client disconnected");
}
