//! WebSocket transport: one [`Session`] per connection.

use std::net::SocketAddr;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use futures::FutureExt;
use netscape_core::EdgeMode;
use tokio::net::TcpListener;

use crate::protocol::{ErrorReply, ServerMessage};
use crate::session::Session;

/// Most queued frames folded into one batch.
const MAX_BATCH: usize = 256;

pub fn router(edge_mode: EdgeMode) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route(
            "/ws",
            get(move |ws: WebSocketUpgrade| async move { ws.on_upgrade(move |socket| serve_socket(socket, edge_mode)) }),
        )
        .fallback(|| async { (axum::http::StatusCode::NOT_FOUND, "connect a WebSocket to /ws").into_response() })
}

/// Binds `addr` and serves until the task is dropped.
pub async fn serve(addr: SocketAddr, edge_mode: EdgeMode) -> std::io::Result<()> {
    let listener = TcpListener::bind(addr).await?;
    tracing::info!("listening on ws://{}/ws", listener.local_addr()?);
    axum::serve(listener, router(edge_mode)).await
}

/// Serves on an already bound listener (used by tests to get a free port).
pub async fn serve_on(listener: TcpListener, edge_mode: EdgeMode) -> std::io::Result<()> {
    axum::serve(listener, router(edge_mode)).await
}

enum Incoming {
    Text(String),
    Binary,
    Close,
    Skip,
}

fn classify(msg: Option<Result<Message, axum::Error>>) -> Incoming {
    match msg {
        None | Some(Err(_)) | Some(Ok(Message::Close(_))) => Incoming::Close,
        Some(Ok(Message::Text(t))) => Incoming::Text(t.to_string()),
        Some(Ok(Message::Binary(_))) => Incoming::Binary,
        Some(Ok(_)) => Incoming::Skip,
    }
}

async fn serve_socket(mut socket: WebSocket, edge_mode: EdgeMode) {
    let mut session = Session::new(edge_mode);
    loop {
        let first = classify(socket.recv().await);
        let mut batch = Vec::new();
        let mut closing = false;
        let mut replies = Vec::new();
        let push = |incoming: Incoming, batch: &mut Vec<String>, replies: &mut Vec<ServerMessage>| match incoming {
            Incoming::Text(t) => {
                batch.push(t);
                false
            }
            Incoming::Binary => {
                replies.push(ServerMessage::Error(ErrorReply {
                    seq: None,
                    code: "malformed".into(),
                    message: "binary frames are not accepted".into(),
                }));
                false
            }
            Incoming::Close => true,
            Incoming::Skip => false,
        };
        closing |= push(first, &mut batch, &mut replies);
        // Fold whatever else is already queued into the same batch so morph
        // bursts can coalesce.
        while !closing && batch.len() < MAX_BATCH {
            match socket.recv().now_or_never() {
                Some(m) => closing |= push(classify(m), &mut batch, &mut replies),
                None => break,
            }
        }
        replies.extend(session.handle_batch(&batch));
        for reply in replies {
            if socket.send(Message::Text(reply.to_text().into())).await.is_err() {
                return;
            }
        }
        if closing {
            return;
        }
    }
}
