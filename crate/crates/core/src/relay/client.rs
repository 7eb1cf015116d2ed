//! Minimal async WebSocket client for the relay.

use futures::{SinkExt, StreamExt};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

use super::wire::{decode_server, ClientFrame, ServerFrame};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("connection failed: {0}")]
    Connect(#[source] tokio_tungstenite::tungstenite::Error),
    #[error("transport error: {0}")]
    Transport(#[from] tokio_tungstenite::tungstenite::Error),
    #[error("bad frame from server: {0}")]
    Frame(String),
}

/// Accepts `ws://host:port[/ws]`, `http://...`, or a bare `host:port`.
pub fn ws_url(server: &str) -> String {
    let with_scheme = if let Some(rest) = server.strip_prefix("http://") {
        format!("ws://{rest}")
    } else if let Some(rest) = server.strip_prefix("https://") {
        format!("wss://{rest}")
    } else if server.contains("://") {
        server.to_string()
    } else {
        format!("ws://{server}")
    };
    let after_scheme = with_scheme.split_once("://").map_or("", |(_, r)| r);
    if after_scheme.contains('/') {
        with_scheme
    } else {
        format!("{with_scheme}/ws")
    }
}

pub struct RelayClient {
    ws: WebSocketStream<MaybeTlsStream<TcpStream>>,
}

impl RelayClient {
    pub async fn connect(server: &str) -> Result<Self, ClientError> {
        let (ws, _) = tokio_tungstenite::connect_async(ws_url(server))
            .await
            .map_err(ClientError::Connect)?;
        Ok(RelayClient { ws })
    }

    pub async fn send(&mut self, frame: &ClientFrame) -> Result<(), ClientError> {
        self.send_text(frame.encode()).await
    }

    pub async fn send_text(&mut self, text: String) -> Result<(), ClientError> {
        self.ws.send(Message::text(text)).await?;
        Ok(())
    }

    /// The next frame as raw text, or `None` once the server closes.
    pub async fn recv_text(&mut self) -> Result<Option<String>, ClientError> {
        while let Some(msg) = self.ws.next().await {
            match msg? {
                Message::Text(t) => return Ok(Some(t.as_str().to_string())),
                Message::Close(_) => return Ok(None),
                _ => continue,
            }
        }
        Ok(None)
    }

    pub async fn recv(&mut self) -> Result<Option<ServerFrame>, ClientError> {
        match self.recv_text().await? {
            Some(text) => decode_server(&text)
                .map(Some)
                .map_err(|e| ClientError::Frame(e.to_string())),
            None => Ok(None),
        }
    }

    pub async fn close(mut self) {
        let _ = self.ws.close(None).await;
    }
}
