//! WebSocket transport for the [`Hub`]: `/ws` for frames, `/healthz` for
//! liveness. All state lives in memory and is gone when the process exits.

use std::future::Future;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use tokio::net::TcpListener;

use super::hub::{Hub, HubConfig};
use super::wire::MALFORMED_FRAME;

pub const DEFAULT_BIND: &str = "127.0.0.1:7341";

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub bind: String,
    pub grace: Duration,
    pub heartbeat: Duration,
}

impl Default for ServeConfig {
    fn default() -> Self {
        ServeConfig {
            bind: DEFAULT_BIND.to_string(),
            grace: Duration::from_secs(60),
            heartbeat: Duration::from_secs(15),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RelayError {
    #[error("cannot bind {addr}: {source}")]
    BindFailure {
        addr: String,
        #[source]
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone)]
struct AppState {
    hub: Arc<Hub>,
    epoch: Instant,
    active: Arc<AtomicUsize>,
}

impl AppState {
    fn now(&self) -> Duration {
        self.epoch.elapsed()
    }
}

/// A bound, not yet running relay.
pub struct RelayServer {
    listener: TcpListener,
    state: AppState,
}

impl RelayServer {
    pub async fn bind(config: &ServeConfig) -> Result<Self, RelayError> {
        let listener = TcpListener::bind(&config.bind)
            .await
            .map_err(|source| RelayError::BindFailure {
                addr: config.bind.clone(),
                source,
            })?;
        let hub = Hub::new(HubConfig {
            grace: config.grace,
            heartbeat: config.heartbeat,
            ..HubConfig::default()
        });
        Ok(RelayServer {
            listener,
            state: AppState {
                hub: Arc::new(hub),
                epoch: Instant::now(),
                active: Arc::new(AtomicUsize::new(0)),
            },
        })
    }

    pub fn local_addr(&self) -> std::io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn hub(&self) -> Arc<Hub> {
        self.state.hub.clone()
    }

    /// Serves until `shutdown` resolves, then says GOODBYE to every client.
    pub async fn run(self, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<(), RelayError> {
        let state = self.state;
        let clock = {
            let state = state.clone();
            tokio::spawn(async move {
                let mut every = tokio::time::interval(Duration::from_secs(1));
                loop {
                    every.tick().await;
                    let now = state.now();
                    state.hub.heartbeat_sweep(now);
                    state.hub.tick(now);
                }
            })
        };

        let app = Router::new()
            .route("/ws", get(upgrade))
            .route("/healthz", get(|| async { "ok" }))
            .with_state(state.clone());

        let hub = state.hub.clone();
        let result = axum::serve(self.listener, app)
            .with_graceful_shutdown(async move {
                shutdown.await;
                tracing::info!("shutting down");
                hub.shutdown();
            })
            .await;
        clock.abort();

        // Upgraded sockets are not tracked by the HTTP server; give their
        // writers a moment to flush GOODBYE.
        let deadline = Instant::now() + Duration::from_secs(2);
        while state.active.load(Ordering::SeqCst) > 0 && Instant::now() < deadline {
            tokio::time::sleep(Duration::from_millis(10)).await;
        }
        result.map_err(RelayError::Io)
    }
}

/// Binds and serves until Ctrl-C.
pub async fn serve(config: ServeConfig) -> Result<(), RelayError> {
    let server = RelayServer::bind(&config).await?;
    tracing::info!(addr = %server.local_addr()?, "relay listening");
    server
        .run(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<AppState>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| connection(socket, state))
}

async fn connection(socket: WebSocket, state: AppState) {
    state.active.fetch_add(1, Ordering::SeqCst);
    let hub = state.hub.clone();
    let (id, mut outbound) = hub.connect(state.now());
    let (mut sink, mut stream) = socket.split();

    let writer = async {
        while let Some(frame) = outbound.recv().await {
            if sink.send(Message::Text(frame.as_ref().into())).await.is_err() {
                return;
            }
        }
        let _ = sink.send(Message::Close(None)).await;
    };

    let reader = async {
        while let Some(Ok(msg)) = stream.next().await {
            let now = state.now();
            match msg {
                Message::Text(text) => hub.handle_text(id, text.as_str(), now),
                Message::Binary(_) => hub.reject(id, MALFORMED_FRAME, "binary frames are not supported", now),
                Message::Ping(_) | Message::Pong(_) => hub.touch(id, now),
                Message::Close(_) => break,
            }
        }
    };

    tokio::select! {
        _ = writer => {}
        _ = reader => {}
    }
    hub.disconnect(id, state.now());
    state.active.fetch_sub(1, Ordering::SeqCst);
}
