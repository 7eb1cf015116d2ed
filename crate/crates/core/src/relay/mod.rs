//! The live-collaboration relay: frame schemas, the in-memory hub, the
//! WebSocket server, and a client.

pub mod client;
pub mod hub;
pub mod server;
pub mod wire;

pub use client::{ws_url, ClientError, RelayClient};
pub use hub::{ConnId, Hub, HubConfig, Outbound};
pub use server::{serve, RelayError, RelayServer, ServeConfig, DEFAULT_BIND};
pub use wire::{decode_client, decode_server, ClientFrame, FrameError, ServerFrame};
