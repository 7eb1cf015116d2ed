//! Live-session replication.
//!
//! One server-side [`SessionState`] per join code validates each op against
//! the project, stamps it with the next sequence number, and hands back an
//! [`OpEnvelope`] for broadcast. Clients fold envelopes in order with
//! [`Replica::client_apply`]. Rejected ops never get a number. Nothing here
//! touches storage.

mod code;
mod op;
mod session;

use thiserror::Error;

use crate::model::ModelError;

pub use code::{generate_code, InvalidCode, SessionCode, CODE_ALPHABET, CODE_LEN, CODE_SPACE};
pub use op::{client_apply, OpEnvelope, Replica, SessionOp};
pub use session::{JoinSnapshot, SessionState, Sessions, DEFAULT_GRACE};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("session code {0} is already in use")]
    CodeInUse(SessionCode),
    #[error("no live session with that code")]
    SessionNotFound,
    #[error("@{0} is already connected to this session")]
    DuplicateName(String),
    #[error("not a member of this session")]
    NotMember,
    #[error("op acts as @{claimed} but was sent by @{origin}")]
    Impersonation { origin: String, claimed: String },
    #[error("expected envelope {expected}, got {got}")]
    SeqGap { expected: u64, got: u64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl ProtocolError {
    pub fn code(&self) -> &'static str {
        match self {
            ProtocolError::CodeInUse(_) => "CODE_IN_USE",
            ProtocolError::SessionNotFound => "SESSION_NOT_FOUND",
            ProtocolError::DuplicateName(_) => "DUPLICATE_NAME",
            ProtocolError::NotMember => "NOT_MEMBER",
            ProtocolError::Impersonation { .. } => "IMPERSONATION",
            ProtocolError::SeqGap { .. } => "SEQ_GAP",
            ProtocolError::Model(e) => e.code(),
        }
    }
}
