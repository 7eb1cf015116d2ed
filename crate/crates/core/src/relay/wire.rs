//! JSON frames exchanged over the WebSocket, one object per text frame.

use serde::{Deserialize, Serialize};

use crate::model::{Project, Username};
use crate::protocol::{OpEnvelope, SessionOp};

/// Client to server. `t` selects the variant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "t", rename_all = "lowercase")]
pub enum ClientFrame {
    Create { name: Username, project: Project },
    Join { code: String, name: Username },
    Op { op: SessionOp },
    Ping,
}

/// Server to client.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "t", rename_all = "lowercase")]
pub enum ServerFrame {
    Welcome {
        code: String,
        seq: u64,
        project: Project,
        roster: Vec<String>,
    },
    Env {
        seq: u64,
        origin: Username,
        op: SessionOp,
    },
    Presence {
        joined: Vec<String>,
        left: Vec<String>,
    },
    Error {
        code: String,
        msg: String,
    },
    Pong,
    Goodbye,
}

impl ServerFrame {
    pub fn error(code: &str, msg: impl Into<String>) -> Self {
        ServerFrame::Error {
            code: code.to_string(),
            msg: msg.into(),
        }
    }

    pub fn envelope(env: &OpEnvelope) -> Self {
        ServerFrame::Env {
            seq: env.seq,
            origin: env.origin.clone(),
            op: env.op.clone(),
        }
    }

    pub fn to_envelope(&self) -> Option<OpEnvelope> {
        match self {
            ServerFrame::Env { seq, origin, op } => Some(OpEnvelope {
                seq: *seq,
                origin: origin.clone(),
                op: op.clone(),
            }),
            _ => None,
        }
    }

    pub fn encode(&self) -> String {
        serde_json::to_string(self).expect("frames always serialize")
    }
}

impl ClientFrame {
    pub fn encode(&self) -> String {
        serde_json::to_string(self).expect("frames always serialize")
    }
}

/// Why an inbound frame was refused; `code` is the wire error code.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{code}: {msg}")]
pub struct FrameError {
    pub code: &'static str,
    pub msg: String,
}

pub const MALFORMED_FRAME: &str = "MALFORMED_FRAME";
pub const UNSUPPORTED_TYPE: &str = "UNSUPPORTED_TYPE";

const CLIENT_TYPES: [&str; 4] = ["create", "join", "op", "ping"];

/// Decodes a client frame. Unknown `t` values are `UNSUPPORTED_TYPE`;
/// anything else that does not fit the schema is `MALFORMED_FRAME`.
pub fn decode_client(text: &str) -> Result<ClientFrame, FrameError> {
    let malformed = |msg: String| FrameError {
        code: MALFORMED_FRAME,
        msg,
    };
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| malformed(format!("not JSON: {e}")))?;
    let tag = value
        .get("t")
        .and_then(|t| t.as_str())
        .ok_or_else(|| malformed("missing string field \"t\"".into()))?;
    if !CLIENT_TYPES.contains(&tag) {
        return Err(FrameError {
            code: UNSUPPORTED_TYPE,
            msg: format!("unsupported frame type {tag:?}"),
        });
    }
    serde_json::from_value(value).map_err(|e| malformed(e.to_string()))
}

pub fn decode_server(text: &str) -> Result<ServerFrame, FrameError> {
    serde_json::from_str(text).map_err(|e| FrameError {
        code: MALFORMED_FRAME,
        msg: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_field_names() {
        assert_eq!(ClientFrame::Ping.encode(), r#"{"t":"ping"}"#);
        assert_eq!(ServerFrame::Pong.encode(), r#"{"t":"pong"}"#);
        assert_eq!(ServerFrame::Goodbye.encode(), r#"{"t":"goodbye"}"#);
        assert_eq!(
            ServerFrame::error("NOT_MEMBER", "x").encode(),
            r#"{"t":"error","code":"NOT_MEMBER","msg":"x"}"#
        );
        assert_eq!(
            ServerFrame::Presence {
                joined: vec!["Luke".into()],
                left: vec![]
            }
            .encode(),
            r#"{"t":"presence","joined":["Luke"],"left":[]}"#
        );
        let join = decode_client(r#"{"t":"join","code":"abc234","name":"Mrs. Miller"}"#).unwrap();
        assert_eq!(
            join,
            ClientFrame::Join {
                code: "abc234".into(),
                name: Username::new("Mrs. Miller").unwrap()
            }
        );
        let welcome = ServerFrame::Welcome {
            code: "ABC234".into(),
            seq: 0,
            project: Project::new("https://youtu.be/x").unwrap(),
            roster: vec!["a".into()],
        };
        let v: serde_json::Value = serde_json::from_str(&welcome.encode()).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys.len(), 5);
        for k in ["t", "code", "seq", "project", "roster"] {
            assert!(keys.contains(&k.to_string()));
        }
        let project_keys: Vec<_> = v["project"].as_object().unwrap().keys().cloned().collect();
        for k in ["media_url", "title", "description", "tag_vocabulary", "posts", "next_post_number"] {
            assert!(project_keys.contains(&k.to_string()), "{k}");
        }
        assert_eq!(decode_server(&welcome.encode()).unwrap(), welcome);
    }

    #[test]
    fn rejects_bad_frames() {
        let code = |s: &str| decode_client(s).unwrap_err().code;
        assert_eq!(code("not json"), MALFORMED_FRAME);
        assert_eq!(code(r#"{"type":"ping"}"#), MALFORMED_FRAME);
        assert_eq!(code(r#"{"t":7}"#), MALFORMED_FRAME);
        assert_eq!(code(r#"{"t":"shout"}"#), UNSUPPORTED_TYPE);
        assert_eq!(code(r#"{"t":"welcome"}"#), UNSUPPORTED_TYPE);
        assert_eq!(code(r#"{"t":"join","code":"ABCDEF"}"#), MALFORMED_FRAME);
        assert_eq!(code(r#"{"t":"join","code":"ABCDEF","name":" x"}"#), MALFORMED_FRAME);
        assert_eq!(code(r#"{"t":"op","op":{"kind":"nope"}}"#), MALFORMED_FRAME);
        assert_eq!(
            code(r#"{"t":"create","name":"a","project":{"media_url":"nope","title":"","description":"","tag_vocabulary":[],"posts":[],"next_post_number":1}}"#),
            MALFORMED_FRAME
        );
    }
}
