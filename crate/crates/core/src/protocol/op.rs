use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::model::{Category, ModelError, Project, Tag, Username};
use crate::syntax::timecode::Timecode;

/// One replicated edit. The wire form carries a `kind` discriminator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SessionOp {
    CreatePost {
        author: Username,
        start_ms: Timecode,
        #[serde(default)]
        end_ms: Option<Timecode>,
        category: Category,
        body: String,
    },
    EditPost {
        actor: Username,
        post_number: u64,
        new_body: String,
    },
    AddComment {
        actor: Username,
        post_number: u64,
        text: String,
    },
    SetMeta {
        title: String,
        description: String,
    },
    DefineTags {
        tags: Vec<Tag>,
    },
}

impl SessionOp {
    /// The user the op claims to act as, for ops that carry one.
    pub fn acting_user(&self) -> Option<&Username> {
        match self {
            SessionOp::CreatePost { author, .. } => Some(author),
            SessionOp::EditPost { actor, .. } | SessionOp::AddComment { actor, .. } => Some(actor),
            SessionOp::SetMeta { .. } | SessionOp::DefineTags { .. } => None,
        }
    }

    /// Applies the op to `project`. On error the project is unchanged.
    /// Server and clients both fold ops through this one function.
    pub fn apply(&self, project: &mut Project) -> Result<(), ModelError> {
        match self {
            SessionOp::CreatePost {
                author,
                start_ms,
                end_ms,
                category,
                body,
            } => project
                .create_post(author.clone(), *start_ms, *end_ms, *category, body)
                .map(drop),
            SessionOp::EditPost {
                actor,
                post_number,
                new_body,
            } => project.edit_post(actor, *post_number, new_body),
            SessionOp::AddComment {
                actor,
                post_number,
                text,
            } => project.add_comment(actor.clone(), *post_number, text),
            SessionOp::SetMeta { title, description } => project.set_meta(title, description),
            SessionOp::DefineTags { tags } => project.define_tags(tags),
        }
    }
}

/// A sequenced op as broadcast to every session member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpEnvelope {
    pub seq: u64,
    pub origin: Username,
    pub op: SessionOp,
}

/// A client's copy of the session project.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Replica {
    pub project: Project,
    pub last_seq: u64,
}

impl Replica {
    pub fn new(project: Project, last_seq: u64) -> Self {
        Replica { project, last_seq }
    }

    /// Folds the next envelope. Envelopes must arrive gapless and in order.
    pub fn client_apply(&mut self, env: &OpEnvelope) -> Result<(), ProtocolError> {
        let expected = self.last_seq + 1;
        if env.seq != expected {
            return Err(ProtocolError::SeqGap {
                expected,
                got: env.seq,
            });
        }
        env.op.apply(&mut self.project)?;
        self.last_seq = env.seq;
        Ok(())
    }
}

/// Pure form of [`Replica::client_apply`].
pub fn client_apply(replica: (Project, u64), env: &OpEnvelope) -> Result<(Project, u64), ProtocolError> {
    let mut r = Replica::new(replica.0, replica.1);
    r.client_apply(env)?;
    Ok((r.project, r.last_seq))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_shape() {
        let op = SessionOp::CreatePost {
            author: Username::new("Luke").unwrap(),
            start_ms: Timecode::from_ms(143_180).unwrap(),
            end_ms: None,
            category: Category::Picture,
            body: "#symbols".into(),
        };
        let json = serde_json::to_value(&op).unwrap();
        assert_eq!(
            json,
            serde_json::json!({
                "kind": "create_post",
                "author": "Luke",
                "start_ms": 143180,
                "end_ms": null,
                "category": "PICTURE",
                "body": "#symbols"
            })
        );
        let back: SessionOp = serde_json::from_value(json).unwrap();
        assert_eq!(back, op);

        let tags: SessionOp =
            serde_json::from_str(r#"{"kind":"define_tags","tags":["A1","A2"]}"#).unwrap();
        assert!(matches!(tags, SessionOp::DefineTags { ref tags } if tags.len() == 2));
        assert!(serde_json::from_str::<SessionOp>(r#"{"kind":"define_tags","tags":["a b"]}"#).is_err());
        assert!(serde_json::from_str::<SessionOp>(r#"{"kind":"delete_post","post_number":1}"#).is_err());
    }

    #[test]
    fn fold_detects_gaps() {
        let p = Project::new("https://youtu.be/x").unwrap();
        let env = OpEnvelope {
            seq: 2,
            origin: Username::new("a").unwrap(),
            op: SessionOp::SetMeta {
                title: "t".into(),
                description: String::new(),
            },
        };
        assert_eq!(
            client_apply((p.clone(), 0), &env),
            Err(ProtocolError::SeqGap { expected: 1, got: 2 })
        );
        let (after, seq) = client_apply((p, 1), &env).unwrap();
        assert_eq!((after.title(), seq), ("t", 2));
    }
}
