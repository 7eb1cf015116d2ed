//! Headless session client for `travisgo join`.

use std::path::PathBuf;
use std::time::Duration;

use clap::Args;
use tokio::time::{sleep_until, Instant};

use super::{write_project, CliError};
use crate::model::{Project, Username};
use crate::protocol::{ProtocolError, Replica, SessionOp};
use crate::relay::wire::{ClientFrame, ServerFrame};
use crate::relay::{ClientError, RelayClient, DEFAULT_BIND};
use crate::syntax::file::{parse_post_script, serialize_post, ParsedPost};

#[derive(Debug, Clone, Args)]
pub struct JoinArgs {
    pub code: String,
    pub name: String,
    /// Relay address (ws://host:port or host:port).
    #[arg(long, env = "TRAVISGO_SERVER", default_value = DEFAULT_BIND)]
    pub server: String,
    /// Posts to publish, written in the project-file post syntax. Comment
    /// lines under a post are sent as comments on it.
    #[arg(long)]
    pub script: Option<PathBuf>,
    /// Where to save the final project (default CODE.travisgo).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Leave once the replica has seen this sequence number.
    #[arg(long)]
    pub wait_seq: Option<u64>,
    /// Leave this many seconds after the script finishes.
    #[arg(long)]
    pub linger: Option<f64>,
}

const PING_EVERY: Duration = Duration::from_secs(15);

fn transport(e: ClientError) -> CliError {
    CliError::domain("CONNECTION_ERROR", e)
}

struct Session {
    client: RelayClient,
    replica: Replica,
    me: Username,
    next_ping: Instant,
}

enum Event {
    Closed,
    /// An envelope this client originated was applied.
    Own(SessionOp),
    Other,
}

fn print_change(project: &Project, op: &SessionOp) {
    let number = match op {
        SessionOp::CreatePost { .. } => Some(project.next_post_number() - 1),
        SessionOp::EditPost { post_number, .. } | SessionOp::AddComment { post_number, .. } => {
            Some(*post_number)
        }
        SessionOp::SetMeta { title, description } => {
            println!("TITLE {title}\nDESCRIPTION {description}");
            None
        }
        SessionOp::DefineTags { .. } => {
            let tags: String = project.tag_vocabulary().iter().map(|t| format!("#{t} ")).collect();
            println!("TAGS {tags}");
            None
        }
    };
    if let Some(post) = number.and_then(|n| project.post(n)) {
        print!("{}", serialize_post(post));
    }
}

impl Session {
    async fn next_event(&mut self) -> Result<Event, CliError> {
        loop {
            let frame = tokio::select! {
                frame = self.client.recv() => frame.map_err(transport)?,
                _ = sleep_until(self.next_ping) => {
                    self.client.send(&ClientFrame::Ping).await.map_err(transport)?;
                    self.next_ping = Instant::now() + PING_EVERY;
                    continue;
                }
            };
            match frame {
                None | Some(ServerFrame::Goodbye) => return Ok(Event::Closed),
                Some(frame @ ServerFrame::Env { .. }) => {
                    let env = frame.to_envelope().expect("env frame");
                    self.replica.client_apply(&env).map_err(|e| match e {
                        ProtocolError::SeqGap { .. } => CliError::domain("SEQ_GAP", e),
                        other => CliError::domain(other.code(), other),
                    })?;
                    print_change(&self.replica.project, &env.op);
                    return Ok(if env.origin == self.me {
                        Event::Own(env.op)
                    } else {
                        Event::Other
                    });
                }
                Some(ServerFrame::Error { code, msg }) => return Err(CliError::domain(code, msg)),
                Some(ServerFrame::Presence { joined, left }) => {
                    for name in joined {
                        eprintln!("* {name} joined");
                    }
                    for name in left {
                        eprintln!("* {name} left");
                    }
                }
                Some(ServerFrame::Pong) => {}
                Some(ServerFrame::Welcome { .. }) => {
                    return Err(CliError::domain("MALFORMED_FRAME", "unexpected welcome"))
                }
            }
        }
    }

    /// Sends an op and waits for its envelope to come back.
    async fn submit(&mut self, op: SessionOp) -> Result<(), CliError> {
        self.client
            .send(&ClientFrame::Op { op: op.clone() })
            .await
            .map_err(transport)?;
        loop {
            match self.next_event().await? {
                Event::Own(echo) if echo == op => return Ok(()),
                Event::Closed => {
                    return Err(CliError::domain("DISCONNECTED", "server closed the connection"))
                }
                _ => {}
            }
        }
    }

    async fn run_script(&mut self, posts: Vec<ParsedPost>) -> Result<(), CliError> {
        for post in posts {
            self.submit(SessionOp::CreatePost {
                author: post.header.author,
                start_ms: post.header.start,
                end_ms: post.header.end,
                category: post.header.category,
                body: post.body,
            })
            .await?;
            let number = self.replica.project.next_post_number() - 1;
            for (_, actor, text) in post.comments {
                self.submit(SessionOp::AddComment {
                    actor,
                    post_number: number,
                    text,
                })
                .await?;
            }
        }
        Ok(())
    }
}

pub async fn run_join(args: JoinArgs) -> Result<(), CliError> {
    let me = Username::new(args.name.clone())?;
    let script = match &args.script {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::domain("IO_ERROR", format!("{}: {e}", path.display())))?;
            parse_post_script(&text)?
        }
        None => Vec::new(),
    };

    let mut client = RelayClient::connect(&args.server).await.map_err(transport)?;
    client
        .send(&ClientFrame::Join {
            code: args.code.clone(),
            name: me.clone(),
        })
        .await
        .map_err(transport)?;
    let (code, replica) = loop {
        match client.recv().await.map_err(transport)? {
            Some(ServerFrame::Welcome { code, seq, project, .. }) => break (code, Replica::new(project, seq)),
            Some(ServerFrame::Error { code, msg }) => return Err(CliError::domain(code, msg)),
            Some(ServerFrame::Presence { .. }) | Some(ServerFrame::Pong) => continue,
            Some(_) | None => return Err(CliError::domain("DISCONNECTED", "no welcome from server")),
        }
    };
    eprintln!("* joined {code} at seq {}", replica.last_seq);
    for post in replica.project.posts() {
        print!("{}", serialize_post(post));
    }

    let mut session = Session {
        client,
        replica,
        me,
        next_ping: Instant::now() + PING_EVERY,
    };
    let result = async {
        session.run_script(script).await?;
        let deadline = args.linger.map(|s| Instant::now() + Duration::from_secs_f64(s.max(0.0)));
        loop {
            if args.wait_seq.is_some_and(|n| session.replica.last_seq >= n) {
                break;
            }
            let event = tokio::select! {
                ev = session.next_event() => ev?,
                _ = async { sleep_until(deadline.expect("guarded")).await }, if deadline.is_some() => break,
                _ = tokio::signal::ctrl_c() => break,
            };
            if let Event::Closed = event {
                break;
            }
        }
        Ok::<(), CliError>(())
    }
    .await;

    let out = args.out.unwrap_or_else(|| PathBuf::from(format!("{code}.travisgo")));
    write_project(&out, &session.replica.project)?;
    session.client.close().await;
    result
}
