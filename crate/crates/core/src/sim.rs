//! In-process convergence simulator.
//!
//! Runs a [`Hub`] and `clients` scripted members in one thread, with frames
//! passed through the hub's own queues as JSON text. A seeded generator
//! picks who acts, what they send, and when each client reads its queue, so
//! clients routinely act on stale replicas. With faults enabled, clients
//! also disconnect and rejoin at random and envelopes are occasionally
//! lost, which clients detect as a sequence gap and repair by rejoining for
//! a fresh snapshot.
//!
//! At the end every replica must equal the server's project and sequence.

use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use tokio::sync::mpsc;

use crate::model::{Category, Project, Username};
use crate::protocol::{ProtocolError, Replica, SessionCode, SessionOp};
use crate::relay::hub::{ConnId, Hub, HubConfig, Outbound};
use crate::relay::wire::{decode_server, ClientFrame, ServerFrame};
use crate::syntax::timecode::Timecode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub clients: usize,
    pub ops: usize,
    pub seed: u64,
    pub faults: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SimReport {
    pub passed: bool,
    pub ops_sent: usize,
    pub accepted: u64,
    pub rejected: usize,
    pub disconnects: usize,
    pub rejoins: usize,
    pub gaps_recovered: usize,
    pub lost_frames: usize,
    pub final_hash: String,
    pub failure: Option<String>,
    pub elapsed: Duration,
}

impl SimReport {
    pub fn ops_per_sec(&self) -> f64 {
        self.ops_sent as f64 / self.elapsed.as_secs_f64().max(1e-9)
    }
}

/// SHA-256 over the project's JSON document.
pub fn project_hash(project: &Project) -> String {
    let json = serde_json::to_vec(project).expect("projects serialize");
    Sha256::digest(&json)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

const TAG_POOL: [&str; 7] = ["A1", "A2", "symbols", "light", "Taylor_Swift", "camera_movement", "closeup"];
const WORDS: [&str; 12] = [
    "dark", "background", "turquoise", "light", "protagonist", "costume", "backdrop", "clouds",
    "ascension", "singer", "[bracket", "> quote",
];

struct Member {
    name: Username,
    conn: Option<(ConnId, mpsc::Receiver<Outbound>)>,
    replica: Option<Replica>,
}

struct Sim<'a> {
    hub: Hub,
    code: SessionCode,
    members: Vec<Member>,
    rng: ChaCha8Rng,
    cfg: &'a SimConfig,
    now: Duration,
    report: SimReport,
    /// Faults stop once the run winds down; a lost final envelope could
    /// never be detected.
    settling: bool,
}

fn op_frame(op: SessionOp) -> String {
    ClientFrame::Op { op }.encode()
}

impl Sim<'_> {
    fn connected_count(&self) -> usize {
        self.members.iter().filter(|m| m.conn.is_some()).count()
    }

    fn join(&mut self, i: usize) {
        let (id, rx) = self.hub.connect(self.now);
        let frame = ClientFrame::Join {
            code: self.code.to_string(),
            name: self.members[i].name.clone(),
        };
        self.hub.handle_text(id, &frame.encode(), self.now);
        self.members[i].conn = Some((id, rx));
        self.members[i].replica = None;
    }

    fn leave(&mut self, i: usize) {
        if let Some((id, _)) = self.members[i].conn.take() {
            self.hub.disconnect(id, self.now);
        }
        self.members[i].replica = None;
    }

    /// Reads up to `limit` frames from member `i`'s queue.
    fn deliver(&mut self, i: usize, limit: usize) -> Result<(), String> {
        for _ in 0..limit {
            let Some((_, rx)) = self.members[i].conn.as_mut() else {
                return Ok(());
            };
            let Ok(text) = rx.try_recv() else {
                return Ok(());
            };
            let frame = decode_server(&text).map_err(|e| e.to_string())?;
            match frame {
                ServerFrame::Welcome { seq, project, .. } => {
                    self.members[i].replica = Some(Replica::new(project, seq));
                }
                ServerFrame::Env { .. } => {
                    if self.cfg.faults && !self.settling && self.rng.random_bool(0.02) {
                        self.report.lost_frames += 1;
                        continue;
                    }
                    let env = frame.to_envelope().expect("env frame");
                    let Some(replica) = self.members[i].replica.as_mut() else {
                        return Err(format!("{} got an envelope before its snapshot", self.members[i].name));
                    };
                    match replica.client_apply(&env) {
                        Ok(()) => {}
                        Err(ProtocolError::SeqGap { .. }) => {
                            self.report.gaps_recovered += 1;
                            self.leave(i);
                            self.join(i);
                            self.report.rejoins += 1;
                        }
                        Err(e) => {
                            return Err(format!(
                                "{} failed to fold envelope {}: {e}",
                                self.members[i].name, env.seq
                            ))
                        }
                    }
                }
                ServerFrame::Error { .. } => self.report.rejected += 1,
                ServerFrame::Presence { .. } | ServerFrame::Pong => {}
                ServerFrame::Goodbye => return Err("unexpected goodbye".into()),
            }
        }
        Ok(())
    }

    fn deliver_all(&mut self) -> Result<(), String> {
        for i in 0..self.members.len() {
            self.deliver(i, usize::MAX)?;
        }
        Ok(())
    }

    fn random_body(&mut self) -> String {
        let words = self.rng.random_range(1..6);
        let mut body: Vec<String> = (0..words)
            .map(|_| (*WORDS.choose(&mut self.rng).expect("non-empty")).to_string())
            .collect();
        if self.rng.random_bool(0.6) {
            body.push(format!("#{}", TAG_POOL.choose(&mut self.rng).expect("non-empty")));
        }
        if self.rng.random_bool(0.2) {
            let who = self.members.choose(&mut self.rng).expect("members").name.clone();
            body.push(format!("@{}", who.as_str().split(' ').next().unwrap_or("x")));
        }
        let sep = if self.rng.random_bool(0.15) { "\n" } else { " " };
        body.join(sep)
    }

    fn random_timecode(&mut self) -> Timecode {
        Timecode::from_ms(self.rng.random_range(0..30_000u64) * 10).expect("in range")
    }

    /// An op for member `i` built from its own (possibly stale) replica, and
    /// whether it is meant to be rejected.
    fn random_op(&mut self, i: usize) -> (SessionOp, bool) {
        let me = self.members[i].name.clone();
        let replica = self.members[i].replica.as_ref().expect("has replica");
        let posts: Vec<(u64, Username)> = replica
            .project
            .posts()
            .iter()
            .map(|p| (p.post_number, p.author.clone()))
            .collect();
        let mine: Vec<u64> = posts.iter().filter(|(_, a)| *a == me).map(|(n, _)| *n).collect();
        let theirs: Vec<u64> = posts.iter().filter(|(_, a)| *a != me).map(|(n, _)| *n).collect();

        let roll = self.rng.random_range(0..100);
        match roll {
            0..=34 => {}
            35..=54 if !mine.is_empty() => {
                let post_number = *mine.choose(&mut self.rng).expect("non-empty");
                let new_body = self.random_body();
                return (
                    SessionOp::EditPost {
                        actor: me,
                        post_number,
                        new_body,
                    },
                    false,
                );
            }
            55..=79 if !posts.is_empty() => {
                let post_number = posts.choose(&mut self.rng).expect("non-empty").0;
                let text = self.random_body().replace('\n', " ");
                return (
                    SessionOp::AddComment {
                        actor: me,
                        post_number,
                        text,
                    },
                    false,
                );
            }
            80..=84 => {
                let n = self.rng.random_range(0..1000);
                return (
                    SessionOp::SetMeta {
                        title: format!("Analysis {n}"),
                        description: format!("edited by {me}"),
                    },
                    false,
                );
            }
            85..=89 => {
                let tags = (0..self.rng.random_range(1..3))
                    .map(|_| TAG_POOL.choose(&mut self.rng).expect("non-empty").parse().expect("valid"))
                    .collect();
                return (SessionOp::DefineTags { tags }, false);
            }
            90..=99 => return (self.invalid_op(me, &theirs), true),
            _ => {}
        }
        let start_ms = self.random_timecode();
        let end_ms = self
            .rng
            .random_bool(0.5)
            .then(|| Timecode::from_ms(start_ms.as_ms() + self.rng.random_range(0..2000u64) * 10).ok())
            .flatten();
        let category = *Category::ALL.choose(&mut self.rng).expect("non-empty");
        let body = self.random_body();
        (
            SessionOp::CreatePost {
                author: me,
                start_ms,
                end_ms,
                category,
                body,
            },
            false,
        )
    }

    fn invalid_op(&mut self, me: Username, theirs: &[u64]) -> SessionOp {
        match self.rng.random_range(0..5) {
            0 if !theirs.is_empty() => SessionOp::EditPost {
                actor: me,
                post_number: *theirs.choose(&mut self.rng).expect("non-empty"),
                new_body: "not mine".into(),
            },
            1 => SessionOp::AddComment {
                actor: me,
                post_number: 1_000_000,
                text: "nowhere".into(),
            },
            2 => SessionOp::CreatePost {
                author: me,
                start_ms: Timecode::from_ms(5_000).expect("valid"),
                end_ms: Some(Timecode::from_ms(4_000).expect("valid")),
                category: Category::Audio,
                body: "backwards".into(),
            },
            3 => {
                let other = self
                    .members
                    .iter()
                    .map(|m| m.name.clone())
                    .find(|n| *n != me)
                    .unwrap_or_else(|| Username::new("ghost").expect("valid"));
                SessionOp::CreatePost {
                    author: other,
                    start_ms: Timecode::ZERO,
                    end_ms: None,
                    category: Category::Text,
                    body: "impersonated".into(),
                }
            }
            _ => SessionOp::CreatePost {
                author: me,
                start_ms: Timecode::ZERO,
                end_ms: None,
                category: Category::Text,
                body: "   ".into(),
            },
        }
    }

    /// Sends an op meant to fail and checks it changed nothing.
    fn send_invalid(&mut self, i: usize, op: SessionOp) -> Result<(), String> {
        let before = self.hub.session_state(&self.code).ok_or("session vanished")?;
        let queued: Vec<usize> = self
            .members
            .iter()
            .map(|m| m.conn.as_ref().map_or(0, |(_, rx)| rx.len()))
            .collect();
        let (id, _) = self.members[i].conn.as_ref().expect("connected");
        self.hub.handle_text(*id, &op_frame(op), self.now);
        let after = self.hub.session_state(&self.code).ok_or("session vanished")?;
        if project_hash(&before.project) != project_hash(&after.project) || before.last_seq != after.last_seq {
            return Err("a rejected op changed the server project".into());
        }
        for (j, m) in self.members.iter().enumerate() {
            let now_queued = m.conn.as_ref().map_or(0, |(_, rx)| rx.len());
            let expected = queued[j] + usize::from(j == i);
            if now_queued != expected {
                return Err(format!("rejected op produced traffic for {}", m.name));
            }
        }
        Ok(())
    }

    fn step(&mut self) -> Result<(), String> {
        self.now += Duration::from_millis(10);

        if self.cfg.faults && self.rng.random_bool(0.04) {
            let i = self.rng.random_range(0..self.members.len());
            if self.members[i].conn.is_some() {
                if self.connected_count() > 1 {
                    self.leave(i);
                    self.report.disconnects += 1;
                }
            } else {
                self.join(i);
                self.report.rejoins += 1;
            }
        }

        let ready: Vec<usize> = (0..self.members.len())
            .filter(|&i| self.members[i].replica.is_some() && self.members[i].conn.is_some())
            .collect();
        if let Some(&i) = ready.choose(&mut self.rng) {
            let (op, invalid) = self.random_op(i);
            self.report.ops_sent += 1;
            if invalid {
                self.send_invalid(i, op)?;
            } else {
                let (id, _) = self.members[i].conn.as_ref().expect("connected");
                self.hub.handle_text(*id, &op_frame(op), self.now);
            }
        }

        for i in 0..self.members.len() {
            if self.rng.random_bool(0.5) {
                let limit = self.rng.random_range(1..8);
                self.deliver(i, limit)?;
            }
        }
        Ok(())
    }

    fn settle(&mut self) -> Result<(), String> {
        self.settling = true;
        for i in 0..self.members.len() {
            if self.members[i].conn.is_none() {
                self.join(i);
                self.report.rejoins += 1;
            }
        }
        // Keep reading until every client has a replica and no frames remain.
        // A barrier op flushes out any client that lost the final envelopes.
        let mut barrier_sent = false;
        for _ in 0..100 {
            self.deliver_all()?;
            let idle = self
                .members
                .iter()
                .all(|m| m.replica.is_some() && m.conn.as_ref().is_some_and(|(_, rx)| rx.is_empty()));
            if idle && barrier_sent {
                return Ok(());
            }
            if idle {
                let (id, _) = self.members[0].conn.as_ref().expect("connected");
                let barrier = SessionOp::SetMeta {
                    title: "final".into(),
                    description: format!("seed {}", self.cfg.seed),
                };
                self.hub.handle_text(*id, &op_frame(barrier), self.now);
                barrier_sent = true;
            }
        }
        Err("clients did not settle".into())
    }

    fn check(&self) -> Result<String, String> {
        let server = self.hub.session_state(&self.code).ok_or("session vanished")?;
        for m in &self.members {
            let replica = m.replica.as_ref().ok_or_else(|| format!("{} has no replica", m.name))?;
            if replica.last_seq != server.last_seq {
                return Err(format!(
                    "{} is at seq {} but the server is at {}",
                    m.name, replica.last_seq, server.last_seq
                ));
            }
            if replica.project != server.project {
                return Err(format!("{} diverged: {}", m.name, first_difference(&replica.project, &server.project)));
            }
        }
        Ok(project_hash(&server.project))
    }
}

fn first_difference(replica: &Project, server: &Project) -> String {
    let pairs = replica.posts().iter().zip(server.posts());
    for (a, b) in pairs {
        if a != b {
            return format!("replica post {a:?} vs server post {b:?}");
        }
    }
    if replica.posts().len() != server.posts().len() {
        return format!(
            "replica has {} posts, server has {}",
            replica.posts().len(),
            server.posts().len()
        );
    }
    "project metadata differs".into()
}

fn initial_project() -> Project {
    let mut p = Project::new("https://youtu.be/simulated").expect("valid url");
    p.set_meta("Simulated class", "").expect("single line");
    p.define_tags(["A1", "A2"]).expect("valid tags");
    p
}

fn member_name(i: usize) -> Username {
    let name = match i {
        0 => "Mrs. Miller".to_string(),
        1 => "Maggie".to_string(),
        2 => "Luke".to_string(),
        3 => "joseph12".to_string(),
        n => format!("student {n}"),
    };
    Username::new(name).expect("valid name")
}

pub fn simulate(cfg: &SimConfig) -> SimReport {
    let started = Instant::now();
    let mut report = run(cfg);
    report.elapsed = started.elapsed();
    report
}

fn run(cfg: &SimConfig) -> SimReport {
    let fail = |msg: String, report: SimReport| SimReport {
        passed: false,
        failure: Some(msg),
        ..report
    };
    if cfg.clients == 0 {
        return fail("need at least one client".into(), SimReport::default());
    }
    let hub = Hub::new(HubConfig {
        seed: Some(cfg.seed),
        queue_cap: 1 << 16,
        ..HubConfig::default()
    });
    let now = Duration::ZERO;
    let (host, mut host_rx) = hub.connect(now);
    let create = ClientFrame::Create {
        name: member_name(0),
        project: initial_project(),
    };
    hub.handle_text(host, &create.encode(), now);
    let welcome = host_rx
        .try_recv()
        .ok()
        .and_then(|t| decode_server(&t).ok());
    let Some(ServerFrame::Welcome { code, seq, project, .. }) = welcome else {
        return fail("host did not get a welcome".into(), SimReport::default());
    };
    let code: SessionCode = code.parse().expect("server codes are valid");

    let mut members = vec![Member {
        name: member_name(0),
        conn: Some((host, host_rx)),
        replica: Some(Replica::new(project, seq)),
    }];
    members.extend((1..cfg.clients).map(|i| Member {
        name: member_name(i),
        conn: None,
        replica: None,
    }));

    let mut sim = Sim {
        hub,
        code,
        members,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed),
        cfg,
        now,
        report: SimReport::default(),
        settling: false,
    };
    for i in 1..cfg.clients {
        sim.join(i);
    }

    let outcome = (|| {
        while sim.report.ops_sent < cfg.ops {
            sim.step()?;
        }
        sim.settle()?;
        sim.check()
    })();
    let mut report = std::mem::take(&mut sim.report);
    report.accepted = sim.hub.session_state(&code).map_or(0, |s| s.last_seq);
    match outcome {
        Ok(hash) => {
            report.passed = true;
            report.final_hash = hash;
            report
        }
        Err(msg) => fail(msg, report),
    }
}
