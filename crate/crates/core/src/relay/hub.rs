//! Transport-independent core of the relay: connections, session routing,
//! broadcast, heartbeats, and expiry.
//!
//! Each session sits behind its own mutex, which is the serialization point
//! for that session's ops. Outbound frames go through bounded per-connection
//! queues with `try_send`, so a slow reader never stalls a session; a
//! connection whose queue overflows is dropped.
//!
//! Lock order: session map, then a session, then the connection table.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use parking_lot::Mutex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tokio::sync::mpsc;

use super::wire::{decode_client, ClientFrame, ServerFrame, MALFORMED_FRAME};
use crate::model::{Project, Username};
use crate::protocol::{generate_code, ProtocolError, SessionCode, SessionOp, SessionState, DEFAULT_GRACE};

pub type ConnId = u64;

/// An encoded frame. Broadcasts share one allocation across receivers.
pub type Outbound = Arc<str>;

#[derive(Debug, Clone)]
pub struct HubConfig {
    pub grace: Duration,
    pub heartbeat: Duration,
    pub queue_cap: usize,
    /// Seed for join-code generation; `None` seeds from the OS.
    pub seed: Option<u64>,
}

impl Default for HubConfig {
    fn default() -> Self {
        HubConfig {
            grace: DEFAULT_GRACE,
            heartbeat: Duration::from_secs(15),
            queue_cap: 256,
            seed: None,
        }
    }
}

struct Conn {
    tx: mpsc::Sender<Outbound>,
    binding: Option<(SessionCode, Username)>,
    last_heard: Duration,
}

struct Live {
    state: SessionState,
    members: BTreeMap<Username, ConnId>,
}

type SharedLive = Arc<Mutex<Live>>;

pub struct Hub {
    config: HubConfig,
    sessions: Mutex<HashMap<SessionCode, SharedLive>>,
    conns: Mutex<HashMap<ConnId, Conn>>,
    rng: Mutex<ChaCha8Rng>,
    next_id: AtomicU64,
}

/// Connections whose queue overflowed while sending; dropped afterwards.
#[derive(Default)]
struct Overflow(Vec<ConnId>);

fn encode(frame: &ServerFrame) -> Outbound {
    Arc::from(frame.encode())
}

impl Hub {
    pub fn new(config: HubConfig) -> Self {
        let rng = match config.seed {
            Some(seed) => ChaCha8Rng::seed_from_u64(seed),
            None => ChaCha8Rng::from_os_rng(),
        };
        Hub {
            config,
            sessions: Mutex::new(HashMap::new()),
            conns: Mutex::new(HashMap::new()),
            rng: Mutex::new(rng),
            next_id: AtomicU64::new(1),
        }
    }

    pub fn config(&self) -> &HubConfig {
        &self.config
    }

    /// Registers a new connection and returns its outbound queue.
    pub fn connect(&self, now: Duration) -> (ConnId, mpsc::Receiver<Outbound>) {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let (tx, rx) = mpsc::channel(self.config.queue_cap.max(1));
        self.conns.lock().insert(
            id,
            Conn {
                tx,
                binding: None,
                last_heard: now,
            },
        );
        (id, rx)
    }

    pub fn touch(&self, conn: ConnId, now: Duration) {
        if let Some(c) = self.conns.lock().get_mut(&conn) {
            c.last_heard = now;
        }
    }

    pub fn connection_count(&self) -> usize {
        self.conns.lock().len()
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().len()
    }

    /// A copy of a live session's state, for inspection.
    pub fn session_state(&self, code: &SessionCode) -> Option<SessionState> {
        let live = self.sessions.lock().get(code).cloned()?;
        let state = live.lock().state.clone();
        Some(state)
    }

    pub fn binding(&self, conn: ConnId) -> Option<(SessionCode, Username)> {
        self.conns.lock().get(&conn).and_then(|c| c.binding.clone())
    }

    fn send_locked(conns: &HashMap<ConnId, Conn>, to: ConnId, frame: &Outbound, overflow: &mut Overflow) {
        if let Some(c) = conns.get(&to) {
            if let Err(mpsc::error::TrySendError::Full(_)) = c.tx.try_send(frame.clone()) {
                overflow.0.push(to);
            }
        }
    }

    fn send(&self, to: ConnId, frame: &ServerFrame, overflow: &mut Overflow) {
        Self::send_locked(&self.conns.lock(), to, &encode(frame), overflow);
    }

    fn broadcast<'a>(&self, to: impl IntoIterator<Item = &'a ConnId>, frame: &Outbound, overflow: &mut Overflow) {
        let conns = self.conns.lock();
        for id in to {
            Self::send_locked(&conns, *id, frame, overflow);
        }
    }

    fn finish(&self, overflow: Overflow, now: Duration) {
        let mut pending = overflow.0;
        while let Some(id) = pending.pop() {
            tracing::warn!(conn = id, "send queue overflow, dropping connection");
            pending.extend(self.drop_conn(id, now).0);
        }
    }

    /// Rejects a frame the transport could not even decode (e.g. binary).
    pub fn reject(&self, conn: ConnId, code: &str, msg: &str, now: Duration) {
        self.touch(conn, now);
        let mut overflow = Overflow::default();
        self.send(conn, &ServerFrame::error(code, msg), &mut overflow);
        self.finish(overflow, now);
    }

    /// Handles one inbound text frame.
    pub fn handle_text(&self, conn: ConnId, text: &str, now: Duration) {
        self.touch(conn, now);
        let mut overflow = Overflow::default();
        match decode_client(text) {
            Err(e) => self.send(conn, &ServerFrame::error(e.code, e.msg), &mut overflow),
            Ok(frame) => self.route(conn, frame, now, &mut overflow),
        }
        self.finish(overflow, now);
    }

    fn route(&self, conn: ConnId, frame: ClientFrame, now: Duration, overflow: &mut Overflow) {
        let reply_err = |e: &ProtocolError, overflow: &mut Overflow| {
            self.send(conn, &ServerFrame::error(e.code(), e.to_string()), overflow)
        };
        match frame {
            ClientFrame::Ping => self.send(conn, &ServerFrame::Pong, overflow),
            ClientFrame::Create { .. } | ClientFrame::Join { .. } if self.binding(conn).is_some() => self.send(
                conn,
                &ServerFrame::error(MALFORMED_FRAME, "connection is already in a session"),
                overflow,
            ),
            ClientFrame::Create { name, project } => self.create(conn, name, project, overflow),
            ClientFrame::Join { code, name } => match code.parse::<SessionCode>() {
                Ok(code) => {
                    if let Err(e) = self.join(conn, code, name, now, overflow) {
                        reply_err(&e, overflow);
                    }
                }
                Err(_) => reply_err(&ProtocolError::SessionNotFound, overflow),
            },
            ClientFrame::Op { op } => {
                if let Err(e) = self.op(conn, op, overflow) {
                    reply_err(&e, overflow);
                }
            }
        }
    }

    fn create(&self, conn: ConnId, name: Username, project: Project, overflow: &mut Overflow) {
        let mut sessions = self.sessions.lock();
        let code = generate_code(&mut *self.rng.lock(), |c| sessions.contains_key(c))
            .expect("code space exhausted");
        let state = SessionState::new(&project, name.clone(), code);
        let welcome = ServerFrame::Welcome {
            code: code.to_string(),
            seq: 0,
            project: state.project.clone(),
            roster: vec![name.to_string()],
        };
        let live = Live {
            state,
            members: BTreeMap::from([(name.clone(), conn)]),
        };
        sessions.insert(code, Arc::new(Mutex::new(live)));
        drop(sessions);
        if let Some(c) = self.conns.lock().get_mut(&conn) {
            c.binding = Some((code, name.clone()));
        }
        tracing::info!(%code, host = %name, "session created");
        self.send(conn, &welcome, overflow);
    }

    fn join(
        &self,
        conn: ConnId,
        code: SessionCode,
        name: Username,
        now: Duration,
        overflow: &mut Overflow,
    ) -> Result<(), ProtocolError> {
        let mut sessions = self.sessions.lock();
        let live = sessions.get(&code).cloned().ok_or(ProtocolError::SessionNotFound)?;
        let mut live = live.lock();
        if live.state.is_expired(now, self.config.grace) {
            sessions.remove(&code);
            tracing::info!(%code, "session expired");
            return Err(ProtocolError::SessionNotFound);
        }
        drop(sessions);
        let snapshot = live.state.handle_join(name.clone())?;
        live.members.insert(name.clone(), conn);
        if let Some(c) = self.conns.lock().get_mut(&conn) {
            c.binding = Some((code, name.clone()));
        }
        let welcome = ServerFrame::Welcome {
            code: code.to_string(),
            seq: snapshot.last_seq,
            project: snapshot.project,
            roster: snapshot.roster.iter().map(|u| u.to_string()).collect(),
        };
        self.send(conn, &welcome, overflow);
        let presence = encode(&ServerFrame::Presence {
            joined: vec![name.to_string()],
            left: vec![],
        });
        let others: Vec<ConnId> = live
            .members
            .iter()
            .filter(|(member, _)| **member != name)
            .map(|(_, id)| *id)
            .collect();
        self.broadcast(&others, &presence, overflow);
        Ok(())
    }

    fn op(&self, conn: ConnId, op: SessionOp, overflow: &mut Overflow) -> Result<(), ProtocolError> {
        let (code, origin) = self.binding(conn).ok_or(ProtocolError::NotMember)?;
        let live = self
            .sessions
            .lock()
            .get(&code)
            .cloned()
            .ok_or(ProtocolError::SessionNotFound)?;
        let mut live = live.lock();
        let env = live.state.apply_op(&origin, op)?;
        let frame = encode(&ServerFrame::envelope(&env));
        self.broadcast(live.members.values(), &frame, overflow);
        Ok(())
    }

    fn drop_conn(&self, conn: ConnId, now: Duration) -> Overflow {
        let mut overflow = Overflow::default();
        let Some(entry) = self.conns.lock().remove(&conn) else {
            return overflow;
        };
        let Some((code, name)) = entry.binding else {
            return overflow;
        };
        let Some(live) = self.sessions.lock().get(&code).cloned() else {
            return overflow;
        };
        let mut live = live.lock();
        if live.members.get(&name) != Some(&conn) {
            return overflow;
        }
        live.members.remove(&name);
        let _ = live.state.handle_disconnect(&name, now);
        let presence = encode(&ServerFrame::Presence {
            joined: vec![],
            left: vec![name.to_string()],
        });
        self.broadcast(live.members.values(), &presence, &mut overflow);
        overflow
    }

    /// Closes a connection and treats it as leaving its session.
    pub fn disconnect(&self, conn: ConnId, now: Duration) {
        let overflow = self.drop_conn(conn, now);
        self.finish(overflow, now);
    }

    /// Drops connections silent for more than three heartbeat intervals.
    pub fn heartbeat_sweep(&self, now: Duration) -> Vec<ConnId> {
        let limit = self.config.heartbeat * 3;
        let mut silent: Vec<ConnId> = self
            .conns
            .lock()
            .iter()
            .filter(|(_, c)| now.saturating_sub(c.last_heard) > limit)
            .map(|(id, _)| *id)
            .collect();
        silent.sort_unstable();
        for id in &silent {
            tracing::info!(conn = id, "heartbeat timeout");
            self.disconnect(*id, now);
        }
        silent
    }

    /// Destroys sessions that have been empty for the grace period.
    pub fn tick(&self, now: Duration) -> Vec<SessionCode> {
        let mut sessions = self.sessions.lock();
        let mut expired: Vec<SessionCode> = sessions
            .iter()
            .filter(|(_, live)| live.lock().state.is_expired(now, self.config.grace))
            .map(|(code, _)| *code)
            .collect();
        expired.sort_unstable();
        for code in &expired {
            sessions.remove(code);
            tracing::info!(%code, "session expired");
        }
        expired
    }

    /// Sends GOODBYE to every connection and forgets all state.
    pub fn shutdown(&self) {
        let goodbye = encode(&ServerFrame::Goodbye);
        let mut conns = self.conns.lock();
        for c in conns.values() {
            let _ = c.tx.try_send(goodbye.clone());
        }
        conns.clear();
        drop(conns);
        self.sessions.lock().clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relay::wire::decode_server;

    fn secs(s: u64) -> Duration {
        Duration::from_secs(s)
    }

    fn drain(rx: &mut mpsc::Receiver<Outbound>) -> Vec<ServerFrame> {
        let mut out = Vec::new();
        while let Ok(f) = rx.try_recv() {
            out.push(decode_server(&f).unwrap());
        }
        out
    }

    fn create_frame(name: &str) -> String {
        ClientFrame::Create {
            name: Username::new(name).unwrap(),
            project: Project::new("https://youtu.be/x").unwrap(),
        }
        .encode()
    }

    fn join_frame(code: &str, name: &str) -> String {
        format!(r#"{{"t":"join","code":"{code}","name":"{name}"}}"#)
    }

    fn welcome_code(frames: &[ServerFrame]) -> String {
        match &frames[0] {
            ServerFrame::Welcome { code, .. } => code.clone(),
            other => panic!("expected welcome, got {other:?}"),
        }
    }

    fn error_code(frames: &[ServerFrame]) -> String {
        match frames {
            [ServerFrame::Error { code, .. }] => code.clone(),
            other => panic!("expected one error, got {other:?}"),
        }
    }

    fn hub() -> Hub {
        Hub::new(HubConfig {
            seed: Some(1),
            ..HubConfig::default()
        })
    }

    #[test]
    fn ping_and_unbound_op() {
        let hub = hub();
        let (a, mut rx) = hub.connect(secs(0));
        hub.handle_text(a, r#"{"t":"ping"}"#, secs(0));
        assert_eq!(drain(&mut rx), [ServerFrame::Pong]);
        hub.handle_text(a, r#"{"t":"op","op":{"kind":"set_meta","title":"","description":""}}"#, secs(0));
        assert_eq!(error_code(&drain(&mut rx)), "NOT_MEMBER");
        hub.handle_text(a, r#"{"t":"welcome"}"#, secs(0));
        assert_eq!(error_code(&drain(&mut rx)), "UNSUPPORTED_TYPE");
        hub.handle_text(a, "{", secs(0));
        assert_eq!(error_code(&drain(&mut rx)), "MALFORMED_FRAME");
    }

    #[test]
    fn join_gets_snapshot_and_room_gets_presence() {
        let hub = hub();
        let (a, mut rx_a) = hub.connect(secs(0));
        hub.handle_text(a, &create_frame("Mrs. Miller"), secs(0));
        let code = welcome_code(&drain(&mut rx_a));
        hub.handle_text(a, r#"{"t":"op","op":{"kind":"set_meta","title":"T","description":""}}"#, secs(0));
        assert_eq!(drain(&mut rx_a).len(), 1);

        let (b, mut rx_b) = hub.connect(secs(0));
        hub.handle_text(b, &join_frame(&code.to_lowercase(), "Luke"), secs(1));
        match &drain(&mut rx_b)[..] {
            [ServerFrame::Welcome { seq, project, roster, .. }] => {
                assert_eq!(*seq, 1);
                assert_eq!(project.title(), "T");
                assert_eq!(roster, &["Luke", "Mrs. Miller"]);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(
            drain(&mut rx_a),
            [ServerFrame::Presence {
                joined: vec!["Luke".into()],
                left: vec![]
            }]
        );

        let (c, mut rx_c) = hub.connect(secs(0));
        hub.handle_text(c, &join_frame(&code, "Luke"), secs(1));
        assert_eq!(error_code(&drain(&mut rx_c)), "DUPLICATE_NAME");
        hub.handle_text(c, &join_frame("ZZZZZZ", "Luke"), secs(1));
        assert_eq!(error_code(&drain(&mut rx_c)), "SESSION_NOT_FOUND");
        hub.handle_text(c, &join_frame("bad!", "Luke"), secs(1));
        assert_eq!(error_code(&drain(&mut rx_c)), "SESSION_NOT_FOUND");
    }

    #[test]
    fn envelopes_reach_whole_room_errors_only_origin() {
        let hub = hub();
        let (a, mut rx_a) = hub.connect(secs(0));
        hub.handle_text(a, &create_frame("Luke"), secs(0));
        let code = welcome_code(&drain(&mut rx_a));
        let (b, mut rx_b) = hub.connect(secs(0));
        hub.handle_text(b, &join_frame(&code, "joseph12"), secs(0));
        drain(&mut rx_a);
        drain(&mut rx_b);

        let post = r#"{"t":"op","op":{"kind":"create_post","author":"Luke","start_ms":143180,"end_ms":null,"category":"PICTURE","body":"x"}}"#;
        hub.handle_text(a, post, secs(0));
        let fa = drain(&mut rx_a);
        let fb = drain(&mut rx_b);
        assert_eq!(fa, fb);
        assert!(matches!(fa[..], [ServerFrame::Env { seq: 1, .. }]));

        let steal = r#"{"t":"op","op":{"kind":"edit_post","actor":"joseph12","post_number":1,"new_body":"y"}}"#;
        hub.handle_text(b, steal, secs(0));
        assert_eq!(error_code(&drain(&mut rx_b)), "NOT_AUTHOR");
        assert!(drain(&mut rx_a).is_empty());
        let fake = r#"{"t":"op","op":{"kind":"add_comment","actor":"Luke","post_number":1,"text":"y"}}"#;
        hub.handle_text(b, fake, secs(0));
        assert_eq!(error_code(&drain(&mut rx_b)), "IMPERSONATION");
        let missing = r#"{"t":"op","op":{"kind":"add_comment","actor":"joseph12","post_number":9,"text":"y"}}"#;
        hub.handle_text(b, missing, secs(0));
        assert_eq!(error_code(&drain(&mut rx_b)), "UNKNOWN_POST");
        let code: SessionCode = code.parse().unwrap();
        assert_eq!(hub.session_state(&code).unwrap().last_seq, 1);
    }

    #[test]
    fn heartbeat_boundary_and_grace() {
        let hub = hub();
        let (a, mut rx_a) = hub.connect(secs(0));
        hub.handle_text(a, &create_frame("a"), secs(0));
        let code: SessionCode = welcome_code(&drain(&mut rx_a)).parse().unwrap();
        let (b, _rx_b) = hub.connect(secs(0));
        hub.handle_text(b, &join_frame(code.as_str(), "b"), secs(0));

        for t in (15..=120).step_by(15) {
            hub.handle_text(a, r#"{"t":"ping"}"#, secs(t));
        }
        assert!(hub.heartbeat_sweep(secs(45)).is_empty());
        assert_eq!(hub.heartbeat_sweep(secs(46)), [b]);
        assert!(hub.heartbeat_sweep(secs(120)).is_empty());
        drain(&mut rx_a);
        assert_eq!(hub.session_state(&code).unwrap().empty_since, None);

        assert_eq!(hub.heartbeat_sweep(secs(166)), [a]);
        assert_eq!(hub.session_state(&code).unwrap().empty_since, Some(secs(166)));
        assert!(hub.tick(secs(166 + 59)).is_empty());
        assert_eq!(hub.tick(secs(166 + 60)), [code]);
        assert_eq!(hub.session_count(), 0);
    }

    #[test]
    fn overflowing_client_is_dropped_without_blocking() {
        let hub = Hub::new(HubConfig {
            queue_cap: 4,
            seed: Some(2),
            ..HubConfig::default()
        });
        let (a, mut rx_a) = hub.connect(secs(0));
        hub.handle_text(a, &create_frame("a"), secs(0));
        let code = welcome_code(&drain(&mut rx_a));
        let (b, rx_b) = hub.connect(secs(0));
        hub.handle_text(b, &join_frame(&code, "slow"), secs(0));
        for i in 0..10 {
            let op = format!(r#"{{"t":"op","op":{{"kind":"set_meta","title":"{i}","description":""}}}}"#);
            hub.handle_text(a, &op, secs(0));
            drain(&mut rx_a);
        }
        assert!(hub.binding(b).is_none());
        let code: SessionCode = code.parse().unwrap();
        let state = hub.session_state(&code).unwrap();
        assert_eq!(state.last_seq, 10);
        assert_eq!(state.connected.len(), 1);
        drop(rx_b);
    }

    #[test]
    fn shutdown_says_goodbye_and_forgets() {
        let hub = hub();
        let (a, mut rx_a) = hub.connect(secs(0));
        hub.handle_text(a, &create_frame("a"), secs(0));
        drain(&mut rx_a);
        hub.shutdown();
        assert_eq!(drain(&mut rx_a), [ServerFrame::Goodbye]);
        assert_eq!(hub.session_count(), 0);
        assert_eq!(hub.connection_count(), 0);
    }
}
