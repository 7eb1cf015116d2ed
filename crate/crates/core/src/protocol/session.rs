use std::collections::{BTreeSet, HashMap};
use std::time::Duration;

use rand::Rng;

use super::{generate_code, OpEnvelope, ProtocolError, SessionCode, SessionOp};
use crate::model::{Project, Username};

/// How long a session with nobody connected survives (covers page reloads).
pub const DEFAULT_GRACE: Duration = Duration::from_secs(60);

/// What a joining client needs to start folding envelopes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinSnapshot {
    pub project: Project,
    pub last_seq: u64,
    pub roster: BTreeSet<Username>,
}

/// Server-side state of one live session. Timestamps are monotonic
/// offsets from an arbitrary epoch chosen by the caller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionState {
    pub code: SessionCode,
    pub project: Project,
    pub connected: BTreeSet<Username>,
    pub last_seq: u64,
    pub empty_since: Option<Duration>,
}

impl SessionState {
    /// Seeds a session with a copy of the host's current project.
    pub fn new(initial: &Project, host: Username, code: SessionCode) -> Self {
        SessionState {
            code,
            project: initial.clone(),
            connected: BTreeSet::from([host]),
            last_seq: 0,
            empty_since: None,
        }
    }

    pub fn snapshot(&self) -> JoinSnapshot {
        JoinSnapshot {
            project: self.project.clone(),
            last_seq: self.last_seq,
            roster: self.connected.clone(),
        }
    }

    /// Adds `name` to the roster. A name that is not currently connected may
    /// be taken by anyone, including a returning contributor.
    pub fn handle_join(&mut self, name: Username) -> Result<JoinSnapshot, ProtocolError> {
        if self.connected.contains(&name) {
            return Err(ProtocolError::DuplicateName(name.to_string()));
        }
        self.connected.insert(name);
        self.empty_since = None;
        Ok(self.snapshot())
    }

    /// Validates and sequences an op. Only accepted ops consume a number.
    pub fn apply_op(&mut self, origin: &Username, op: SessionOp) -> Result<OpEnvelope, ProtocolError> {
        if !self.connected.contains(origin) {
            return Err(ProtocolError::NotMember);
        }
        if let Some(claimed) = op.acting_user() {
            if claimed != origin {
                return Err(ProtocolError::Impersonation {
                    origin: origin.to_string(),
                    claimed: claimed.to_string(),
                });
            }
        }
        op.apply(&mut self.project)?;
        self.last_seq += 1;
        Ok(OpEnvelope {
            seq: self.last_seq,
            origin: origin.clone(),
            op,
        })
    }

    pub fn handle_disconnect(&mut self, name: &Username, now: Duration) -> Result<(), ProtocolError> {
        if !self.connected.remove(name) {
            return Err(ProtocolError::NotMember);
        }
        if self.connected.is_empty() {
            self.empty_since = Some(now);
        }
        Ok(())
    }

    pub fn is_expired(&self, now: Duration, grace: Duration) -> bool {
        self.empty_since
            .is_some_and(|since| now.saturating_sub(since) >= grace)
    }
}

/// All live sessions of one server process, keyed by join code.
#[derive(Debug)]
pub struct Sessions {
    live: HashMap<SessionCode, SessionState>,
    grace: Duration,
}

impl Default for Sessions {
    fn default() -> Self {
        Sessions::new(DEFAULT_GRACE)
    }
}

impl Sessions {
    pub fn new(grace: Duration) -> Self {
        Sessions {
            live: HashMap::new(),
            grace,
        }
    }

    pub fn grace(&self) -> Duration {
        self.grace
    }

    pub fn len(&self) -> usize {
        self.live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.live.is_empty()
    }

    pub fn contains(&self, code: &SessionCode) -> bool {
        self.live.contains_key(code)
    }

    pub fn codes(&self) -> impl Iterator<Item = &SessionCode> {
        self.live.keys()
    }

    pub fn get(&self, code: &SessionCode) -> Option<&SessionState> {
        self.live.get(code)
    }

    pub fn get_mut(&mut self, code: &SessionCode) -> Result<&mut SessionState, ProtocolError> {
        self.live.get_mut(code).ok_or(ProtocolError::SessionNotFound)
    }

    /// A fresh code not used by any live session.
    pub fn fresh_code<R: Rng + ?Sized>(&self, rng: &mut R) -> SessionCode {
        generate_code(rng, |c| self.live.contains_key(c)).expect("live sessions exhaust the code space")
    }

    pub fn create_session(
        &mut self,
        initial: &Project,
        host: Username,
        code: SessionCode,
    ) -> Result<&SessionState, ProtocolError> {
        if self.live.contains_key(&code) {
            return Err(ProtocolError::CodeInUse(code));
        }
        Ok(self
            .live
            .entry(code)
            .or_insert_with(|| SessionState::new(initial, host, code)))
    }

    /// Joins a session. A session already past its grace period counts as
    /// gone even if no tick has collected it yet.
    pub fn handle_join(
        &mut self,
        code: &SessionCode,
        name: Username,
        now: Duration,
    ) -> Result<JoinSnapshot, ProtocolError> {
        if self.live.get(code).is_some_and(|s| s.is_expired(now, self.grace)) {
            self.live.remove(code);
        }
        self.get_mut(code)?.handle_join(name)
    }

    pub fn apply_op(
        &mut self,
        code: &SessionCode,
        origin: &Username,
        op: SessionOp,
    ) -> Result<OpEnvelope, ProtocolError> {
        self.get_mut(code)?.apply_op(origin, op)
    }

    pub fn handle_disconnect(
        &mut self,
        code: &SessionCode,
        name: &Username,
        now: Duration,
    ) -> Result<&SessionState, ProtocolError> {
        let session = self.get_mut(code)?;
        session.handle_disconnect(name, now)?;
        Ok(session)
    }

    /// Destroys every session that has been empty for at least the grace
    /// period and returns their codes.
    pub fn tick(&mut self, now: Duration) -> BTreeSet<SessionCode> {
        let grace = self.grace;
        let expired: BTreeSet<SessionCode> = self
            .live
            .values()
            .filter(|s| s.is_expired(now, grace))
            .map(|s| s.code)
            .collect();
        self.live.retain(|code, _| !expired.contains(code));
        expired
    }
}
