mod common;

use std::time::Duration;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use travisgo::model::{Project, Username};
use travisgo::protocol::{
    generate_code, OpEnvelope, ProtocolError, Replica, SessionCode, SessionOp, SessionState, Sessions, CODE_ALPHABET,
    CODE_SPACE,
};
use travisgo::sim::project_hash;
use travisgo::Timecode;

const MEMBERS: usize = 4;

/// A random op from one of the members; roughly a third are invalid.
#[derive(Debug, Clone)]
struct Step {
    origin: usize,
    claimed: usize,
    action: Action,
}

fn step() -> impl Strategy<Value = Step> {
    (0..MEMBERS, prop::option::weighted(0.1, 0..NAME_POOL.len()), action()).prop_map(|(origin, imp, action)| Step {
        origin,
        claimed: imp.unwrap_or(origin),
        action,
    })
}

fn to_op(step: &Step, project: &Project) -> SessionOp {
    let pick = |p: usize| {
        let posts = project.posts();
        if posts.is_empty() { 1 } else { posts[p % posts.len()].post_number }
    };
    let actor = name(step.claimed);
    match &step.action {
        Action::Meta(t, d) => SessionOp::SetMeta { title: t.clone(), description: d.clone() },
        Action::Tags(tags) => SessionOp::DefineTags { tags: tags.iter().filter_map(|t| t.parse().ok()).collect() },
        Action::Create { start, len, category, body, .. } => SessionOp::CreatePost {
            author: actor,
            start_ms: Timecode::from_ms(*start).unwrap(),
            end_ms: len.and_then(|l| Timecode::from_ms(start + l).ok()),
            category: *category,
            body: body.clone(),
        },
        Action::Comment { pick: p, text, .. } => SessionOp::AddComment { actor, post_number: pick(*p), text: text.clone() },
        Action::Edit { pick: p, body } => SessionOp::EditPost { actor, post_number: pick(*p), new_body: body.clone() },
    }
}

fn session_with_members(initial: &Project) -> SessionState {
    let mut s = SessionState::new(initial, name(0), "ABCDEF".parse().unwrap());
    for i in 1..MEMBERS {
        s.handle_join(name(i)).unwrap();
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    /// Sequencing is gapless, rejections are free, and folding the
    /// broadcast log from any snapshot reaches the server state.
    #[test]
    fn replicas_converge_from_any_snapshot(initial in arb_project(8), steps in prop::collection::vec(step(), 0..80), k in any::<prop::sample::Index>()) {
        let mut server = session_with_members(&initial);
        let mut log: Vec<OpEnvelope> = Vec::new();
        let mut snapshots = vec![server.snapshot()];
        for s in &steps {
            let before_hash = project_hash(&server.project);
            let before_seq = server.last_seq;
            let op = to_op(s, &server.project);
            match server.apply_op(&name(s.origin), op.clone()) {
                Ok(env) => {
                    prop_assert_eq!(env.seq, before_seq + 1);
                    prop_assert_eq!(&env.origin, &name(s.origin));
                    prop_assert_eq!(&env.op, &op);
                    log.push(env);
                }
                Err(e) => {
                    if s.claimed != s.origin && op.acting_user().is_some() && name(s.claimed) != name(s.origin) {
                        let is_impersonation = matches!(e, ProtocolError::Impersonation { .. });
                        prop_assert!(is_impersonation, "{:?}", e);
                    }
                    prop_assert_eq!(server.last_seq, before_seq);
                    prop_assert_eq!(project_hash(&server.project), before_hash);
                }
            }
            snapshots.push(server.snapshot());
        }

        let snap = &snapshots[k.index(snapshots.len())];
        let mut replica = Replica::new(snap.project.clone(), snap.last_seq);
        for env in &log[snap.last_seq as usize..] {
            replica.client_apply(env).unwrap();
        }
        prop_assert_eq!(replica.last_seq, server.last_seq);
        prop_assert_eq!(&replica.project, &server.project);

        // Replaying twice or skipping is detected.
        if let Some(first) = log.first() {
            let mut r = Replica::new(initial.clone(), 0);
            r.client_apply(first).unwrap();
            let dup = r.client_apply(first);
            prop_assert!(matches!(dup, Err(ProtocolError::SeqGap { expected: 2, got: 1 })), "{:?}", dup);
        }
        if log.len() >= 2 {
            let skip = Replica::new(initial.clone(), 0).client_apply(&log[1]);
            prop_assert!(matches!(skip, Err(ProtocolError::SeqGap { expected: 1, got: 2 })), "{:?}", skip);
        }
    }

    #[test]
    fn envelopes_survive_json(initial in arb_project(4), steps in prop::collection::vec(step(), 0..30)) {
        let mut server = session_with_members(&initial);
        for s in &steps {
            let op = to_op(s, &server.project);
            if let Ok(env) = server.apply_op(&name(s.origin), op) {
                let json = serde_json::to_string(&env).unwrap();
                let back: OpEnvelope = serde_json::from_str(&json).unwrap();
                prop_assert_eq!(back, env);
            }
        }
    }

    #[test]
    fn codes_are_canonical(index in 0..CODE_SPACE) {
        let code = SessionCode::from_index(index);
        prop_assert_eq!(code.index(), index);
        prop_assert!(code.as_str().chars().all(|c| CODE_ALPHABET.contains(&(c as u8))));
        prop_assert_eq!(code.as_str().to_lowercase().parse::<SessionCode>().unwrap(), code);
    }
}

#[test]
fn code_alphabet_avoids_confusable_glyphs() {
    assert_eq!(CODE_ALPHABET.len(), 31);
    assert_eq!(CODE_SPACE, 887_503_681);
    for c in ['0', 'O', '1', 'I', 'L'] {
        assert!(!CODE_ALPHABET.contains(&(c as u8)), "{c}");
    }
    for bad in ["ABCDE", "ABCDEFG", "ABCDE0", "ABC EF", ""] {
        assert!(bad.parse::<SessionCode>().is_err(), "{bad}");
    }
}

#[test]
fn generated_codes_avoid_live_ones() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut sessions = Sessions::new(Duration::from_secs(60));
    let project = Project::new(URLS[0]).unwrap();
    for _ in 0..2000 {
        let code = sessions.fresh_code(&mut rng);
        sessions.create_session(&project, name(0), code).unwrap();
    }
    assert_eq!(sessions.len(), 2000);
    let taken: Vec<SessionCode> = sessions.codes().copied().collect();
    let code = generate_code(&mut rng, |c| taken.contains(c)).unwrap();
    assert!(!taken.contains(&code));
    assert!(matches!(
        sessions.create_session(&project, name(0), taken[0]),
        Err(ProtocolError::CodeInUse(_))
    ));
}

#[test]
fn lifecycle_with_synthetic_clock() {
    let grace = Duration::from_secs(60);
    let s = |n: u64| Duration::from_secs(n);
    let mut sessions = Sessions::new(grace);
    let code: SessionCode = "HKPQRS".parse().unwrap();
    let project = Project::new(URLS[0]).unwrap();
    let (a, b) = (Username::new("A").unwrap(), Username::new("B").unwrap());
    sessions.create_session(&project, a.clone(), code).unwrap();
    sessions.handle_join(&code, b.clone(), s(1)).unwrap();
    assert!(matches!(sessions.handle_join(&code, b.clone(), s(1)), Err(ProtocolError::DuplicateName(_))));

    sessions.handle_disconnect(&code, &a, s(10)).unwrap();
    sessions.handle_disconnect(&code, &b, s(20)).unwrap();
    assert!(sessions.tick(s(79)).is_empty());
    // Rejoin inside the grace window clears the timer.
    let snap = sessions.handle_join(&code, a.clone(), s(79)).unwrap();
    assert_eq!(snap.roster.len(), 1);
    sessions.handle_disconnect(&code, &a, s(100)).unwrap();
    assert!(sessions.tick(s(159)).is_empty());
    assert_eq!(sessions.tick(s(160)).into_iter().collect::<Vec<_>>(), [code]);
    assert!(matches!(sessions.handle_join(&code, a.clone(), s(161)), Err(ProtocolError::SessionNotFound)));

    // Lazy expiry on join even without a tick.
    sessions.create_session(&project, a.clone(), code).unwrap();
    sessions.handle_disconnect(&code, &a, s(200)).unwrap();
    assert!(matches!(sessions.handle_join(&code, b, s(261)), Err(ProtocolError::SessionNotFound)));
}
