//! Shared generators for the property suites.
#![allow(dead_code)]

pub mod oracle;

use proptest::prelude::*;
use travisgo::model::{Category, Project, Tag, Username};
use travisgo::syntax::timecode::MAX_MS as MAX_MS_U32;
use travisgo::Timecode;

pub const MAX_MS: u64 = MAX_MS_U32 as u64;

pub const TAG_POOL: &[&str] = &["A1", "A2", "Taylor_Swift", "symbols", "house", "Bild", "Ä1", "x_2"];
pub const NAME_POOL: &[&str] = &["Mrs. Miller", "Maggie", "Luke", "joseph12", "student 4", "Jörg", "a-b", "@x", "[y"];
pub const URLS: &[&str] = &[
    "https://www.youtube.com/watch?v=3tmd-ClpJxA",
    "https://example.org/media/clip.mp4",
    "http://127.0.0.1:8080/v?a=1&b=%20",
];

#[derive(Debug, Clone)]
pub enum Action {
    Meta(String, String),
    Tags(Vec<String>),
    Create {
        author: usize,
        start: u64,
        len: Option<u64>,
        category: Category,
        body: String,
    },
    Comment { author: usize, pick: usize, text: String },
    Edit { pick: usize, body: String },
}

#[derive(Debug, Clone)]
pub struct ProjectSpec {
    pub url: &'static str,
    pub actions: Vec<Action>,
}

pub fn name(i: usize) -> Username {
    Username::new(NAME_POOL[i % NAME_POOL.len()]).unwrap()
}

pub fn category() -> impl Strategy<Value = Category> {
    prop::sample::select(Category::ALL.to_vec())
}

fn case_mix(s: &str, upper: bool) -> String {
    if upper { s.to_uppercase() } else { s.to_string() }
}

fn word() -> impl Strategy<Value = String> {
    prop_oneof![
        4 => "[a-zA-Z0-9äß.,\"()!?–-]{1,8}",
        2 => (prop::sample::select(TAG_POOL), any::<bool>()).prop_map(|(t, up)| format!("#{}", case_mix(t, up))),
        1 => prop::sample::select(NAME_POOL).prop_map(|n| format!("@{}", n.split(' ').next().unwrap())),
        1 => prop::sample::select(vec!["[", ">", "\\", "\\[", "#", "@", "a#b", "[02:21:09 META @x]", "> @x: y", "---"])
            .prop_map(str::to_string),
    ]
}

fn line() -> impl Strategy<Value = String> {
    prop::collection::vec(word(), 0..6).prop_map(|w| w.join(" "))
}

/// Multi-line text; may be blank or carry stray CR/whitespace, which the
/// model either normalizes or rejects.
pub fn body() -> impl Strategy<Value = String> {
    (prop::collection::vec(line(), 1..4), prop::sample::select(vec!["", " ", "\n", "\r\n", "  \n "]))
        .prop_map(|(lines, tail)| lines.join("\n") + tail)
}

pub fn comment_text() -> impl Strategy<Value = String> {
    (line(), prop::sample::select(vec!["", " ", "  "])).prop_map(|(l, pad)| format!("{pad}{l}"))
}

pub fn meta_text() -> impl Strategy<Value = String> {
    "[ -~äöü–€]{0,24}"
}

fn start_ms() -> impl Strategy<Value = u64> {
    prop_oneof![
        (0..=MAX_MS / 10).prop_map(|c| c * 10),
        (14_000u64..15_000).prop_map(|c| c * 10),
        Just(0),
        Just(MAX_MS),
    ]
}

pub fn action() -> impl Strategy<Value = Action> {
    prop_oneof![
        1 => (meta_text(), meta_text()).prop_map(|(t, d)| Action::Meta(t, d)),
        1 => prop::collection::vec(prop_oneof![prop::sample::select(TAG_POOL).prop_map(str::to_string), "[a-z_]{1,5}", Just("bad-tag".to_string())], 0..4)
            .prop_map(Action::Tags),
        6 => (0..NAME_POOL.len(), start_ms(), prop::option::weighted(0.5, 0u64..2000), category(), body())
            .prop_map(|(author, start, len, category, body)| Action::Create { author, start, len: len.map(|l| l * 10), category, body }),
        3 => (0..NAME_POOL.len(), any::<usize>(), comment_text()).prop_map(|(author, pick, text)| Action::Comment { author, pick, text }),
        1 => (any::<usize>(), body()).prop_map(|(pick, body)| Action::Edit { pick, body }),
    ]
}

pub fn project_spec(max_actions: usize) -> impl Strategy<Value = ProjectSpec> {
    (prop::sample::select(URLS), prop::collection::vec(action(), 0..max_actions))
        .prop_map(|(url, actions)| ProjectSpec { url, actions })
}

fn pick_post(project: &Project, pick: usize) -> Option<u64> {
    let posts = project.posts();
    (!posts.is_empty()).then(|| posts[pick % posts.len()].post_number)
}

/// Applies one action; invalid actions are refused by the model.
pub fn apply(project: &mut Project, action: &Action) -> bool {
    match action {
        Action::Meta(t, d) => project.set_meta(t, d).is_ok(),
        Action::Tags(tags) => project.define_tags(tags).is_ok(),
        Action::Create { author, start, len, category, body } => {
            let start_tc = Timecode::from_ms(*start).unwrap();
            let end = len.and_then(|l| Timecode::from_ms((start + l).min(MAX_MS)).ok());
            project.create_post(name(*author), start_tc, end, *category, body).is_ok()
        }
        Action::Comment { author, pick, text } => match pick_post(project, *pick) {
            Some(n) => project.add_comment(name(*author), n, text).is_ok(),
            None => false,
        },
        Action::Edit { pick, body } => match pick_post(project, *pick) {
            Some(n) => {
                let author = project.post(n).unwrap().author.clone();
                project.edit_post(&author, n, body).is_ok()
            }
            None => false,
        },
    }
}

pub fn build(spec: &ProjectSpec) -> Project {
    let mut project = Project::new(spec.url).unwrap();
    for a in &spec.actions {
        apply(&mut project, a);
    }
    project
}

pub fn arb_project(max_actions: usize) -> impl Strategy<Value = Project> {
    project_spec(max_actions).prop_map(|s| build(&s))
}

pub fn tag(s: &str) -> Tag {
    Tag::new(s).unwrap()
}
