//! The annotation document: a media reference plus a feed of timecoded,
//! categorized posts with comments and hashtags.
//!
//! Every mutating method either succeeds or returns an error with the
//! project left exactly as it was.

mod filter;
pub(crate) mod types;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::timecode::Timecode;
use crate::syntax::tokens::extract_tokens;

pub use filter::{FilterSet, Presence, UserStatus};
pub use types::{Category, Tag, Username, MAX_USERNAME_CHARS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("malformed media URL {0:?} (needs a scheme and a host)")]
    MalformedUrl(String),
    #[error("title and description must be a single line")]
    MultilineMeta,
    #[error("invalid tag {0:?} (letters, digits, and underscores only)")]
    InvalidTag(String),
    #[error("invalid user name {name:?}: {reason}")]
    InvalidUsername { name: String, reason: &'static str },
    #[error("unknown category {0:?}")]
    UnknownCategory(String),
    #[error("text is empty")]
    EmptyBody,
    #[error("comments must be a single line")]
    MultilineComment,
    #[error("end {end} is before start {start}")]
    InvertedRange { start: Timecode, end: Timecode },
    #[error("no post number {0}")]
    UnknownPost(u64),
    #[error("post {post} belongs to @{author}, not @{actor}")]
    NotAuthor {
        post: u64,
        author: Username,
        actor: Username,
    },
    #[error("invalid project document: {0}")]
    InvalidDocument(String),
}

impl ModelError {
    /// Stable machine-readable name, shared with the relay's error frames.
    pub fn code(&self) -> &'static str {
        match self {
            ModelError::MalformedUrl(_) => "MALFORMED_URL",
            ModelError::MultilineMeta => "MULTILINE_META",
            ModelError::InvalidTag(_) => "INVALID_TAG",
            ModelError::InvalidUsername { .. } => "INVALID_USERNAME",
            ModelError::UnknownCategory(_) => "UNKNOWN_CATEGORY",
            ModelError::EmptyBody => "EMPTY_BODY",
            ModelError::MultilineComment => "MULTILINE_COMMENT",
            ModelError::InvertedRange { .. } => "INVERTED_RANGE",
            ModelError::UnknownPost(_) => "UNKNOWN_POST",
            ModelError::NotAuthor { .. } => "NOT_AUTHOR",
            ModelError::InvalidDocument(_) => "INVALID_DOCUMENT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Comment {
    pub author: Username,
    pub text: String,
    pub comment_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Post {
    pub post_number: u64,
    pub author: Username,
    pub start_ms: Timecode,
    pub end_ms: Option<Timecode>,
    pub category: Category,
    pub body: String,
    pub hashtags: Vec<Tag>,
    pub comments: Vec<Comment>,
    pub edited: bool,
}

impl Post {
    /// Whether `t` lies inside the post's span; a point post spans only its start.
    pub fn covers(&self, t: Timecode) -> bool {
        self.start_ms <= t && t <= self.end_ms.unwrap_or(self.start_ms)
    }

    pub fn has_tag(&self, tag: &Tag) -> bool {
        self.hashtags.iter().any(|t| t.matches(tag))
    }

    fn sort_key(&self) -> (Timecode, u64) {
        (self.start_ms, self.post_number)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Project {
    media_url: String,
    title: String,
    description: String,
    tag_vocabulary: Vec<Tag>,
    posts: Vec<Post>,
    next_post_number: u64,
}

/// Field-for-field mirror of [`Project`] used when a project arrives from
/// outside (wire or FFI). Converting validates every project invariant.
#[derive(Debug, Clone, Deserialize)]
pub struct ProjectDoc {
    pub media_url: String,
    pub title: String,
    pub description: String,
    pub tag_vocabulary: Vec<Tag>,
    pub posts: Vec<PostDoc>,
    pub next_post_number: u64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct PostDoc {
    pub post_number: u64,
    pub author: Username,
    pub start_ms: Timecode,
    pub end_ms: Option<Timecode>,
    pub category: Category,
    pub body: String,
    pub hashtags: Vec<Tag>,
    pub comments: Vec<CommentDoc>,
    pub edited: bool,
}

#[derive(Debug, Clone, Deserialize)]
pub struct CommentDoc {
    pub author: Username,
    pub text: String,
    pub comment_index: usize,
}

fn validate_url(url: &str) -> Result<(), ModelError> {
    let bad = || ModelError::MalformedUrl(url.to_string());
    if url.is_empty() || url.chars().any(|c| c.is_whitespace() || c.is_control()) {
        return Err(bad());
    }
    let parsed = url::Url::parse(url).map_err(|_| bad())?;
    match parsed.host_str() {
        Some(host) if !host.is_empty() => Ok(()),
        _ => Err(bad()),
    }
}

fn is_single_line(s: &str) -> bool {
    !s.contains(['\n', '\r'])
}

/// Line endings folded to LF, trailing whitespace dropped.
fn normalize_body(body: &str) -> Result<String, ModelError> {
    let body = body.replace("\r\n", "\n").replace('\r', "\n");
    let trimmed = body.trim_end();
    if trimmed.is_empty() {
        return Err(ModelError::EmptyBody);
    }
    Ok(trimmed.to_string())
}

fn normalize_comment(text: &str) -> Result<String, ModelError> {
    let trimmed = text.trim_end();
    if trimmed.trim_start().is_empty() {
        return Err(ModelError::EmptyBody);
    }
    if !is_single_line(trimmed) {
        return Err(ModelError::MultilineComment);
    }
    Ok(trimmed.to_string())
}

impl Project {
    pub fn new(media_url: &str) -> Result<Self, ModelError> {
        validate_url(media_url)?;
        Ok(Project {
            media_url: media_url.to_string(),
            title: String::new(),
            description: String::new(),
            tag_vocabulary: Vec::new(),
            posts: Vec::new(),
            next_post_number: 1,
        })
    }

    pub fn media_url(&self) -> &str {
        &self.media_url
    }

    pub fn title(&self) -> &str {
        &self.title
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn tag_vocabulary(&self) -> &[Tag] {
        &self.tag_vocabulary
    }

    /// The feed, in (start, post number) order.
    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn post(&self, post_number: u64) -> Option<&Post> {
        self.posts.iter().find(|p| p.post_number == post_number)
    }

    pub fn next_post_number(&self) -> u64 {
        self.next_post_number
    }

    pub fn set_meta(&mut self, title: &str, description: &str) -> Result<(), ModelError> {
        if !is_single_line(title) || !is_single_line(description) {
            return Err(ModelError::MultilineMeta);
        }
        self.title = title.to_string();
        self.description = description.to_string();
        Ok(())
    }

    /// Merges tags into the vocabulary, keeping first-seen spelling and order.
    pub fn define_tags<I, T>(&mut self, tags: I) -> Result<(), ModelError>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<str>,
    {
        let tags = tags
            .into_iter()
            .map(|t| Tag::new(t.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        self.merge_vocabulary(tags);
        Ok(())
    }

    fn merge_vocabulary(&mut self, tags: impl IntoIterator<Item = Tag>) {
        for tag in tags {
            if !self.tag_vocabulary.iter().any(|t| t.matches(&tag)) {
                self.tag_vocabulary.push(tag);
            }
        }
    }

    /// Adds a post and returns its number.
    pub fn create_post(
        &mut self,
        author: Username,
        start: Timecode,
        end: Option<Timecode>,
        category: Category,
        body: &str,
    ) -> Result<u64, ModelError> {
        let body = normalize_body(body)?;
        if let Some(end) = end {
            if end < start {
                return Err(ModelError::InvertedRange { start, end });
            }
        }
        let hashtags = extract_tokens(&body).hashtags;
        let post_number = self.next_post_number;
        self.next_post_number += 1;
        self.merge_vocabulary(hashtags.iter().cloned());
        let post = Post {
            post_number,
            author,
            start_ms: start,
            end_ms: end,
            category,
            body,
            hashtags,
            comments: Vec::new(),
            edited: false,
        };
        let at = self.posts.partition_point(|p| p.sort_key() < post.sort_key());
        self.posts.insert(at, post);
        Ok(post_number)
    }

    pub fn edit_post(
        &mut self,
        actor: &Username,
        post_number: u64,
        new_body: &str,
    ) -> Result<(), ModelError> {
        let idx = self.index_of(post_number)?;
        let post = &self.posts[idx];
        if &post.author != actor {
            return Err(ModelError::NotAuthor {
                post: post_number,
                author: post.author.clone(),
                actor: actor.clone(),
            });
        }
        let body = normalize_body(new_body)?;
        let hashtags = extract_tokens(&body).hashtags;
        self.merge_vocabulary(hashtags.iter().cloned());
        let post = &mut self.posts[idx];
        post.body = body;
        post.hashtags = hashtags;
        post.edited = true;
        Ok(())
    }

    pub fn add_comment(
        &mut self,
        actor: Username,
        post_number: u64,
        text: &str,
    ) -> Result<(), ModelError> {
        let idx = self.index_of(post_number)?;
        let text = normalize_comment(text)?;
        self.merge_vocabulary(extract_tokens(&text).hashtags);
        let comments = &mut self.posts[idx].comments;
        comments.push(Comment {
            author: actor,
            text,
            comment_index: comments.len(),
        });
        Ok(())
    }

    fn index_of(&self, post_number: u64) -> Result<usize, ModelError> {
        self.posts
            .iter()
            .position(|p| p.post_number == post_number)
            .ok_or(ModelError::UnknownPost(post_number))
    }

    /// Checks every structural invariant. Used on documents from outside
    /// and by tests.
    pub fn check_invariants(&self) -> Result<(), ModelError> {
        let fail = |msg: String| Err(ModelError::InvalidDocument(msg));
        validate_url(&self.media_url)?;
        if !is_single_line(&self.title) || !is_single_line(&self.description) {
            return Err(ModelError::MultilineMeta);
        }
        for (i, tag) in self.tag_vocabulary.iter().enumerate() {
            if self.tag_vocabulary[..i].iter().any(|t| t.matches(tag)) {
                return fail(format!("tag {tag} listed twice"));
            }
        }
        let mut numbers = std::collections::HashSet::new();
        for (i, post) in self.posts.iter().enumerate() {
            let n = post.post_number;
            if n == 0 || n >= self.next_post_number || !numbers.insert(n) {
                return fail(format!("post number {n} is out of range or repeated"));
            }
            if i > 0 && self.posts[i - 1].sort_key() >= post.sort_key() {
                return fail(format!("post {n} is out of feed order"));
            }
            if normalize_body(&post.body)? != post.body {
                return fail(format!("post {n} body is not normalized"));
            }
            if let Some(end) = post.end_ms {
                if end < post.start_ms {
                    return Err(ModelError::InvertedRange {
                        start: post.start_ms,
                        end,
                    });
                }
            }
            if extract_tokens(&post.body).hashtags != post.hashtags {
                return fail(format!("post {n} hashtags do not match its body"));
            }
            let mut texts = vec![post.body.as_str()];
            for (k, c) in post.comments.iter().enumerate() {
                if c.comment_index != k || normalize_comment(&c.text)? != c.text {
                    return fail(format!("post {n} comment {k} is malformed"));
                }
                texts.push(&c.text);
            }
            for text in texts {
                for tag in extract_tokens(text).hashtags {
                    if !self.tag_vocabulary.iter().any(|t| t.matches(&tag)) {
                        return fail(format!("tag {tag} missing from vocabulary"));
                    }
                }
            }
        }
        Ok(())
    }
}

impl TryFrom<ProjectDoc> for Project {
    type Error = ModelError;

    fn try_from(doc: ProjectDoc) -> Result<Self, Self::Error> {
        let project = Project {
            media_url: doc.media_url,
            title: doc.title,
            description: doc.description,
            tag_vocabulary: doc.tag_vocabulary,
            posts: doc
                .posts
                .into_iter()
                .map(|p| Post {
                    post_number: p.post_number,
                    author: p.author,
                    start_ms: p.start_ms,
                    end_ms: p.end_ms,
                    category: p.category,
                    body: p.body,
                    hashtags: p.hashtags,
                    comments: p
                        .comments
                        .into_iter()
                        .map(|c| Comment {
                            author: c.author,
                            text: c.text,
                            comment_index: c.comment_index,
                        })
                        .collect(),
                    edited: p.edited,
                })
                .collect(),
            next_post_number: doc.next_post_number,
        };
        project.check_invariants()?;
        Ok(project)
    }
}

impl<'de> Deserialize<'de> for Project {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let doc = ProjectDoc::deserialize(de)?;
        Project::try_from(doc).map_err(serde::de::Error::custom)
    }
}
