use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Longest accepted display name, in characters.
pub const MAX_USERNAME_CHARS: usize = 64;

/// The four analytical dimensions a post can belong to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Category {
    Picture,
    Audio,
    Text,
    Meta,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Picture,
        Category::Audio,
        Category::Text,
        Category::Meta,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Picture => "PICTURE",
            Category::Audio => "AUDIO",
            Category::Text => "TEXT",
            Category::Meta => "META",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = ModelError;

    /// Only the exact uppercase spellings are accepted.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| ModelError::UnknownCategory(s.to_string()))
    }
}

/// A temporary display name. There are no accounts, so the name is the
/// whole identity and comparisons are exact.
///
/// Interior spaces and periods are fine (`Mrs. Miller`). Rejected: empty,
/// leading or trailing whitespace, control characters, `]` (ends a post
/// header), `:` (ends the author in a comment line), and more than 64 chars.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Username(String);

impl Username {
    pub fn new(name: impl Into<String>) -> Result<Self, ModelError> {
        let name = name.into();
        let invalid = |reason: &'static str| ModelError::InvalidUsername {
            name: name.clone(),
            reason,
        };
        if name.is_empty() {
            return Err(invalid("empty"));
        }
        if name.trim() != name {
            return Err(invalid("leading or trailing whitespace"));
        }
        if name.chars().count() > MAX_USERNAME_CHARS {
            return Err(invalid("longer than 64 characters"));
        }
        if name.chars().any(char::is_control) {
            return Err(invalid("control character"));
        }
        if name.contains(']') {
            return Err(invalid("contains ']'"));
        }
        if name.contains(':') {
            return Err(invalid("contains ':'"));
        }
        Ok(Username(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Username {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for Username {
    type Error = ModelError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        Username::new(s)
    }
}

impl TryFrom<&str> for Username {
    type Error = ModelError;

    fn try_from(s: &str) -> Result<Self, Self::Error> {
        Username::new(s)
    }
}

impl From<Username> for String {
    fn from(u: Username) -> String {
        u.0
    }
}

impl PartialEq<str> for Username {
    fn eq(&self, other: &str) -> bool {
        self.0 == other
    }
}

impl PartialEq<&str> for Username {
    fn eq(&self, other: &&str) -> bool {
        self.0 == *other
    }
}

/// Characters allowed inside a hashtag or mention.
pub(crate) fn is_tag_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// A hashtag without its leading `#`. Spelling is kept as first written;
/// matching against other tags ignores case.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Tag(String);

impl Tag {
    pub fn new(tag: impl Into<String>) -> Result<Self, ModelError> {
        let tag = tag.into();
        if tag.is_empty() || !tag.chars().all(is_tag_char) {
            return Err(ModelError::InvalidTag(tag));
        }
        Ok(Tag(tag))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Case-folded form used for every comparison between tags.
    pub fn folded(&self) -> String {
        self.0.to_lowercase()
    }

    pub fn matches(&self, other: &Tag) -> bool {
        self.0 == other.0 || self.folded() == other.folded()
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for Tag {
    type Error = ModelError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        Tag::new(s)
    }
}

impl TryFrom<&str> for Tag {
    type Error = ModelError;

    fn try_from(s: &str) -> Result<Self, Self::Error> {
        Tag::new(s)
    }
}

impl FromStr for Tag {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Tag::new(s)
    }
}

impl AsRef<str> for Tag {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl From<Tag> for String {
    fn from(t: Tag) -> String {
        t.0
    }
}
