//! `#hashtag` and `@mention` extraction from post bodies.

use crate::model::types::is_tag_char;
use crate::model::Tag;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenSet {
    /// Hashtags in first-occurrence order, deduplicated ignoring case.
    pub hashtags: Vec<Tag>,
    /// Mention handles (without `@`), same ordering and dedupe rule.
    pub mentions: Vec<String>,
}

/// Scans `body` for `#word` and `@word` tokens.
///
/// A token is the sigil plus the longest following run of letters, digits,
/// and underscores; an empty run is no token. A sigil directly after a
/// letter or digit is part of a word (`a#b`, `me@host`) and is skipped.
pub fn extract_tokens(body: &str) -> TokenSet {
    let mut set = TokenSet::default();
    let mut prev: Option<char> = None;
    let mut chars = body.char_indices().peekable();

    while let Some((at, c)) = chars.next() {
        let sigil = (c == '#' || c == '@') && !prev.is_some_and(char::is_alphanumeric);
        prev = Some(c);
        if !sigil {
            continue;
        }
        let start = at + c.len_utf8();
        let mut end = start;
        while let Some(&(i, next)) = chars.peek() {
            if !is_tag_char(next) {
                break;
            }
            end = i + next.len_utf8();
            prev = Some(next);
            chars.next();
        }
        if end == start {
            continue;
        }
        let word = &body[start..end];
        if c == '#' {
            let tag = Tag::new(word).expect("run of tag characters");
            if !set.hashtags.iter().any(|t| t.matches(&tag)) {
                set.hashtags.push(tag);
            }
        } else {
            let folded = word.to_lowercase();
            if !set.mentions.iter().any(|m| m.to_lowercase() == folded) {
                set.mentions.push(word.to_string());
            }
        }
    }
    set
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tags(body: &str) -> Vec<String> {
        extract_tokens(body)
            .hashtags
            .into_iter()
            .map(String::from)
            .collect()
    }

    #[test]
    fn fixture_bodies() {
        assert_eq!(
            tags("Reminds me of baroque era pictures of ascension #symbols"),
            ["symbols"]
        );
        assert_eq!(tags("#A1: Please watch the segment"), ["A1"]);
        assert_eq!(tags("about #Taylor_Swift, and #A2."), ["Taylor_Swift", "A2"]);
    }

    #[test]
    fn no_valid_tokens() {
        let set = extract_tokens("email a#b @ alone #");
        assert!(set.hashtags.is_empty());
        assert!(set.mentions.is_empty());
    }

    #[test]
    fn mentions_and_dedupe() {
        let set = extract_tokens("@Luke see #A1 and #a1 and #B, cc @luke @Maggie me@x");
        assert_eq!(set.mentions, ["Luke", "Maggie"]);
        assert_eq!(set.hashtags.len(), 2);
        assert_eq!(set.hashtags[0].as_str(), "A1");
    }

    #[test]
    fn sigil_after_punctuation_or_underscore_counts() {
        assert_eq!(tags("(#x) _#y ##z"), ["x", "y", "z"]);
        assert_eq!(tags("#a#b"), ["a"]);
        assert_eq!(tags("#über_groß"), ["über_groß"]);
    }
}
