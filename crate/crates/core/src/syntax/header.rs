//! Post header lines: `[02:22:20 – 02:28:11 PICTURE @Maggie]`.

use std::fmt;

use super::timecode::Timecode;
use super::SyntaxError;
use crate::model::{Category, Username};

/// Canonical range separator (space, U+2013 EN DASH, space).
pub const RANGE_SEP: &str = " \u{2013} ";
const ASCII_RANGE_SEP: &str = " - ";
const TIMECODE_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostHeader {
    pub start: Timecode,
    pub end: Option<Timecode>,
    pub category: Category,
    pub author: Username,
}

impl fmt::Display for PostHeader {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}", self.start)?;
        if let Some(end) = self.end {
            write!(f, "{RANGE_SEP}{end}")?;
        }
        write!(f, " {} @{}]", self.category, self.author)
    }
}

pub fn format_header(header: &PostHeader) -> String {
    header.to_string()
}

/// Parses a header line. Both `–` and `-` are accepted as range separator.
/// The author is everything between ` @` and the closing `]`.
pub fn parse_header(line: &str) -> Result<PostHeader, SyntaxError> {
    let fail = |byte: usize, reason: &str| SyntaxError::MalformedHeader {
        column: line[..byte.min(line.len())].chars().count() + 1,
        reason: reason.to_string(),
    };
    let timecode_at = |pos: usize| -> Result<Timecode, SyntaxError> {
        line.get(pos..pos + TIMECODE_LEN)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| fail(pos, "expected timecode MM:SS:CS"))
    };

    if !line.starts_with('[') {
        return Err(fail(0, "expected '['"));
    }
    let mut pos = 1;
    let start = timecode_at(pos)?;
    pos += TIMECODE_LEN;

    let rest = &line[pos..];
    let end = match [RANGE_SEP, ASCII_RANGE_SEP]
        .into_iter()
        .find(|sep| rest.starts_with(sep))
    {
        Some(sep) => {
            pos += sep.len();
            let end = timecode_at(pos)?;
            pos += TIMECODE_LEN;
            Some(end)
        }
        None => None,
    };

    if !line[pos..].starts_with(' ') {
        return Err(fail(pos, "expected ' ' before category"));
    }
    pos += 1;
    let cat_len = line[pos..].find(' ').unwrap_or(line.len() - pos);
    let category: Category = line[pos..pos + cat_len]
        .parse()
        .map_err(|_| fail(pos, "unknown category"))?;
    pos += cat_len;

    if !line[pos..].starts_with(" @") {
        return Err(fail(pos, "expected ' @' before author"));
    }
    pos += 2;
    if !line.ends_with(']') || line.len() <= pos {
        return Err(fail(line.len(), "expected closing ']'"));
    }
    let author = Username::new(&line[pos..line.len() - 1]).map_err(|e| fail(pos, &e.to_string()))?;

    if let Some(end) = end {
        if end < start {
            return Err(fail(1, "end is before start"));
        }
    }
    Ok(PostHeader {
        start,
        end,
        category,
        author,
    })
}
