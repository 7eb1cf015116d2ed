//! The `.travisgo` project text file.
//!
//! ```text
//! #TRAVISGO 1
//! MEDIA <url>
//! TITLE <text>
//! DESCRIPTION <text>
//! TAGS #a #b 
//! ---
//! [MM:SS:CS – MM:SS:CS CATEGORY @author]
//! body lines ('[', '>' and '\' at line start are escaped with '\')
//! > @author: comment
//! ```
//!
//! UTF-8, LF line endings. CRLF and a missing final newline are tolerated
//! on input.

use super::header::{parse_header, PostHeader};
use super::SyntaxError;
use crate::model::{Project, Tag, Username};

pub const FILE_EXTENSION: &str = "travisgo";
pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "#TRAVISGO ";
const SEPARATOR: &str = "---";

fn needs_escape(line: &str) -> bool {
    line.starts_with(['[', '>', '\\'])
}

pub fn serialize_project(project: &Project) -> String {
    let mut out = String::new();
    out.push_str(&format!("{MAGIC}{FORMAT_VERSION}\n"));
    out.push_str(&format!("MEDIA {}\n", project.media_url()));
    out.push_str(&format!("TITLE {}\n", project.title()));
    out.push_str(&format!("DESCRIPTION {}\n", project.description()));
    out.push_str("TAGS ");
    for tag in project.tag_vocabulary() {
        out.push_str(&format!("#{tag} "));
    }
    out.push('\n');
    out.push_str(SEPARATOR);
    out.push('\n');
    for post in project.posts() {
        out.push_str(&serialize_post(post));
    }
    out
}

/// One post in file form: header, body, comments.
pub fn serialize_post(post: &crate::model::Post) -> String {
    let header = PostHeader {
        start: post.start_ms,
        end: post.end_ms,
        category: post.category,
        author: post.author.clone(),
    };
    let mut out = format!("{header}\n");
    for line in post.body.split('\n') {
        if needs_escape(line) {
            out.push('\\');
        }
        out.push_str(line);
        out.push('\n');
    }
    for c in &post.comments {
        out.push_str(&format!("> @{}: {}\n", c.author, c.text));
    }
    out
}

/// A post as read from a file, before it is applied to a project.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedPost {
    pub line: usize,
    pub header: PostHeader,
    pub body: String,
    pub comments: Vec<(usize, Username, String)>,
}

struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Split<'a, char>>>,
    last_line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let text = text.strip_prefix('\u{feff}').unwrap_or(text);
        let text = text.strip_suffix('\n').unwrap_or(text);
        let last_line = if text.is_empty() { 0 } else { text.split('\n').count() };
        Lines {
            inner: text.split('\n').enumerate().peekable(),
            last_line,
        }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        if self.inner.peek().is_some_and(|&(i, _)| i >= self.last_line) {
            return None;
        }
        self.inner
            .next()
            .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
    }

    fn peek(&mut self) -> Option<&'a str> {
        match self.inner.peek() {
            Some(&(i, l)) if i < self.last_line => Some(l.strip_suffix('\r').unwrap_or(l)),
            _ => None,
        }
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str), SyntaxError> {
        self.next().ok_or_else(|| SyntaxError::MalformedFile {
            line: self.last_line + 1,
            reason: format!("file ends before the {what} line"),
        })
    }
}

fn malformed(line: usize, reason: impl Into<String>) -> SyntaxError {
    SyntaxError::MalformedFile {
        line,
        reason: reason.into(),
    }
}

fn field<'a>(line: usize, text: &'a str, key: &str) -> Result<&'a str, SyntaxError> {
    if text == key {
        return Ok("");
    }
    text.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| malformed(line, format!("expected '{key} ...'")))
}

/// Parses a comment line `> @author: text`.
fn parse_comment(line: usize, text: &str) -> Result<(Username, String), SyntaxError> {
    let rest = text
        .strip_prefix("> @")
        .ok_or_else(|| malformed(line, "expected '> @author: text'"))?;
    let (author, body) = rest
        .split_once(": ")
        .ok_or_else(|| malformed(line, "expected ': ' after comment author"))?;
    let author = Username::new(author).map_err(|e| malformed(line, e.to_string()))?;
    Ok((author, body.to_string()))
}

/// Reads the post sections that follow the `---` line.
fn parse_posts(lines: &mut Lines<'_>) -> Result<Vec<ParsedPost>, SyntaxError> {
    let mut posts = Vec::new();
    while let Some((n, text)) = lines.next() {
        if !text.starts_with('[') {
            return Err(malformed(n, "expected a post header"));
        }
        let header = parse_header(text).map_err(|e| malformed(n, e.to_string()))?;
        let mut body: Vec<String> = Vec::new();
        let mut comments = Vec::new();
        while let Some(peeked) = lines.peek() {
            if peeked.starts_with('[') {
                break;
            }
            let (m, text) = lines.next().expect("peeked");
            if text.starts_with('>') {
                comments.push(parse_comment(m, text).map(|(a, c)| (m, a, c))?);
                continue;
            }
            if !comments.is_empty() {
                return Err(malformed(m, "body text after comments"));
            }
            let unescaped = match text.strip_prefix('\\') {
                Some(rest) if needs_escape(rest) => rest,
                Some(_) => return Err(malformed(m, "unknown escape")),
                None => text,
            };
            body.push(unescaped.to_string());
        }
        posts.push(ParsedPost {
            line: n,
            header,
            body: body.join("\n"),
            comments,
        });
    }
    Ok(posts)
}

pub fn parse_project_file(text: &str) -> Result<Project, SyntaxError> {
    let mut lines = Lines::new(text);

    let (n, magic) = lines.expect("#TRAVISGO")?;
    let version = magic
        .strip_prefix(MAGIC)
        .ok_or_else(|| malformed(n, "missing '#TRAVISGO' magic line"))?;
    match version.parse::<u32>() {
        Ok(FORMAT_VERSION) => {}
        Ok(_) => return Err(SyntaxError::VersionUnsupported(version.to_string())),
        Err(_) => return Err(malformed(n, format!("bad format version {version:?}"))),
    }

    let (n, media) = lines.expect("MEDIA")?;
    let mut project =
        Project::new(field(n, media, "MEDIA")?).map_err(|e| malformed(n, e.to_string()))?;

    let (n, title) = lines.expect("TITLE")?;
    let title = field(n, title, "TITLE")?;
    let (n, description) = lines.expect("DESCRIPTION")?;
    let description = field(n, description, "DESCRIPTION")?;
    project
        .set_meta(title, description)
        .map_err(|e| malformed(n, e.to_string()))?;

    let (n, tags) = lines.expect("TAGS")?;
    let tags = field(n, tags, "TAGS")?
        .split(' ')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.strip_prefix('#')
                .and_then(|t| Tag::new(t).ok())
                .ok_or_else(|| malformed(n, format!("bad tag {t:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    project
        .define_tags(tags.iter().map(Tag::as_str))
        .map_err(|e| malformed(n, e.to_string()))?;

    let (n, sep) = lines.expect("---")?;
    if sep != SEPARATOR {
        return Err(malformed(n, "expected '---'"));
    }

    for post in parse_posts(&mut lines)? {
        let number = project
            .create_post(
                post.header.author,
                post.header.start,
                post.header.end,
                post.header.category,
                &post.body,
            )
            .map_err(|e| malformed(post.line, e.to_string()))?;
        for (line, author, text) in post.comments {
            project
                .add_comment(author, number, &text)
                .map_err(|e| malformed(line, e.to_string()))?;
        }
    }
    Ok(project)
}

/// Parses post sections without the file header, in the order written.
/// Used for scripted clients.
pub fn parse_post_script(text: &str) -> Result<Vec<ParsedPost>, SyntaxError> {
    parse_posts(&mut Lines::new(text))
}
