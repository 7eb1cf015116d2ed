//! Text formats: timecodes, post headers, body tokens, the project file,
//! and the readable document export.

pub mod export;
pub mod file;
pub mod header;
pub mod timecode;
pub mod tokens;

use thiserror::Error;

pub use export::{export_document, ExportOrder};
pub use file::{parse_project_file, serialize_project};
pub use header::{format_header, parse_header, PostHeader};
pub use timecode::{format_timecode, parse_timecode, Timecode, TimecodeError};
pub use tokens::{extract_tokens, TokenSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error(transparent)]
    Timecode(#[from] TimecodeError),
    #[error("malformed header at column {column}: {reason}")]
    MalformedHeader { column: usize, reason: String },
    #[error("line {line}: {reason}")]
    MalformedFile { line: usize, reason: String },
    #[error("unsupported project file version {0}")]
    VersionUnsupported(String),
}

impl SyntaxError {
    pub fn code(&self) -> &'static str {
        match self {
            SyntaxError::Timecode(TimecodeError::Malformed(_)) => "MALFORMED_TIMECODE",
            SyntaxError::Timecode(TimecodeError::OutOfRange(_)) => "OUT_OF_RANGE",
            SyntaxError::Timecode(TimecodeError::SubCentisecond(_)) => "SUB_CENTISECOND",
            SyntaxError::MalformedHeader { .. } => "MALFORMED_HEADER",
            SyntaxError::MalformedFile { .. } => "MALFORMED_FILE",
            SyntaxError::VersionUnsupported(_) => "VERSION_UNSUPPORTED",
        }
    }
}
