//! `MM:SS:CS` media positions (minutes, seconds, centiseconds).
//!
//! Positions are held internally as integer milliseconds. Only centisecond
//! multiples up to `99:59:99` are representable in the text form.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest representable position, `99:59:99`.
pub const MAX_MS: u32 = (99 * 60 + 59) * 1000 + 99 * 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimecodeError {
    #[error("malformed timecode {0:?} (expected MM:SS:CS)")]
    Malformed(String),
    #[error("{0} ms is beyond 99:59:99")]
    OutOfRange(u64),
    #[error("{0} ms is not a whole number of centiseconds")]
    SubCentisecond(u64),
}

/// A media position with centisecond resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Timecode(u32);

impl Timecode {
    pub const ZERO: Timecode = Timecode(0);

    pub fn from_ms(ms: u64) -> Result<Self, TimecodeError> {
        if ms > u64::from(MAX_MS) {
            return Err(TimecodeError::OutOfRange(ms));
        }
        if !ms.is_multiple_of(10) {
            return Err(TimecodeError::SubCentisecond(ms));
        }
        Ok(Timecode(ms as u32))
    }

    pub fn as_ms(self) -> u64 {
        u64::from(self.0)
    }
}

impl TryFrom<u64> for Timecode {
    type Error = TimecodeError;

    fn try_from(ms: u64) -> Result<Self, Self::Error> {
        Timecode::from_ms(ms)
    }
}

impl From<Timecode> for u64 {
    fn from(tc: Timecode) -> u64 {
        tc.as_ms()
    }
}

/// Parses `MM:SS:CS` into milliseconds.
pub fn parse_timecode(s: &str) -> Result<u64, TimecodeError> {
    s.parse::<Timecode>().map(Timecode::as_ms)
}

/// Formats milliseconds as zero-padded `MM:SS:CS`.
pub fn format_timecode(ms: u64) -> Result<String, TimecodeError> {
    Timecode::from_ms(ms).map(|tc| tc.to_string())
}

fn two_digits(group: &[u8]) -> Option<u32> {
    match group {
        [a, b] if a.is_ascii_digit() && b.is_ascii_digit() => {
            Some(u32::from(a - b'0') * 10 + u32::from(b - b'0'))
        }
        _ => None,
    }
}

impl FromStr for Timecode {
    type Err = TimecodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || TimecodeError::Malformed(s.to_string());
        let mut groups = s.as_bytes().split(|&b| b == b':');
        let (Some(mm), Some(ss), Some(cs), None) =
            (groups.next(), groups.next(), groups.next(), groups.next())
        else {
            return Err(malformed());
        };
        let minutes = two_digits(mm).ok_or_else(malformed)?;
        let seconds = two_digits(ss).ok_or_else(malformed)?;
        let centis = two_digits(cs).ok_or_else(malformed)?;
        if seconds > 59 {
            return Err(malformed());
        }
        Ok(Timecode((minutes * 60 + seconds) * 1000 + centis * 10))
    }
}

impl fmt::Display for Timecode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let centis = self.0 / 10;
        write!(
            f,
            "{:02}:{:02}:{:02}",
            centis / 6000,
            (centis / 100) % 60,
            centis % 100
        )
    }
}
