use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Characters used in join codes; 0/O, 1/I/L are left out so codes survive
/// being read aloud or copied from a board.
pub const CODE_ALPHABET: &[u8; 31] = b"ABCDEFGHJKMNPQRSTUVWXYZ23456789";
pub const CODE_LEN: usize = 6;
/// 31^6
pub const CODE_SPACE: u64 = 887_503_681;

const REJECTION_ATTEMPTS: usize = 64;

/// A six-character join code. Stored uppercase; parsing ignores case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SessionCode([u8; CODE_LEN]);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid session code {0:?}")]
pub struct InvalidCode(pub String);

impl SessionCode {
    pub fn as_str(&self) -> &str {
        std::str::from_utf8(&self.0).expect("alphabet is ASCII")
    }

    /// The code at position `index` of the lexicographic enumeration.
    pub fn from_index(mut index: u64) -> SessionCode {
        let mut bytes = [0u8; CODE_LEN];
        for slot in bytes.iter_mut().rev() {
            *slot = CODE_ALPHABET[(index % 31) as usize];
            index /= 31;
        }
        SessionCode(bytes)
    }

    pub fn index(&self) -> u64 {
        self.0.iter().fold(0, |acc, b| {
            acc * 31 + CODE_ALPHABET.iter().position(|a| a == b).expect("validated") as u64
        })
    }
}

impl FromStr for SessionCode {
    type Err = InvalidCode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.to_ascii_uppercase();
        let bytes: [u8; CODE_LEN] = upper
            .as_bytes()
            .try_into()
            .map_err(|_| InvalidCode(s.to_string()))?;
        if !bytes.iter().all(|b| CODE_ALPHABET.contains(b)) {
            return Err(InvalidCode(s.to_string()));
        }
        Ok(SessionCode(bytes))
    }
}

impl TryFrom<String> for SessionCode {
    type Error = InvalidCode;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<SessionCode> for String {
    fn from(c: SessionCode) -> String {
        c.as_str().to_string()
    }
}

impl fmt::Display for SessionCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Draws a uniformly random code for which `is_taken` is false.
///
/// Resamples on collision; after 64 straight collisions it scans forward
/// from a random position instead, so nearly full code spaces still
/// terminate. Returns `None` only when every code is taken.
pub fn generate_code<R: Rng + ?Sized>(
    rng: &mut R,
    is_taken: impl Fn(&SessionCode) -> bool,
) -> Option<SessionCode> {
    for _ in 0..REJECTION_ATTEMPTS {
        let code = SessionCode::from_index(rng.random_range(0..CODE_SPACE));
        if !is_taken(&code) {
            return Some(code);
        }
    }
    let start = rng.random_range(0..CODE_SPACE);
    (0..CODE_SPACE)
        .map(|offset| SessionCode::from_index((start + offset) % CODE_SPACE))
        .find(|code| !is_taken(code))
}
