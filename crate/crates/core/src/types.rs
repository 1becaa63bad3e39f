//! Identifiers and small shared value types.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Opaque identity key for a person. Vision-derived ids come from the
/// re-identification stage (or external callers); ids minted for people who
/// are only ever mentioned in speech carry the `spk-` prefix so the two
/// origins stay distinguishable until a merge consolidates them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FaceId(pub String);

impl FaceId {
    pub const SPEECH_PREFIX: &'static str = "spk-";

    pub fn new(id: impl Into<String>) -> Self {
        FaceId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// True when the id did not originate from a speech-only mention.
    pub fn is_vision_derived(&self) -> bool {
        !self.0.starts_with(Self::SPEECH_PREFIX)
    }
}

impl fmt::Display for FaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for FaceId {
    fn from(s: &str) -> Self {
        FaceId(s.to_string())
    }
}

/// Arena handle for a person node. Doubles as the creation sequence number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PersonId(pub u64);

impl PersonId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for PersonId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

/// Arena handle for a message node. Ordering follows insertion order, which
/// search tie-breaking relies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MessageId(pub u64);

impl MessageId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for MessageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m{}", self.0)
    }
}

/// One user/agent exchange as handed to a language-model client.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub user_text: String,
    pub reply_text: String,
}

impl Exchange {
    pub fn new(user_text: impl Into<String>, reply_text: impl Into<String>) -> Self {
        Exchange {
            user_text: user_text.into(),
            reply_text: reply_text.into(),
        }
    }
}
