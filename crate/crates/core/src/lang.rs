//! The closed set of 26 languages handled by the toolkit and ordered
//! translation directions over them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Language codes in canonical (lexicographic) order. A [`LanguageTag`] is an
/// index into this table, so `Ord` on tags matches `Ord` on codes.
pub const LANGUAGE_CODES: [&str; 26] = [
    "afr", "amh", "eng", "fra", "fuv", "hau", "ibo", "kam", "kin", "lin", "lug", "luo", "nso",
    "nya", "orm", "sna", "som", "ssw", "swh", "tsn", "tso", "umb", "wol", "xho", "yor", "zul",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("unknown language code `{0}`")]
    UnknownLanguage(String),
    #[error("malformed direction `{0}` (expected `src-tgt`)")]
    MalformedDirection(String),
    #[error("direction {0} has identical source and target")]
    SameLanguage(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LanguageTag(u8);

impl LanguageTag {
    pub const ENG: LanguageTag = LanguageTag(2);
    pub const FRA: LanguageTag = LanguageTag(3);

    pub fn all() -> impl Iterator<Item = LanguageTag> {
        (0..LANGUAGE_CODES.len() as u8).map(LanguageTag)
    }

    /// The 24 languages other than English and French.
    pub fn african() -> impl Iterator<Item = LanguageTag> {
        Self::all().filter(|l| l.is_african())
    }

    pub fn code(self) -> &'static str {
        LANGUAGE_CODES[self.0 as usize]
    }

    /// Position in [`LANGUAGE_CODES`].
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_african(self) -> bool {
        self != Self::ENG && self != Self::FRA
    }
}

impl FromStr for LanguageTag {
    type Err = LangError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LANGUAGE_CODES
            .binary_search(&s)
            .map(|i| LanguageTag(i as u8))
            .map_err(|_| LangError::UnknownLanguage(s.to_string()))
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl Serialize for LanguageTag {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for LanguageTag {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An ordered (source, target) language pair. Serialized as `"src-tgt"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Direction {
    pub src: LanguageTag,
    pub tgt: LanguageTag,
}

impl Direction {
    pub fn new(src: LanguageTag, tgt: LanguageTag) -> Result<Self, LangError> {
        if src == tgt {
            return Err(LangError::SameLanguage(format!("{src}-{tgt}")));
        }
        Ok(Direction { src, tgt })
    }

    pub fn reversed(self) -> Direction {
        Direction {
            src: self.tgt,
            tgt: self.src,
        }
    }
}

impl FromStr for Direction {
    type Err = LangError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (src, tgt) = s
            .split_once('-')
            .ok_or_else(|| LangError::MalformedDirection(s.to_string()))?;
        Direction::new(src.parse()?, tgt.parse()?)
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.src, self.tgt)
    }
}

impl Serialize for Direction {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Direction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
