use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::lang::{Direction, LanguageTag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Clean,
    Bt,
    St,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("source and target language are both {0}")]
    SameLanguage(LanguageTag),
    #[error("empty {0} text")]
    EmptyText(&'static str),
    #[error("clean records cannot carry the augmentation tag")]
    TaggedClean,
}

/// One aligned sentence pair. Serialized as a JSONL line with fields
/// `src`, `tgt`, `src_lang`, `tgt_lang`, `provenance`, `tagged`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawPair")]
pub struct SentencePair {
    #[serde(rename = "src")]
    pub source_text: String,
    #[serde(rename = "tgt")]
    pub target_text: String,
    #[serde(rename = "src_lang")]
    pub source_lang: LanguageTag,
    #[serde(rename = "tgt_lang")]
    pub target_lang: LanguageTag,
    pub provenance: Provenance,
    pub tagged: bool,
}

#[derive(Deserialize)]
struct RawPair {
    src: String,
    tgt: String,
    src_lang: LanguageTag,
    tgt_lang: LanguageTag,
    #[serde(default = "clean")]
    provenance: Provenance,
    #[serde(default)]
    tagged: bool,
}

fn clean() -> Provenance {
    Provenance::Clean
}

impl TryFrom<RawPair> for SentencePair {
    type Error = RecordError;

    fn try_from(r: RawPair) -> Result<Self, Self::Error> {
        SentencePair::with_provenance(r.src, r.tgt, r.src_lang, r.tgt_lang, r.provenance, r.tagged)
    }
}

/// Trim and NFC-normalize.
pub(crate) fn normalize_text(text: &str) -> String {
    let trimmed = text.trim();
    if trimmed.is_ascii() {
        trimmed.to_string()
    } else {
        trimmed.nfc().collect()
    }
}

impl SentencePair {
    pub fn clean(
        source_text: impl Into<String>,
        target_text: impl Into<String>,
        source_lang: LanguageTag,
        target_lang: LanguageTag,
    ) -> Result<Self, RecordError> {
        Self::with_provenance(
            source_text,
            target_text,
            source_lang,
            target_lang,
            Provenance::Clean,
            false,
        )
    }

    pub fn with_provenance(
        source_text: impl Into<String>,
        target_text: impl Into<String>,
        source_lang: LanguageTag,
        target_lang: LanguageTag,
        provenance: Provenance,
        tagged: bool,
    ) -> Result<Self, RecordError> {
        let source_text = source_text.into();
        let target_text = target_text.into();
        if source_lang == target_lang {
            return Err(RecordError::SameLanguage(source_lang));
        }
        if source_text.trim().is_empty() {
            return Err(RecordError::EmptyText("source"));
        }
        if target_text.trim().is_empty() {
            return Err(RecordError::EmptyText("target"));
        }
        if tagged && provenance == Provenance::Clean {
            return Err(RecordError::TaggedClean);
        }
        Ok(SentencePair {
            source_text,
            target_text,
            source_lang,
            target_lang,
            provenance,
            tagged,
        })
    }

    pub fn direction(&self) -> Direction {
        Direction {
            src: self.source_lang,
            tgt: self.target_lang,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("sentence pairs always serialize")
    }
}
