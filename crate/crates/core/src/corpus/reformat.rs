use std::io::BufRead;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::record::{normalize_text, SentencePair};
use crate::lang::LanguageTag;

#[derive(Debug, Error)]
pub enum ReformatError {
    #[error("unknown record format `{0}` (expected tsv, jsonl or html)")]
    UnknownFormat(String),
    #[error("source and target language are both {0}")]
    SameLanguage(LanguageTag),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordFormat {
    Tsv,
    Jsonl,
    HtmlLike,
}

impl RecordFormat {
    /// Format implied by a file extension.
    pub fn from_extension(ext: &str) -> Option<Self> {
        ext.parse().ok()
    }
}

impl FromStr for RecordFormat {
    type Err = ReformatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tsv" => Ok(RecordFormat::Tsv),
            "jsonl" => Ok(RecordFormat::Jsonl),
            "html" | "html_like" => Ok(RecordFormat::HtmlLike),
            other => Err(ReformatError::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReformatTally {
    pub emitted: u64,
    /// Records whose pairing could not be recovered.
    pub dropped_unpaired: u64,
    /// Records that were not valid UTF-8.
    pub dropped_encoding: u64,
    /// Column-shifted TSV lines that were realigned.
    pub realigned: u64,
}

impl ReformatTally {
    pub fn dropped(&self) -> u64 {
        self.dropped_unpaired + self.dropped_encoding
    }
}

#[derive(Deserialize)]
struct JsonRecord {
    src: Option<String>,
    tgt: Option<String>,
    src_lang: Option<String>,
    tgt_lang: Option<String>,
}

/// Parses raw records into clean sentence pairs with the declared languages.
///
/// TSV lines with empty columns (leading, trailing or doubled tabs) are
/// realigned when exactly two non-empty columns remain. JSONL records may
/// override the declared languages through `src_lang`/`tgt_lang`. The
/// HTML-like format holds `<pair><src>…</src><tgt>…</tgt></pair>` blocks;
/// inner markup is stripped and entities decoded.
pub fn reformat_records<R: BufRead>(
    mut raw: R,
    format: RecordFormat,
    source_lang: LanguageTag,
    target_lang: LanguageTag,
) -> Result<(Vec<SentencePair>, ReformatTally), ReformatError> {
    if source_lang == target_lang {
        return Err(ReformatError::SameLanguage(source_lang));
    }
    let mut out = Vec::new();
    let mut tally = ReformatTally::default();

    let mut emit = |src: &str, tgt: &str, s: LanguageTag, t: LanguageTag, tally: &mut ReformatTally| {
        match SentencePair::clean(normalize_text(src), normalize_text(tgt), s, t) {
            Ok(p) => {
                tally.emitted += 1;
                out.push(p);
            }
            Err(_) => tally.dropped_unpaired += 1,
        }
    };

    match format {
        RecordFormat::Tsv | RecordFormat::Jsonl => {
            let mut buf = Vec::new();
            loop {
                buf.clear();
                if raw.read_until(b'\n', &mut buf)? == 0 {
                    break;
                }
                let Ok(line) = std::str::from_utf8(&buf) else {
                    tally.dropped_encoding += 1;
                    continue;
                };
                let line = line.trim_end_matches(['\n', '\r']);
                if line.trim().is_empty() {
                    continue;
                }
                if format == RecordFormat::Tsv {
                    let fields: Vec<&str> = line.split('\t').collect();
                    let filled: Vec<&str> =
                        fields.iter().copied().filter(|f| !f.trim().is_empty()).collect();
                    if filled.len() != 2 {
                        tally.dropped_unpaired += 1;
                        continue;
                    }
                    if fields.len() != 2 {
                        tally.realigned += 1;
                    }
                    emit(filled[0], filled[1], source_lang, target_lang, &mut tally);
                } else {
                    let Ok(rec) = serde_json::from_str::<JsonRecord>(line) else {
                        tally.dropped_unpaired += 1;
                        continue;
                    };
                    let langs = (
                        rec.src_lang.map_or(Ok(source_lang), |s| s.parse()),
                        rec.tgt_lang.map_or(Ok(target_lang), |s| s.parse()),
                    );
                    match (rec.src, rec.tgt, langs) {
                        (Some(src), Some(tgt), (Ok(s), Ok(t))) => {
                            emit(&src, &tgt, s, t, &mut tally)
                        }
                        _ => tally.dropped_unpaired += 1,
                    }
                }
            }
        }
        RecordFormat::HtmlLike => {
            let mut bytes = Vec::new();
            raw.read_to_end(&mut bytes)?;
            for chunk in split_blocks(&bytes) {
                let Ok(text) = std::str::from_utf8(chunk) else {
                    tally.dropped_encoding += 1;
                    continue;
                };
                if !text.contains("<pair") {
                    continue;
                }
                match (field(text, "src"), field(text, "tgt")) {
                    (Some(src), Some(tgt)) => emit(&src, &tgt, source_lang, target_lang, &mut tally),
                    _ => tally.dropped_unpaired += 1,
                }
            }
        }
    }
    Ok((out, tally))
}

/// Splits on `</pair>` so one bad block does not poison its neighbours.
fn split_blocks(bytes: &[u8]) -> Vec<&[u8]> {
    const END: &[u8] = b"</pair>";
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i + END.len() <= bytes.len() {
        if &bytes[i..i + END.len()] == END {
            out.push(&bytes[start..i]);
            i += END.len();
            start = i;
        } else {
            i += 1;
        }
    }
    out
}

fn field(block: &str, name: &str) -> Option<String> {
    static SRC: OnceLock<Regex> = OnceLock::new();
    static TGT: OnceLock<Regex> = OnceLock::new();
    let re = match name {
        "src" => SRC.get_or_init(|| Regex::new(r"(?s)<src[^>]*>(.*?)</src>").unwrap()),
        _ => TGT.get_or_init(|| Regex::new(r"(?s)<tgt[^>]*>(.*?)</tgt>").unwrap()),
    };
    let inner = re.captures(block)?.get(1)?.as_str();
    let text = decode_entities(&strip_tags(inner));
    let collapsed = text.split_whitespace().collect::<Vec<_>>().join(" ");
    (!collapsed.is_empty()).then_some(collapsed)
}

fn strip_tags(s: &str) -> String {
    static TAG: OnceLock<Regex> = OnceLock::new();
    TAG.get_or_init(|| Regex::new(r"<[^>]*>").unwrap())
        .replace_all(s, " ")
        .into_owned()
}

fn decode_entities(s: &str) -> String {
    static ENTITY: OnceLock<Regex> = OnceLock::new();
    ENTITY
        .get_or_init(|| Regex::new(r"&(#x[0-9a-fA-F]+|#[0-9]+|[a-z]+);").unwrap())
        .replace_all(s, |caps: &regex::Captures| {
            let name = &caps[1];
            let decoded = if let Some(hex) = name.strip_prefix("#x") {
                u32::from_str_radix(hex, 16).ok().and_then(char::from_u32)
            } else if let Some(dec) = name.strip_prefix('#') {
                dec.parse().ok().and_then(char::from_u32)
            } else {
                match name {
                    "amp" => Some('&'),
                    "lt" => Some('<'),
                    "gt" => Some('>'),
                    "quot" => Some('"'),
                    "apos" => Some('\''),
                    "nbsp" => Some(' '),
                    _ => None,
                }
            };
            decoded.map_or_else(|| caps[0].to_string(), |c| c.to_string())
        })
        .into_owned()
}
