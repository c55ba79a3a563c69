//! Shared subword vocabulary trained with byte-pair merges over
//! language-smoothed counts.
//!
//! Each language contributes total weight `p_ℓ ∝ |D_ℓ|^α` to the pair
//! statistics; a line of language `ℓ` therefore counts `p_ℓ / |D_ℓ|`. Weights
//! are fixed-point integers so merge selection is exact and reproducible.
//!
//! Id layout: the reserved tags first (`TBD0..TBD31` by default), then the
//! 256 byte-fallback symbols, then every character seen in training, then
//! one id per distinct merged piece.
//!
//! Spaces become the word-boundary marker `▁`, so concatenating decoded
//! pieces reproduces the input exactly. A literal `▁` in the input is
//! encoded through its UTF-8 bytes.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::LanguageTag;
use crate::sampling::{temperature_distribution, SamplingError, Temperature};

pub const WORD_BOUNDARY: char = '▁';
pub const DEFAULT_VOCAB_SIZE: usize = 4096;
pub const FULL_SCALE_VOCAB_SIZE: usize = 128_000;
pub const RESERVED_COUNT: usize = 32;

/// Fixed-point scale for per-line weights.
const WEIGHT_SCALE: f64 = 1e12;

#[derive(Debug, Error)]
pub enum TokenizerError {
    #[error("no training text supplied")]
    EmptyCorpora,
    #[error("smoothing rate must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("vocabulary size {requested} is unreachable; at most {achievable} entries can be built from this corpus")]
    VocabUnreachable { requested: usize, achievable: usize },
    #[error("duplicate reserved token `{0}`")]
    DuplicateReserved(String),
    #[error("token id {0} is out of range")]
    InvalidId(u32),
    #[error("malformed model: {0}")]
    Malformed(String),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Default reserved block, `TBD0` … `TBD31`.
pub fn default_reserved() -> Vec<String> {
    (0..RESERVED_COUNT).map(|i| format!("TBD{i}")).collect()
}

/// Something that can measure a text in tokens; the length filter only
/// needs this.
pub trait TokenCounter {
    fn count_tokens(&self, text: &str) -> usize;
}

/// Whitespace-delimited token counting, for use before a subword model exists.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceCounter;

impl TokenCounter for WhitespaceCounter {
    fn count_tokens(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Symbol {
    Reserved(String),
    Byte(u8),
    Piece(String),
}

impl Symbol {
    fn surface(&self) -> String {
        match self {
            Symbol::Reserved(s) | Symbol::Piece(s) => s.clone(),
            Symbol::Byte(b) => byte_token(*b),
        }
    }
}

fn byte_token(b: u8) -> String {
    format!("<0x{b:02X}>")
}

fn parse_byte_token(s: &str) -> Option<u8> {
    let hex = s.strip_prefix("<0x")?.strip_suffix('>')?;
    if hex.len() != 2 {
        return None;
    }
    u8::from_str_radix(hex, 16).ok()
}

/// Serialized form of [`SubwordModel`].
#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    reserved: Vec<String>,
    vocab: BTreeMap<String, u32>,
    merges: Vec<(String, String)>,
    vocab_size_target: usize,
}

#[derive(Debug, Clone)]
pub struct SubwordModel {
    reserved: Vec<String>,
    symbols: Vec<Symbol>,
    vocab: HashMap<String, u32>,
    /// (left, right) → (rank, merged id)
    merges: HashMap<(u32, u32), (usize, u32)>,
    merge_list: Vec<(u32, u32)>,
    byte_base: u32,
    vocab_size_target: usize,
}

impl PartialEq for SubwordModel {
    fn eq(&self, other: &Self) -> bool {
        self.reserved == other.reserved
            && self.symbols == other.symbols
            && self.merge_list == other.merge_list
            && self.vocab_size_target == other.vocab_size_target
    }
}

/// Per-language smoothed weights `p_ℓ ∝ |D_ℓ|^alpha`, in the iteration order
/// of `sizes`.
pub fn language_weights(sizes: &[f64], alpha: f64) -> Result<Vec<f64>, TokenizerError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(TokenizerError::InvalidAlpha(alpha));
    }
    Ok(temperature_distribution(sizes, Temperature::from_exponent(alpha)?)?.probs)
}

/// Training text for one language. `size` is `|D_ℓ|`; it defaults to the
/// number of lines.
#[derive(Debug, Clone, Default)]
pub struct LanguageCorpus {
    pub lines: Vec<String>,
    pub size: Option<f64>,
}

impl LanguageCorpus {
    pub fn new(lines: Vec<String>) -> Self {
        LanguageCorpus { lines, size: None }
    }

    fn size(&self) -> f64 {
        self.size.unwrap_or(self.lines.len() as f64)
    }
}

/// Piece of pre-tokenized input.
enum Unit {
    Char(char),
    Byte(u8),
}

/// Splits text into words; each space opens a new word that starts with the
/// boundary marker.
fn split_words(text: &str) -> Vec<Vec<Unit>> {
    let mut words: Vec<Vec<Unit>> = Vec::new();
    let mut current: Vec<Unit> = Vec::new();
    for c in text.chars() {
        if c == ' ' {
            if !current.is_empty() {
                words.push(std::mem::take(&mut current));
            }
            current.push(Unit::Char(WORD_BOUNDARY));
        } else if c == WORD_BOUNDARY {
            let mut buf = [0u8; 4];
            for b in c.encode_utf8(&mut buf).bytes() {
                current.push(Unit::Byte(b));
            }
        } else {
            current.push(Unit::Char(c));
        }
    }
    if !current.is_empty() {
        words.push(current);
    }
    words
}

#[derive(PartialEq, Eq)]
struct HeapEntry {
    count: u64,
    pair: (u32, u32),
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| other.pair.cmp(&self.pair))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Learns a vocabulary of exactly `vocab_size` entries, reserved block
/// included.
pub fn train_subword(
    corpora: &BTreeMap<LanguageTag, LanguageCorpus>,
    alpha: f64,
    vocab_size: usize,
    reserved: &[String],
) -> Result<SubwordModel, TokenizerError> {
    let corpora: Vec<(&LanguageTag, &LanguageCorpus)> = corpora
        .iter()
        .filter(|(_, c)| !c.lines.is_empty() && c.size() > 0.0)
        .collect();
    if corpora.is_empty() {
        return Err(TokenizerError::EmptyCorpora);
    }
    let sizes: Vec<f64> = corpora.iter().map(|(_, c)| c.size()).collect();
    let weights = language_weights(&sizes, alpha)?;

    // Word table keyed by surface so identical words across languages merge.
    let mut word_weights: HashMap<String, u64> = HashMap::new();
    for ((_, corpus), p) in corpora.iter().zip(&weights) {
        let per_line = ((p / corpus.lines.len() as f64) * WEIGHT_SCALE).round().max(1.0) as u64;
        for line in &corpus.lines {
            let mut start = 0;
            let bytes = line.as_bytes();
            for (i, _) in line.match_indices(' ') {
                if i > start {
                    *word_weights.entry(line[start..i].to_string()).or_default() += per_line;
                }
                start = i;
            }
            if start < bytes.len() {
                *word_weights.entry(line[start..].to_string()).or_default() += per_line;
            }
        }
    }

    let mut chars: BTreeSet<char> = BTreeSet::new();
    for word in word_weights.keys() {
        for c in word.chars() {
            match c {
                ' ' => {
                    chars.insert(WORD_BOUNDARY);
                }
                WORD_BOUNDARY => {}
                c => {
                    chars.insert(c);
                }
            }
        }
    }

    let mut model = SubwordModel::base(reserved, &chars, vocab_size)?;
    let base_size = model.symbols.len();
    if vocab_size < base_size {
        return Err(TokenizerError::VocabUnreachable {
            requested: vocab_size,
            achievable: base_size,
        });
    }

    let mut sorted_words: Vec<(String, u64)> = word_weights.into_iter().collect();
    sorted_words.sort();
    let mut words: Vec<(Vec<u32>, u64)> = sorted_words
        .iter()
        .map(|(w, c)| (model.base_ids(w), *c))
        .collect();

    let mut pair_counts: HashMap<(u32, u32), u64> = HashMap::new();
    let mut pair_words: HashMap<(u32, u32), BTreeSet<usize>> = HashMap::new();
    for (wi, (ids, count)) in words.iter().enumerate() {
        for pair in ids.windows(2) {
            let key = (pair[0], pair[1]);
            *pair_counts.entry(key).or_default() += count;
            pair_words.entry(key).or_default().insert(wi);
        }
    }
    let mut heap: BinaryHeap<HeapEntry> = pair_counts
        .iter()
        .map(|(&pair, &count)| HeapEntry { count, pair })
        .collect();

    while model.symbols.len() < vocab_size {
        let Some(HeapEntry { count, pair }) = heap.pop() else {
            return Err(TokenizerError::VocabUnreachable {
                requested: vocab_size,
                achievable: model.symbols.len(),
            });
        };
        let current = pair_counts.get(&pair).copied().unwrap_or(0);
        if current != count || count == 0 {
            continue;
        }
        let Some(new_id) = model.try_add_merge(pair) else {
            // Banned merge; drop the pair for good.
            pair_counts.remove(&pair);
            continue;
        };

        let affected: Vec<usize> = pair_words
            .get(&pair)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default();
        let mut touched: BTreeSet<(u32, u32)> = BTreeSet::new();
        for wi in affected {
            let (ids, weight) = &mut words[wi];
            let weight = *weight;
            for w in ids.windows(2) {
                let key = (w[0], w[1]);
                if let Some(c) = pair_counts.get_mut(&key) {
                    *c -= weight;
                }
                touched.insert(key);
            }
            let mut merged = Vec::with_capacity(ids.len());
            let mut i = 0;
            while i < ids.len() {
                if i + 1 < ids.len() && (ids[i], ids[i + 1]) == pair {
                    merged.push(new_id);
                    i += 2;
                } else {
                    merged.push(ids[i]);
                    i += 1;
                }
            }
            *ids = merged;
            for w in ids.windows(2) {
                let key = (w[0], w[1]);
                *pair_counts.entry(key).or_default() += weight;
                pair_words.entry(key).or_default().insert(wi);
                touched.insert(key);
            }
        }
        pair_counts.remove(&pair);
        for key in touched {
            if let Some(&c) = pair_counts.get(&key) {
                if c > 0 {
                    heap.push(HeapEntry { count: c, pair: key });
                }
            }
        }
    }

    Ok(model)
}

impl SubwordModel {
    fn base(
        reserved: &[String],
        chars: &BTreeSet<char>,
        vocab_size_target: usize,
    ) -> Result<Self, TokenizerError> {
        let mut symbols = Vec::new();
        let mut vocab = HashMap::new();
        for tag in reserved {
            if vocab.insert(tag.clone(), symbols.len() as u32).is_some() {
                return Err(TokenizerError::DuplicateReserved(tag.clone()));
            }
            symbols.push(Symbol::Reserved(tag.clone()));
        }
        let byte_base = symbols.len() as u32;
        for b in 0..=255u8 {
            let sym = Symbol::Byte(b);
            vocab.insert(sym.surface(), symbols.len() as u32);
            symbols.push(sym);
        }
        for &c in chars {
            let s = c.to_string();
            if vocab.contains_key(&s) {
                continue;
            }
            vocab.insert(s.clone(), symbols.len() as u32);
            symbols.push(Symbol::Piece(s));
        }
        Ok(SubwordModel {
            reserved: reserved.to_vec(),
            symbols,
            vocab,
            merges: HashMap::new(),
            merge_list: Vec::new(),
            byte_base,
            vocab_size_target,
        })
    }

    /// Registers the merge of `pair`. Returns `None` when the merge is not
    /// allowed: it would touch byte symbols, or spell a reserved tag or a
    /// byte-token surface.
    fn try_add_merge(&mut self, pair: (u32, u32)) -> Option<u32> {
        let (Symbol::Piece(a), Symbol::Piece(b)) =
            (&self.symbols[pair.0 as usize], &self.symbols[pair.1 as usize])
        else {
            return None;
        };
        let merged = format!("{a}{b}");
        let id = match self.vocab.get(&merged) {
            Some(&id) => match self.symbols[id as usize] {
                Symbol::Piece(_) => id,
                _ => return None,
            },
            None => {
                if parse_byte_token(&merged).is_some() {
                    return None;
                }
                let id = self.symbols.len() as u32;
                self.vocab.insert(merged.clone(), id);
                self.symbols.push(Symbol::Piece(merged));
                id
            }
        };
        self.merges.insert(pair, (self.merge_list.len(), id));
        self.merge_list.push(pair);
        Some(id)
    }

    fn unit_ids(&self, units: &[Unit]) -> Vec<u32> {
        let mut out = Vec::with_capacity(units.len());
        let mut buf = [0u8; 4];
        for u in units {
            match u {
                Unit::Byte(b) => out.push(self.byte_base + *b as u32),
                Unit::Char(c) => match self.vocab.get(c.encode_utf8(&mut buf) as &str) {
                    Some(&id) if matches!(self.symbols[id as usize], Symbol::Piece(_)) => {
                        out.push(id)
                    }
                    _ => {
                        for b in c.encode_utf8(&mut buf).bytes() {
                            out.push(self.byte_base + b as u32);
                        }
                    }
                },
            }
        }
        out
    }

    fn base_ids(&self, word: &str) -> Vec<u32> {
        split_words(word)
            .iter()
            .flat_map(|w| self.unit_ids(w))
            .collect()
    }

    fn apply_merges(&self, mut ids: Vec<u32>) -> Vec<u32> {
        loop {
            let best = ids
                .windows(2)
                .enumerate()
                .filter_map(|(i, w)| self.merges.get(&(w[0], w[1])).map(|&(rank, id)| (rank, i, id)))
                .min();
            let Some((rank, _, id)) = best else {
                return ids;
            };
            let pair = self.merge_list[rank];
            let mut merged = Vec::with_capacity(ids.len());
            let mut i = 0;
            while i < ids.len() {
                if i + 1 < ids.len() && (ids[i], ids[i + 1]) == pair {
                    merged.push(id);
                    i += 2;
                } else {
                    merged.push(ids[i]);
                    i += 1;
                }
            }
            ids = merged;
        }
    }

    /// Plain-text encoding. Never emits reserved ids, even when the text
    /// spells a reserved tag.
    pub fn encode(&self, text: &str) -> Vec<u32> {
        split_words(text)
            .iter()
            .flat_map(|w| self.apply_merges(self.unit_ids(w)))
            .collect()
    }

    /// Encodes `text`, mapping whitespace-delimited occurrences of the given
    /// reserved tags to their reserved ids. This is how tagging operations
    /// inject reserved ids; everything else goes through [`Self::encode`].
    pub fn encode_marked(&self, text: &str, tags: &[&str]) -> Vec<u32> {
        let mut out = Vec::new();
        let mut plain_start = 0;
        let mut pos = 0;
        for word in text.split(' ') {
            let end = pos + word.len();
            if let Some(id) = tags
                .iter()
                .find(|t| **t == word)
                .and_then(|t| self.reserved_id(t))
            {
                out.extend(self.encode(&text[plain_start..pos]));
                out.push(id);
                plain_start = end;
            }
            pos = end + 1;
        }
        out.extend(self.encode(&text[plain_start..]));
        out
    }

    pub fn decode(&self, ids: &[u32]) -> Result<String, TokenizerError> {
        let mut out = String::new();
        let mut pending: Vec<u8> = Vec::new();
        for &id in ids {
            let sym = self
                .symbols
                .get(id as usize)
                .ok_or(TokenizerError::InvalidId(id))?;
            match sym {
                Symbol::Byte(b) => pending.push(*b),
                Symbol::Reserved(s) | Symbol::Piece(s) => {
                    if !pending.is_empty() {
                        out.push_str(&String::from_utf8_lossy(&pending));
                        pending.clear();
                    }
                    if matches!(sym, Symbol::Reserved(_)) {
                        out.push_str(s);
                    } else {
                        out.extend(s.chars().map(|c| if c == WORD_BOUNDARY { ' ' } else { c }));
                    }
                }
            }
        }
        if !pending.is_empty() {
            out.push_str(&String::from_utf8_lossy(&pending));
        }
        Ok(out)
    }

    pub fn reserved(&self) -> &[String] {
        &self.reserved
    }

    pub fn reserved_id(&self, tag: &str) -> Option<u32> {
        self.reserved.iter().position(|r| r == tag).map(|i| i as u32)
    }

    pub fn token_id(&self, surface: &str) -> Option<u32> {
        self.vocab.get(surface).copied()
    }

    pub fn token(&self, id: u32) -> Option<String> {
        self.symbols.get(id as usize).map(Symbol::surface)
    }

    pub fn vocab_size(&self) -> usize {
        self.symbols.len()
    }

    pub fn vocab_size_target(&self) -> usize {
        self.vocab_size_target
    }

    pub fn merge_count(&self) -> usize {
        self.merge_list.len()
    }

    /// Builds a model directly from a reserved block, base characters and
    /// merge rules given as surface pairs. Merges must refer to pieces that
    /// exist when they are applied.
    pub fn from_parts(
        reserved: &[String],
        chars: &[char],
        merges: &[(&str, &str)],
    ) -> Result<Self, TokenizerError> {
        let set: BTreeSet<char> = chars.iter().copied().collect();
        let mut model = SubwordModel::base(reserved, &set, 0)?;
        for (a, b) in merges {
            let pair = model.lookup_pair(a, b)?;
            model
                .try_add_merge(pair)
                .ok_or_else(|| TokenizerError::Malformed(format!("merge ({a}, {b}) is not allowed")))?;
        }
        model.vocab_size_target = model.symbols.len();
        Ok(model)
    }

    fn lookup_pair(&self, a: &str, b: &str) -> Result<(u32, u32), TokenizerError> {
        let get = |s: &str| {
            self.vocab
                .get(s)
                .copied()
                .ok_or_else(|| TokenizerError::Malformed(format!("merge refers to unknown piece `{s}`")))
        };
        Ok((get(a)?, get(b)?))
    }

    pub fn to_json(&self) -> Result<String, TokenizerError> {
        let file = ModelFile {
            reserved: self.reserved.clone(),
            vocab: self
                .symbols
                .iter()
                .enumerate()
                .map(|(i, s)| (s.surface(), i as u32))
                .collect(),
            merges: self
                .merge_list
                .iter()
                .map(|&(a, b)| {
                    (
                        self.symbols[a as usize].surface(),
                        self.symbols[b as usize].surface(),
                    )
                })
                .collect(),
            vocab_size_target: self.vocab_size_target,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(json: &str) -> Result<Self, TokenizerError> {
        let file: ModelFile = serde_json::from_str(json)?;
        let mut by_id: Vec<(u32, &String)> = file.vocab.iter().map(|(s, &i)| (i, s)).collect();
        by_id.sort();
        let reserved_len = file.reserved.len();
        let mut chars = BTreeSet::new();
        for (id, surface) in &by_id {
            let id = *id as usize;
            if id < reserved_len {
                if file.reserved[id] != **surface {
                    return Err(TokenizerError::Malformed(format!(
                        "reserved id {id} is `{surface}`, expected `{}`",
                        file.reserved[id]
                    )));
                }
                continue;
            }
            if id < reserved_len + 256 {
                continue;
            }
            let mut it = surface.chars();
            if let (Some(c), None) = (it.next(), it.next()) {
                chars.insert(c);
            }
        }
        let mut model = SubwordModel::base(&file.reserved, &chars, file.vocab_size_target)?;
        for (a, b) in &file.merges {
            let pair = model.lookup_pair(a, b)?;
            model
                .try_add_merge(pair)
                .ok_or_else(|| TokenizerError::Malformed(format!("merge ({a}, {b}) is not allowed")))?;
        }
        if model.symbols.len() != by_id.len()
            || by_id
                .iter()
                .any(|(id, s)| model.vocab.get(*s) != Some(id))
        {
            return Err(TokenizerError::Malformed(
                "vocabulary does not match the merge table".into(),
            ));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), TokenizerError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, TokenizerError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

impl TokenCounter for SubwordModel {
    fn count_tokens(&self, text: &str) -> usize {
        self.encode(text).len()
    }
}
