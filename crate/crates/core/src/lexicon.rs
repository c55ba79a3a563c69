//! A word-for-word toy translation model.
//!
//! The model is learned from word-aligned parallel text (pairs whose sides
//! have the same number of words, aligned by position). It serves both as a
//! [`TranslatorOracle`] for augmentation and, through [`LexiconScorer`], as a
//! [`ScoringModel`] for beam search.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::augmentation::TranslatorOracle;
use crate::corpus::SentencePair;
use crate::decoding::{beam_search, BeamConfig, DecodeError, ScoringModel};
use crate::lang::{Direction, LanguageTag};

pub const EOS: u32 = 0;
pub const UNK: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconModel {
    /// Id 0 is end-of-sequence, id 1 the unknown word.
    pub vocab: Vec<String>,
    /// Per direction: source word → target candidates with counts, best first.
    pub entries: BTreeMap<Direction, BTreeMap<String, Vec<(String, u64)>>>,
    /// Probability mass spread uniformly over the vocabulary at every step.
    pub smoothing: f64,
    /// Words ignored while learning (augmentation tags and the like).
    #[serde(default)]
    pub ignore: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl LexiconModel {
    /// Learns positional word alignments in both directions of every pair.
    /// Pairs whose sides differ in length (after dropping `ignore` words)
    /// are skipped.
    pub fn learn(pairs: &[SentencePair], ignore: &[&str], smoothing: f64) -> LexiconModel {
        let mut counts: BTreeMap<Direction, BTreeMap<String, BTreeMap<String, u64>>> = BTreeMap::new();
        let mut words: std::collections::BTreeSet<String> = Default::default();
        let keep = |w: &&str| !ignore.contains(w);
        for p in pairs {
            let s: Vec<&str> = p.source_text.split_whitespace().filter(keep).collect();
            let t: Vec<&str> = p.target_text.split_whitespace().filter(keep).collect();
            if s.len() != t.len() || s.is_empty() {
                continue;
            }
            let d = p.direction();
            for (a, b) in s.iter().zip(&t) {
                for (dir, x, y) in [(d, a, b), (d.reversed(), b, a)] {
                    *counts
                        .entry(dir)
                        .or_default()
                        .entry(x.to_string())
                        .or_default()
                        .entry(y.to_string())
                        .or_default() += 1;
                }
                words.insert(a.to_string());
                words.insert(b.to_string());
            }
        }
        let entries = counts
            .into_iter()
            .map(|(d, table)| {
                let table = table
                    .into_iter()
                    .map(|(src, cands)| {
                        let mut c: Vec<(String, u64)> = cands.into_iter().collect();
                        c.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
                        (src, c)
                    })
                    .collect();
                (d, table)
            })
            .collect();
        let vocab = ["</s>".to_string(), "<unk>".to_string()]
            .into_iter()
            .chain(words)
            .collect();
        let mut m = LexiconModel {
            vocab,
            entries,
            smoothing,
            ignore: ignore.iter().map(|s| s.to_string()).collect(),
            index: HashMap::new(),
        };
        m.build_index();
        m
    }

    fn build_index(&mut self) {
        self.index = self
            .vocab
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        let mut m: LexiconModel = serde_json::from_str(text)?;
        m.build_index();
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("lexicon models always serialize")
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(std::io::Error::other)
    }

    pub fn word_id(&self, w: &str) -> u32 {
        self.index.get(w).copied().unwrap_or(UNK)
    }

    pub fn source_ids(&self, text: &str) -> Vec<u32> {
        text.split_whitespace()
            .filter(|w| !self.ignore.iter().any(|i| i == w))
            .map(|w| self.word_id(w))
            .collect()
    }

    pub fn scorer(&self, direction: Direction) -> LexiconScorer<'_> {
        LexiconScorer {
            model: self,
            table: self.entries.get(&direction),
        }
    }

    /// Beam-search translation. Unknown words are copied from the source.
    pub fn translate_beam(
        &self,
        text: &str,
        direction: Direction,
        config: &BeamConfig,
    ) -> Result<String, DecodeError> {
        let src_words: Vec<&str> = text
            .split_whitespace()
            .filter(|w| !self.ignore.iter().any(|i| i == w))
            .collect();
        let ids = self.source_ids(text);
        let hyps = beam_search(&self.scorer(direction), &ids, config)?;
        let Some(best) = hyps.first() else {
            return Ok(String::new());
        };
        Ok(best
            .tokens
            .iter()
            .take_while(|&&t| t != EOS)
            .enumerate()
            .map(|(i, &t)| {
                if t == UNK {
                    src_words.get(i).copied().unwrap_or("")
                } else {
                    self.vocab[t as usize].as_str()
                }
            })
            .filter(|w| !w.is_empty())
            .collect::<Vec<_>>()
            .join(" "))
    }
}

impl TranslatorOracle for LexiconModel {
    /// Greedy word-for-word translation; unknown words are copied. Returns
    /// an empty string for directions the model has never seen.
    fn translate(&self, text: &str, source: LanguageTag, target: LanguageTag) -> String {
        let Some(table) = self.entries.get(&Direction { src: source, tgt: target }) else {
            return String::new();
        };
        text.split_whitespace()
            .filter(|w| !self.ignore.iter().any(|i| i == w))
            .map(|w| table.get(w).map_or(w, |c| c[0].0.as_str()))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Next-word distribution for one direction: position `t` of the output
/// translates source word `t`; after the last source word, end-of-sequence.
pub struct LexiconScorer<'m> {
    model: &'m LexiconModel,
    table: Option<&'m BTreeMap<String, Vec<(String, u64)>>>,
}

impl ScoringModel for LexiconScorer<'_> {
    fn vocab_size(&self) -> usize {
        self.model.vocab.len()
    }

    fn eos(&self) -> u32 {
        EOS
    }

    fn log_probs(&self, source: &[u32], prefix: &[u32]) -> Vec<f64> {
        let v = self.vocab_size();
        let eps = self.model.smoothing;
        let mut probs = vec![eps / v as f64; v];
        let mass = 1.0 - eps;
        let t = prefix.len();
        if t >= source.len() {
            probs[EOS as usize] += mass;
        } else {
            let word = &self.model.vocab[source[t] as usize];
            match self.table.and_then(|tb| tb.get(word)) {
                Some(cands) => {
                    let total: u64 = cands.iter().map(|c| c.1).sum();
                    for (w, c) in cands {
                        probs[self.model.word_id(w) as usize] += mass * *c as f64 / total as f64;
                    }
                }
                None => probs[UNK as usize] += mass,
            }
        }
        probs.into_iter().map(f64::ln).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoding::StopRule;

    fn pair(s: &str, t: &str) -> SentencePair {
        SentencePair::clean(s, t, LanguageTag::ENG, LanguageTag::FRA).unwrap()
    }

    #[test]
    fn learns_and_translates() {
        let m = LexiconModel::learn(
            &[pair("the cat", "le chat"), pair("the dog", "le chien"), pair("a b c", "x y")],
            &["TBD0"],
            1e-3,
        );
        let ef = Direction { src: LanguageTag::ENG, tgt: LanguageTag::FRA };
        assert_eq!(m.translate("the dog", LanguageTag::ENG, LanguageTag::FRA), "le chien");
        assert_eq!(m.translate("chat le TBD0", LanguageTag::FRA, LanguageTag::ENG), "cat the");
        assert_eq!(m.translate("the cat", LanguageTag::ENG, "zul".parse().unwrap()), "");
        let cfg = BeamConfig { beam: 4, lenpen: 1.0, max_len: 10, stop: StopRule::Bound };
        assert_eq!(m.translate_beam("the cat zebra", ef, &cfg).unwrap(), "le chat zebra");
        let back = LexiconModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back.word_id("chat"), m.word_id("chat"));
    }

    #[test]
    fn scorer_is_normalized() {
        let m = LexiconModel::learn(&[pair("a b", "c d"), pair("a e", "f d")], &[], 0.01);
        let s = m.scorer(Direction { src: LanguageTag::ENG, tgt: LanguageTag::FRA });
        let src = m.source_ids("a b");
        for prefix in [vec![], vec![3], vec![3, 4]] {
            let lp = s.log_probs(&src, &prefix);
            let total: f64 = lp.iter().map(|x| x.exp()).sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
    }
}
