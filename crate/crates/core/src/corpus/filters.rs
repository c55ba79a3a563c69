use std::collections::{BTreeSet, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::detect::{Detection, LanguageDetector};
use super::record::{normalize_text, SentencePair};
use crate::lang::LanguageTag;
use crate::tokenizer::TokenCounter;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("min_tokens must be at least 1")]
    MinTokens,
    #[error("max_tokens ({max}) must exceed min_tokens ({min})")]
    MaxTokens { min: usize, max: usize },
    #[error("max_len_ratio must exceed 1")]
    Ratio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterPolicy {
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub max_len_ratio: f64,
    /// Languages whose sides must be detected as exactly themselves.
    pub strict_langs: BTreeSet<LanguageTag>,
    /// Languages that accept any detection inside this set.
    pub african_langs: BTreeSet<LanguageTag>,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        FilterPolicy {
            min_tokens: 4,
            max_tokens: 512,
            max_len_ratio: 3.0,
            strict_langs: [LanguageTag::ENG, LanguageTag::FRA].into_iter().collect(),
            african_langs: LanguageTag::african().collect(),
        }
    }
}

impl FilterPolicy {
    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.min_tokens < 1 {
            return Err(PolicyError::MinTokens);
        }
        if self.max_tokens <= self.min_tokens {
            return Err(PolicyError::MaxTokens {
                min: self.min_tokens,
                max: self.max_tokens,
            });
        }
        if !(self.max_len_ratio > 1.0) {
            return Err(PolicyError::Ratio);
        }
        Ok(())
    }

    fn side_ok(&self, declared: LanguageTag, detected: &Detection) -> bool {
        let Detection::Language(found) = detected else {
            return false;
        };
        if self.african_langs.contains(&declared) && !self.strict_langs.contains(&declared) {
            self.african_langs.contains(found)
        } else {
            *found == declared
        }
    }

    /// Inclusive token bounds on both sides, strict ratio bound.
    pub fn length_ok(&self, src_len: usize, tgt_len: usize) -> bool {
        let in_bounds = |n: usize| (self.min_tokens..=self.max_tokens).contains(&n);
        if !in_bounds(src_len) || !in_bounds(tgt_len) {
            return false;
        }
        let (lo, hi) = if src_len < tgt_len {
            (src_len, tgt_len)
        } else {
            (tgt_len, src_len)
        };
        (hi as f64) / (lo as f64) < self.max_len_ratio
    }
}

type DedupKey = (String, String, LanguageTag, LanguageTag);

fn dedup_key(p: &SentencePair) -> DedupKey {
    (
        normalize_text(&p.source_text),
        normalize_text(&p.target_text),
        p.source_lang,
        p.target_lang,
    )
}

/// Exact-match deduplication on the normalized record. Keeps the first
/// occurrence; returns the survivors and the number removed.
pub fn deduplicate(pairs: Vec<SentencePair>) -> (Vec<SentencePair>, u64) {
    let before = pairs.len();
    let mut seen: HashSet<DedupKey> = HashSet::with_capacity(before);
    let out: Vec<SentencePair> = pairs
        .into_iter()
        .filter(|p| seen.insert(dedup_key(p)))
        .collect();
    let removed = (before - out.len()) as u64;
    (out, removed)
}

/// Two-phase deduplication over ordered shards: each shard is deduplicated
/// locally in parallel, then a sequential merge in shard order drops records
/// already seen in earlier shards. Output equals [`deduplicate`] over the
/// concatenated shards.
pub fn deduplicate_sharded(shards: Vec<Vec<SentencePair>>) -> (Vec<SentencePair>, u64) {
    let before: usize = shards.iter().map(Vec::len).sum();
    let local: Vec<Vec<(DedupKey, SentencePair)>> = shards
        .into_par_iter()
        .map(|shard| {
            let mut seen = HashSet::new();
            shard
                .into_iter()
                .filter_map(|p| {
                    let k = dedup_key(&p);
                    seen.insert(k.clone()).then_some((k, p))
                })
                .collect()
        })
        .collect();
    let mut seen: HashSet<DedupKey> = HashSet::new();
    let mut out = Vec::new();
    for shard in local {
        for (k, p) in shard {
            if seen.insert(k) {
                out.push(p);
            }
        }
    }
    let removed = (before - out.len()) as u64;
    (out, removed)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageTally {
    pub dropped: u64,
    /// Subset of `dropped` where the detector itself failed.
    pub detector_failures: u64,
}

/// Drops pairs whose detected languages disagree with their tags under
/// `policy`. Detector errors count as disagreement.
pub fn filter_language<D: LanguageDetector + ?Sized>(
    pairs: Vec<SentencePair>,
    detector: &D,
    policy: &FilterPolicy,
) -> (Vec<SentencePair>, LanguageTally) {
    let verdicts: Vec<(bool, bool)> = pairs
        .par_iter()
        .map(|p| {
            let check = |text: &str, declared| match detector.detect(text) {
                Ok(d) => (policy.side_ok(declared, &d), false),
                Err(_) => (false, true),
            };
            let (src_ok, src_fail) = check(&p.source_text, p.source_lang);
            if !src_ok {
                return (false, src_fail);
            }
            check(&p.target_text, p.target_lang)
        })
        .collect();
    let mut tally = LanguageTally::default();
    let out = pairs
        .into_iter()
        .zip(verdicts)
        .filter_map(|(p, (keep, failed))| {
            if !keep {
                tally.dropped += 1;
                if failed {
                    tally.detector_failures += 1;
                }
            }
            keep.then_some(p)
        })
        .collect();
    (out, tally)
}

/// Keeps pairs with `min ≤ len ≤ max` tokens on both sides and a length ratio
/// strictly below `max_len_ratio`.
pub fn filter_length<T: TokenCounter + Sync + ?Sized>(
    pairs: Vec<SentencePair>,
    tokenizer: &T,
    policy: &FilterPolicy,
) -> (Vec<SentencePair>, u64) {
    let before = pairs.len();
    let out: Vec<SentencePair> = pairs
        .into_par_iter()
        .filter(|p| {
            policy.length_ok(
                tokenizer.count_tokens(&p.source_text),
                tokenizer.count_tokens(&p.target_text),
            )
        })
        .collect();
    let removed = (before - out.len()) as u64;
    (out, removed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::detect::DetectError;
    use crate::tokenizer::WhitespaceCounter;

    fn tag(s: &str) -> LanguageTag {
        s.parse().unwrap()
    }

    fn pair(src: &str, tgt: &str, s: &str, t: &str) -> SentencePair {
        SentencePair::clean(src, tgt, tag(s), tag(t)).unwrap()
    }

    #[test]
    fn policy_validation() {
        assert!(FilterPolicy::default().validate().is_ok());
        let mut p = FilterPolicy::default();
        p.min_tokens = 0;
        assert_eq!(p.validate(), Err(PolicyError::MinTokens));
        let mut p = FilterPolicy::default();
        p.max_tokens = 4;
        assert!(p.validate().is_err());
        let mut p = FilterPolicy::default();
        p.max_len_ratio = 1.0;
        assert_eq!(p.validate(), Err(PolicyError::Ratio));
        let parsed: FilterPolicy = serde_json::from_str(r#"{"max_tokens": 100}"#).unwrap();
        assert_eq!(parsed.min_tokens, 4);
        assert_eq!(parsed.max_tokens, 100);
    }

    #[test]
    fn dedup_keeps_first_occurrence() {
        let a = pair("a", "b", "eng", "fra");
        let b = pair("c", "d", "eng", "fra");
        let input = vec![a.clone(), b.clone(), a.clone(), a.clone(), a.clone(), a.clone()];
        let (out, removed) = deduplicate(input);
        assert_eq!(out, vec![a.clone(), b.clone()]);
        assert_eq!(removed, 4);
        let (same, removed) = deduplicate(vec![a.clone(), b.clone()]);
        assert_eq!(same, vec![a, b]);
        assert_eq!(removed, 0);
    }

    #[test]
    fn dedup_distinguishes_languages() {
        let a = pair("a", "b", "eng", "fra");
        let b = pair("a", "b", "eng", "zul");
        assert_eq!(deduplicate(vec![a, b]).1, 0);
    }

    fn fixed(map: Vec<(&'static str, &'static str)>) -> impl Fn(&str) -> Result<Detection, DetectError> + Sync {
        move |text: &str| {
            map.iter()
                .find(|(t, _)| *t == text)
                .map(|(_, l)| match l.parse() {
                    Ok(tag) => Detection::Language(tag),
                    Err(_) => Detection::Other(l.to_string()),
                })
                .ok_or(DetectError::Failed(text.into()))
        }
    }

    #[test]
    fn african_confusion_is_accepted() {
        let det = fixed(vec![("amh text", "orm"), ("fra text", "fra")]);
        let p = pair("amh text", "fra text", "amh", "fra");
        let (out, tally) = filter_language(vec![p.clone()], &det, &FilterPolicy::default());
        assert_eq!(out, vec![p]);
        assert_eq!(tally.dropped, 0);
    }

    #[test]
    fn strict_languages_must_match() {
        let det = fixed(vec![("eng text", "fra"), ("zul text", "zul")]);
        let p = pair("eng text", "zul text", "eng", "zul");
        let (out, tally) = filter_language(vec![p], &det, &FilterPolicy::default());
        assert!(out.is_empty());
        assert_eq!(tally.dropped, 1);
    }

    #[test]
    fn other_and_failures_are_dropped() {
        let det = fixed(vec![("x", "deu"), ("y", "zul")]);
        let pairs = vec![pair("x", "y", "hau", "zul"), pair("missing", "y", "hau", "zul")];
        let (out, tally) = filter_language(pairs, &det, &FilterPolicy::default());
        assert!(out.is_empty());
        assert_eq!(tally, LanguageTally { dropped: 2, detector_failures: 1 });
    }

    #[test]
    fn agreeing_detector_is_identity() {
        let pairs = vec![
            pair("s1", "t1", "eng", "zul"),
            pair("s2", "t2", "fra", "swh"),
            pair("s3", "t3", "amh", "eng"),
        ];
        let lookup: Vec<(String, LanguageTag)> = pairs
            .iter()
            .flat_map(|p| {
                [
                    (p.source_text.clone(), p.source_lang),
                    (p.target_text.clone(), p.target_lang),
                ]
            })
            .collect();
        let det = move |text: &str| {
            Ok(Detection::Language(
                lookup.iter().find(|(t, _)| t == text).unwrap().1,
            ))
        };
        let (out, _) = filter_language(pairs.clone(), &det, &FilterPolicy::default());
        assert_eq!(out, pairs);
    }

    #[test]
    fn length_bounds() {
        let policy = FilterPolicy::default();
        let ws = WhitespaceCounter;
        let words = |n: usize| vec!["w"; n].join(" ");
        let three = pair(&words(3), &words(4), "eng", "fra");
        let four = pair(&words(4), &words(4), "eng", "fra");
        let skewed = pair(&words(12), &words(40), "eng", "fra");
        let long = pair(&words(513), &words(500), "eng", "fra");
        let edge = pair(&words(512), &words(200), "eng", "fra");
        let (out, removed) = filter_length(
            vec![three, four.clone(), skewed, long, edge.clone()],
            &ws,
            &policy,
        );
        assert_eq!(out, vec![four, edge]);
        assert_eq!(removed, 3);
        assert!(!policy.length_ok(4, 12));
        assert!(policy.length_ok(4, 11));
    }
}
