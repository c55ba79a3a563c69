use serde::{Deserialize, Serialize};

use super::detect::LanguageDetector;
use super::filters::{deduplicate, filter_language, filter_length, FilterPolicy};
use super::record::SentencePair;
use crate::tokenizer::TokenCounter;

/// Drop counts per cleaning step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineTally {
    pub input: u64,
    pub duplicates: u64,
    pub wrong_language: u64,
    pub detector_failures: u64,
    pub bad_length: u64,
    pub output: u64,
}

impl PipelineTally {
    pub fn merge(&mut self, other: &PipelineTally) {
        self.input += other.input;
        self.duplicates += other.duplicates;
        self.wrong_language += other.wrong_language;
        self.detector_failures += other.detector_failures;
        self.bad_length += other.bad_length;
        self.output += other.output;
    }
}

/// Deduplication, language filtering and length filtering, in that order.
pub fn clean_pairs<D, T>(
    pairs: Vec<SentencePair>,
    detector: &D,
    tokenizer: &T,
    policy: &FilterPolicy,
) -> (Vec<SentencePair>, PipelineTally)
where
    D: LanguageDetector + ?Sized,
    T: TokenCounter + Sync + ?Sized,
{
    let mut tally = PipelineTally {
        input: pairs.len() as u64,
        ..Default::default()
    };
    let (pairs, dup) = deduplicate(pairs);
    tally.duplicates = dup;
    let (pairs, lang) = filter_language(pairs, detector, policy);
    tally.wrong_language = lang.dropped;
    tally.detector_failures = lang.detector_failures;
    let (pairs, len) = filter_length(pairs, tokenizer, policy);
    tally.bad_length = len;
    tally.output = pairs.len() as u64;
    (pairs, tally)
}
