//! Beam search with length penalty over an abstract next-token model.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecodeError {
    #[error("beam size must be at least 1")]
    ZeroBeam,
    #[error("max_len must be at least 1")]
    ZeroMaxLen,
    #[error("length penalty must be finite, got {0}")]
    BadLenpen(f64),
    #[error("model returned {got} scores for a vocabulary of {expected}")]
    VocabMismatch { expected: usize, got: usize },
    #[error("model returned an invalid score for token {token} after prefix {prefix:?}")]
    NonFinite { token: u32, prefix: Vec<u32> },
}

/// Next-token log-probabilities given the source and the target prefix.
pub trait ScoringModel {
    fn vocab_size(&self) -> usize;
    fn eos(&self) -> u32;
    fn log_probs(&self, source: &[u32], prefix: &[u32]) -> Vec<f64>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    /// Ends with the end-of-sequence id.
    pub tokens: Vec<u32>,
    pub logprob: f64,
    pub normalized_score: f64,
}

/// When the search may stop before `max_len`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Stop as soon as `beam` hypotheses have finished.
    #[default]
    Finished,
    /// Stop once no live hypothesis can still beat the `beam`-th best
    /// finished score. Requires log-probabilities ≤ 0.
    Bound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamConfig {
    pub beam: usize,
    pub lenpen: f64,
    /// Maximum hypothesis length, end-of-sequence included.
    pub max_len: usize,
    #[serde(default)]
    pub stop: StopRule,
}

impl Default for BeamConfig {
    fn default() -> Self {
        BeamConfig {
            beam: 4,
            lenpen: 1.0,
            max_len: 128,
            stop: StopRule::Finished,
        }
    }
}

pub fn normalized(logprob: f64, len: usize, lenpen: f64) -> f64 {
    logprob / (len as f64).powf(lenpen)
}

fn by_logprob(a: &(Vec<u32>, f64), b: &(Vec<u32>, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0))
}

fn by_score(a: &Hypothesis, b: &Hypothesis) -> Ordering {
    b.normalized_score
        .total_cmp(&a.normalized_score)
        .then_with(|| a.tokens.cmp(&b.tokens))
}

/// Beam search.
///
/// At each step every live hypothesis is expanded by the whole vocabulary.
/// Every end-of-sequence extension is finished and scored
/// `logprob / len^lenpen`; the other extensions compete for the `beam` live
/// slots by accumulated log-probability. Ties break towards the
/// lexicographically smaller token sequence. A score of `-inf` marks an
/// impossible token; NaN and `+inf` are errors. Hypotheses still live at
/// `max_len` are discarded. Returns up to `beam` finished hypotheses, best
/// first.
pub fn beam_search<M: ScoringModel + ?Sized>(
    model: &M,
    source: &[u32],
    config: &BeamConfig,
) -> Result<Vec<Hypothesis>, DecodeError> {
    let BeamConfig {
        beam,
        lenpen,
        max_len,
        stop,
    } = *config;
    if beam == 0 {
        return Err(DecodeError::ZeroBeam);
    }
    if max_len == 0 {
        return Err(DecodeError::ZeroMaxLen);
    }
    if !lenpen.is_finite() {
        return Err(DecodeError::BadLenpen(lenpen));
    }
    let vocab = model.vocab_size();
    let eos = model.eos();
    let mut live: Vec<(Vec<u32>, f64)> = vec![(Vec::new(), 0.0)];
    let mut finished: Vec<Hypothesis> = Vec::new();

    for step in 1..=max_len {
        let mut candidates = Vec::new();
        for (prefix, lp) in &live {
            let scores = model.log_probs(source, prefix);
            if scores.len() != vocab {
                return Err(DecodeError::VocabMismatch {
                    expected: vocab,
                    got: scores.len(),
                });
            }
            for (tok, &s) in scores.iter().enumerate() {
                let tok = tok as u32;
                if s == f64::NEG_INFINITY {
                    continue;
                }
                if !s.is_finite() {
                    return Err(DecodeError::NonFinite {
                        token: tok,
                        prefix: prefix.clone(),
                    });
                }
                let mut tokens = prefix.clone();
                tokens.push(tok);
                let total = lp + s;
                if tok == eos {
                    finished.push(Hypothesis {
                        normalized_score: normalized(total, step, lenpen),
                        tokens,
                        logprob: total,
                    });
                } else if step < max_len {
                    candidates.push((tokens, total));
                }
            }
        }
        candidates.sort_by(by_logprob);
        candidates.truncate(beam);
        live = candidates;
        if live.is_empty() {
            break;
        }
        let done = match stop {
            StopRule::Finished => finished.len() >= beam,
            StopRule::Bound => {
                finished.len() >= beam && {
                    finished.sort_by(by_score);
                    let kth = finished[beam - 1].normalized_score;
                    // Log-probabilities only fall as hypotheses grow, so the
                    // best any live hypothesis can reach is its current
                    // log-probability at the most favourable length.
                    let len = if lenpen >= 0.0 { max_len } else { step + 1 };
                    live.iter().all(|(_, lp)| normalized(*lp, len, lenpen) <= kth)
                }
            }
        };
        if done {
            break;
        }
    }
    finished.sort_by(by_score);
    finished.truncate(beam);
    Ok(finished)
}

/// A model defined by an explicit table from target prefixes to
/// log-probability vectors. Prefixes missing from the table fall back to
/// `default`. The source is ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct TableModel {
    pub vocab_size: usize,
    pub eos: u32,
    pub table: HashMap<Vec<u32>, Vec<f64>>,
    pub default: Vec<f64>,
}

impl TableModel {
    /// A model that emits `sequence` with probability 1, then only
    /// end-of-sequence.
    pub fn forced(vocab_size: usize, eos: u32, sequence: &[u32]) -> Self {
        let one_hot = |t: u32| {
            (0..vocab_size as u32)
                .map(|v| if v == t { 0.0 } else { f64::NEG_INFINITY })
                .collect::<Vec<f64>>()
        };
        let mut table = HashMap::new();
        for i in 0..sequence.len() {
            table.insert(sequence[..i].to_vec(), one_hot(sequence[i]));
        }
        TableModel {
            vocab_size,
            eos,
            table,
            default: one_hot(eos),
        }
    }
}

impl ScoringModel for TableModel {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn eos(&self) -> u32 {
        self.eos
    }

    fn log_probs(&self, _source: &[u32], prefix: &[u32]) -> Vec<f64> {
        self.table
            .get(prefix)
            .cloned()
            .unwrap_or_else(|| self.default.clone())
    }
}

/// Normalizes raw scores into log-probabilities.
pub fn log_softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    scores.iter().map(|s| s - lse).collect()
}
