//! Corpus-level spBLEU and ChrF++, and the per-category report.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{Direction, LanguageTag};
use crate::tokenizer::SubwordModel;

pub const BLEU_ORDER: usize = 4;
pub const BLEU_EPSILON: f64 = 1e-9;
pub const CHRF_CHAR_ORDER: usize = 6;
pub const CHRF_WORD_ORDER: usize = 2;
pub const CHRF_BETA: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("empty reference corpus")]
    Empty,
    #[error("{hyps} hypotheses but {refs} references")]
    LengthMismatch { hyps: usize, refs: usize },
}

/// Splits text into the units BLEU counts.
pub trait Segmenter {
    fn segment(&self, text: &str) -> Vec<u32>;
}

impl Segmenter for SubwordModel {
    fn segment(&self, text: &str) -> Vec<u32> {
        self.encode(text)
    }
}

fn check(hyps: usize, refs: usize) -> Result<(), MetricError> {
    if refs == 0 {
        return Err(MetricError::Empty);
    }
    if hyps != refs {
        return Err(MetricError::LengthMismatch { hyps, refs });
    }
    Ok(())
}

fn ngram_counts<T: Hash + Eq + Clone>(items: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut out = HashMap::new();
    if items.len() >= n {
        for w in items.windows(n) {
            *out.entry(w).or_insert(0) += 1;
        }
    }
    out
}

/// (clipped matches, hypothesis n-grams, reference n-grams)
fn match_stats<T: Hash + Eq + Clone>(hyp: &[T], reference: &[T], n: usize) -> (usize, usize, usize) {
    let h = ngram_counts(hyp, n);
    let r = ngram_counts(reference, n);
    let matches = h
        .iter()
        .map(|(g, c)| (*c).min(r.get(g).copied().unwrap_or(0)))
        .sum();
    (
        matches,
        hyp.len().saturating_sub(n - 1),
        reference.len().saturating_sub(n - 1),
    )
}

/// Sufficient statistics of corpus BLEU.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BleuStats {
    pub matches: [usize; BLEU_ORDER],
    pub totals: [usize; BLEU_ORDER],
    pub hyp_len: usize,
    pub ref_len: usize,
}

impl BleuStats {
    pub fn add(&mut self, hyp: &[u32], reference: &[u32]) {
        for n in 1..=BLEU_ORDER {
            let (m, t, _) = match_stats(hyp, reference, n);
            self.matches[n - 1] += m;
            self.totals[n - 1] += t;
        }
        self.hyp_len += hyp.len();
        self.ref_len += reference.len();
    }

    /// Modified precision with the ε floor.
    pub fn precision(&self, n: usize) -> f64 {
        let (m, t) = (self.matches[n - 1], self.totals[n - 1]);
        if t == 0 {
            return BLEU_EPSILON;
        }
        (m as f64).max(BLEU_EPSILON * t as f64) / t as f64
    }

    pub fn brevity_penalty(&self) -> f64 {
        if self.hyp_len == 0 {
            return 0.0;
        }
        (1.0 - self.ref_len as f64 / self.hyp_len as f64).min(0.0).exp()
    }

    pub fn score(&self) -> f64 {
        let log_mean = (1..=BLEU_ORDER)
            .map(|n| self.precision(n).ln())
            .sum::<f64>()
            / BLEU_ORDER as f64;
        100.0 * self.brevity_penalty() * log_mean.exp()
    }
}

/// Corpus BLEU over `segmenter` units, n-grams 1..4.
pub fn spbleu<S: Segmenter + ?Sized>(
    hypotheses: &[String],
    references: &[String],
    segmenter: &S,
) -> Result<f64, MetricError> {
    check(hypotheses.len(), references.len())?;
    let mut stats = BleuStats::default();
    for (h, r) in hypotheses.iter().zip(references) {
        stats.add(&segmenter.segment(h), &segmenter.segment(r));
    }
    Ok(stats.score())
}

/// Per-order match statistics for ChrF++: six character orders, then two
/// word orders.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ChrfStats {
    pub orders: [(usize, usize, usize); CHRF_CHAR_ORDER + CHRF_WORD_ORDER],
}

impl ChrfStats {
    pub fn add(&mut self, hyp: &str, reference: &str) {
        let hc: Vec<char> = hyp.chars().filter(|c| !c.is_whitespace()).collect();
        let rc: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
        let hw: Vec<&str> = hyp.split_whitespace().collect();
        let rw: Vec<&str> = reference.split_whitespace().collect();
        for n in 1..=CHRF_CHAR_ORDER {
            let s = match_stats(&hc, &rc, n);
            self.accumulate(n - 1, s);
        }
        for n in 1..=CHRF_WORD_ORDER {
            let s = match_stats(&hw, &rw, n);
            self.accumulate(CHRF_CHAR_ORDER + n - 1, s);
        }
    }

    fn accumulate(&mut self, i: usize, (m, h, r): (usize, usize, usize)) {
        let o = &mut self.orders[i];
        o.0 += m;
        o.1 += h;
        o.2 += r;
    }

    /// Mean F_β over the orders that occur on either side.
    pub fn score(&self) -> f64 {
        let b2 = CHRF_BETA * CHRF_BETA;
        let mut sum = 0.0;
        let mut used = 0;
        for &(m, h, r) in &self.orders {
            if h == 0 && r == 0 {
                continue;
            }
            used += 1;
            if m == 0 {
                continue;
            }
            let p = m as f64 / h as f64;
            let rec = m as f64 / r as f64;
            sum += (1.0 + b2) * p * rec / (b2 * p + rec);
        }
        if used == 0 {
            return 100.0;
        }
        100.0 * sum / used as f64
    }
}

pub fn chrfpp(hypotheses: &[String], references: &[String]) -> Result<f64, MetricError> {
    check(hypotheses.len(), references.len())?;
    let mut stats = ChrfStats::default();
    for (h, r) in hypotheses.iter().zip(references) {
        stats.add(h, r);
    }
    Ok(stats.score())
}

/// Reporting buckets. Directions between English and French only count
/// towards `All`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "X-Eng")]
    XEng,
    #[serde(rename = "Eng-X")]
    EngX,
    #[serde(rename = "X-Fra")]
    XFra,
    #[serde(rename = "Fra-X")]
    FraX,
    #[serde(rename = "X-X")]
    XX,
    All,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::XEng,
        Category::EngX,
        Category::XFra,
        Category::FraX,
        Category::XX,
        Category::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::XEng => "X-Eng",
            Category::EngX => "Eng-X",
            Category::XFra => "X-Fra",
            Category::FraX => "Fra-X",
            Category::XX => "X-X",
            Category::All => "All",
        }
    }

    /// The non-`All` category of a direction, if any.
    pub fn of(d: Direction) -> Option<Category> {
        let (eng, fra) = (LanguageTag::ENG, LanguageTag::FRA);
        let pivot = |l: LanguageTag| l == eng || l == fra;
        match (d.src, d.tgt) {
            (s, t) if pivot(s) && pivot(t) => None,
            (_, t) if t == eng => Some(Category::XEng),
            (s, _) if s == eng => Some(Category::EngX),
            (_, t) if t == fra => Some(Category::XFra),
            (s, _) if s == fra => Some(Category::FraX),
            _ => Some(Category::XX),
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub bleu: f64,
    pub chrfpp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// Unweighted mean over all directions.
    pub bleu: f64,
    pub chrfpp: f64,
    pub per_direction: BTreeMap<Direction, Scores>,
    /// Categories without directions are omitted.
    pub category_means: BTreeMap<Category, Scores>,
}

impl MetricReport {
    pub fn from_directions(per_direction: BTreeMap<Direction, Scores>) -> Result<Self, MetricError> {
        if per_direction.is_empty() {
            return Err(MetricError::Empty);
        }
        let mut buckets: BTreeMap<Category, Vec<Scores>> = BTreeMap::new();
        for (d, s) in &per_direction {
            buckets.entry(Category::All).or_default().push(*s);
            if let Some(c) = Category::of(*d) {
                buckets.entry(c).or_default().push(*s);
            }
        }
        let category_means: BTreeMap<Category, Scores> = buckets
            .into_iter()
            .map(|(c, v)| {
                let n = v.len() as f64;
                let bleu = v.iter().map(|s| s.bleu).sum::<f64>() / n;
                let chrfpp = v.iter().map(|s| s.chrfpp).sum::<f64>() / n;
                (c, Scores { bleu, chrfpp })
            })
            .collect();
        let all = category_means[&Category::All];
        Ok(MetricReport {
            bleu: all.bleu,
            chrfpp: all.chrfpp,
            per_direction,
            category_means,
        })
    }

    /// Scores every direction's (hypotheses, references) corpus.
    pub fn evaluate<S: Segmenter + ?Sized>(
        corpora: &BTreeMap<Direction, (Vec<String>, Vec<String>)>,
        segmenter: &S,
    ) -> Result<Self, MetricError> {
        let mut per = BTreeMap::new();
        for (d, (h, r)) in corpora {
            per.insert(
                *d,
                Scores {
                    bleu: spbleu(h, r, segmenter)?,
                    chrfpp: chrfpp(h, r)?,
                },
            );
        }
        Self::from_directions(per)
    }
}
