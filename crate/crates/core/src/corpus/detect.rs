use std::collections::{BTreeMap, HashMap, HashSet};

use thiserror::Error;

use crate::lang::LanguageTag;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Detection {
    Language(LanguageTag),
    /// Anything outside the supported set, with the detector's label.
    Other(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DetectError {
    #[error("cannot detect the language of empty text")]
    Empty,
    #[error("detector failure: {0}")]
    Failed(String),
}

/// Best-guess language identification for a single string.
pub trait LanguageDetector: Sync {
    fn detect(&self, text: &str) -> Result<Detection, DetectError>;
}

impl<F> LanguageDetector for F
where
    F: Fn(&str) -> Result<Detection, DetectError> + Sync,
{
    fn detect(&self, text: &str) -> Result<Detection, DetectError> {
        self(text)
    }
}

/// Reference detector: a multinomial naive Bayes model over character
/// bigrams, trained on sample text per language.
#[derive(Debug, Clone)]
pub struct CharNgramDetector {
    langs: Vec<LanguageTag>,
    /// Per language: log P(bigram), with the smoothed unseen mass last.
    log_probs: Vec<HashMap<(char, char), f64>>,
    unseen: Vec<f64>,
    known_chars: HashSet<char>,
    /// Texts with a larger share of unknown characters are labelled `Other`.
    max_unknown_share: f64,
}

const SMOOTHING: f64 = 0.5;
const BOUNDARY: char = '\u{2}';

fn bigrams(text: &str) -> impl Iterator<Item = (char, char)> + '_ {
    text.split_whitespace().flat_map(|w| {
        let chars: Vec<char> = std::iter::once(BOUNDARY)
            .chain(w.chars().flat_map(char::to_lowercase))
            .chain(std::iter::once(BOUNDARY))
            .collect();
        chars.windows(2).map(|p| (p[0], p[1])).collect::<Vec<_>>()
    })
}

impl CharNgramDetector {
    pub fn train(samples: &BTreeMap<LanguageTag, Vec<String>>) -> Self {
        let mut counts: Vec<HashMap<(char, char), f64>> = Vec::new();
        let mut langs = Vec::new();
        let mut vocab: HashSet<(char, char)> = HashSet::new();
        let mut known_chars = HashSet::new();
        for (lang, lines) in samples {
            let mut c: HashMap<(char, char), f64> = HashMap::new();
            for line in lines {
                known_chars.extend(line.chars().flat_map(char::to_lowercase));
                for bg in bigrams(line) {
                    *c.entry(bg).or_default() += 1.0;
                    vocab.insert(bg);
                }
            }
            langs.push(*lang);
            counts.push(c);
        }
        let v = vocab.len() as f64 + 1.0;
        let mut log_probs = Vec::with_capacity(counts.len());
        let mut unseen = Vec::with_capacity(counts.len());
        for c in counts {
            let total: f64 = c.values().sum();
            let denom = total + SMOOTHING * v;
            unseen.push((SMOOTHING / denom).ln());
            log_probs.push(
                c.into_iter()
                    .map(|(k, n)| (k, ((n + SMOOTHING) / denom).ln()))
                    .collect(),
            );
        }
        CharNgramDetector {
            langs,
            log_probs,
            unseen,
            known_chars,
            max_unknown_share: 0.5,
        }
    }

    pub fn languages(&self) -> &[LanguageTag] {
        &self.langs
    }
}

impl LanguageDetector for CharNgramDetector {
    fn detect(&self, text: &str) -> Result<Detection, DetectError> {
        let letters: Vec<char> = text
            .chars()
            .filter(|c| !c.is_whitespace())
            .flat_map(char::to_lowercase)
            .collect();
        if letters.is_empty() {
            return Err(DetectError::Empty);
        }
        if self.langs.is_empty() {
            return Err(DetectError::Failed("detector has no languages".into()));
        }
        let unknown = letters.iter().filter(|c| !self.known_chars.contains(c)).count();
        if unknown as f64 / letters.len() as f64 > self.max_unknown_share {
            return Ok(Detection::Other("und".into()));
        }
        let grams: Vec<(char, char)> = bigrams(text).collect();
        let (best, _) = self
            .log_probs
            .iter()
            .zip(&self.unseen)
            .enumerate()
            .map(|(i, (lp, &un))| {
                let score: f64 = grams.iter().map(|g| lp.get(g).copied().unwrap_or(un)).sum();
                (i, score)
            })
            .fold((0, f64::NEG_INFINITY), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        Ok(Detection::Language(self.langs[best]))
    }
}
