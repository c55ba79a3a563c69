//! Deterministic synthetic languages for fixtures, demos and benchmarks.
//!
//! Every language gets its own syllable inventory drawn from a script, and a
//! shared concept lexicon renders the same concept sequence in any language.
//! Parallel text is therefore word-aligned, and a word-for-word lexicon is a
//! perfect translator between any two languages.

use std::collections::HashMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{DetectError, Detection, SentencePair};
use crate::lang::LanguageTag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Script {
    Latin,
    Ethiopic,
    Arabic,
    Cyrillic,
    Greek,
    Han,
}

impl Script {
    pub const ALL: [Script; 6] = [
        Script::Latin,
        Script::Ethiopic,
        Script::Arabic,
        Script::Cyrillic,
        Script::Greek,
        Script::Han,
    ];

    /// (consonant-like, vowel-like) letters. Scripts without a vowel split
    /// return an empty vowel set and use single letters as syllables.
    fn letters(self) -> (Vec<char>, Vec<char>) {
        match self {
            Script::Latin => (
                "bcdfghjklmnprstvwyzɓɗŋ".chars().collect(),
                "aeiouɛɔ".chars().collect(),
            ),
            Script::Ethiopic => (('\u{1200}'..='\u{1357}').step_by(3).collect(), Vec::new()),
            Script::Arabic => (
                ('\u{0628}'..='\u{063A}').collect(),
                vec!['\u{0627}', '\u{0648}', '\u{064A}'],
            ),
            Script::Cyrillic => (
                "бвгджзклмнпрстфхцчшщ".chars().collect(),
                "аеиоуыэюя".chars().collect(),
            ),
            Script::Greek => ("βγδζθκλμνξπρστφχψ".chars().collect(), "αεηιουω".chars().collect()),
            Script::Han => (('\u{4E00}'..='\u{4EFF}').collect(), Vec::new()),
        }
    }
}

pub fn script_of(lang: LanguageTag) -> Script {
    match lang.code() {
        "amh" => Script::Ethiopic,
        "fuv" | "wol" => Script::Arabic,
        _ => Script::Latin,
    }
}

/// SplitMix64 finalizer, used to derive independent sub-seeds.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed.wrapping_add(salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn syllable_inventory(script: Script, seed: u64, size: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (cons, vowels) = script.letters();
    let mut out = Vec::with_capacity(size);
    while out.len() < size {
        let s = if vowels.is_empty() {
            cons.choose(&mut rng).unwrap().to_string()
        } else {
            let mut s = String::new();
            s.push(*cons.choose(&mut rng).unwrap());
            s.push(*vowels.choose(&mut rng).unwrap());
            if rng.random_bool(0.25) {
                s.push(*cons.choose(&mut rng).unwrap());
            }
            s
        };
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

fn fixed_inventory(lang: LanguageTag) -> Option<Vec<String>> {
    let list: &[&str] = match lang.code() {
        "eng" => &[
            "the", "th", "ing", "er", "wh", "st", "ough", "ea", "sh", "ly", "an", "ow", "ight",
            "re", "it", "ck",
        ],
        "fra" => &[
            "le", "la", "eau", "ou", "qu", "é", "è", "ç", "ai", "ent", "eux", "on", "oi", "gn",
            "ill", "ez",
        ],
        _ => return None,
    };
    Some(list.iter().map(|s| s.to_string()).collect())
}

/// A concept lexicon over all 26 languages.
#[derive(Debug, Clone)]
pub struct SyntheticLexicon {
    seed: u64,
    concepts: usize,
    inventories: HashMap<LanguageTag, Vec<String>>,
}

impl SyntheticLexicon {
    pub fn new(seed: u64, concepts: usize) -> Self {
        let inventories = LanguageTag::all()
            .map(|l| {
                let inv = fixed_inventory(l).unwrap_or_else(|| {
                    syllable_inventory(script_of(l), mix_seed(seed, 1000 + l.index() as u64), 24)
                });
                (l, inv)
            })
            .collect();
        SyntheticLexicon {
            seed,
            concepts,
            inventories,
        }
    }

    pub fn concepts(&self) -> usize {
        self.concepts
    }

    pub fn word(&self, lang: LanguageTag, concept: usize) -> String {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(
            self.seed,
            ((lang.index() as u64) << 32) | concept as u64,
        ));
        let inv = &self.inventories[&lang];
        let syllables = rng.random_range(1..=3);
        (0..syllables)
            .map(|_| inv.choose(&mut rng).unwrap().as_str())
            .collect()
    }

    pub fn render(&self, lang: LanguageTag, concepts: &[usize]) -> String {
        concepts
            .iter()
            .map(|&c| self.word(lang, c))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// A random concept sequence with Zipf-like frequencies.
    pub fn sentence(&self, rng: &mut impl Rng, min_len: usize, max_len: usize) -> Vec<usize> {
        let len = rng.random_range(min_len..=max_len);
        (0..len)
            .map(|_| {
                let u: f64 = rng.random_range(0.0..1.0);
                ((self.concepts as f64).powf(u) as usize).saturating_sub(1) % self.concepts
            })
            .collect()
    }

    pub fn parallel(
        &self,
        src: LanguageTag,
        tgt: LanguageTag,
        n: usize,
        seed: u64,
        len: (usize, usize),
    ) -> Vec<(String, String)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let c = self.sentence(&mut rng, len.0, len.1);
                (self.render(src, &c), self.render(tgt, &c))
            })
            .collect()
    }

    pub fn monolingual(&self, lang: LanguageTag, n: usize, seed: u64, len: (usize, usize)) -> Vec<String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let c = self.sentence(&mut rng, len.0, len.1);
                self.render(lang, &c)
            })
            .collect()
    }

    /// Word-for-word dictionary from `src` to `tgt`. On homographs the
    /// lowest concept wins.
    pub fn dictionary(&self, src: LanguageTag, tgt: LanguageTag) -> HashMap<String, String> {
        let mut out = HashMap::new();
        for c in 0..self.concepts {
            out.entry(self.word(src, c)).or_insert_with(|| self.word(tgt, c));
        }
        out
    }
}

/// A corpus with planted defects and the true language of every text.
#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub pairs: Vec<SentencePair>,
    /// Language each text was actually rendered in.
    pub truth: HashMap<String, LanguageTag>,
}

impl PlantedCorpus {
    /// Detector that reports the true language of fixture texts.
    pub fn oracle_detector(&self) -> impl Fn(&str) -> Result<Detection, DetectError> + Sync + '_ {
        |text: &str| {
            self.truth
                .get(text.trim())
                .map(|l| Detection::Language(*l))
                .ok_or_else(|| DetectError::Failed(format!("unknown fixture text `{text}`")))
        }
    }
}

/// `n` records over `langs` (all directions between them): about 10% exact
/// or whitespace-padded duplicates, 5% with one side rendered in another
/// language, 5% with out-of-bound lengths or length ratios.
pub fn planted_corpus(lex: &SyntheticLexicon, langs: &[LanguageTag], n: usize, seed: u64) -> PlantedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs: Vec<(LanguageTag, LanguageTag)> = langs
        .iter()
        .flat_map(|&a| langs.iter().filter(move |&&b| b != a).map(move |&b| (a, b)))
        .collect();
    let mut truth = HashMap::new();
    let mut pairs: Vec<SentencePair> = Vec::with_capacity(n);
    let render = |lang: LanguageTag, concepts: &[usize], truth: &mut HashMap<String, LanguageTag>| {
        let text = lex.render(lang, concepts);
        truth.entry(text.clone()).or_insert(lang);
        text
    };
    while pairs.len() < n {
        let roll: f64 = rng.random_range(0.0..1.0);
        if roll < 0.10 && !pairs.is_empty() {
            let i = rng.random_range(0..pairs.len());
            let mut dup = pairs[i].clone();
            if rng.random_bool(0.3) {
                dup.source_text = format!("  {} ", dup.source_text);
            }
            pairs.push(dup);
            continue;
        }
        let (s, t) = *dirs.choose(&mut rng).unwrap();
        let (src_c, tgt_c) = if roll < 0.15 {
            // Out-of-bound lengths or a skewed ratio.
            match rng.random_range(0..3) {
                0 => (lex.sentence(&mut rng, 1, 3), None),
                1 => (lex.sentence(&mut rng, 513, 530), None),
                _ => {
                    let c = lex.sentence(&mut rng, 4, 6);
                    let mut long = c.clone();
                    while long.len() < 3 * c.len() {
                        long.extend_from_slice(&c);
                    }
                    (c, Some(long))
                }
            }
        } else {
            (lex.sentence(&mut rng, 4, 30), None)
        };
        let tgt_c = tgt_c.unwrap_or_else(|| src_c.clone());
        let (mut s_render, mut t_render) = (s, t);
        if (0.15..0.20).contains(&roll) {
            // Render one side in a language other than its tag.
            let others: Vec<LanguageTag> = langs.iter().copied().filter(|l| *l != s && *l != t).collect();
            if let Some(&other) = others.choose(&mut rng) {
                if rng.random_bool(0.5) {
                    s_render = other;
                } else {
                    t_render = other;
                }
            }
        }
        let src = render(s_render, &src_c, &mut truth);
        let tgt = render(t_render, &tgt_c, &mut truth);
        pairs.push(SentencePair::clean(src, tgt, s, t).expect("distinct fixture languages"));
    }
    PlantedCorpus { pairs, truth }
}

/// Lines of random "words" written in `script`, for tokenizer coverage.
pub fn script_lines(script: Script, n: usize, seed: u64) -> Vec<String> {
    let inv = syllable_inventory(script, mix_seed(seed, 77), 30);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let words = rng.random_range(1..12);
            (0..words)
                .map(|_| {
                    let syl = rng.random_range(1..4);
                    (0..syl)
                        .map(|_| inv.choose(&mut rng).unwrap().as_str())
                        .collect::<String>()
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}
