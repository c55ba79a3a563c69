//! Tagged back-translation and self-training, and direction-tag formatting.
//!
//! Synthetic sides get the augmentation tag appended as a final
//! space-separated word: back-translation yields `[x′; tag] → y` and
//! self-training yields `x → [y′; tag]`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Provenance, SentencePair};
use crate::lang::LanguageTag;
use crate::tokenizer::default_reserved;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AugmentError {
    #[error("source and target language are both {0}")]
    SameLanguage(LanguageTag),
    #[error("caps must be positive")]
    ZeroCap,
    #[error("tag `{0}` is not a reserved token")]
    UnknownTag(String),
}

/// Text-to-text translator used to produce synthetic sides.
pub trait TranslatorOracle: Sync {
    fn translate(&self, text: &str, source: LanguageTag, target: LanguageTag) -> String;
}

/// Returns the input unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityTranslator;

impl TranslatorOracle for IdentityTranslator {
    fn translate(&self, text: &str, _: LanguageTag, _: LanguageTag) -> String {
        text.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentationSpec {
    /// Cap for directions with English on either side.
    pub english_centric_cap: usize,
    pub non_english_cap: usize,
    pub tag_token: String,
    pub seed: u64,
}

impl Default for AugmentationSpec {
    fn default() -> Self {
        AugmentationSpec {
            english_centric_cap: 1_000_000,
            non_english_cap: 500_000,
            tag_token: "TBD0".into(),
            seed: 0,
        }
    }
}

impl AugmentationSpec {
    pub fn validate(&self) -> Result<(), AugmentError> {
        if self.english_centric_cap == 0 || self.non_english_cap == 0 {
            return Err(AugmentError::ZeroCap);
        }
        if !default_reserved().contains(&self.tag_token) {
            return Err(AugmentError::UnknownTag(self.tag_token.clone()));
        }
        Ok(())
    }

    pub fn cap_for(&self, a: LanguageTag, b: LanguageTag) -> usize {
        if a == LanguageTag::ENG || b == LanguageTag::ENG {
            self.english_centric_cap
        } else {
            self.non_english_cap
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentTally {
    pub input: u64,
    /// Translations that came back empty (or already contained the tag).
    pub dropped: u64,
    pub cap: u64,
    pub emitted: u64,
}

#[derive(Clone, Copy)]
enum Side {
    Source,
    Target,
}

fn augment(
    mono: &[String],
    mono_lang: LanguageTag,
    other_lang: LanguageTag,
    translator: &(impl TranslatorOracle + ?Sized),
    spec: &AugmentationSpec,
    synthetic: Side,
) -> Result<(Vec<SentencePair>, AugmentTally), AugmentError> {
    if mono_lang == other_lang {
        return Err(AugmentError::SameLanguage(mono_lang));
    }
    spec.validate()?;
    let tag = spec.tag_token.as_str();
    // Translate in parallel, collect in input order, then sample.
    let translated: Vec<Option<String>> = mono
        .par_iter()
        .map(|line| {
            let out = translator.translate(line, mono_lang, other_lang);
            let out = out.trim();
            (!out.is_empty() && !out.split_whitespace().any(|w| w == tag)).then(|| out.to_string())
        })
        .collect();
    let kept: Vec<(usize, String)> = translated
        .into_iter()
        .enumerate()
        .filter_map(|(i, t)| t.map(|t| (i, t)))
        .collect();
    let cap = match synthetic {
        Side::Source => spec.cap_for(other_lang, mono_lang),
        Side::Target => spec.cap_for(mono_lang, other_lang),
    };
    let chosen = select_capped(kept.len(), cap, spec.seed);
    let mut tally = AugmentTally {
        input: mono.len() as u64,
        dropped: (mono.len() - kept.len()) as u64,
        cap: cap as u64,
        emitted: 0,
    };
    let mut out = Vec::with_capacity(chosen.len());
    for k in chosen {
        let (i, synth) = &kept[k];
        let clean = mono[*i].clone();
        let tagged = format!("{synth} {tag}");
        let pair = match synthetic {
            Side::Source => SentencePair::with_provenance(
                tagged,
                clean,
                other_lang,
                mono_lang,
                Provenance::Bt,
                true,
            ),
            Side::Target => SentencePair::with_provenance(
                clean,
                tagged,
                mono_lang,
                other_lang,
                Provenance::St,
                true,
            ),
        };
        match pair {
            Ok(p) => out.push(p),
            Err(_) => tally.dropped += 1,
        }
    }
    tally.emitted = out.len() as u64;
    Ok((out, tally))
}

/// Indices of a uniform sample without replacement of size `min(n, cap)`,
/// returned in increasing order.
pub fn select_capped(n: usize, cap: usize, seed: u64) -> Vec<usize> {
    if n <= cap {
        return (0..n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, n, cap).into_vec();
    idx.sort_unstable();
    idx
}

/// Back-translation: target-language monolingual lines `y` become
/// `(translate(y, T→S) + " " + tag, y)` pairs in direction S→T.
pub fn back_translate(
    mono_target: &[String],
    target_lang: LanguageTag,
    source_lang: LanguageTag,
    translator: &(impl TranslatorOracle + ?Sized),
    spec: &AugmentationSpec,
) -> Result<(Vec<SentencePair>, AugmentTally), AugmentError> {
    augment(mono_target, target_lang, source_lang, translator, spec, Side::Source)
}

/// Self-training: source-language monolingual lines `x` become
/// `(x, translate(x, S→T) + " " + tag)` pairs in direction S→T.
pub fn self_train(
    mono_source: &[String],
    source_lang: LanguageTag,
    target_lang: LanguageTag,
    translator: &(impl TranslatorOracle + ?Sized),
    spec: &AugmentationSpec,
) -> Result<(Vec<SentencePair>, AugmentTally), AugmentError> {
    augment(mono_source, source_lang, target_lang, translator, spec, Side::Target)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TagScheme {
    /// Target-language tag in front of the encoder input.
    TargetTagSource,
    /// Target-language tag as the first decoder token.
    TargetTagDecoder,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormattedExample {
    pub encoder_text: String,
    /// Empty under [`TagScheme::TargetTagSource`].
    pub decoder_prefix: String,
    pub target_text: String,
}

/// Surface form of the target-language tag, e.g. `<2zul>`.
pub fn direction_tag(lang: LanguageTag) -> String {
    format!("<2{}>", lang.code())
}

/// Reserved token backing a direction tag: `TBD1` through `TBD26` in
/// language-code order.
pub fn direction_reserved(lang: LanguageTag) -> String {
    format!("TBD{}", lang.index() + 1)
}

/// Rewrites `<2xxx>` words to their reserved tokens so the text can go
/// through [`crate::tokenizer::SubwordModel::encode_marked`].
pub fn reserve_direction_tags(text: &str) -> String {
    text.split(' ')
        .map(|w| {
            w.strip_prefix("<2")
                .and_then(|r| r.strip_suffix('>'))
                .and_then(|code| code.parse::<LanguageTag>().ok())
                .map_or_else(|| w.to_string(), direction_reserved)
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn format_example(pair: &SentencePair, scheme: TagScheme) -> FormattedExample {
    let tag = direction_tag(pair.target_lang);
    let (encoder_text, decoder_prefix) = match scheme {
        TagScheme::TargetTagSource => (format!("{tag} {}", pair.source_text), String::new()),
        TagScheme::TargetTagDecoder => (pair.source_text.clone(), tag),
    };
    FormattedExample {
        encoder_text,
        decoder_prefix,
        target_text: pair.target_text.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lang(s: &str) -> LanguageTag {
        s.parse().unwrap()
    }

    fn lines(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("line {i}")).collect()
    }

    #[test]
    fn identity_back_translation() {
        let (pairs, tally) = back_translate(
            &["abc".to_string()],
            LanguageTag::ENG,
            LanguageTag::FRA,
            &IdentityTranslator,
            &AugmentationSpec::default(),
        )
        .unwrap();
        assert_eq!(pairs[0].source_text, "abc TBD0");
        assert_eq!(pairs[0].target_text, "abc");
        assert_eq!(pairs[0].source_lang, LanguageTag::FRA);
        assert_eq!(pairs[0].provenance, Provenance::Bt);
        assert!(pairs[0].tagged);
        assert_eq!(tally.emitted, 1);
    }

    #[test]
    fn identity_self_training() {
        let (pairs, _) = self_train(
            &["abc".to_string()],
            LanguageTag::ENG,
            LanguageTag::FRA,
            &IdentityTranslator,
            &AugmentationSpec::default(),
        )
        .unwrap();
        assert_eq!(pairs[0].source_text, "abc");
        assert_eq!(pairs[0].target_text, "abc TBD0");
        assert_eq!(pairs[0].provenance, Provenance::St);
    }

    #[test]
    fn empty_input_and_errors() {
        let spec = AugmentationSpec::default();
        let (p, _) = back_translate(&[], LanguageTag::ENG, LanguageTag::FRA, &IdentityTranslator, &spec).unwrap();
        assert!(p.is_empty());
        assert_eq!(
            back_translate(&[], LanguageTag::ENG, LanguageTag::ENG, &IdentityTranslator, &spec).unwrap_err(),
            AugmentError::SameLanguage(LanguageTag::ENG)
        );
        let bad = AugmentationSpec {
            tag_token: "<DA>".into(),
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(AugmentError::UnknownTag(_))));
        let zero = AugmentationSpec {
            non_english_cap: 0,
            ..Default::default()
        };
        assert_eq!(zero.validate(), Err(AugmentError::ZeroCap));
    }

    #[test]
    fn cap_sampling_is_reproducible() {
        let spec = AugmentationSpec {
            english_centric_cap: 1000,
            seed: 42,
            ..Default::default()
        };
        let mono = lines(1200);
        let a = back_translate(&mono, LanguageTag::ENG, lang("zul"), &IdentityTranslator, &spec).unwrap();
        let b = back_translate(&mono, LanguageTag::ENG, lang("zul"), &IdentityTranslator, &spec).unwrap();
        assert_eq!(a.0.len(), 1000);
        assert_eq!(a, b);
        let positions: Vec<usize> = a
            .0
            .iter()
            .map(|p| p.target_text[5..].parse().unwrap())
            .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn non_english_cap_applies() {
        let spec = AugmentationSpec {
            english_centric_cap: 100,
            non_english_cap: 7,
            ..Default::default()
        };
        let (p, t) = self_train(&lines(20), lang("hau"), lang("yor"), &IdentityTranslator, &spec).unwrap();
        assert_eq!((p.len(), t.cap), (7, 7));
        let (p, _) = self_train(&lines(10), lang("hau"), lang("yor"), &IdentityTranslator, &AugmentationSpec::default()).unwrap();
        assert_eq!(p.iter().map(|x| x.source_text.clone()).collect::<Vec<_>>(), lines(10));
    }

    #[test]
    fn empty_translations_are_dropped() {
        let blank = |t: &str, _: LanguageTag, _: LanguageTag| if t.ends_with('3') { String::new() } else { t.to_string() };
        struct F<G>(G);
        impl<G: Fn(&str, LanguageTag, LanguageTag) -> String + Sync> TranslatorOracle for F<G> {
            fn translate(&self, t: &str, s: LanguageTag, g: LanguageTag) -> String {
                (self.0)(t, s, g)
            }
        }
        let (p, tally) = back_translate(&lines(5), LanguageTag::ENG, LanguageTag::FRA, &F(blank), &AugmentationSpec::default()).unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(tally.dropped, 1);
    }

    #[test]
    fn tag_formats() {
        let pair = SentencePair::clean("hello", "sawubona", LanguageTag::ENG, lang("zul")).unwrap();
        let enc = format_example(&pair, TagScheme::TargetTagSource);
        assert_eq!(enc.encoder_text, "<2zul> hello");
        assert_eq!(enc.decoder_prefix, "");
        let dec = format_example(&pair, TagScheme::TargetTagDecoder);
        assert_eq!(dec.encoder_text, "hello");
        assert_eq!(dec.decoder_prefix, "<2zul>");
        let bt = SentencePair::with_provenance("abc TBD0", "abc", LanguageTag::FRA, LanguageTag::ENG, Provenance::Bt, true).unwrap();
        assert_eq!(format_example(&bt, TagScheme::TargetTagSource).encoder_text, "<2eng> abc TBD0");
    }

    #[test]
    fn direction_tags_map_to_reserved_block() {
        assert_eq!(direction_reserved(lang("afr")), "TBD1");
        assert_eq!(direction_reserved(lang("zul")), "TBD26");
        assert_eq!(reserve_direction_tags("<2zul> hi <2xyz>"), "TBD26 hi <2xyz>");
    }
}
