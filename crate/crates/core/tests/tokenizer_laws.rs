use std::collections::BTreeMap;

use mtkit::synth::{script_lines, Script};
use mtkit::tokenizer::{default_reserved, language_weights, train_subword, LanguageCorpus};
use mtkit::{LanguageTag, SubwordModel};
use proptest::prelude::*;

const LANGS: [&str; 6] = ["eng", "amh", "fuv", "swh", "hau", "zul"];

/// Six languages, one per script, 167 lines each (1,002 lines).
fn script_corpora(seed: u64) -> BTreeMap<LanguageTag, LanguageCorpus> {
    Script::ALL
        .iter()
        .zip(LANGS)
        .enumerate()
        .map(|(i, (s, l))| {
            (
                l.parse().unwrap(),
                LanguageCorpus::new(script_lines(*s, 167, seed + i as u64)),
            )
        })
        .collect()
}

fn model() -> SubwordModel {
    train_subword(&script_corpora(0), 0.3, 2048, &default_reserved()).unwrap()
}

#[test]
fn round_trip_across_six_scripts() {
    let m = model();
    assert_eq!(m.vocab_size(), 2048);
    let mut lines = 0;
    for corpus in script_corpora(0).values() {
        for line in &corpus.lines {
            let ids = m.encode(line);
            assert_eq!(m.decode(&ids).unwrap(), *line);
            lines += 1;
        }
    }
    assert!(lines >= 1000);
    // Held-out lines from a different seed, mostly unseen words.
    for corpus in script_corpora(99).values() {
        for line in &corpus.lines {
            assert_eq!(m.decode(&m.encode(line)).unwrap(), *line);
        }
    }
}

#[test]
fn reserved_ids_are_the_tags_in_order() {
    let m = model();
    for i in 0..32u32 {
        assert_eq!(m.token(i).unwrap(), format!("TBD{i}"));
        assert_eq!(m.decode(&[i]).unwrap(), format!("TBD{i}"));
    }
    let text = "TBD3 appears TBD31 here";
    assert!(m.encode(text).iter().all(|&id| id >= 32));
}

#[test]
fn encode_is_a_section_of_decode_on_its_image() {
    let m = model();
    for corpus in script_corpora(7).values() {
        for line in corpus.lines.iter().take(50) {
            let ids = m.encode(line);
            let again = m.encode(&m.decode(&ids).unwrap());
            assert_eq!(again, ids);
        }
    }
}

#[test]
fn training_is_deterministic() {
    let a = model().to_json().unwrap();
    let b = model().to_json().unwrap();
    assert_eq!(a, b);
}

#[test]
fn weights_are_monotone_and_flatten_with_alpha() {
    let sizes = [5000.0, 400.0, 20.0];
    let mut last_ratio = f64::INFINITY;
    for alpha in [1.0, 0.5, 0.3, 0.1] {
        let w = language_weights(&sizes, alpha).unwrap();
        assert!(w[0] > w[1] && w[1] > w[2], "alpha {alpha}: {w:?}");
        let ratio = w[0] / w[2];
        assert!(ratio < last_ratio);
        last_ratio = ratio;
    }
}

#[test]
fn two_language_weights_match_extended_precision() {
    // 256-bit evaluation of 1000^0.3 / (1000^0.3 + 10^0.3).
    let w = language_weights(&[1000.0, 10.0], 0.3).unwrap();
    assert!((w[0] - 0.7992399910868983).abs() < 1e-12);
    assert!((w[1] - 0.2007600089131017).abs() < 1e-12);
    let even = language_weights(&[321.0, 321.0], 0.42).unwrap();
    assert_eq!(even, vec![0.5, 0.5]);
}

#[test]
fn upsampling_changes_the_vocabulary() {
    // A tiny corpus gains merges as alpha shrinks.
    let big: Vec<String> = (0..400).map(|i| format!("alpha beta gamma {i}")).collect();
    let small = vec!["zzyzx qwqwq zzyzx".to_string(); 2];
    let mut c = BTreeMap::new();
    c.insert(LanguageTag::ENG, LanguageCorpus::new(big));
    c.insert("zul".parse().unwrap(), LanguageCorpus::new(small));
    let count_small = |alpha: f64| {
        let m = train_subword(&c, alpha, 32 + 256 + 40, &default_reserved()).unwrap();
        m.encode("zzyzx qwqwq").len()
    };
    assert!(count_small(0.1) <= count_small(1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn any_text_round_trips(text in "\\PC{0,40}") {
        let m = SubwordModel::from_parts(&default_reserved(), &['a', 'b', '▁'], &[("▁", "a")]).unwrap();
        prop_assert_eq!(m.decode(&m.encode(&text)).unwrap(), text);
    }

    #[test]
    fn mixed_whitespace_round_trips(parts in proptest::collection::vec("[a-z▁ \t\n]{0,6}", 0..8)) {
        let text = parts.concat();
        let m = model_cached();
        prop_assert_eq!(m.decode(&m.encode(&text)).unwrap(), text);
    }
}

fn model_cached() -> &'static SubwordModel {
    static M: std::sync::OnceLock<SubwordModel> = std::sync::OnceLock::new();
    M.get_or_init(model)
}
