//! The small end-to-end fixture shipped under `fixtures/demo`, generated
//! from the synthetic lexicon so it can be rebuilt and compared exactly.

use std::fs;
use std::path::Path;

use mtkit::lexicon::LexiconModel;
use mtkit::synth::{mix_seed, SyntheticLexicon};
use mtkit::{Direction, GroupTable, LanguageTag, ModelRegistry, SentencePair, TaskSuite};
use serde_json::json;

use crate::error::CliError;
use crate::run::{RunManifest, StageRecord};

const SEED: u64 = 20;
const CONCEPTS: usize = 200;
const LANGS: [&str; 6] = ["eng", "fra", "zul", "swh", "hau", "amh"];

/// Raw training files: direction and format.
const RAW: [(&str, &str, &str); 10] = [
    ("eng", "fra", "tsv"),
    ("eng", "zul", "tsv"),
    ("eng", "swh", "jsonl"),
    ("eng", "hau", "tsv"),
    ("eng", "amh", "tsv"),
    ("fra", "swh", "html"),
    ("fra", "zul", "tsv"),
    ("fra", "hau", "tsv"),
    ("hau", "amh", "tsv"),
    ("zul", "swh", "tsv"),
];

/// Held-out directions, one or more per reporting category.
const TEST: [(&str, &str); 6] = [
    ("zul", "eng"),
    ("eng", "zul"),
    ("swh", "fra"),
    ("fra", "swh"),
    ("hau", "amh"),
    ("eng", "fra"),
];

fn tag(code: &str) -> LanguageTag {
    code.parse().expect("fixture language")
}

fn write(dir: &Path, rel: &str, text: &str) -> Result<(), CliError> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::at(parent, e))?;
    }
    fs::write(&path, text).map_err(|e| CliError::at(&path, e))
}

fn lines(items: impl IntoIterator<Item = String>) -> String {
    items.into_iter().map(|l| l + "\n").collect()
}

/// Clean pairs plus planted defects: repeats, one-word lines and a few
/// lines whose target side is in the wrong language.
fn noisy_pairs(lex: &SyntheticLexicon, src: LanguageTag, tgt: LanguageTag, seed: u64) -> Vec<(String, String)> {
    let mut pairs = lex.parallel(src, tgt, 120, seed, (4, 10));
    let repeats: Vec<_> = pairs.iter().step_by(12).cloned().collect();
    pairs.extend(repeats);
    pairs.extend(lex.parallel(src, tgt, 4, seed ^ 1, (1, 2)));
    let intruder = if tgt == LanguageTag::ENG { tag("amh") } else { LanguageTag::ENG };
    let wrong = lex.parallel(src, intruder, 4, seed ^ 2, (5, 9));
    // Interleave so the defects are not all at the end of the file.
    for (i, p) in wrong.into_iter().enumerate() {
        pairs.insert(i * 30 + 7, p);
    }
    pairs
}

fn render_raw(format: &str, pairs: &[(String, String)]) -> String {
    match format {
        "tsv" => lines(pairs.iter().map(|(s, t)| format!("{s}\t{t}"))),
        "jsonl" => lines(pairs.iter().map(|(s, t)| json!({ "src": s, "tgt": t }).to_string())),
        _ => lines(
            pairs
                .iter()
                .map(|(s, t)| format!("<pair><src>{s}</src><tgt>{t}</tgt></pair>")),
        ),
    }
}

fn stage(subcommand: &str, args: &[&str]) -> StageRecord {
    StageRecord {
        subcommand: subcommand.to_string(),
        args: args.iter().map(|s| s.to_string()).collect(),
        ..Default::default()
    }
}

pub fn demo_manifest() -> RunManifest {
    RunManifest {
        seed: SEED,
        stages: vec![
            stage(
                "preprocess",
                &["--in", "raw", "--langid-samples", "langid", "--policy", "policy.json", "--manifest", "out/corpus.json", "--out", "out/shards"],
            ),
            stage("train-tokenizer", &["--manifest", "out/corpus.json", "--vocab-size", "800", "--out", "out/tokenizer.json"]),
            stage(
                "augment",
                &["--mode", "bt", "--mono", "mono/zul.txt", "--src", "eng", "--tgt", "zul", "--translator", "toy-model:lexicon.json", "--cap", "60", "--out", "out/bt.eng-zul.jsonl"],
            ),
            stage(
                "augment",
                &["--mode", "st", "--mono", "mono/eng.txt", "--src", "eng", "--tgt", "zul", "--translator", "toy-model:lexicon.json", "--out", "out/st.eng-zul.jsonl"],
            ),
            stage("sample", &["--manifest", "out/corpus.json", "--batches", "200", "--out", "out/schedule.jsonl"]),
            stage(
                "train-toy",
                &["--suite", "suite.json", "--mode", "dro", "--steps", "300", "--out", "out/toy"],
            ),
            stage(
                "decode",
                &["--model", "lexicon.json", "--input", "test.jsonl", "--stop", "bound", "--out", "out/test.hyp.txt"],
            ),
            stage(
                "evaluate",
                &["--hyp", "out/test.hyp.txt", "--ref", "test.ref.txt", "--tokenizer", "out/tokenizer.json", "--directions", "test.directions.txt", "--report", "out/metrics.json"],
            ),
            stage("route", &["--target", "swh", "--registry", "registry.json", "--out", "out/route.json"]),
        ],
    }
}

/// Writes every input of the demo run into `dir`.
pub fn write_demo_fixture(dir: &Path) -> Result<(), CliError> {
    let lex = SyntheticLexicon::new(SEED, CONCEPTS);

    for (i, (s, t, format)) in RAW.iter().enumerate() {
        let pairs = noisy_pairs(&lex, tag(s), tag(t), mix_seed(SEED, 100 + i as u64));
        write(dir, &format!("raw/{s}-{t}.{format}"), &render_raw(format, &pairs))?;
    }
    for (i, code) in LANGS.iter().enumerate() {
        let sample = lex.monolingual(tag(code), 150, mix_seed(SEED, 200 + i as u64), (4, 10));
        write(dir, &format!("langid/{code}.txt"), &lines(sample))?;
    }
    write(dir, "mono/zul.txt", &lines(lex.monolingual(tag("zul"), 100, mix_seed(SEED, 300), (4, 10))))?;
    write(dir, "mono/eng.txt", &lines(lex.monolingual(tag("eng"), 40, mix_seed(SEED, 301), (4, 10))))?;

    let mut train = Vec::new();
    for (i, (s, t)) in TEST.iter().enumerate() {
        for (a, b) in lex.parallel(tag(s), tag(t), 600, mix_seed(SEED, 400 + i as u64), (4, 10)) {
            train.push(SentencePair::clean(a, b, tag(s), tag(t)).map_err(CliError::data)?);
        }
    }
    let model = LexiconModel::learn(&train, &["TBD0"], 1e-3);
    write(dir, "lexicon.json", &(model.to_json() + "\n"))?;

    let mut test = Vec::new();
    let mut refs = Vec::new();
    let mut dirs = Vec::new();
    for (i, (s, t)) in TEST.iter().enumerate() {
        let d = Direction::new(tag(s), tag(t)).map_err(CliError::data)?;
        for (a, b) in lex.parallel(tag(s), tag(t), 8, mix_seed(SEED, 500 + i as u64), (4, 10)) {
            let pair = SentencePair::clean(a, b.clone(), tag(s), tag(t)).map_err(CliError::data)?;
            test.push(pair.to_json_line());
            refs.push(b);
            dirs.push(d.to_string());
        }
    }
    write(dir, "test.jsonl", &lines(test))?;
    write(dir, "test.ref.txt", &lines(refs))?;
    write(dir, "test.directions.txt", &lines(dirs))?;

    let suite = TaskSuite::imbalanced_fixture(7);
    write(dir, "suite.json", &(serde_json::to_string(&suite)? + "\n"))?;
    let registry = ModelRegistry {
        entries: GroupTable::default()
            .groups
            .keys()
            .map(|g| (*g, format!("models/group{g}")))
            .collect(),
    };
    write(dir, "registry.json", &(serde_json::to_string_pretty(&registry)? + "\n"))?;
    let policy = json!({ "min_tokens": 3, "max_tokens": 64, "max_len_ratio": 3.0 });
    write(dir, "policy.json", &(serde_json::to_string_pretty(&policy)? + "\n"))?;
    write(dir, "demo.json", &(serde_json::to_string_pretty(&demo_manifest())? + "\n"))?;
    Ok(())
}
