use std::collections::BTreeMap;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use mtkit::corpus::{clean_pairs, FilterPolicy};
use mtkit::lexicon::LexiconModel;
use mtkit::synth::{planted_corpus, script_lines, Script, SyntheticLexicon};
use mtkit::tokenizer::{default_reserved, train_subword, LanguageCorpus, WhitespaceCounter};
use mtkit::{
    chrfpp, dro_worst_case, spbleu, temperature_distribution, BeamConfig, Direction, DroConfig,
    LanguageTag, SentencePair, TaskSuite, Temperature, TrainConfig,
};

fn tag(code: &str) -> LanguageTag {
    code.parse().unwrap()
}

fn sampling(c: &mut Criterion) {
    let sizes: Vec<f64> = (1..=234).map(|i| (i * i * 37 % 100_003 + 10) as f64).collect();
    c.bench_function("temperature_234", |b| {
        b.iter(|| temperature_distribution(black_box(&sizes), Temperature::Finite(3.3)).unwrap())
    });
    let p = temperature_distribution(&sizes, Temperature::Finite(3.3)).unwrap().probs;
    let e: Vec<f64> = (0..sizes.len()).map(|i| ((i * 7919) % 97) as f64 / 30.0).collect();
    let cfg = DroConfig::new(0.1, p);
    c.bench_function("dro_worst_case_234", |b| b.iter(|| dro_worst_case(black_box(&e), &cfg).unwrap()));
}

fn corpus(c: &mut Criterion) {
    let lex = SyntheticLexicon::new(11, 600);
    let langs: Vec<LanguageTag> = ["eng", "fra", "zul", "swh", "hau", "amh"].map(tag).into();
    let planted = planted_corpus(&lex, &langs, 2_000, 1);
    let det = planted.oracle_detector();
    let policy = FilterPolicy::default();
    c.bench_function("clean_pairs_2k", |b| {
        b.iter_batched(
            || planted.pairs.clone(),
            |pairs| clean_pairs(pairs, &det, &WhitespaceCounter, &policy),
            BatchSize::LargeInput,
        )
    });
}

fn tokenizer(c: &mut Criterion) {
    let corpora: BTreeMap<LanguageTag, LanguageCorpus> = Script::ALL
        .iter()
        .zip(["eng", "amh", "fuv", "swh", "hau", "zul"])
        .map(|(s, l)| (tag(l), LanguageCorpus::new(script_lines(*s, 100, 3))))
        .collect();
    c.bench_function("train_subword_600_lines", |b| {
        b.iter(|| train_subword(&corpora, 0.3, 1024, &default_reserved()).unwrap())
    });
    let model = train_subword(&corpora, 0.3, 1024, &default_reserved()).unwrap();
    let lines: Vec<&String> = corpora.values().flat_map(|c| &c.lines).collect();
    c.bench_function("encode_600_lines", |b| {
        b.iter(|| lines.iter().map(|l| model.encode(l).len()).sum::<usize>())
    });
}

fn decode_and_score(c: &mut Criterion) {
    let lex = SyntheticLexicon::new(5, 300);
    let (eng, zul) = (tag("eng"), tag("zul"));
    let pairs: Vec<SentencePair> = lex
        .parallel(eng, zul, 2000, 8, (4, 10))
        .into_iter()
        .map(|(s, t)| SentencePair::clean(s, t, eng, zul).unwrap())
        .collect();
    let model = LexiconModel::learn(&pairs, &[], 1e-3);
    let test = lex.parallel(eng, zul, 50, 9, (4, 10));
    let dir = Direction::new(eng, zul).unwrap();
    let cfg = BeamConfig::default();
    c.bench_function("beam4_50_sentences", |b| {
        b.iter(|| {
            test.iter()
                .map(|(s, _)| model.translate_beam(s, dir, &cfg).unwrap())
                .collect::<Vec<_>>()
        })
    });
    let hyps: Vec<String> = test
        .iter()
        .map(|(s, _)| model.translate_beam(s, dir, &cfg).unwrap())
        .collect();
    let refs: Vec<String> = test.iter().map(|(_, t)| t.clone()).collect();
    let seg = train_subword(
        &[(zul, LanguageCorpus::new(refs.clone()))].into(),
        0.3,
        400,
        &default_reserved(),
    )
    .unwrap();
    c.bench_function("spbleu_50", |b| b.iter(|| spbleu(&hyps, &refs, &seg).unwrap()));
    c.bench_function("chrfpp_50", |b| b.iter(|| chrfpp(&hyps, &refs).unwrap()));
}

fn trainer(c: &mut Criterion) {
    let suite = TaskSuite::imbalanced_fixture(7);
    let cfg = TrainConfig {
        steps: 100,
        ..Default::default()
    };
    c.bench_function("train_toy_100_steps", |b| b.iter(|| mtkit::train(&suite, &cfg).unwrap()));
}

criterion_group!(benches, sampling, corpus, tokenizer, decode_and_score, trainer);
criterion_main!(benches);
