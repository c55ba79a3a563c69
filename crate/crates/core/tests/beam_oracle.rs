use std::collections::HashMap;

use mtkit::decoding::{log_softmax, normalized, TableModel};
use mtkit::{beam_search, BeamConfig, Hypothesis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VOCAB: u32 = 3;
const EOS: u32 = 0;

/// A random next-token table over every prefix of length < `max_len`.
fn random_table(seed: u64, max_len: usize) -> TableModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = HashMap::new();
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for prefix in frontier {
            let raw: Vec<f64> = (0..VOCAB).map(|_| rng.random_range(-3.0..3.0)).collect();
            table.insert(prefix.clone(), log_softmax(&raw));
            for t in 1..VOCAB {
                let mut p = prefix.clone();
                p.push(t);
                next.push(p);
            }
        }
        frontier = next;
    }
    TableModel {
        vocab_size: VOCAB as usize,
        eos: EOS,
        table,
        default: log_softmax(&[0.0; VOCAB as usize]),
    }
}

/// Every EOS-terminated sequence of length ≤ max_len, scored and ranked.
fn exhaustive(m: &TableModel, max_len: usize, lenpen: f64) -> Vec<Hypothesis> {
    let mut out = Vec::new();
    let mut stack = vec![(Vec::<u32>::new(), 0.0f64)];
    while let Some((prefix, lp)) = stack.pop() {
        let scores = &m.table[&prefix];
        let mut done = prefix.clone();
        done.push(EOS);
        let total = lp + scores[EOS as usize];
        out.push(Hypothesis {
            normalized_score: normalized(total, done.len(), lenpen),
            tokens: done,
            logprob: total,
        });
        if prefix.len() + 1 < max_len {
            for t in 1..VOCAB {
                let mut p = prefix.clone();
                p.push(t);
                stack.push((p, lp + scores[t as usize]));
            }
        }
    }
    out.sort_by(|a, b| {
        b.normalized_score
            .total_cmp(&a.normalized_score)
            .then_with(|| a.tokens.cmp(&b.tokens))
    });
    out
}

fn cfg(beam: usize, lenpen: f64, max_len: usize) -> BeamConfig {
    BeamConfig {
        beam,
        lenpen,
        max_len,
        ..Default::default()
    }
}

fn same(a: &[Hypothesis], b: &[Hypothesis]) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert_eq!(x.tokens, y.tokens);
        assert!((x.logprob - y.logprob).abs() < 1e-12);
        assert!((x.normalized_score - y.normalized_score).abs() < 1e-12);
    }
}

#[test]
fn beam_four_matches_exhaustive_enumeration() {
    for seed in 0..200 {
        let m = random_table(seed, 3);
        let got = beam_search(&m, &[], &cfg(4, 1.0, 3)).unwrap();
        let want = exhaustive(&m, 3, 1.0);
        same(&got, &want[..4]);
    }
}

#[test]
fn wide_beam_is_full_search() {
    for seed in 0..50 {
        let m = random_table(1000 + seed, 3);
        for lenpen in [0.0, 0.6, 1.0, 2.0] {
            let got = beam_search(&m, &[], &cfg(27, lenpen, 3)).unwrap();
            let want = exhaustive(&m, 3, lenpen);
            same(&got, &want);
        }
    }
}

#[test]
fn top_one_improves_with_beam() {
    for seed in 0..200 {
        let m = random_table(5000 + seed, 3);
        for lenpen in [0.0, 1.0] {
            let mut last = f64::NEG_INFINITY;
            for beam in 1..=8 {
                let top = beam_search(&m, &[], &cfg(beam, lenpen, 3)).unwrap()[0].normalized_score;
                assert!(top >= last - 1e-12, "seed {seed} beam {beam}: {top} < {last}");
                last = top;
            }
        }
    }
}

#[test]
fn lenpen_zero_orders_by_logprob() {
    for seed in 0..20 {
        let m = random_table(9000 + seed, 3);
        let out = beam_search(&m, &[], &cfg(4, 0.0, 3)).unwrap();
        assert!(out.windows(2).all(|w| w[0].logprob >= w[1].logprob));
        assert!(out.iter().all(|h| h.logprob == h.normalized_score));
    }
}

#[test]
fn ties_break_lexicographically_and_repeat() {
    // Uniform scores everywhere: every same-length sequence ties.
    let m = TableModel {
        vocab_size: 3,
        eos: 0,
        table: HashMap::new(),
        default: vec![(1.0f64 / 3.0).ln(); 3],
    };
    let a = beam_search(&m, &[], &cfg(4, 0.0, 3)).unwrap();
    let b = beam_search(&m, &[], &cfg(4, 0.0, 3)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a[0].tokens, vec![0]);
    assert_eq!(a[1].tokens, vec![1, 0]);
    assert_eq!(a[2].tokens, vec![2, 0]);
    assert_eq!(a[3].tokens, vec![1, 1, 0]);
}
