//! Temperature smoothing against an extended-precision evaluation, and the
//! robust reweighting solver against an exhaustive simplex grid.

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use mtkit::sampling::{
    chi2_divergence, dro_worst_case, sample_schedule, temperature_distribution, DroConfig,
    Temperature,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PREC: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

fn big_to_f64(x: &BigFloat, cc: &mut Consts) -> f64 {
    x.format(Radix::Dec, RM, cc).unwrap().parse().unwrap()
}

/// `|D_i|^e / Σ_j |D_j|^e` at 256 bits.
fn temperature_oracle(sizes: &[f64], exponent: f64) -> Vec<f64> {
    let mut cc = Consts::new().unwrap();
    let e = BigFloat::from_f64(exponent, PREC);
    let powered: Vec<BigFloat> = sizes
        .iter()
        .map(|&s| BigFloat::from_f64(s, PREC).pow(&e, PREC, RM, &mut cc))
        .collect();
    let mut total = BigFloat::from_f64(0.0, PREC);
    for v in &powered {
        total = total.add(v, PREC, RM);
    }
    powered
        .iter()
        .map(|v| big_to_f64(&v.div(&total, PREC, RM), &mut cc))
        .collect()
}

#[test]
fn two_corpora_at_smoothing_rate_point_three() {
    let tau = Temperature::from_exponent(0.3).unwrap();
    let d = temperature_distribution(&[1000.0, 10.0], tau).unwrap();
    let oracle = temperature_oracle(&[1000.0, 10.0], tau.exponent());
    // Frozen from the 256-bit oracle.
    assert!((oracle[0] - 0.799_239_991_086_898_3).abs() < 1e-15);
    assert!((oracle[1] - 0.200_760_008_913_101_7).abs() < 1e-15);
    for (a, b) in d.probs.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn random_sizes_match_extended_precision() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let n = rng.random_range(1..12);
        let sizes: Vec<f64> = (0..n)
            .map(|_| 10f64.powf(rng.random_range(0.0..8.0)).round().max(1.0))
            .collect();
        let tau = rng.random_range(0.5..20.0);
        let d = temperature_distribution(&sizes, Temperature::Finite(tau)).unwrap();
        let oracle = temperature_oracle(&sizes, 1.0 / tau);
        for (a, b) in d.probs.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12, "sizes {sizes:?} tau {tau}: {a} vs {b}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn temperature_output_is_normalized(
        sizes in prop::collection::vec(1.0f64..1e9, 1..20),
        tau in 0.1f64..100.0,
    ) {
        let d = temperature_distribution(&sizes, Temperature::Finite(tau)).unwrap();
        let sum: f64 = d.probs.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(d.probs.iter().all(|&p| p >= 0.0));
        prop_assert_eq!(d.probs.len(), sizes.len());
    }

    #[test]
    fn chi2_is_permutation_invariant(
        raw_q in prop::collection::vec(0.0f64..1.0, 4),
        raw_p in prop::collection::vec(0.01f64..1.0, 4),
        shift in 0usize..4,
    ) {
        let qs: f64 = raw_q.iter().sum::<f64>().max(1e-9);
        let ps: f64 = raw_p.iter().sum();
        let mut q: Vec<f64> = raw_q.iter().map(|v| v / qs).collect();
        if raw_q.iter().all(|&v| v == 0.0) {
            q = vec![0.25; 4];
        }
        let p: Vec<f64> = raw_p.iter().map(|v| v / ps).collect();
        let d = chi2_divergence(&q, &p).unwrap();
        let mut q2 = q.clone();
        let mut p2 = p.clone();
        q2.rotate_left(shift);
        p2.rotate_left(shift);
        let d2 = chi2_divergence(&q2, &p2).unwrap();
        prop_assert!((d - d2).abs() < 1e-12);
        prop_assert!(d >= 0.0);
    }

    #[test]
    fn dro_is_scale_equivariant(
        e in prop::collection::vec(-2.0f64..2.0, 2..6),
        c in 0.01f64..100.0,
        rho in 0.001f64..1.0,
    ) {
        let n = e.len();
        let cfg = DroConfig::new(rho, vec![1.0 / n as f64; n]);
        let a = dro_worst_case(&e, &cfg).unwrap();
        let scaled: Vec<f64> = e.iter().map(|v| v * c).collect();
        let b = dro_worst_case(&scaled, &cfg).unwrap();
        prop_assert_eq!(&a.active_support, &b.active_support);
        for (x, y) in a.q.iter().zip(&b.q) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn dro_never_below_reference_objective(
        e in prop::collection::vec(-5.0f64..5.0, 1..8),
        raw_p in prop::collection::vec(0.05f64..1.0, 8),
        rho in 0.0f64..2.0,
    ) {
        let n = e.len();
        let s: f64 = raw_p[..n].iter().sum();
        let p: Vec<f64> = raw_p[..n].iter().map(|v| v / s).collect();
        let cfg = DroConfig::new(rho, p.clone());
        let w = dro_worst_case(&e, &cfg).unwrap();
        let reference: f64 = p.iter().zip(&e).map(|(a, b)| a * b).sum();
        prop_assert!(w.objective(&e) >= reference - 1e-12);
        prop_assert!(w.divergence <= rho + 1e-8);
        prop_assert!((w.q.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!(w.q.iter().all(|&v| v >= 0.0));
    }
}

/// Best objective over all grid points `k/steps` of the simplex inside the ball.
fn grid_oracle(e: &[f64], p: &[f64], rho: f64, steps: usize) -> (f64, Vec<f64>) {
    let n = e.len();
    let mut best = f64::NEG_INFINITY;
    let mut best_q = vec![0.0; n];
    let mut counts = vec![0usize; n];
    fn rec(
        i: usize,
        left: usize,
        counts: &mut Vec<usize>,
        steps: usize,
        e: &[f64],
        p: &[f64],
        rho: f64,
        best: &mut f64,
        best_q: &mut Vec<f64>,
    ) {
        let n = e.len();
        if i == n - 1 {
            counts[i] = left;
            let q: Vec<f64> = counts.iter().map(|&c| c as f64 / steps as f64).collect();
            let div: f64 = 0.5
                * q.iter()
                    .zip(p)
                    .map(|(a, b)| (a - b) * (a - b) / b)
                    .sum::<f64>();
            if div <= rho {
                let obj: f64 = q.iter().zip(e).map(|(a, b)| a * b).sum();
                if obj > *best {
                    *best = obj;
                    *best_q = q;
                }
            }
            return;
        }
        for c in 0..=left {
            counts[i] = c;
            rec(i + 1, left - c, counts, steps, e, p, rho, best, best_q);
        }
    }
    rec(0, steps, &mut counts, steps, e, p, rho, &mut best, &mut best_q);
    (best, best_q)
}

#[test]
fn three_direction_example_matches_grid() {
    let e = [1.0, 0.5, 0.0];
    let p = vec![1.0 / 3.0; 3];
    let w = dro_worst_case(&e, &DroConfig::new(0.1, p.clone())).unwrap();
    let (obj, q) = grid_oracle(&e, &p, 0.1, 200);
    for (a, b) in w.q.iter().zip(&q) {
        assert!((a - b).abs() < 1e-2, "{:?} vs {:?}", w.q, q);
    }
    assert!((w.objective(&e) - obj).abs() < 1e-4);
    assert!(w.objective(&e) >= obj);
}

#[test]
fn random_instances_dominate_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(2022);
    for case in 0..100 {
        let n = rng.random_range(2..=4);
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let s: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|v| v / s).collect();
        let e: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..2.0)).collect();
        let rho = [0.01, 0.1, 0.5][case % 3];
        let w = dro_worst_case(&e, &DroConfig::new(rho, p.clone())).unwrap();
        let steps = if n == 4 { 100 } else { 200 };
        let (obj, _) = grid_oracle(&e, &p, rho, steps);
        assert!(
            w.objective(&e) >= obj - 1e-4,
            "case {case}: solver {} < grid {obj}",
            w.objective(&e)
        );
        assert!(w.divergence <= rho + 1e-8);
    }
}

#[test]
fn uniform_schedule_frequencies() {
    let d = temperature_distribution(&[5.0; 4], Temperature::Infinite).unwrap();
    let s = sample_schedule(&d, 100_000, 11).unwrap();
    let mut counts = [0usize; 4];
    for id in s {
        counts[id] += 1;
    }
    for c in counts {
        let f = c as f64 / 100_000.0;
        assert!((0.24..=0.26).contains(&f), "{counts:?}");
    }
}

#[test]
fn skewed_schedule_converges_in_total_variation() {
    let d = temperature_distribution(&[10.0, 1000.0, 50.0, 3.0, 400.0], Temperature::Finite(1.7))
        .unwrap();
    let s = sample_schedule(&d, 100_000, 5).unwrap();
    let mut counts = vec![0usize; d.probs.len()];
    for id in s {
        counts[id] += 1;
    }
    let tv: f64 = 0.5
        * counts
            .iter()
            .zip(&d.probs)
            .map(|(&c, p)| (c as f64 / 100_000.0 - p).abs())
            .sum::<f64>();
    assert!(tv < 0.01, "tv {tv}");
}
