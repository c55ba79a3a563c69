//! Sampling distributions over translation directions.
//!
//! Two ways of weighting directions live here:
//!
//! * temperature smoothing, `p_i ∝ |D_i|^(1/τ)`, which at `τ = 1` reproduces
//!   the raw data distribution and at `τ = ∞` is uniform;
//! * the worst-case reweighting inside a χ² ball around a reference
//!   distribution, used by distributionally robust training.
//!
//! [`sample_schedule`] turns either into a reproducible stream of direction
//! ids.

use std::fmt;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Tolerance used when checking that an input vector is a distribution.
const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplingError {
    #[error("empty size vector")]
    Empty,
    #[error("size at index {index} is {value}; sizes must be positive and finite")]
    NonPositiveSize { index: usize, value: f64 },
    #[error("temperature must be positive, got {0}")]
    InvalidTemperature(f64),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("reference probability at index {0} is not strictly positive")]
    ZeroReference(usize),
    #[error("not a probability vector: {0}")]
    NotADistribution(String),
    #[error("divergence bound must be finite and non-negative, got {0}")]
    InvalidRho(f64),
    #[error("non-finite excess loss at index {0}")]
    NonFiniteLoss(usize),
}

/// Sampling temperature. `Infinite` is the uniform limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Temperature {
    Finite(f64),
    Infinite,
}

impl Temperature {
    /// Temperature whose exponent `1/τ` equals `alpha`; `alpha = 0.3` is the
    /// smoothing rate used for subword training and the ERM reference.
    pub fn from_exponent(alpha: f64) -> Result<Self, SamplingError> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(SamplingError::InvalidTemperature(1.0 / alpha));
        }
        if alpha == 0.0 {
            return Ok(Temperature::Infinite);
        }
        Ok(Temperature::Finite(1.0 / alpha))
    }

    pub fn exponent(self) -> f64 {
        match self {
            Temperature::Finite(tau) => 1.0 / tau,
            Temperature::Infinite => 0.0,
        }
    }
}

impl fmt::Display for Temperature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Temperature::Finite(tau) => write!(f, "{tau}"),
            Temperature::Infinite => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for Temperature {
    type Err = SamplingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" => Ok(Temperature::Infinite),
            other => {
                let tau: f64 = other
                    .parse()
                    .map_err(|_| SamplingError::InvalidTemperature(f64::NAN))?;
                if tau.is_infinite() && tau > 0.0 {
                    Ok(Temperature::Infinite)
                } else {
                    Ok(Temperature::Finite(tau))
                }
            }
        }
    }
}

impl Serialize for Temperature {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Temperature::Finite(tau) => serializer.serialize_f64(*tau),
            Temperature::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Temperature {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(tau) => Ok(Temperature::Finite(tau)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Anything that carries a probability vector over direction ids.
pub trait Weights {
    fn probs(&self) -> &[f64];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingDistribution {
    /// Direction ids, positionally aligned with `probs`.
    pub directions: Vec<usize>,
    pub probs: Vec<f64>,
    pub tau: Temperature,
}

impl Weights for SamplingDistribution {
    fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// `p_i = |D_i|^(1/τ) / Σ_j |D_j|^(1/τ)`.
///
/// `τ = 1` divides by the total directly so the result is exactly the data
/// distribution; other temperatures are evaluated in log space to avoid
/// overflow for large corpora.
pub fn temperature_distribution(
    sizes: &[f64],
    tau: Temperature,
) -> Result<SamplingDistribution, SamplingError> {
    if sizes.is_empty() {
        return Err(SamplingError::Empty);
    }
    for (index, &value) in sizes.iter().enumerate() {
        if !(value.is_finite() && value > 0.0) {
            return Err(SamplingError::NonPositiveSize { index, value });
        }
    }
    if let Temperature::Finite(t) = tau {
        if !(t.is_finite() && t > 0.0) {
            return Err(SamplingError::InvalidTemperature(t));
        }
    }

    let n = sizes.len();
    let probs = match tau {
        Temperature::Infinite => vec![1.0 / n as f64; n],
        Temperature::Finite(t) if t == 1.0 => {
            let total: f64 = sizes.iter().sum();
            sizes.iter().map(|s| s / total).collect()
        }
        Temperature::Finite(t) => {
            let exponent = 1.0 / t;
            let logits: Vec<f64> = sizes.iter().map(|s| exponent * s.ln()).collect();
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let unnorm: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
            let z: f64 = unnorm.iter().sum();
            unnorm.iter().map(|u| u / z).collect()
        }
    };

    Ok(SamplingDistribution {
        directions: (0..n).collect(),
        probs,
        tau,
    })
}

fn check_distribution(p: &[f64], strictly_positive: bool) -> Result<(), SamplingError> {
    if p.is_empty() {
        return Err(SamplingError::Empty);
    }
    let mut sum = 0.0;
    for (i, &v) in p.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(SamplingError::NotADistribution(format!(
                "entry {i} is {v}"
            )));
        }
        if strictly_positive && v == 0.0 {
            return Err(SamplingError::ZeroReference(i));
        }
        sum += v;
    }
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(SamplingError::NotADistribution(format!("sums to {sum}")));
    }
    Ok(())
}

/// `D(q‖p) = ½ Σ_i (q_i − p_i)² / p_i`.
pub fn chi2_divergence(q: &[f64], p: &[f64]) -> Result<f64, SamplingError> {
    if q.len() != p.len() {
        return Err(SamplingError::DimensionMismatch {
            left: q.len(),
            right: p.len(),
        });
    }
    check_distribution(p, true)?;
    check_distribution(q, false)?;
    Ok(chi2_unchecked(q, p))
}

fn chi2_unchecked(q: &[f64], p: &[f64]) -> f64 {
    0.5 * q
        .iter()
        .zip(p)
        .map(|(qi, pi)| (qi - pi) * (qi - pi) / pi)
        .sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroConfig {
    pub rho: f64,
    pub baselines: Vec<f64>,
    pub p_train: Vec<f64>,
}

impl DroConfig {
    /// Config with zero baselines.
    pub fn new(rho: f64, p_train: Vec<f64>) -> Self {
        let baselines = vec![0.0; p_train.len()];
        DroConfig {
            rho,
            baselines,
            p_train,
        }
    }

    pub fn validate(&self) -> Result<(), SamplingError> {
        if !(self.rho.is_finite() && self.rho >= 0.0) {
            return Err(SamplingError::InvalidRho(self.rho));
        }
        check_distribution(&self.p_train, true)?;
        if self.baselines.len() != self.p_train.len() {
            return Err(SamplingError::DimensionMismatch {
                left: self.baselines.len(),
                right: self.p_train.len(),
            });
        }
        if let Some(i) = self.baselines.iter().position(|b| !b.is_finite()) {
            return Err(SamplingError::NonFiniteLoss(i));
        }
        Ok(())
    }

    /// `e_i = ℓ_i − b_i`.
    pub fn excess(&self, losses: &[f64]) -> Result<Vec<f64>, SamplingError> {
        if losses.len() != self.baselines.len() {
            return Err(SamplingError::DimensionMismatch {
                left: losses.len(),
                right: self.baselines.len(),
            });
        }
        Ok(losses
            .iter()
            .zip(&self.baselines)
            .map(|(l, b)| l - b)
            .collect())
    }
}

/// Multipliers of the active-set solution `q_i = p_i (1/P_S + λ (e_i − m_S))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DroDual {
    /// Scale on the centred excess losses (inverse of the divergence multiplier).
    pub lambda: f64,
    /// p-weighted mean excess loss over the active support.
    pub support_mean: f64,
    /// Reference mass `P_S` of the active support.
    pub support_mass: f64,
    /// Active-set passes performed.
    pub passes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroWeights {
    pub q: Vec<f64>,
    pub divergence: f64,
    pub dual: DroDual,
    pub active_support: Vec<usize>,
}

impl Weights for DroWeights {
    fn probs(&self) -> &[f64] {
        &self.q
    }
}

impl DroWeights {
    fn reference(p: &[f64]) -> Self {
        DroWeights {
            q: p.to_vec(),
            divergence: 0.0,
            dual: DroDual {
                lambda: 0.0,
                support_mean: 0.0,
                support_mass: 1.0,
                passes: 0,
            },
            active_support: (0..p.len()).collect(),
        }
    }

    /// `Σ q_i e_i`.
    pub fn objective(&self, excess: &[f64]) -> f64 {
        self.q.iter().zip(excess).map(|(q, e)| q * e).sum()
    }
}

/// Worst-case distribution `argmax_q Σ q_i e_i` over the simplex intersected
/// with the ball `D(q‖p_train) ≤ ρ`.
///
/// The unclipped stationary point is `q = p ⊙ (1 + λ(e − ē_p))` with
/// `λ = sqrt(2ρ / Var_p(e))`. Coordinates that come out negative are pinned
/// to zero and the problem is re-solved on the remaining support `S`, where
/// the divergence budget left for the tilt is `2ρ − P_Z / P_S`. Each pass
/// removes at least one coordinate, so at most `n` passes run.
pub fn dro_worst_case(excess: &[f64], config: &DroConfig) -> Result<DroWeights, SamplingError> {
    config.validate()?;
    let p = &config.p_train;
    if excess.len() != p.len() {
        return Err(SamplingError::DimensionMismatch {
            left: excess.len(),
            right: p.len(),
        });
    }
    if let Some(i) = excess.iter().position(|e| !e.is_finite()) {
        return Err(SamplingError::NonFiniteLoss(i));
    }

    let first = excess[0];
    if config.rho == 0.0 || excess.iter().all(|&e| e == first) {
        return Ok(DroWeights::reference(p));
    }

    let n = p.len();
    let mut active = vec![true; n];
    let mut q = vec![0.0; n];
    let mut passes = 0;
    loop {
        passes += 1;
        let support_mass: f64 = (0..n).filter(|&i| active[i]).map(|i| p[i]).sum();
        let zeroed_mass: f64 = (0..n).filter(|&i| !active[i]).map(|i| p[i]).sum();
        let mean = (0..n)
            .filter(|&i| active[i])
            .map(|i| p[i] * excess[i])
            .sum::<f64>()
            / support_mass;
        let variance: f64 = (0..n)
            .filter(|&i| active[i])
            .map(|i| p[i] * (excess[i] - mean) * (excess[i] - mean))
            .sum();
        let budget = (2.0 * config.rho - zeroed_mass / support_mass).max(0.0);
        let (lo, hi) = (0..n)
            .filter(|&i| active[i])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
                (lo.min(excess[i]), hi.max(excess[i]))
            });
        // Exact ties on the support leave nothing to tilt; rounding in `mean`
        // would otherwise produce a spurious tiny variance.
        let lambda = if hi > lo && variance > 0.0 {
            (budget / variance).sqrt()
        } else {
            0.0
        };

        let mut clipped = false;
        for i in 0..n {
            if !active[i] {
                q[i] = 0.0;
                continue;
            }
            q[i] = p[i] * (1.0 / support_mass + lambda * (excess[i] - mean));
            if q[i] < 0.0 {
                active[i] = false;
                clipped = true;
            }
        }

        if !clipped || passes >= n {
            for v in q.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            let active_support: Vec<usize> = (0..n).filter(|&i| q[i] > 0.0).collect();
            let divergence = chi2_unchecked(&q, p);
            return Ok(DroWeights {
                q,
                divergence,
                dual: DroDual {
                    lambda,
                    support_mean: mean,
                    support_mass,
                    passes,
                },
                active_support,
            });
        }
    }
}

/// Draws `batch_count` direction ids i.i.d. from `dist`. Deterministic in `seed`.
pub fn sample_schedule<W: Weights + ?Sized>(
    dist: &W,
    batch_count: usize,
    seed: u64,
) -> Result<Vec<usize>, SamplingError> {
    let probs = dist.probs();
    check_distribution(probs, false)?;
    if batch_count == 0 {
        return Ok(Vec::new());
    }
    let index = WeightedIndex::new(probs)
        .map_err(|e| SamplingError::NotADistribution(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..batch_count).map(|_| index.sample(&mut rng)).collect())
}
