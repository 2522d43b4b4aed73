//! Rating reconstruction, the KL regularizer, and the mini-batch objective
//! with straight-through gradients.
//!
//! Code bits are handled as `±1` reals. The forward pass uses sampled codes;
//! the backward pass treats each bit as the smooth surrogate
//! `s = 2·sigmoid(E) - 1`, so `dz/dE = 2·p·(1 - p)`. Over `±1` values
//!
//! ```text
//! phd(u, i)     = Σ_j (1 + u_j)(1 - i_j) / 4    (popcount(u AND NOT i))
//! hamming(u, i) = Σ_j (1 - u_j · i_j) / 2        (popcount(u XOR i))
//! ```
//!
//! both exact at the corners, and these expressions give the partials.

use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::encoder::{sigmoid, EncoderParams, SamplingPolicy};
use crate::bitcode::{hamming, phd, HashCode};
use crate::data::{Interaction, RatingBounds};
use crate::error::{Error, Result};

const PROB_CLAMP: f64 = 1e-7;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dissimilarity {
    /// Projected Hamming dissimilarity (user code masks the item code).
    #[default]
    Phd,
    /// Plain Hamming distance.
    Hamming,
}

impl FromStr for Dissimilarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phd" => Ok(Self::Phd),
            "hamming" => Ok(Self::Hamming),
            other => Err(Error::Config(format!("unknown dissimilarity {other:?}"))),
        }
    }
}

impl Dissimilarity {
    pub fn between(self, u: &HashCode, i: &HashCode) -> Result<u32> {
        match self {
            Dissimilarity::Phd => phd(u, i),
            Dissimilarity::Hamming => hamming(u, i),
        }
    }
}

/// Fixed decreasing affine map from dissimilarity `[0, m]` to the rating
/// scale: `0 -> max`, `m -> min`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineRatingMap {
    pub bounds: RatingBounds,
    pub bits: usize,
}

impl AffineRatingMap {
    pub fn new(bounds: RatingBounds, bits: usize) -> Result<Self> {
        if bounds.min.is_nan() || bounds.max.is_nan() || bounds.min >= bounds.max {
            return Err(Error::Config("rating map needs min < max".into()));
        }
        if bits == 0 {
            return Err(Error::Config("rating map needs at least one bit".into()));
        }
        Ok(Self { bounds, bits })
    }

    /// Rating change per unit of dissimilarity (negated).
    #[inline]
    pub fn slope(&self) -> f64 {
        (self.bounds.max - self.bounds.min) / self.bits as f64
    }

    #[inline]
    pub fn apply(&self, d: f64) -> f64 {
        self.bounds.max - d * self.slope()
    }
}

pub fn reconstruct_rating(
    u: &HashCode,
    i: &HashCode,
    map: &AffineRatingMap,
    kind: Dissimilarity,
) -> Result<f64> {
    if u.bits() != map.bits {
        return Err(Error::DimensionMismatch {
            left: u.bits(),
            right: map.bits,
        });
    }
    Ok(map.apply(kind.between(u, i)? as f64))
}

/// KL divergence of independent `Bernoulli(p_j)` bits from the uniform
/// prior: `Σ p ln(2p) + (1-p) ln(2(1-p))`.
pub fn kl_term(probs: &[f64]) -> f64 {
    probs
        .iter()
        .map(|&p| {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            p * (2.0 * p).ln() + (1.0 - p) * (2.0 * (1.0 - p)).ln()
        })
        .sum()
}

/// `d KL / d logit` for one bit with probability `p`.
#[inline]
fn kl_grad_logit(p: f64) -> f64 {
    let pc = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    (pc / (1.0 - pc)).ln() * p * (1.0 - p)
}

/// Variance of the Gaussian noise added to training targets, decayed
/// geometrically once per iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    pub initial_variance: f64,
    pub decay: f64,
    #[serde(default)]
    pub step: u64,
}

impl Default for NoiseSchedule {
    fn default() -> Self {
        Self {
            initial_variance: 1.0,
            decay: 1.0 - 1e-4,
            step: 0,
        }
    }
}

impl NoiseSchedule {
    pub fn off() -> Self {
        Self {
            initial_variance: 0.0,
            decay: 1.0,
            step: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.initial_variance >= 0.0 && self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::Config(format!("invalid noise schedule {self:?}")));
        }
        Ok(())
    }

    pub fn variance(&self) -> f64 {
        self.initial_variance * self.decay.powf(self.step as f64)
    }

    pub fn advance(&mut self) {
        self.step += 1;
    }
}

/// What the forward pass feeds into the dissimilarity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodeForward {
    /// Binary codes drawn with the policy; gradients pass straight through.
    Sampled(SamplingPolicy),
    /// The smooth surrogate `2·sigmoid(E) - 1` itself. The objective is then
    /// differentiable and the returned gradient is its exact gradient; used
    /// for gradient checking.
    Relaxed,
}

/// The fixed parts of the objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Objective {
    pub map: AffineRatingMap,
    pub kind: Dissimilarity,
    pub kl_weight: f64,
}

/// Dense gradient buffers matching the encoder tables.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub users: Vec<f64>,
    pub items: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(params: &EncoderParams) -> Self {
        Self {
            users: vec![0.0; params.users.as_slice().len()],
            items: vec![0.0; params.items.as_slice().len()],
        }
    }

    pub fn clear(&mut self) {
        self.users.fill(0.0);
        self.items.fill(0.0);
    }
}

/// Mean over the batch of `(R + noise - f(z_u, z_i))^2 + β (KL_u + KL_i)`.
///
/// Writes the gradient with respect to both encoder tables into `grads`
/// (overwriting it) and returns the loss. Noise is drawn per example with
/// variance `noise_variance`; pass 0 for clean targets.
pub fn batch_loss_and_grads<R: Rng + ?Sized>(
    batch: &[Interaction],
    params: &EncoderParams,
    objective: &Objective,
    forward: CodeForward,
    noise_variance: f64,
    rng: &mut R,
    grads: &mut Gradients,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    let m = params.bits();
    if objective.map.bits != m {
        return Err(Error::DimensionMismatch {
            left: objective.map.bits,
            right: m,
        });
    }
    grads.clear();
    let scale = 1.0 / batch.len() as f64;
    let noise_std = noise_variance.max(0.0).sqrt();
    let slope = objective.map.slope();
    let beta = objective.kl_weight;

    let mut pu = vec![0.0; m];
    let mut pi = vec![0.0; m];
    let mut zu = vec![0.0; m];
    let mut zi = vec![0.0; m];
    let mut total = 0.0;

    for x in batch {
        let (u, i) = (x.user as usize, x.item as usize);
        let eu = params.users.checked_row("user", u)?;
        let ei = params.items.checked_row("item", i)?;
        for j in 0..m {
            pu[j] = sigmoid(eu[j] as f64);
            pi[j] = sigmoid(ei[j] as f64);
        }
        match forward {
            CodeForward::Sampled(policy) => {
                for j in 0..m {
                    zu[j] = if policy.bit(pu[j], rng) { 1.0 } else { -1.0 };
                }
                for j in 0..m {
                    zi[j] = if policy.bit(pi[j], rng) { 1.0 } else { -1.0 };
                }
            }
            CodeForward::Relaxed => {
                for j in 0..m {
                    zu[j] = 2.0 * pu[j] - 1.0;
                    zi[j] = 2.0 * pi[j] - 1.0;
                }
            }
        }

        let d: f64 = match objective.kind {
            Dissimilarity::Phd => (0..m).map(|j| (1.0 + zu[j]) * (1.0 - zi[j])).sum::<f64>() / 4.0,
            Dissimilarity::Hamming => (0..m).map(|j| 1.0 - zu[j] * zi[j]).sum::<f64>() / 2.0,
        };
        let target = if noise_std > 0.0 {
            let n: f64 = StandardNormal.sample(rng);
            x.rating + noise_std * n
        } else {
            x.rating
        };
        let residual = target - objective.map.apply(d);
        let kl = kl_term(&pu) + kl_term(&pi);
        total += residual * residual + beta * kl;

        // dL/dd = 2 · residual · slope (f decreases in d).
        let dl_dd = 2.0 * residual * slope * scale;
        let gu = &mut grads.users[u * m..(u + 1) * m];
        let gi = &mut grads.items[i * m..(i + 1) * m];
        for j in 0..m {
            let (dd_dzu, dd_dzi) = match objective.kind {
                Dissimilarity::Phd => ((1.0 - zi[j]) / 4.0, -(1.0 + zu[j]) / 4.0),
                Dissimilarity::Hamming => (-zi[j] / 2.0, -zu[j] / 2.0),
            };
            let su = 2.0 * pu[j] * (1.0 - pu[j]);
            let si = 2.0 * pi[j] * (1.0 - pi[j]);
            gu[j] += dl_dd * dd_dzu * su + beta * scale * kl_grad_logit(pu[j]);
            gi[j] += dl_dd * dd_dzi * si + beta * scale * kl_grad_logit(pi[j]);
        }
    }
    Ok(total * scale)
}
