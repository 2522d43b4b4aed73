use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bitcode::{words_for, CodeTable, HashCode, NegatedItemStore};
use crate::embedding::Embedding;
use crate::error::{Error, Result};

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// The two encoder tables: row `u` of `users` holds the logits of user `u`'s
/// per-bit Bernoulli posterior, likewise for items.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderParams {
    pub users: Embedding,
    pub items: Embedding,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Entity {
    User(usize),
    Item(usize),
}

impl EncoderParams {
    pub fn new(users: Embedding, items: Embedding) -> Result<Self> {
        if users.cols() != items.cols() {
            return Err(Error::DimensionMismatch {
                left: users.cols(),
                right: items.cols(),
            });
        }
        Ok(Self { users, items })
    }

    pub fn bits(&self) -> usize {
        self.users.cols()
    }

    pub fn row(&self, entity: Entity) -> Result<&[f32]> {
        match entity {
            Entity::User(u) => self.users.checked_row("user", u),
            Entity::Item(i) => self.items.checked_row("item", i),
        }
    }

    /// Per-bit probability of a `+1` entry: the sigmoid of each logit.
    pub fn encode_probs(&self, entity: Entity) -> Result<Vec<f64>> {
        Ok(self.row(entity)?.iter().map(|&e| sigmoid(e as f64)).collect())
    }
}

/// How the per-bit threshold is chosen when turning probabilities into a
/// code.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingPolicy {
    /// Threshold drawn uniformly from `[0, 1]` per bit per draw.
    #[default]
    Stochastic,
    /// Threshold fixed at 0.5.
    Deterministic,
}

impl SamplingPolicy {
    /// Bit value for probability `p`: set iff `p` exceeds the threshold.
    #[inline]
    pub fn bit<R: Rng + ?Sized>(self, p: f64, rng: &mut R) -> bool {
        let threshold = match self {
            SamplingPolicy::Stochastic => rng.random::<f64>(),
            SamplingPolicy::Deterministic => 0.5,
        };
        p > threshold
    }
}

pub fn sample_code<R: Rng + ?Sized>(probs: &[f64], policy: SamplingPolicy, rng: &mut R) -> Result<HashCode> {
    let bits: Vec<bool> = probs.iter().map(|&p| policy.bit(p, rng)).collect();
    HashCode::from_bools(&bits)
}

fn sample_rows<R: Rng + ?Sized>(table: &Embedding, policy: SamplingPolicy, rng: &mut R) -> Result<CodeTable> {
    let bits = table.cols();
    let stride = words_for(bits);
    let mut words = vec![0u64; table.rows() * stride];
    for r in 0..table.rows() {
        for (j, &e) in table.row(r).iter().enumerate() {
            if policy.bit(sigmoid(e as f64), rng) {
                words[r * stride + j / 64] |= 1 << (j % 64);
            }
        }
    }
    CodeTable::from_words(words, bits)
}

/// User codes, item codes, and the negated item store.
#[derive(Clone, Debug, PartialEq)]
pub struct ExportedCodes {
    pub users: CodeTable,
    pub items: CodeTable,
    pub items_negated: NegatedItemStore,
}

/// Samples one code per user and item under `policy`.
pub fn sample_codes<R: Rng + ?Sized>(params: &EncoderParams, policy: SamplingPolicy, rng: &mut R) -> Result<ExportedCodes> {
    let users = sample_rows(&params.users, policy, rng)?;
    let items = sample_rows(&params.items, policy, rng)?;
    let items_negated = NegatedItemStore::from_items(&items);
    Ok(ExportedCodes {
        users,
        items,
        items_negated,
    })
}

/// Deterministic codes (threshold 0.5) for serving and evaluation.
pub fn export_codes(params: &EncoderParams) -> Result<ExportedCodes> {
    // The deterministic policy never draws from the generator.
    let mut unused = ChaCha8Rng::seed_from_u64(0);
    sample_codes(params, SamplingPolicy::Deterministic, &mut unused)
}
