use super::code::{CodeTable, HashCode};
use super::kernels::{hamming_words, phd_fast_words};
use crate::error::{Error, Result};

/// Item codes stored in negated form so the projected Hamming dissimilarity
/// costs one AND and one popcount per word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NegatedItemStore {
    codes: CodeTable,
}

impl NegatedItemStore {
    /// Negates and stores the given item codes.
    pub fn from_items(items: &CodeTable) -> Self {
        Self {
            codes: items.negated(),
        }
    }

    /// Wraps codes that are already negated (e.g. read from a code file with
    /// the negated flag set).
    pub fn from_negated(codes: CodeTable) -> Self {
        Self { codes }
    }

    pub fn bits(&self) -> usize {
        self.codes.bits()
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn negated_codes(&self) -> &CodeTable {
        &self.codes
    }

    /// The original (un-negated) item codes.
    pub fn original_codes(&self) -> CodeTable {
        self.codes.negated()
    }

    #[inline]
    pub fn dissimilarity(&self, u: &[u64], item: usize) -> u32 {
        phd_fast_words(u, self.codes.row(item))
    }
}

/// Stable counting sort of `0..keys.len()` by key, keys bounded by
/// `max_key`. Equal keys keep ascending index order. Returns at most `k`
/// `(index, key)` pairs.
pub fn counting_rank(keys: &[u32], max_key: u32, k: usize) -> Vec<(usize, u32)> {
    let mut starts = vec![0usize; max_key as usize + 2];
    for &key in keys {
        starts[key as usize + 1] += 1;
    }
    for b in 1..starts.len() {
        starts[b] += starts[b - 1];
    }
    let mut sorted = vec![(0usize, 0u32); keys.len()];
    for (idx, &key) in keys.iter().enumerate() {
        let slot = &mut starts[key as usize];
        sorted[*slot] = (idx, key);
        *slot += 1;
    }
    sorted.truncate(k.min(keys.len()));
    sorted
}

fn check_query(u: &HashCode, bits: usize, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if u.bits() != bits {
        return Err(Error::DimensionMismatch {
            left: u.bits(),
            right: bits,
        });
    }
    Ok(())
}

/// Ranks every stored item by ascending projected Hamming dissimilarity to
/// `u`, ties by ascending item index, and returns the first `k`.
pub fn rank_items(u: &HashCode, store: &NegatedItemStore, k: usize) -> Result<Vec<(usize, u32)>> {
    check_query(u, store.bits(), k)?;
    let dists: Vec<u32> = (0..store.len())
        .map(|i| store.dissimilarity(u.words(), i))
        .collect();
    Ok(counting_rank(&dists, store.bits() as u32, k))
}

/// Same as [`rank_items`] with the symmetric Hamming distance over original
/// item codes.
pub fn rank_items_hamming(u: &HashCode, items: &CodeTable, k: usize) -> Result<Vec<(usize, u32)>> {
    check_query(u, items.bits(), k)?;
    let dists: Vec<u32> = (0..items.len())
        .map(|i| hamming_words(u.words(), items.row(i)))
        .collect();
    Ok(counting_rank(&dists, items.bits() as u32, k))
}
