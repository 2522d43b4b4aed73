//! Packed binary hash codes and the bit-level kernels over them.

mod code;
pub mod file;
pub mod kernels;
mod rank;

pub use code::{tail_mask, words_for, CodeTable, HashCode, MAX_BITS};
pub use kernels::{hamming, negate, phd, phd_fast, project, xor};
pub use rank::{counting_rank, rank_items, rank_items_hamming, NegatedItemStore};
