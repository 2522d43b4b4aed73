//! Hashing-based collaborative filtering with the projected Hamming
//! dissimilarity.
//!
//! Users and items are represented by `m`-bit hash codes. A user's code
//! masks an item's code before the Hamming norm is taken, which lets the user
//! disable bits that do not matter to them while keeping the cost of one
//! AND plus one popcount per word (item codes are stored negated).
//!
//! - [`bitcode`]: packed codes, distance kernels, counting-sort ranking and
//!   the binary code file.
//! - [`vhmodel`]: the variational hashing model and its trainer.
//! - [`baselines`]: matrix factorization and its mean/median quantizations.
//! - [`data`]: rating ingestion, filtering and splitting.
//! - [`eval`]: NDCG@k, reciprocal rank, and per-user bucket curves.

pub mod baselines;
pub mod bitcode;
pub mod checkpoint;
pub mod data;
mod embedding;
mod error;
pub mod eval;
pub mod optim;
pub mod synth;
pub mod vhmodel;

pub use bitcode::{CodeTable, HashCode, NegatedItemStore};
pub use data::{Interaction, RatingBounds, RatingsDataset};
pub use embedding::{dot, Embedding};
pub use error::{Error, Result};
