//! Variational hashing model.
//!
//! Each user and item has a row of logits; bit `j` of its code is `+1` with
//! probability `sigmoid(logit_j)`. A rating is reconstructed from the two
//! codes through a fixed decreasing affine map of their dissimilarity
//! (projected Hamming or plain Hamming). Training minimizes the squared
//! reconstruction error against noise-perturbed ratings plus a KL term
//! towards the uniform code prior, with straight-through gradients.

mod encoder;
mod loss;
mod train;

pub use encoder::{export_codes, sample_code, sample_codes, sigmoid, EncoderParams, Entity, ExportedCodes, SamplingPolicy};
pub use loss::{
    batch_loss_and_grads, kl_term, reconstruct_rating, AffineRatingMap, CodeForward, Dissimilarity, Gradients,
    NoiseSchedule, Objective,
};
pub use train::{init_params, train, train_with, validate_codes, write_log_csv, EpochLog, TrainConfig, TrainOutcome};
