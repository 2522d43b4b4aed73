//! Real-valued matrix factorization and its binary quantizations.

mod mf;
mod quantize;

pub use mf::{mf_predict, mf_train, mf_tune, rmse, MfBiases, MfConfig, MfOutcome, MfParams, LAMBDA_GRID};
pub use quantize::{binarize, quantize, thresholds, Statistic};
