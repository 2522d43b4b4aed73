//! Ranking metrics and per-user analyses.

mod buckets;
mod evaluate;
mod metrics;

pub use buckets::{bucket_curve, write_curve_csv, OrderingKey, DEFAULT_WINDOW};
pub use evaluate::{
    evaluate, evaluate_split, write_per_user_csv, CandidateSet, EvalOptions, EvalReport, ReportMeta,
    Scorer, UserKeys, UserMetrics,
};
pub use metrics::{dcg_at_k, ndcg_at_k, ndcg_with_ideal, reciprocal_rank, reciprocal_rank_of};
