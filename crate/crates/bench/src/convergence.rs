//! Validation-loss curves of the projected-Hamming and Hamming trainers
//! under otherwise identical configurations.

use std::fmt::Write as _;

use hashcf_core::vhmodel::{train, Dissimilarity, EpochLog, TrainConfig};
use hashcf_core::RatingsDataset;
use serde::{Deserialize, Serialize};

use crate::{BenchError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRun {
    pub kind: Dissimilarity,
    pub seed: u64,
    pub log: Vec<EpochLog>,
    pub mean_batch_seconds: f64,
}

impl ConvergenceRun {
    pub fn final_val_loss(&self) -> f64 {
        self.log.last().map_or(f64::NAN, |e| e.val_loss)
    }

    /// First epoch whose validation loss is at or below `target`.
    pub fn epochs_to_reach(&self, target: f64) -> Option<usize> {
        self.log.iter().find(|e| e.val_loss <= target).map(|e| e.epoch)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub hamming_epochs: usize,
    pub hamming_final_val_loss: f64,
    /// Epochs the projected-Hamming trainer needs to reach the Hamming
    /// trainer's final validation loss.
    pub phd_epochs_to_reach: Option<usize>,
    /// `phd_epochs_to_reach / hamming_epochs`.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub runs: Vec<ConvergenceRun>,
    pub seeds: Vec<SeedSummary>,
    /// Mean ratio over seeds; `None` if any seed never reached the target.
    pub mean_ratio: Option<f64>,
    pub phd_batch_seconds: f64,
    pub hamming_batch_seconds: f64,
    /// `|phd - hamming| / hamming` per-batch time, in percent.
    pub batch_time_diff_pct: f64,
}

impl ConvergenceReport {
    /// `kind,seed,epoch,train_loss,val_loss,val_ndcg10`
    pub fn curves_csv(&self) -> String {
        let mut out = String::from("kind,seed,epoch,train_loss,val_loss,val_ndcg10\n");
        for r in &self.runs {
            let kind = match r.kind {
                Dissimilarity::Phd => "phd",
                Dissimilarity::Hamming => "hamming",
            };
            for e in &r.log {
                let _ = writeln!(out, "{kind},{},{},{},{},{}", r.seed, e.epoch, e.train_loss, e.val_loss, e.val_ndcg10);
            }
        }
        out
    }
}

/// Trains both dissimilarities from `base` (its `kind` and `seed` are
/// overridden) for every seed.
pub fn bench_convergence(ds: &RatingsDataset, base: &TrainConfig, seeds: &[u64]) -> Result<ConvergenceReport> {
    if seeds.is_empty() {
        return Err(BenchError::InvalidInput("at least one seed is required".into()));
    }
    let mut runs = Vec::with_capacity(2 * seeds.len());
    let mut summaries = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let mut pair = Vec::with_capacity(2);
        for kind in [Dissimilarity::Phd, Dissimilarity::Hamming] {
            let cfg = TrainConfig { kind, seed, ..base.clone() };
            let out = train(ds, &cfg)?;
            log::info!("{kind:?} seed {seed}: {} epochs", out.log.len());
            pair.push(ConvergenceRun {
                kind,
                seed,
                log: out.log,
                mean_batch_seconds: out.mean_batch_seconds,
            });
        }
        let (phd, ham) = (&pair[0], &pair[1]);
        let target = ham.final_val_loss();
        let reach = phd.epochs_to_reach(target);
        summaries.push(SeedSummary {
            seed,
            hamming_epochs: ham.log.len(),
            hamming_final_val_loss: target,
            phd_epochs_to_reach: reach,
            ratio: reach.map(|e| e as f64 / ham.log.len() as f64),
        });
        runs.extend(pair);
    }
    let mean_ratio = summaries
        .iter()
        .map(|s| s.ratio)
        .sum::<Option<f64>>()
        .map(|s| s / summaries.len() as f64);
    let mean_time = |kind| {
        let v: Vec<f64> = runs.iter().filter(|r| r.kind == kind).map(|r| r.mean_batch_seconds).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let phd_batch_seconds = mean_time(Dissimilarity::Phd);
    let hamming_batch_seconds = mean_time(Dissimilarity::Hamming);
    Ok(ConvergenceReport {
        runs,
        seeds: summaries,
        mean_ratio,
        phd_batch_seconds,
        hamming_batch_seconds,
        batch_time_diff_pct: (phd_batch_seconds - hamming_batch_seconds).abs() / hamming_batch_seconds * 100.0,
    })
}
