use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::encoder::{sample_codes, EncoderParams, ExportedCodes, SamplingPolicy};
use super::loss::{
    batch_loss_and_grads, AffineRatingMap, CodeForward, Dissimilarity, Gradients, NoiseSchedule, Objective,
};
use crate::bitcode::kernels::{hamming_words, phd_fast_words};
use crate::data::{Interaction, RatingsDataset};
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::eval::{evaluate_split, EvalOptions, ReportMeta, Scorer};
use crate::optim::{Adam, AdamConfig, BestTracker};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub bits: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Stop after this many validations without improvement; `None` runs
    /// every epoch.
    pub patience: Option<usize>,
    /// KL weight after warm-up.
    pub kl_weight: f64,
    /// Fraction of all iterations over which the KL weight ramps up from 0.
    pub kl_warmup: f64,
    pub kind: Dissimilarity,
    pub train_sampling: SamplingPolicy,
    pub eval_sampling: SamplingPolicy,
    pub noise: NoiseSchedule,
    /// Standard deviation of the initial logits.
    pub init_std: f64,
    /// Logits are clamped to `[-c, c]` after every step.
    pub logit_clamp: Option<f32>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            bits: 32,
            learning_rate: 1e-3,
            batch_size: 400,
            epochs: 100,
            patience: Some(10),
            kl_weight: 0.1,
            kl_warmup: 0.2,
            kind: Dissimilarity::Phd,
            train_sampling: SamplingPolicy::Stochastic,
            eval_sampling: SamplingPolicy::Deterministic,
            noise: NoiseSchedule::default(),
            init_std: 0.1,
            logit_clamp: Some(10.0),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(8..=512).contains(&self.bits) {
            return bad(format!("bits must be in 8..=512, got {}", self.bits));
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if !(self.kl_weight >= 0.0 && self.kl_weight.is_finite()) {
            return bad(format!("KL weight must be >= 0, got {}", self.kl_weight));
        }
        if !(0.0..=1.0).contains(&self.kl_warmup) {
            return bad(format!("KL warm-up fraction must be in [0, 1], got {}", self.kl_warmup));
        }
        if !(self.init_std >= 0.0 && self.init_std.is_finite()) {
            return bad(format!("init std must be >= 0, got {}", self.init_std));
        }
        if matches!(self.logit_clamp, Some(c) if c.is_nan() || c <= 0.0) {
            return bad("logit clamp must be positive".into());
        }
        self.noise.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_ndcg10: f64,
    /// Noise variance at the end of the epoch.
    pub noise_var: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters from the best validation epoch.
    pub params: EncoderParams,
    pub best_epoch: usize,
    pub best_val_ndcg10: f64,
    pub best_val_loss: f64,
    pub log: Vec<EpochLog>,
    pub iterations: u64,
    /// Mean wall time of one optimization step (loss, gradients, update).
    pub mean_batch_seconds: f64,
}

/// Validation MSE (clean targets) and mean NDCG@10 over users with
/// validation items, using codes sampled with `codes`.
pub fn validate_codes(
    codes: &ExportedCodes,
    kind: Dissimilarity,
    map: &AffineRatingMap,
    ds: &RatingsDataset,
    split: &[Interaction],
) -> Result<(f64, f64)> {
    let mut sq = 0.0;
    for x in split {
        let u = codes.users.row(x.user as usize);
        let d = match kind {
            Dissimilarity::Phd => phd_fast_words(u, codes.items_negated.negated_codes().row(x.item as usize)),
            Dissimilarity::Hamming => hamming_words(u, codes.items.row(x.item as usize)),
        };
        let e = x.rating - map.apply(d as f64);
        sq += e * e;
    }
    let mse = if split.is_empty() { 0.0 } else { sq / split.len() as f64 };
    let scorer = match kind {
        Dissimilarity::Phd => Scorer::Phd {
            users: &codes.users,
            items: &codes.items_negated,
        },
        Dissimilarity::Hamming => Scorer::Hamming {
            users: &codes.users,
            items: &codes.items,
        },
    };
    let opts = EvalOptions {
        ks: vec![10],
        ..EvalOptions::default()
    };
    let report = evaluate_split(&scorer, &ds.by_user(split), None, ds.n_items, &opts, ReportMeta::default())?;
    Ok((mse, report.mean_ndcg[0]))
}

pub fn init_params(n_users: usize, n_items: usize, cfg: &TrainConfig, rng: &mut ChaCha8Rng) -> EncoderParams {
    EncoderParams {
        users: Embedding::normal(n_users, cfg.bits, cfg.init_std, rng),
        items: Embedding::normal(n_items, cfg.bits, cfg.init_std, rng),
    }
}

fn clamp_table(t: &mut Embedding, c: f32) {
    for v in t.as_mut_slice() {
        *v = v.clamp(-c, c);
    }
}

/// Trains the variational hashing model with Adam on shuffled mini-batches
/// and returns the parameters of the best validation epoch.
pub fn train(ds: &RatingsDataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with(ds, cfg, |_| {})
}

/// [`train`] with a callback invoked after every epoch's validation.
pub fn train_with(ds: &RatingsDataset, cfg: &TrainConfig, mut on_epoch: impl FnMut(&EpochLog)) -> Result<TrainOutcome> {
    cfg.validate()?;
    if ds.train.is_empty() {
        return Err(Error::Config("training split is empty".into()));
    }
    if ds.validation.is_empty() {
        return Err(Error::Config("validation split is empty; model selection needs it".into()));
    }
    let map = AffineRatingMap::new(ds.bounds, cfg.bits)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = init_params(ds.n_users, ds.n_items, cfg, &mut rng);
    let mut grads = Gradients::zeros_like(&params);
    let adam_cfg = AdamConfig::with_lr(cfg.learning_rate);
    let mut adam_users = Adam::new(grads.users.len(), adam_cfg);
    let mut adam_items = Adam::new(grads.items.len(), adam_cfg);
    let mut noise = cfg.noise;

    let batches_per_epoch = ds.train.len().div_ceil(cfg.batch_size);
    let total_iters = (batches_per_epoch * cfg.epochs) as f64;
    let warmup_iters = (cfg.kl_warmup * total_iters).ceil();
    let mut order: Vec<usize> = (0..ds.train.len()).collect();
    let mut batch = Vec::with_capacity(cfg.batch_size);
    let mut tracker = BestTracker::default();
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut iterations = 0u64;
    let mut batch_seconds = 0.0;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&k| ds.train[k]));
            let ramp = if warmup_iters > 0.0 {
                (iterations as f64 / warmup_iters).min(1.0)
            } else {
                1.0
            };
            let objective = Objective {
                map,
                kind: cfg.kind,
                kl_weight: cfg.kl_weight * ramp,
            };
            let started = Instant::now();
            let loss = batch_loss_and_grads(
                &batch,
                &params,
                &objective,
                CodeForward::Sampled(cfg.train_sampling),
                noise.variance(),
                &mut rng,
                &mut grads,
            )?;
            adam_users.step(params.users.as_mut_slice(), &grads.users);
            adam_items.step(params.items.as_mut_slice(), &grads.items);
            if let Some(c) = cfg.logit_clamp {
                clamp_table(&mut params.users, c);
                clamp_table(&mut params.items, c);
            }
            batch_seconds += started.elapsed().as_secs_f64();
            epoch_loss += loss * batch.len() as f64;
            noise.advance();
            iterations += 1;
        }

        let codes = sample_codes(&params, cfg.eval_sampling, &mut rng)?;
        let (val_loss, val_ndcg10) = validate_codes(&codes, cfg.kind, &map, ds, &ds.validation)?;
        let entry = EpochLog {
            epoch,
            train_loss: epoch_loss / ds.train.len() as f64,
            val_loss,
            val_ndcg10,
            noise_var: noise.variance(),
        };
        log::debug!(
            "epoch {epoch}: train {:.4} val {:.4} ndcg10 {:.4}",
            entry.train_loss,
            val_loss,
            val_ndcg10
        );
        on_epoch(&entry);
        log.push(entry);
        tracker.offer(val_ndcg10, val_loss, epoch, || params.clone());
        if cfg.patience.is_some_and(|p| tracker.stale() >= p) {
            log::info!("early stop after epoch {epoch}");
            break;
        }
    }

    let (best_val_ndcg10, best_val_loss, best_epoch, params) = tracker.into_best().expect("at least one epoch ran");
    Ok(TrainOutcome {
        params,
        best_epoch,
        best_val_ndcg10,
        best_val_loss,
        log,
        iterations,
        mean_batch_seconds: batch_seconds / iterations.max(1) as f64,
    })
}

/// `epoch,train_loss,val_loss,val_ndcg10,noise_var`
pub fn write_log_csv(path: impl AsRef<Path>, log: &[EpochLog]) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "epoch,train_loss,val_loss,val_ndcg10,noise_var")?;
    for e in log {
        writeln!(out, "{},{},{},{},{}", e.epoch, e.train_loss, e.val_loss, e.val_ndcg10, e.noise_var)?;
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::RatingBounds;

    fn tiny() -> RatingsDataset {
        let mut train = Vec::new();
        let mut validation = Vec::new();
        for u in 0..4u32 {
            for i in 0..6u32 {
                let x = Interaction { user: u, item: i, rating: 1.0 + ((u * 3 + i) % 5) as f64, timestamp: None };
                if i < 4 {
                    train.push(x);
                } else {
                    validation.push(x);
                }
            }
        }
        RatingsDataset::from_splits(train, validation, vec![], 4, 6, RatingBounds::default()).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        for bad in [
            TrainConfig { bits: 4, ..Default::default() },
            TrainConfig { batch_size: 0, ..Default::default() },
            TrainConfig { kl_weight: -1.0, ..Default::default() },
            TrainConfig { learning_rate: 0.0, ..Default::default() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Config(_))), "{bad:?}");
        }
    }

    #[test]
    fn empty_splits_are_rejected() {
        let mut ds = tiny();
        ds.validation.clear();
        assert!(matches!(train(&ds, &TrainConfig::default()), Err(Error::Config(_))));
        ds.train.clear();
        assert!(matches!(train(&ds, &TrainConfig::default()), Err(Error::Config(_))));
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let cfg = TrainConfig { bits: 8, epochs: 5, batch_size: 7, ..Default::default() };
        let a = train(&tiny(), &cfg).unwrap();
        let b = train(&tiny(), &cfg).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.log, b.log);
        let c = train(&tiny(), &TrainConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a.params, c.params);
    }

    #[test]
    fn log_csv_header() {
        let dir = tempfile::tempdir().unwrap();
        let out = train(&tiny(), &TrainConfig { bits: 8, epochs: 2, ..Default::default() }).unwrap();
        let path = dir.path().join("log.csv");
        write_log_csv(&path, &out.log).unwrap();
        let text = fs::read_to_string(path).unwrap();
        assert!(text.starts_with("epoch,train_loss,val_loss,val_ndcg10,noise_var\n1,"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn noise_decays_per_iteration() {
        let cfg = TrainConfig { bits: 8, epochs: 3, batch_size: 5, patience: None, ..Default::default() };
        let out = train(&tiny(), &cfg).unwrap();
        // 16 training ratings in batches of 5: 4 iterations per epoch.
        assert_eq!(out.iterations, 12);
        let expected = (1.0f64 - 1e-4).powi(12);
        assert!((out.log[2].noise_var - expected).abs() < 1e-12);
    }
}
