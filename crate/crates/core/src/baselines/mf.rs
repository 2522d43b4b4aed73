use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Interaction, RatingsDataset};
use crate::embedding::{dot, Embedding};
use crate::error::{Error, Result};
use crate::eval::{evaluate_split, EvalOptions, ReportMeta, Scorer};
use crate::optim::{Adam, AdamConfig, BestTracker};

/// L2 weights tried by [`mf_tune`].
pub const LAMBDA_GRID: [f64; 3] = [1e-4, 1e-3, 1e-2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MfConfig {
    /// Latent dimension, kept equal to the code length for comparisons.
    pub dim: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub patience: Option<usize>,
    pub init_std: f64,
    /// Adds user, item and global bias terms.
    pub biases: bool,
    pub seed: u64,
}

impl Default for MfConfig {
    fn default() -> Self {
        Self {
            dim: 32,
            learning_rate: 1e-3,
            l2: 1e-3,
            batch_size: 400,
            epochs: 100,
            patience: Some(10),
            init_std: 0.1,
            biases: false,
            seed: 0,
        }
    }
}

impl MfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("latent dimension must be at least 1".into()));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::Config("batch size and epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::Config(format!("L2 weight must be >= 0, got {}", self.l2)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MfBiases {
    pub users: Vec<f32>,
    pub items: Vec<f32>,
    pub global: f32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MfParams {
    pub users: Embedding,
    pub items: Embedding,
    pub biases: Option<MfBiases>,
}

impl MfParams {
    pub fn new(users: Embedding, items: Embedding) -> Result<Self> {
        if users.cols() != items.cols() {
            return Err(Error::DimensionMismatch {
                left: users.cols(),
                right: items.cols(),
            });
        }
        Ok(Self { users, items, biases: None })
    }

    pub fn dim(&self) -> usize {
        self.users.cols()
    }

    /// Ranking scorer; the user and global biases do not change an ordering
    /// and are left out.
    pub fn scorer(&self) -> Scorer<'_> {
        Scorer::InnerProduct {
            users: &self.users,
            items: &self.items,
            item_bias: self.biases.as_ref().map(|b| b.items.as_slice()),
        }
    }

    fn predict_unchecked(&self, u: usize, i: usize) -> f64 {
        let mut r = dot(self.users.row(u), self.items.row(i));
        if let Some(b) = &self.biases {
            r += (b.users[u] + b.items[i] + b.global) as f64;
        }
        r
    }
}

/// Predicted rating: `<p_u, q_i>`, plus biases when present.
pub fn mf_predict(params: &MfParams, u: usize, i: usize) -> Result<f64> {
    params.users.checked_row("user", u)?;
    params.items.checked_row("item", i)?;
    Ok(params.predict_unchecked(u, i))
}

#[derive(Clone, Debug)]
pub struct MfOutcome {
    pub params: MfParams,
    pub best_epoch: usize,
    pub best_val_ndcg10: f64,
    pub best_val_rmse: f64,
    /// Per epoch: (train objective, validation RMSE, validation NDCG@10).
    pub log: Vec<(f64, f64, f64)>,
}

pub fn rmse(params: &MfParams, split: &[Interaction]) -> f64 {
    if split.is_empty() {
        return 0.0;
    }
    let sq: f64 = split
        .iter()
        .map(|x| {
            let e = x.rating - params.predict_unchecked(x.user as usize, x.item as usize);
            e * e
        })
        .sum();
    (sq / split.len() as f64).sqrt()
}

/// Trains MF on squared error with per-example L2 on the touched vectors,
/// keeping the epoch with the best validation NDCG@10 (lower RMSE breaks
/// ties).
pub fn mf_train(ds: &RatingsDataset, cfg: &MfConfig) -> Result<MfOutcome> {
    cfg.validate()?;
    if ds.train.is_empty() {
        return Err(Error::Config("training split is empty".into()));
    }
    if ds.validation.is_empty() {
        return Err(Error::Config("validation split is empty; model selection needs it".into()));
    }
    let d = cfg.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = MfParams::new(
        Embedding::normal(ds.n_users, d, cfg.init_std, &mut rng),
        Embedding::normal(ds.n_items, d, cfg.init_std, &mut rng),
    )?;
    if cfg.biases {
        let mean = ds.train.iter().map(|x| x.rating).sum::<f64>() / ds.train.len() as f64;
        params.biases = Some(MfBiases {
            users: vec![0.0; ds.n_users],
            items: vec![0.0; ds.n_items],
            global: mean as f32,
        });
    }
    let adam_cfg = AdamConfig::with_lr(cfg.learning_rate);
    let mut g_users = vec![0.0; ds.n_users * d];
    let mut g_items = vec![0.0; ds.n_items * d];
    let mut g_bu = vec![0.0; ds.n_users];
    let mut g_bi = vec![0.0; ds.n_items];
    let mut adam_users = Adam::new(g_users.len(), adam_cfg);
    let mut adam_items = Adam::new(g_items.len(), adam_cfg);
    let mut adam_bu = Adam::new(ds.n_users, adam_cfg);
    let mut adam_bi = Adam::new(ds.n_items, adam_cfg);

    let held_out = ds.by_user(&ds.validation);
    let opts = EvalOptions {
        ks: vec![10],
        ..EvalOptions::default()
    };
    let mut order: Vec<usize> = (0..ds.train.len()).collect();
    let mut tracker = BestTracker::default();
    let mut log = Vec::new();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            g_users.fill(0.0);
            g_items.fill(0.0);
            g_bu.fill(0.0);
            g_bi.fill(0.0);
            let scale = 1.0 / chunk.len() as f64;
            for &k in chunk {
                let x = ds.train[k];
                let (u, i) = (x.user as usize, x.item as usize);
                let e = x.rating - params.predict_unchecked(u, i);
                let pu = params.users.row(u);
                let qi = params.items.row(i);
                let mut reg = 0.0;
                for j in 0..d {
                    let (p, q) = (pu[j] as f64, qi[j] as f64);
                    reg += p * p + q * q;
                    g_users[u * d + j] += scale * (-2.0 * e * q + 2.0 * cfg.l2 * p);
                    g_items[i * d + j] += scale * (-2.0 * e * p + 2.0 * cfg.l2 * q);
                }
                g_bu[u] -= scale * 2.0 * e;
                g_bi[i] -= scale * 2.0 * e;
                total += e * e + cfg.l2 * reg;
            }
            adam_users.step(params.users.as_mut_slice(), &g_users);
            adam_items.step(params.items.as_mut_slice(), &g_items);
            if let Some(b) = params.biases.as_mut() {
                adam_bu.step(&mut b.users, &g_bu);
                adam_bi.step(&mut b.items, &g_bi);
            }
        }
        let val_rmse = rmse(&params, &ds.validation);
        let report = evaluate_split(&params.scorer(), &held_out, None, ds.n_items, &opts, ReportMeta::default())?;
        let val_ndcg = report.mean_ndcg[0];
        log.push((total / ds.train.len() as f64, val_rmse, val_ndcg));
        tracker.offer(val_ndcg, val_rmse, epoch, || params.clone());
        if cfg.patience.is_some_and(|p| tracker.stale() >= p) {
            break;
        }
    }
    let (best_val_ndcg10, best_val_rmse, best_epoch, params) = tracker.into_best().expect("at least one epoch ran");
    Ok(MfOutcome {
        params,
        best_epoch,
        best_val_ndcg10,
        best_val_rmse,
        log,
    })
}

/// Trains once per L2 weight in `grid` and keeps the best run by validation
/// NDCG@10 (then RMSE). Returns the chosen weight with the outcome.
pub fn mf_tune(ds: &RatingsDataset, cfg: &MfConfig, grid: &[f64]) -> Result<(f64, MfOutcome)> {
    let mut best: Option<(f64, MfOutcome)> = None;
    for &l2 in grid {
        let out = mf_train(ds, &MfConfig { l2, ..cfg.clone() })?;
        log::info!("mf l2={l2}: val ndcg10 {:.4} rmse {:.4}", out.best_val_ndcg10, out.best_val_rmse);
        let better = match &best {
            None => true,
            Some((_, b)) => {
                out.best_val_ndcg10 > b.best_val_ndcg10 + 1e-12
                    || ((out.best_val_ndcg10 - b.best_val_ndcg10).abs() <= 1e-12 && out.best_val_rmse < b.best_val_rmse)
            }
        };
        if better {
            best = Some((l2, out));
        }
    }
    best.ok_or_else(|| Error::Config("empty L2 grid".into()))
}
