use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{reindex, Interaction, RatingSet, RatingsDataset};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitProportions {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitProportions {
    fn default() -> Self {
        Self {
            train: 0.425,
            validation: 0.075,
            test: 0.50,
        }
    }
}

impl SplitProportions {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::Config(format!("split proportions must be positive: {parts:?}")));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split proportions must sum to 1: {parts:?}")));
        }
        Ok(())
    }

    /// (train, validation) sizes for a user with `n` ratings; test gets the
    /// rest.
    pub fn sizes(&self, n: usize) -> (usize, usize) {
        // The epsilon absorbs representation error, e.g. 0.425 * 40.
        let floor = |p: f64| ((p * n as f64) + 1e-9).floor() as usize;
        let train = floor(self.train).min(n);
        let validation = floor(self.validation).min(n - train);
        (train, validation)
    }
}

/// Per-user seeded shuffle, then the first `floor(train * n)` ratings go to
/// train, the next `floor(validation * n)` to validation and the rest to
/// test. Users left with an empty train split are dropped and ids are
/// compacted again.
pub fn split(set: &RatingSet, proportions: SplitProportions, seed: u64) -> Result<RatingsDataset> {
    proportions.validate()?;
    let mut per_user: Vec<Vec<Interaction>> = vec![Vec::new(); set.n_users()];
    for x in &set.interactions {
        per_user[x.user as usize].push(*x);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assigned: Vec<(Interaction, u8)> = Vec::with_capacity(set.interactions.len());
    let mut dropped = 0usize;
    for (user, mut xs) in per_user.into_iter().enumerate() {
        if xs.is_empty() {
            continue;
        }
        xs.shuffle(&mut rng);
        let (n_train, n_val) = proportions.sizes(xs.len());
        if n_train == 0 {
            log::warn!(
                "dropping user {} ({} ratings): empty train split",
                set.user_labels[user],
                xs.len()
            );
            dropped += 1;
            continue;
        }
        for (pos, x) in xs.into_iter().enumerate() {
            let part = if pos < n_train {
                0
            } else if pos < n_train + n_val {
                1
            } else {
                2
            };
            assigned.push((x, part));
        }
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} users with empty train splits");
    }

    let flat: Vec<Interaction> = assigned.iter().map(|(x, _)| *x).collect();
    let compact = reindex(&flat, &set.user_labels, &set.item_labels, set.bounds);
    let mut ds = RatingsDataset {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
        n_users: compact.n_users(),
        n_items: compact.n_items(),
        bounds: set.bounds,
        user_labels: compact.user_labels,
        item_labels: compact.item_labels,
        seed,
        proportions,
    };
    for (x, (_, part)) in compact.interactions.into_iter().zip(&assigned) {
        match part {
            0 => ds.train.push(x),
            1 => ds.validation.push(x),
            _ => ds.test.push(x),
        }
    }
    Ok(ds)
}
