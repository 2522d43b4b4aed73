//! Synthetic ratings generated from planted hash codes, for tests and smoke
//! runs that must not depend on downloaded data.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bitcode::kernels::phd_words;
use crate::bitcode::{words_for, CodeTable};
use crate::data::{Interaction, RatingBounds, RatingSet};
use crate::error::{Error, Result};
use crate::vhmodel::AffineRatingMap;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantedConfig {
    pub users: usize,
    pub items: usize,
    pub bits: usize,
    /// Ratings per user; capped at `items`.
    pub ratings_per_user: usize,
    /// Standard deviation of the Gaussian noise added to each rating.
    pub noise_std: f64,
    pub bounds: RatingBounds,
    /// Ratings are rounded to this many decimals so that a CSV round trip
    /// is exact and readable.
    pub decimals: u32,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            users: 100,
            items: 60,
            bits: 8,
            ratings_per_user: 40,
            noise_std: 0.1,
            bounds: RatingBounds::default(),
            decimals: 3,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Planted {
    pub users: CodeTable,
    pub items: CodeTable,
    pub ratings: RatingSet,
}

fn random_codes(rng: &mut ChaCha8Rng, n: usize, bits: usize) -> Result<CodeTable> {
    let mut words = Vec::with_capacity(n * words_for(bits));
    for _ in 0..n {
        for w in 0..words_for(bits) {
            let rem = bits - 64 * w;
            let mask = if rem >= 64 { u64::MAX } else { (1u64 << rem) - 1 };
            words.push(rng.random::<u64>() & mask);
        }
    }
    CodeTable::from_words(words, bits)
}

/// Rating of (u, i) = clip(g(phd(z_u, z_i)) + noise), where g is the
/// decreasing affine map from `[0, bits]` onto the rating bounds.
pub fn planted(cfg: &PlantedConfig) -> Result<Planted> {
    if cfg.users == 0 || cfg.items == 0 || cfg.ratings_per_user == 0 {
        return Err(Error::Config("planted dataset needs users, items and ratings per user".into()));
    }
    let noise = Normal::new(0.0, cfg.noise_std)
        .map_err(|e| Error::Config(format!("noise std {}: {e}", cfg.noise_std)))?;
    let map = AffineRatingMap::new(cfg.bounds, cfg.bits)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let users = random_codes(&mut rng, cfg.users, cfg.bits)?;
    let items = random_codes(&mut rng, cfg.items, cfg.bits)?;
    let per_user = cfg.ratings_per_user.min(cfg.items);
    let scale = 10f64.powi(cfg.decimals as i32);
    let mut interactions = Vec::with_capacity(cfg.users * per_user);
    for u in 0..cfg.users {
        let mut chosen = sample(&mut rng, cfg.items, per_user).into_vec();
        chosen.sort_unstable();
        for i in chosen {
            let d = phd_words(users.row(u), items.row(i));
            let r = (map.apply(d as f64) + noise.sample(&mut rng)).clamp(cfg.bounds.min, cfg.bounds.max);
            interactions.push(Interaction {
                user: u as u32,
                item: i as u32,
                rating: (r * scale).round() / scale,
                timestamp: None,
            });
        }
    }
    Ok(Planted {
        users,
        items,
        ratings: RatingSet {
            interactions,
            user_labels: (0..cfg.users).map(|u| u.to_string()).collect(),
            item_labels: (0..cfg.items).map(|i| i.to_string()).collect(),
            bounds: cfg.bounds,
        },
    })
}

/// Writes `user,item,rating` rows using the set's labels.
pub fn write_ratings_csv(path: impl AsRef<Path>, set: &RatingSet) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "user,item,rating")?;
    for x in &set.interactions {
        writeln!(
            out,
            "{},{},{}",
            set.user_labels[x.user as usize], set.item_labels[x.item as usize], x.rating
        )?;
    }
    fs::write(path, out)?;
    Ok(())
}
