//! Rating ingestion: parsing, deduplication, filtering, per-user splitting
//! and persistence of the splits.

mod parse;
mod persist;
mod split;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

pub use parse::{parse_ratings, parse_ratings_from, RatingFormat};
pub use persist::{load_dataset, save_dataset, DatasetManifest, SplitFile};
pub use split::{split, SplitProportions};

use crate::error::{Error, Result};

/// A single observed rating. Ids index into the owning [`RatingSet`]'s label
/// tables.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub user: u32,
    pub item: u32,
    pub rating: f64,
    pub timestamp: Option<i64>,
}

/// Inclusive rating scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatingBounds {
    pub min: f64,
    pub max: f64,
}

impl RatingBounds {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::Config(format!("invalid rating bounds [{min}, {max}]")));
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, r: f64) -> bool {
        r >= self.min && r <= self.max
    }
}

impl Default for RatingBounds {
    fn default() -> Self {
        Self { min: 1.0, max: 5.0 }
    }
}

/// Interactions plus the original id of every dense user and item index.
#[derive(Clone, Debug, PartialEq)]
pub struct RatingSet {
    pub interactions: Vec<Interaction>,
    pub user_labels: Vec<String>,
    pub item_labels: Vec<String>,
    pub bounds: RatingBounds,
}

impl RatingSet {
    pub fn n_users(&self) -> usize {
        self.user_labels.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_labels.len()
    }
}

/// Keeps the first rating of every (user, item) pair: earliest timestamp
/// when both carry one, otherwise first in file order. Output keeps file
/// order.
pub fn dedup_first(set: &RatingSet) -> RatingSet {
    let mut kept: HashMap<(u32, u32), usize> = HashMap::with_capacity(set.interactions.len());
    for (idx, x) in set.interactions.iter().enumerate() {
        kept.entry((x.user, x.item))
            .and_modify(|k| {
                if let (Some(t_new), Some(t_old)) = (x.timestamp, set.interactions[*k].timestamp) {
                    if t_new < t_old {
                        *k = idx;
                    }
                }
            })
            .or_insert(idx);
    }
    let keep: HashSet<usize> = kept.into_values().collect();
    RatingSet {
        interactions: set
            .interactions
            .iter()
            .enumerate()
            .filter(|(idx, _)| keep.contains(idx))
            .map(|(_, x)| *x)
            .collect(),
        user_labels: set.user_labels.clone(),
        item_labels: set.item_labels.clone(),
        bounds: set.bounds,
    }
}

/// Single pass: drop items with fewer than `min_count` ratings, then users
/// with fewer than `min_count` remaining ratings. Surviving ids are
/// re-indexed densely, preserving relative order.
pub fn filter_min_ratings(set: &RatingSet, min_count: usize) -> Result<RatingSet> {
    if min_count == 0 {
        return Err(Error::Config("min_count must be at least 1".into()));
    }
    let mut item_counts = vec![0usize; set.n_items()];
    for x in &set.interactions {
        item_counts[x.item as usize] += 1;
    }
    let after_items: Vec<Interaction> = set
        .interactions
        .iter()
        .filter(|x| item_counts[x.item as usize] >= min_count)
        .copied()
        .collect();

    let mut user_counts = vec![0usize; set.n_users()];
    for x in &after_items {
        user_counts[x.user as usize] += 1;
    }
    let survivors: Vec<Interaction> = after_items
        .into_iter()
        .filter(|x| user_counts[x.user as usize] >= min_count)
        .collect();

    log::info!(
        "filter(min={min_count}): {} -> {} ratings",
        set.interactions.len(),
        survivors.len()
    );
    Ok(reindex(&survivors, &set.user_labels, &set.item_labels, set.bounds))
}

/// Compacts user and item ids to `0..n`, keeping the relative order of the
/// old ids.
pub(crate) fn reindex(
    interactions: &[Interaction],
    user_labels: &[String],
    item_labels: &[String],
    bounds: RatingBounds,
) -> RatingSet {
    fn remap(used: impl Iterator<Item = u32>, labels: &[String]) -> (Vec<Option<u32>>, Vec<String>) {
        let mut present = vec![false; labels.len()];
        for id in used {
            present[id as usize] = true;
        }
        let mut map = vec![None; labels.len()];
        let mut new_labels = Vec::new();
        for (old, _) in present.iter().enumerate().filter(|(_, p)| **p) {
            map[old] = Some(new_labels.len() as u32);
            new_labels.push(labels[old].clone());
        }
        (map, new_labels)
    }
    let (umap, user_labels) = remap(interactions.iter().map(|x| x.user), user_labels);
    let (imap, item_labels) = remap(interactions.iter().map(|x| x.item), item_labels);
    let interactions = interactions
        .iter()
        .map(|x| Interaction {
            user: umap[x.user as usize].expect("present"),
            item: imap[x.item as usize].expect("present"),
            ..*x
        })
        .collect();
    RatingSet {
        interactions,
        user_labels,
        item_labels,
        bounds,
    }
}

/// Train/validation/test partition of a filtered rating set.
#[derive(Clone, Debug, PartialEq)]
pub struct RatingsDataset {
    pub train: Vec<Interaction>,
    pub validation: Vec<Interaction>,
    pub test: Vec<Interaction>,
    pub n_users: usize,
    pub n_items: usize,
    pub bounds: RatingBounds,
    pub user_labels: Vec<String>,
    pub item_labels: Vec<String>,
    pub seed: u64,
    pub proportions: SplitProportions,
}

/// One user's (item, rating) pairs from one split.
pub type UserItems = Vec<(u32, f64)>;

impl RatingsDataset {
    /// Builds a dataset from explicit splits, with labels equal to the dense
    /// ids. Ids must be within `n_users` / `n_items`.
    pub fn from_splits(
        train: Vec<Interaction>,
        validation: Vec<Interaction>,
        test: Vec<Interaction>,
        n_users: usize,
        n_items: usize,
        bounds: RatingBounds,
    ) -> Result<Self> {
        for x in train.iter().chain(&validation).chain(&test) {
            if x.user as usize >= n_users {
                return Err(Error::Lookup { kind: "user", id: x.user as usize, len: n_users });
            }
            if x.item as usize >= n_items {
                return Err(Error::Lookup { kind: "item", id: x.item as usize, len: n_items });
            }
        }
        Ok(Self {
            train,
            validation,
            test,
            n_users,
            n_items,
            bounds,
            user_labels: (0..n_users).map(|u| u.to_string()).collect(),
            item_labels: (0..n_items).map(|i| i.to_string()).collect(),
            seed: 0,
            proportions: SplitProportions::default(),
        })
    }

    /// Groups a split by user; the result has one entry per user, items in
    /// split order.
    pub fn by_user(&self, split: &[Interaction]) -> Vec<UserItems> {
        let mut out = vec![Vec::new(); self.n_users];
        for x in split {
            out[x.user as usize].push((x.item, x.rating));
        }
        out
    }

    /// Number of ratings each user has across all splits.
    pub fn ratings_per_user(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_users];
        for x in self.all() {
            counts[x.user as usize] += 1;
        }
        counts
    }

    /// Fraction of users who rated each item, over all splits.
    pub fn item_popularity(&self) -> Vec<f64> {
        let mut counts = vec![0usize; self.n_items];
        for x in self.all() {
            counts[x.item as usize] += 1;
        }
        counts
            .into_iter()
            .map(|c| c as f64 / self.n_users.max(1) as f64)
            .collect()
    }

    pub fn all(&self) -> impl Iterator<Item = &Interaction> {
        self.train.iter().chain(&self.validation).chain(&self.test)
    }
}
