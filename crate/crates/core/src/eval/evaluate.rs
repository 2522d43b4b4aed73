use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::{ndcg_with_ideal, reciprocal_rank_of};
use crate::bitcode::kernels::{hamming_words, phd_fast_words};
use crate::bitcode::{counting_rank, CodeTable, NegatedItemStore};
use crate::data::{RatingsDataset, UserItems};
use crate::embedding::{dot, Embedding};
use crate::error::{Error, Result};

/// How a user-item pair is scored for ranking.
#[derive(Clone, Copy, Debug)]
pub enum Scorer<'a> {
    /// Ascending projected Hamming dissimilarity.
    Phd {
        users: &'a CodeTable,
        items: &'a NegatedItemStore,
    },
    /// Ascending Hamming distance over original item codes.
    Hamming {
        users: &'a CodeTable,
        items: &'a CodeTable,
    },
    /// Descending inner product (plus item bias, if any).
    InnerProduct {
        users: &'a Embedding,
        items: &'a Embedding,
        item_bias: Option<&'a [f32]>,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateSet {
    /// Rank only the user's own held-out items.
    #[default]
    HeldOut,
    /// Rank every item the user has not rated in train or validation;
    /// unrated items have relevance 0.
    FullCatalog,
}

impl Scorer<'_> {
    fn sizes(&self) -> (usize, usize) {
        match self {
            Scorer::Phd { users, items } => (users.len(), items.len()),
            Scorer::Hamming { users, items } => (users.len(), items.len()),
            Scorer::InnerProduct { users, items, .. } => (users.rows(), items.rows()),
        }
    }

    fn check(&self, n_users: usize, n_items: usize) -> Result<()> {
        let (u, i) = self.sizes();
        if u < n_users {
            return Err(Error::Evaluation(format!("no representation for user {u} ({n_users} users)")));
        }
        if i < n_items {
            return Err(Error::Evaluation(format!("no representation for item {i} ({n_items} items)")));
        }
        if let Scorer::Phd { users, items } = self {
            if users.bits() != items.bits() {
                return Err(Error::DimensionMismatch { left: users.bits(), right: items.bits() });
            }
        }
        if let Scorer::Hamming { users, items } = self {
            if users.bits() != items.bits() {
                return Err(Error::DimensionMismatch { left: users.bits(), right: items.bits() });
            }
        }
        Ok(())
    }

    /// Orders `candidates` (item ids) best first; ties by ascending item id.
    pub fn rank(&self, user: usize, candidates: &[u32]) -> Vec<u32> {
        let mut cands = candidates.to_vec();
        cands.sort_unstable();
        match self {
            Scorer::Phd { users, items } => {
                let u = users.row(user);
                let d: Vec<u32> = cands.iter().map(|&i| phd_fast_words(u, items.negated_codes().row(i as usize))).collect();
                counting_rank(&d, users.bits() as u32, d.len())
                    .into_iter()
                    .map(|(pos, _)| cands[pos])
                    .collect()
            }
            Scorer::Hamming { users, items } => {
                let u = users.row(user);
                let d: Vec<u32> = cands.iter().map(|&i| hamming_words(u, items.row(i as usize))).collect();
                counting_rank(&d, users.bits() as u32, d.len())
                    .into_iter()
                    .map(|(pos, _)| cands[pos])
                    .collect()
            }
            Scorer::InnerProduct { users, items, item_bias } => {
                let u = users.row(user);
                let mut scored: Vec<(f64, u32)> = cands
                    .iter()
                    .map(|&i| {
                        let b = item_bias.map_or(0.0, |b| b[i as usize] as f64);
                        (dot(u, items.row(i as usize)) + b, i)
                    })
                    .collect();
                // Stable sort keeps ascending item id among equal scores.
                scored.sort_by(|a, b| b.0.total_cmp(&a.0));
                scored.into_iter().map(|(_, i)| i).collect()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub ks: Vec<usize>,
    pub candidates: CandidateSet,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            ks: vec![5, 10],
            candidates: CandidateSet::HeldOut,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserMetrics {
    pub user: u32,
    /// NDCG at each cutoff of the owning report's `ks`.
    pub ndcg: Vec<f64>,
    pub rr: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub model: String,
    pub bits: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub meta: ReportMeta,
    pub ks: Vec<usize>,
    pub candidates: CandidateSet,
    /// Mean NDCG per cutoff, aligned with `ks`.
    pub mean_ndcg: Vec<f64>,
    pub mrr: f64,
    pub users: usize,
    /// Users whose held-out ratings were all zero (NDCG defined as 1).
    pub zero_relevance_users: usize,
    #[serde(skip)]
    pub per_user: Vec<UserMetrics>,
}

impl EvalReport {
    pub fn ndcg(&self, k: usize) -> Option<f64> {
        self.ks.iter().position(|&x| x == k).map(|p| self.mean_ndcg[p])
    }

    /// Per-user NDCG@k indexed by user id; users without held-out items are
    /// `None`.
    pub fn per_user_ndcg(&self, k: usize, n_users: usize) -> Option<Vec<Option<f64>>> {
        let p = self.ks.iter().position(|&x| x == k)?;
        let mut out = vec![None; n_users];
        for m in &self.per_user {
            out[m.user as usize] = Some(m.ndcg[p]);
        }
        Some(out)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut json = serde_json::to_vec_pretty(self)?;
        json.push(b'\n');
        fs::write(path, json)?;
        Ok(())
    }
}

/// Ranks each user's held-out items (`held_out[u]`) with `scorer` and
/// computes NDCG at every cutoff plus the reciprocal rank of the first
/// maximally rated item. Users with no held-out items are skipped.
///
/// `known` lists the items to exclude when ranking the full catalog
/// (normally the user's train and validation items); it is ignored for
/// [`CandidateSet::HeldOut`].
pub fn evaluate_split(
    scorer: &Scorer<'_>,
    held_out: &[UserItems],
    known: Option<&[UserItems]>,
    n_items: usize,
    opts: &EvalOptions,
    meta: ReportMeta,
) -> Result<EvalReport> {
    if opts.ks.is_empty() || opts.ks.contains(&0) {
        return Err(Error::Config("cutoffs must be non-empty and positive".into()));
    }
    scorer.check(held_out.len(), n_items)?;

    let mut per_user = Vec::new();
    let mut zero_relevance_users = 0;
    let mut rel_of = vec![0.0f64; n_items];
    let mut excluded = vec![false; n_items];
    for (user, items) in held_out.iter().enumerate() {
        if items.is_empty() {
            continue;
        }
        for &(i, r) in items {
            if i as usize >= n_items {
                return Err(Error::Evaluation(format!("no representation for item {i}")));
            }
            rel_of[i as usize] = r;
        }
        let candidates: Vec<u32> = match opts.candidates {
            CandidateSet::HeldOut => items.iter().map(|&(i, _)| i).collect(),
            CandidateSet::FullCatalog => {
                if let Some(known) = known {
                    for &(i, _) in &known[user] {
                        excluded[i as usize] = true;
                    }
                }
                for &(i, _) in items {
                    excluded[i as usize] = false;
                }
                (0..n_items as u32).filter(|&i| !excluded[i as usize]).collect()
            }
        };
        let ranked = scorer.rank(user, &candidates);
        let rels: Vec<f64> = ranked.iter().map(|&i| rel_of[i as usize]).collect();
        let ideal: Vec<f64> = items.iter().map(|&(_, r)| r).collect();
        let max_rel = ideal.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max_rel <= 0.0 {
            zero_relevance_users += 1;
            log::debug!("user {user}: all held-out ratings are zero");
        }
        let ndcg = opts
            .ks
            .iter()
            .map(|&k| ndcg_with_ideal(&rels, &ideal, k).expect("non-empty"))
            .collect();
        let rr = reciprocal_rank_of(&rels, max_rel).expect("max is present");
        per_user.push(UserMetrics { user: user as u32, ndcg, rr });

        for &(i, _) in items {
            rel_of[i as usize] = 0.0;
        }
        if let (CandidateSet::FullCatalog, Some(known)) = (opts.candidates, known) {
            for &(i, _) in &known[user] {
                excluded[i as usize] = false;
            }
        }
    }

    let n = per_user.len();
    if zero_relevance_users > 0 {
        log::info!("{zero_relevance_users} users with all-zero relevance scored as NDCG 1");
    }
    let mean = |f: &dyn Fn(&UserMetrics) -> f64| {
        if n == 0 {
            0.0
        } else {
            per_user.iter().map(f).sum::<f64>() / n as f64
        }
    };
    let mean_ndcg = (0..opts.ks.len()).map(|p| mean(&|m| m.ndcg[p])).collect();
    let mrr = mean(&|m| m.rr);
    Ok(EvalReport {
        meta,
        ks: opts.ks.clone(),
        candidates: opts.candidates,
        mean_ndcg,
        mrr,
        users: n,
        zero_relevance_users,
        per_user,
    })
}

/// Evaluates on the dataset's test split.
pub fn evaluate(scorer: &Scorer<'_>, ds: &RatingsDataset, opts: &EvalOptions, meta: ReportMeta) -> Result<EvalReport> {
    let test = ds.by_user(&ds.test);
    let known = match opts.candidates {
        CandidateSet::HeldOut => None,
        CandidateSet::FullCatalog => {
            let mut k = ds.by_user(&ds.train);
            for (u, extra) in ds.by_user(&ds.validation).into_iter().enumerate() {
                k[u].extend(extra);
            }
            Some(k)
        }
    };
    evaluate_split(scorer, &test, known.as_deref(), ds.n_items, opts, meta)
}

/// Per-user ordering keys for the bucket analyses.
#[derive(Clone, Debug, PartialEq)]
pub struct UserKeys {
    /// NDCG@10 of a reference MF model, if one was evaluated.
    pub mf_ndcg: Option<Vec<Option<f64>>>,
    /// Number of ratings across all splits.
    pub n_rated: Vec<f64>,
    /// Mean popularity of the user's training items.
    pub avg_popularity: Vec<f64>,
}

impl UserKeys {
    pub fn from_dataset(ds: &RatingsDataset, mf_reference: Option<&EvalReport>) -> Self {
        let pop = ds.item_popularity();
        let mut sum = vec![0.0; ds.n_users];
        let mut cnt = vec![0usize; ds.n_users];
        for x in &ds.train {
            sum[x.user as usize] += pop[x.item as usize];
            cnt[x.user as usize] += 1;
        }
        Self {
            mf_ndcg: mf_reference.and_then(|r| r.per_user_ndcg(10, ds.n_users)),
            n_rated: ds.ratings_per_user().into_iter().map(|c| c as f64).collect(),
            avg_popularity: sum
                .iter()
                .zip(&cnt)
                .map(|(s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
                .collect(),
        }
    }
}

/// Writes `user,ndcg5,ndcg10,rr,key_mf,key_nrated,key_pop` (one `ndcg{k}`
/// column per cutoff). `key_mf` is empty when no reference is available.
pub fn write_per_user_csv(path: impl AsRef<Path>, report: &EvalReport, keys: &UserKeys) -> Result<()> {
    let mut out = Vec::new();
    write!(out, "user")?;
    for k in &report.ks {
        write!(out, ",ndcg{k}")?;
    }
    writeln!(out, ",rr,key_mf,key_nrated,key_pop")?;
    for m in &report.per_user {
        let u = m.user as usize;
        write!(out, "{}", m.user)?;
        for v in &m.ndcg {
            write!(out, ",{v}")?;
        }
        let mf = keys
            .mf_ndcg
            .as_ref()
            .and_then(|v| v[u])
            .map(|v| v.to_string())
            .unwrap_or_default();
        writeln!(out, ",{},{mf},{},{}", m.rr, keys.n_rated[u], keys.avg_popularity[u])?;
    }
    fs::write(path, out)?;
    Ok(())
}
