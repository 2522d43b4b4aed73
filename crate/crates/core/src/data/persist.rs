use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Interaction, RatingBounds, RatingsDataset, SplitProportions};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitFile {
    pub file: String,
    pub ratings: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub users: usize,
    pub items: usize,
    pub ratings: usize,
    pub bounds: RatingBounds,
    pub seed: u64,
    pub proportions: SplitProportions,
    pub train: SplitFile,
    pub validation: SplitFile,
    pub test: SplitFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub user_labels: Vec<String>,
    pub item_labels: Vec<String>,
}

fn split_csv(split: &[Interaction]) -> Vec<u8> {
    let mut out = Vec::with_capacity(split.len() * 16);
    out.extend_from_slice(b"user,item,rating\n");
    for x in split {
        writeln!(out, "{},{},{}", x.user, x.item, x.rating).expect("write to vec");
    }
    out
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `train.csv`, `validation.csv`, `test.csv` and `manifest.json`
/// into `dir`. Output bytes depend only on the dataset contents.
pub fn save_dataset(dir: impl AsRef<Path>, ds: &RatingsDataset, config_hash: Option<&str>) -> Result<DatasetManifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let write_split = |name: &str, split: &[Interaction]| -> Result<SplitFile> {
        let bytes = split_csv(split);
        let file = format!("{name}.csv");
        fs::write(dir.join(&file), &bytes)?;
        Ok(SplitFile {
            file,
            ratings: split.len(),
            sha256: sha256_hex(&bytes),
        })
    };
    let manifest = DatasetManifest {
        users: ds.n_users,
        items: ds.n_items,
        ratings: ds.train.len() + ds.validation.len() + ds.test.len(),
        bounds: ds.bounds,
        seed: ds.seed,
        proportions: ds.proportions,
        train: write_split("train", &ds.train)?,
        validation: write_split("validation", &ds.validation)?,
        test: write_split("test", &ds.test)?,
        config_hash: config_hash.map(str::to_owned),
        user_labels: ds.user_labels.clone(),
        item_labels: ds.item_labels.clone(),
    };
    let mut json = serde_json::to_vec_pretty(&manifest)?;
    json.push(b'\n');
    fs::write(dir.join(MANIFEST_FILE), json)?;
    Ok(manifest)
}

fn read_split(dir: &Path, meta: &SplitFile, ds_users: usize, ds_items: usize) -> Result<Vec<Interaction>> {
    let path = dir.join(&meta.file);
    let bytes = fs::read(&path)?;
    if sha256_hex(&bytes) != meta.sha256 {
        return Err(Error::Config(format!("{} does not match its manifest hash", path.display())));
    }
    let mut rdr = csv::Reader::from_reader(bytes.as_slice());
    let mut out = Vec::with_capacity(meta.ratings);
    for record in rdr.deserialize::<(u32, u32, f64)>() {
        let (user, item, rating) = record?;
        if user as usize >= ds_users || item as usize >= ds_items {
            return Err(Error::Config(format!("{}: id out of range", path.display())));
        }
        out.push(Interaction {
            user,
            item,
            rating,
            timestamp: None,
        });
    }
    if out.len() != meta.ratings {
        return Err(Error::Config(format!("{}: rating count mismatch", path.display())));
    }
    Ok(out)
}

pub fn load_dataset(dir: impl AsRef<Path>) -> Result<(RatingsDataset, DatasetManifest)> {
    let dir = dir.as_ref();
    let manifest: DatasetManifest = serde_json::from_slice(&fs::read(dir.join(MANIFEST_FILE))?)?;
    let (u, i) = (manifest.users, manifest.items);
    let ds = RatingsDataset {
        train: read_split(dir, &manifest.train, u, i)?,
        validation: read_split(dir, &manifest.validation, u, i)?,
        test: read_split(dir, &manifest.test, u, i)?,
        n_users: u,
        n_items: i,
        bounds: manifest.bounds,
        user_labels: manifest.user_labels.clone(),
        item_labels: manifest.item_labels.clone(),
        seed: manifest.seed,
        proportions: manifest.proportions,
    };
    Ok((ds, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{split, RatingSet};

    #[test]
    fn save_load_round_trip() {
        let mut interactions = Vec::new();
        for u in 0..4u32 {
            for i in 0..12u32 {
                interactions.push(Interaction {
                    user: u,
                    item: i,
                    rating: 1.0 + ((u + i) % 9) as f64 * 0.5,
                    timestamp: Some(i as i64),
                });
            }
        }
        let set = RatingSet {
            interactions,
            user_labels: (0..4).map(|u| format!("user{u}")).collect(),
            item_labels: (0..12).map(|i| format!("item{i}")).collect(),
            bounds: RatingBounds::default(),
        };
        let ds = split(&set, SplitProportions::default(), 42).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let m1 = save_dataset(dir.path(), &ds, Some("abc")).unwrap();
        let (back, m2) = load_dataset(dir.path()).unwrap();
        assert_eq!(m1, m2);
        let strip = |xs: &[Interaction]| xs.iter().map(|x| (x.user, x.item, x.rating)).collect::<Vec<_>>();
        assert_eq!(strip(&back.train), strip(&ds.train));
        assert_eq!(strip(&back.test), strip(&ds.test));
        assert_eq!(back.user_labels, ds.user_labels);

        fs::write(dir.path().join("test.csv"), "user,item,rating\n0,0,1\n").unwrap();
        assert!(load_dataset(dir.path()).is_err());
    }
}
