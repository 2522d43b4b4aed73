//! Model checkpoints: `<stem>.json` metadata plus `<stem>.bin`, the named
//! tables concatenated as little-endian `f32` in the order listed in the
//! metadata.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::embedding::Embedding;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    /// `vh` or `mf`.
    pub kind: String,
    /// Code length / latent dimension.
    pub bits: usize,
    pub epoch: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub config: serde_json::Value,
    pub metrics: BTreeMap<String, f64>,
    pub tables: Vec<TableEntry>,
}

fn paths(dir: &Path, stem: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{stem}.json")), dir.join(format!("{stem}.bin")))
}

/// Writes the checkpoint; `meta.tables` is filled from `tables`.
pub fn save_checkpoint(dir: impl AsRef<Path>, stem: &str, mut meta: CheckpointMeta, tables: &[(&str, &Embedding)]) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let (json_path, bin_path) = paths(dir, stem);
    meta.tables = tables
        .iter()
        .map(|(name, t)| TableEntry {
            name: (*name).to_owned(),
            rows: t.rows(),
            cols: t.cols(),
        })
        .collect();
    let mut bin = Vec::with_capacity(tables.iter().map(|(_, t)| t.as_slice().len() * 4).sum());
    for (_, t) in tables {
        for v in t.as_slice() {
            bin.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut json = serde_json::to_vec_pretty(&meta)?;
    json.push(b'\n');
    fs::write(json_path, json)?;
    fs::write(bin_path, bin)?;
    Ok(())
}

pub fn checkpoint_exists(dir: impl AsRef<Path>, stem: &str) -> bool {
    let (j, b) = paths(dir.as_ref(), stem);
    j.is_file() && b.is_file()
}

pub fn load_checkpoint(dir: impl AsRef<Path>, stem: &str) -> Result<(CheckpointMeta, BTreeMap<String, Embedding>)> {
    let (json_path, bin_path) = paths(dir.as_ref(), stem);
    if !json_path.is_file() {
        return Err(Error::Config(format!("checkpoint not found: {}", json_path.display())));
    }
    let meta: CheckpointMeta = serde_json::from_slice(&fs::read(&json_path)?)?;
    let bin = fs::read(&bin_path)?;
    let expected: usize = meta.tables.iter().map(|t| t.rows * t.cols * 4).sum();
    if bin.len() != expected {
        return Err(Error::Format(format!(
            "{}: {} bytes, metadata describes {expected}",
            bin_path.display(),
            bin.len()
        )));
    }
    let mut tables = BTreeMap::new();
    let mut offset = 0;
    for entry in &meta.tables {
        let n = entry.rows * entry.cols;
        let data = bin[offset..offset + 4 * n]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        offset += 4 * n;
        tables.insert(entry.name.clone(), Embedding::from_vec(entry.rows, entry.cols, data)?);
    }
    Ok((meta, tables))
}

pub fn take_table(tables: &mut BTreeMap<String, Embedding>, name: &str) -> Result<Embedding> {
    tables
        .remove(name)
        .ok_or_else(|| Error::Format(format!("checkpoint has no table {name:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let a = Embedding::from_vec(2, 3, vec![0.5, -1.25, 3.0, 1e-7, -0.0, 7.5]).unwrap();
        let b = Embedding::from_vec(1, 3, vec![1.0, 2.0, 3.0]).unwrap();
        let meta = CheckpointMeta {
            kind: "vh".into(),
            bits: 3,
            epoch: 4,
            seed: 9,
            config_hash: None,
            config: serde_json::json!({"lr": 0.001}),
            metrics: BTreeMap::from([("val_ndcg10".to_owned(), 0.5)]),
            tables: vec![],
        };
        save_checkpoint(dir.path(), "model", meta, &[("users", &a), ("items", &b)]).unwrap();
        let (meta, mut tables) = load_checkpoint(dir.path(), "model").unwrap();
        assert_eq!(meta.tables.len(), 2);
        assert_eq!(take_table(&mut tables, "users").unwrap(), a);
        assert_eq!(take_table(&mut tables, "items").unwrap(), b);
        assert!(take_table(&mut tables, "users").is_err());
        assert!(load_checkpoint(dir.path(), "missing").is_err());
    }
}
