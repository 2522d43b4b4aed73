//! Trained-model artifacts in a run directory: `model.json` + `model.bin`
//! checkpoint, and `users.bhc` / `items.bhc` code files for hashing models.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use hashcf_core::baselines::{MfBiases, MfParams};
use hashcf_core::bitcode::file::{load_codes, save_codes};
use hashcf_core::checkpoint::{load_checkpoint, save_checkpoint, take_table, CheckpointMeta};
use hashcf_core::eval::Scorer;
use hashcf_core::vhmodel::{export_codes, EncoderParams};
use hashcf_core::{CodeTable, Embedding, NegatedItemStore};

use crate::config::ModelKind;

pub const STEM: &str = "model";
pub const USER_CODES: &str = "users.bhc";
pub const ITEM_CODES: &str = "items.bhc";

pub fn save_vh(dir: &Path, meta: CheckpointMeta, params: &EncoderParams) -> Result<()> {
    save_checkpoint(dir, STEM, meta, &[("users", &params.users), ("items", &params.items)])?;
    let codes = export_codes(params)?;
    save_codes(dir.join(USER_CODES), &codes.users, false)?;
    save_codes(dir.join(ITEM_CODES), &codes.items, false)?;
    Ok(())
}

pub fn save_mf(dir: &Path, meta: CheckpointMeta, params: &MfParams) -> Result<()> {
    let mut tables: Vec<(&str, Embedding)> = Vec::new();
    if let Some(b) = &params.biases {
        tables.push(("user_bias", Embedding::from_vec(b.users.len(), 1, b.users.clone())?));
        tables.push(("item_bias", Embedding::from_vec(b.items.len(), 1, b.items.clone())?));
        tables.push(("global_bias", Embedding::from_vec(1, 1, vec![b.global])?));
    }
    let mut refs: Vec<(&str, &Embedding)> = vec![("users", &params.users), ("items", &params.items)];
    refs.extend(tables.iter().map(|(n, t)| (*n, t)));
    save_checkpoint(dir, STEM, meta, &refs)?;
    Ok(())
}

pub fn save_quantized(dir: &Path, users: &CodeTable, items: &CodeTable) -> Result<()> {
    save_codes(dir.join(USER_CODES), users, false)?;
    save_codes(dir.join(ITEM_CODES), items, false)?;
    Ok(())
}

pub enum Model {
    Vh {
        users: CodeTable,
        items: CodeTable,
        negated: NegatedItemStore,
        hamming: bool,
    },
    Mf(MfParams),
    Quantized {
        users: CodeTable,
        items: CodeTable,
    },
}

impl Model {
    pub fn scorer(&self) -> Scorer<'_> {
        match self {
            Model::Vh { users, negated, hamming: false, .. } => Scorer::Phd { users, items: negated },
            Model::Vh { users, items, hamming: true, .. } => Scorer::Hamming { users, items },
            Model::Mf(p) => p.scorer(),
            Model::Quantized { users, items } => Scorer::Hamming { users, items },
        }
    }
}

fn load_mf_params(tables: &mut BTreeMap<String, Embedding>) -> Result<MfParams> {
    let mut params = MfParams::new(take_table(tables, "users")?, take_table(tables, "items")?)?;
    if tables.contains_key("user_bias") {
        params.biases = Some(MfBiases {
            users: take_table(tables, "user_bias")?.as_slice().to_vec(),
            items: take_table(tables, "item_bias")?.as_slice().to_vec(),
            global: take_table(tables, "global_bias")?.as_slice()[0],
        });
    }
    Ok(params)
}

/// Loads the model of `kind` trained into `dir`.
pub fn load_model(dir: &Path, kind: ModelKind) -> Result<(CheckpointMeta, Model)> {
    let (meta, mut tables) = load_checkpoint(dir, STEM)?;
    let expected = if kind.is_vh() { "vh" } else { "mf" };
    if meta.kind != expected {
        bail!("{}: checkpoint kind {:?}, expected {expected:?}", dir.display(), meta.kind);
    }
    let model = match kind {
        ModelKind::VhPhd | ModelKind::VhHamming => {
            let params = EncoderParams::new(take_table(&mut tables, "users")?, take_table(&mut tables, "items")?)?;
            let codes = export_codes(&params)?;
            Model::Vh {
                users: codes.users,
                items: codes.items,
                negated: codes.items_negated,
                hamming: kind == ModelKind::VhHamming,
            }
        }
        ModelKind::Mf => Model::Mf(load_mf_params(&mut tables)?),
        ModelKind::MfMean | ModelKind::MfMedian => {
            let (users, items) = load_code_pair(dir)?;
            Model::Quantized { users, items }
        }
    };
    Ok((meta, model))
}

pub fn load_code_pair(dir: &Path) -> Result<(CodeTable, CodeTable)> {
    let read = |name: &str| -> Result<CodeTable> {
        let path = dir.join(name);
        let (codes, negated) = load_codes(&path).with_context(|| format!("reading {}", path.display()))?;
        Ok(if negated { NegatedItemStore::from_negated(codes).original_codes() } else { codes })
    };
    Ok((read(USER_CODES)?, read(ITEM_CODES)?))
}
