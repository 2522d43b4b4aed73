//! Run configuration: a JSON file whose fields the command-line flags
//! override.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use hashcf_bench::Kernel;
use hashcf_core::baselines::MfConfig;
use hashcf_core::data::{RatingBounds, RatingFormat, SplitProportions};
use hashcf_core::eval::{CandidateSet, DEFAULT_WINDOW};
use hashcf_core::synth::PlantedConfig;
use hashcf_core::vhmodel::{Dissimilarity, TrainConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    VhPhd,
    VhHamming,
    Mf,
    MfMean,
    MfMedian,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::VhPhd => "vh-phd",
            ModelKind::VhHamming => "vh-hamming",
            ModelKind::Mf => "mf",
            ModelKind::MfMean => "mf-mean",
            ModelKind::MfMedian => "mf-median",
        }
    }

    pub fn is_vh(self) -> bool {
        matches!(self, ModelKind::VhPhd | ModelKind::VhHamming)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MfSection {
    pub learning_rate: f64,
    pub l2: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub patience: Option<usize>,
    pub init_std: f64,
    pub biases: bool,
    /// Pick the L2 weight from the validation grid instead of `l2`.
    pub tune: bool,
    /// Quantization thresholds from users and items pooled together.
    pub pooled_thresholds: bool,
}

impl Default for MfSection {
    fn default() -> Self {
        let d = MfConfig::default();
        Self {
            learning_rate: d.learning_rate,
            l2: d.l2,
            batch_size: d.batch_size,
            epochs: d.epochs,
            patience: d.patience,
            init_std: d.init_std,
            biases: d.biases,
            tune: true,
            pooled_thresholds: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub ks: Vec<usize>,
    pub candidates: CandidateSet,
    /// Users per moving-average window in the bucket curves.
    pub bucket_window: usize,
    /// Run directory of an MF model whose per-user NDCG@10 orders users in
    /// the `mf-ndcg` curve; defaults to `<out>/mf` when that exists.
    pub mf_reference: Option<PathBuf>,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            ks: vec![5, 10],
            candidates: CandidateSet::HeldOut,
            bucket_window: DEFAULT_WINDOW,
            mf_reference: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub n: usize,
    pub reps: usize,
    pub kernels: Vec<Kernel>,
    /// Seeds for the convergence comparison; empty means three seeds
    /// starting at `seed`.
    pub convergence_seeds: Vec<u64>,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            n: 10_000_000,
            reps: 100,
            kernels: Kernel::ALL.to_vec(),
            convergence_seeds: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Raw ratings file read by `prepare`.
    pub dataset: Option<PathBuf>,
    pub format: RatingFormat,
    pub bounds: RatingBounds,
    /// Items, then users, with fewer ratings are removed (one pass); 0 keeps
    /// everything.
    pub min_ratings: usize,
    pub split: SplitProportions,
    pub seed: u64,
    /// Code length, and MF latent dimension.
    pub bits: usize,
    pub model: ModelKind,
    /// VH trainer settings; `bits`, `seed` and the dissimilarity come from
    /// the top level and the model kind.
    pub train: TrainConfig,
    pub mf: MfSection,
    pub eval: EvalSection,
    pub bench: BenchSection,
    pub synth: PlantedConfig,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            format: RatingFormat::Csv,
            bounds: RatingBounds::default(),
            min_ratings: 10,
            split: SplitProportions::default(),
            seed: 0,
            bits: 32,
            model: ModelKind::VhPhd,
            train: TrainConfig::default(),
            mf: MfSection::default(),
            eval: EvalSection::default(),
            bench: BenchSection::default(),
            synth: PlantedConfig::default(),
            out: PathBuf::from("runs"),
        }
    }
}

/// Flag values; `None` leaves the config value alone.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub bits: Option<usize>,
    pub model: Option<ModelKind>,
    pub out: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub format: Option<RatingFormat>,
    pub ks: Option<Vec<usize>>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, o: Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
            }
            None => RunConfig::default(),
        };
        if let Some(v) = o.seed {
            cfg.seed = v;
        }
        if let Some(v) = o.bits {
            cfg.bits = v;
        }
        if let Some(v) = o.model {
            cfg.model = v;
        }
        if let Some(v) = o.out {
            cfg.out = v;
        }
        if let Some(v) = o.dataset {
            cfg.dataset = Some(v);
        }
        if let Some(v) = o.format {
            cfg.format = v;
        }
        if let Some(v) = o.ks {
            cfg.eval.ks = v;
        }
        cfg.normalize();
        Ok(cfg)
    }

    /// Copies the top-level settings into the sections that use them, so
    /// the hashed config has a single value for each.
    fn normalize(&mut self) {
        self.train.bits = self.bits;
        self.train.seed = self.seed;
        self.train.kind = match self.model {
            ModelKind::VhHamming => Dissimilarity::Hamming,
            _ => Dissimilarity::Phd,
        };
        self.synth.seed = self.seed;
    }

    pub fn mf_config(&self) -> MfConfig {
        let m = &self.mf;
        MfConfig {
            dim: self.bits,
            learning_rate: m.learning_rate,
            l2: m.l2,
            batch_size: m.batch_size,
            epochs: m.epochs,
            patience: m.patience,
            init_std: m.init_std,
            biases: m.biases,
            seed: self.seed,
        }
    }

    pub fn data_dir(&self) -> PathBuf {
        self.out.join("data")
    }

    pub fn model_dir(&self) -> PathBuf {
        self.out.join(self.model.name())
    }

    /// SHA-256 over the effective config with the output directory removed
    /// and the dataset path replaced by the file's own digest, so identical
    /// experiments hash identically wherever they run.
    pub fn hash(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        let obj = v.as_object_mut().expect("config serializes to an object");
        obj.remove("out");
        if let Some(p) = &self.dataset {
            let digest = match fs::read(p) {
                Ok(bytes) => hex::encode(Sha256::digest(bytes)),
                Err(_) => String::from("missing"),
            };
            obj.insert("dataset".into(), serde_json::Value::String(digest));
        }
        // serde_json maps are sorted, so this serialization is canonical.
        Ok(hex::encode(Sha256::digest(serde_json::to_vec(&v)?)))
    }

    pub fn require_dataset(&self) -> Result<&Path> {
        match &self.dataset {
            Some(p) if p.is_file() => Ok(p),
            Some(p) => bail!("dataset not found: {}", p.display()),
            None => bail!("no dataset given (--dataset or \"dataset\" in the config)"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"seed": 4, "bits": 64, "model": "mf", "eval": {"ks": [3]}}"#).unwrap();
        let cfg = RunConfig::load(Some(&path), Overrides::default()).unwrap();
        assert_eq!((cfg.seed, cfg.bits, cfg.model, cfg.eval.ks.clone()), (4, 64, ModelKind::Mf, vec![3]));
        assert_eq!(cfg.mf_config().dim, 64);
        let cfg = RunConfig::load(
            Some(&path),
            Overrides {
                seed: Some(9),
                model: Some(ModelKind::VhHamming),
                ks: Some(vec![5, 10]),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!((cfg.seed, cfg.bits, cfg.model), (9, 64, ModelKind::VhHamming));
        assert_eq!(cfg.train.kind, Dissimilarity::Hamming);
        assert_eq!(cfg.train.seed, 9);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"bitz": 4}"#).unwrap();
        assert!(RunConfig::load(Some(&path), Overrides::default()).is_err());
    }

    #[test]
    fn hash_ignores_output_location() {
        let a = RunConfig::default();
        let b = RunConfig { out: "elsewhere".into(), ..RunConfig::default() };
        let c = RunConfig { seed: 1, ..RunConfig::default() };
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        assert_ne!(a.hash().unwrap(), c.hash().unwrap());
        assert_eq!(a.hash().unwrap().len(), 64);
    }
}
