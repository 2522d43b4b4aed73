use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hashcf_bench::{bench_convergence, bench_distance, DistanceConfig};
use hashcf_core::baselines::{mf_train, mf_tune, quantize, Statistic, LAMBDA_GRID};
use hashcf_core::bitcode::file::save_codes;
use hashcf_core::bitcode::{rank_items, rank_items_hamming};
use hashcf_core::checkpoint::{checkpoint_exists, CheckpointMeta};
use hashcf_core::data::{dedup_first, filter_min_ratings, load_dataset, parse_ratings, save_dataset, split};
use hashcf_core::eval::{
    bucket_curve, evaluate, write_curve_csv, write_per_user_csv, EvalOptions, EvalReport, ReportMeta, UserKeys,
};
use hashcf_core::synth::{planted, write_ratings_csv};
use hashcf_core::vhmodel::{train, write_log_csv};
use hashcf_core::{dot, RatingsDataset};
use serde::Serialize;

use crate::config::{ModelKind, RunConfig};
use crate::models::{self, load_code_pair, load_model, Model};

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut json = serde_json::to_vec_pretty(value)?;
    json.push(b'\n');
    fs::write(path, json).with_context(|| format!("writing {}", path.display()))
}

fn load_prepared(cfg: &RunConfig) -> Result<RatingsDataset> {
    let dir = cfg.data_dir();
    let (ds, _) = load_dataset(&dir)
        .with_context(|| format!("loading prepared splits from {} (run `prepare` first)", dir.display()))?;
    Ok(ds)
}

pub fn prepare(cfg: &RunConfig, hash: &str) -> Result<()> {
    let path = cfg.require_dataset()?;
    let raw = parse_ratings(path, cfg.format, cfg.bounds)?;
    let n_raw = raw.interactions.len();
    let mut set = dedup_first(&raw);
    if cfg.min_ratings > 0 {
        set = filter_min_ratings(&set, cfg.min_ratings)?;
    }
    let ds = split(&set, cfg.split, cfg.seed)?;
    let dir = cfg.data_dir();
    let manifest = save_dataset(&dir, &ds, Some(hash))?;
    println!(
        "prepared {} ratings ({} read): {} users, {} items; train {} / validation {} / test {} -> {}",
        manifest.ratings,
        n_raw,
        manifest.users,
        manifest.items,
        manifest.train.ratings,
        manifest.validation.ratings,
        manifest.test.ratings,
        dir.display()
    );
    Ok(())
}

fn meta(cfg: &RunConfig, hash: &str, kind: &str, epoch: usize, config: serde_json::Value, metrics: BTreeMap<String, f64>) -> CheckpointMeta {
    CheckpointMeta {
        kind: kind.to_owned(),
        bits: cfg.bits,
        epoch,
        seed: cfg.seed,
        config_hash: Some(hash.to_owned()),
        config,
        metrics,
        tables: Vec::new(),
    }
}

pub fn train_model(cfg: &RunConfig, hash: &str) -> Result<()> {
    let ds = load_prepared(cfg)?;
    let dir = cfg.model_dir();
    fs::create_dir_all(&dir)?;
    match cfg.model {
        ModelKind::VhPhd | ModelKind::VhHamming => {
            let out = train(&ds, &cfg.train)?;
            write_log_csv(dir.join("train_log.csv"), &out.log)?;
            let metrics = BTreeMap::from([
                ("val_ndcg10".to_owned(), out.best_val_ndcg10),
                ("val_loss".to_owned(), out.best_val_loss),
            ]);
            let m = meta(cfg, hash, "vh", out.best_epoch, serde_json::to_value(&cfg.train)?, metrics);
            models::save_vh(&dir, m, &out.params)?;
            log::info!("mean batch time {:.6}s over {} iterations", out.mean_batch_seconds, out.iterations);
            println!(
                "trained {} ({} bits): best epoch {} of {}, validation NDCG@10 {:.4}, loss {:.4} -> {}",
                cfg.model,
                cfg.bits,
                out.best_epoch,
                out.log.len(),
                out.best_val_ndcg10,
                out.best_val_loss,
                dir.display()
            );
        }
        ModelKind::Mf | ModelKind::MfMean | ModelKind::MfMedian => {
            let mf_cfg = cfg.mf_config();
            let (l2, out) = if cfg.mf.tune {
                mf_tune(&ds, &mf_cfg, &LAMBDA_GRID)?
            } else {
                (mf_cfg.l2, mf_train(&ds, &mf_cfg)?)
            };
            let mut log = Vec::from(b"epoch,train_objective,val_rmse,val_ndcg10\n".as_slice());
            for (e, (obj, rmse, ndcg)) in out.log.iter().enumerate() {
                writeln!(log, "{},{obj},{rmse},{ndcg}", e + 1)?;
            }
            fs::write(dir.join("train_log.csv"), log)?;
            let metrics = BTreeMap::from([
                ("val_ndcg10".to_owned(), out.best_val_ndcg10),
                ("val_rmse".to_owned(), out.best_val_rmse),
                ("l2".to_owned(), l2),
            ]);
            let m = meta(cfg, hash, "mf", out.best_epoch, serde_json::to_value(&cfg.mf)?, metrics);
            models::save_mf(&dir, m, &out.params)?;
            let stat = match cfg.model {
                ModelKind::MfMean => Some(Statistic::Mean),
                ModelKind::MfMedian => Some(Statistic::Median),
                _ => None,
            };
            if let Some(stat) = stat {
                let (users, items) = quantize(&out.params, stat, cfg.mf.pooled_thresholds)?;
                models::save_quantized(&dir, &users, &items)?;
            }
            println!(
                "trained {} (d = {}, l2 = {l2}): best epoch {}, validation NDCG@10 {:.4}, RMSE {:.4} -> {}",
                cfg.model,
                cfg.bits,
                out.best_epoch,
                out.best_val_ndcg10,
                out.best_val_rmse,
                dir.display()
            );
        }
    }
    Ok(())
}

fn require_checkpoint(dir: &Path) -> Result<()> {
    if !checkpoint_exists(dir, models::STEM) {
        bail!("checkpoint not found in {} (run `train` first)", dir.display());
    }
    Ok(())
}

/// Per-user NDCG@10 of the MF reference run, if one is available.
fn mf_reference(cfg: &RunConfig, ds: &RatingsDataset, opts: &EvalOptions) -> Result<Option<EvalReport>> {
    let dir = match &cfg.eval.mf_reference {
        Some(d) => d.clone(),
        None => cfg.out.join(ModelKind::Mf.name()),
    };
    if !checkpoint_exists(&dir, models::STEM) {
        if cfg.eval.mf_reference.is_some() {
            bail!("MF reference checkpoint not found in {}", dir.display());
        }
        return Ok(None);
    }
    let (_, model) = load_model(&dir, ModelKind::Mf)?;
    let mut opts = opts.clone();
    if !opts.ks.contains(&10) {
        opts.ks.push(10);
    }
    Ok(Some(evaluate(&model.scorer(), ds, &opts, ReportMeta::default())?))
}

pub fn eval(cfg: &RunConfig, hash: &str) -> Result<()> {
    let dir = cfg.model_dir();
    require_checkpoint(&dir)?;
    let ds = load_prepared(cfg)?;
    let (_, model) = load_model(&dir, cfg.model)?;
    let opts = EvalOptions {
        ks: cfg.eval.ks.clone(),
        candidates: cfg.eval.candidates,
    };
    let report_meta = ReportMeta {
        model: cfg.model.name().to_owned(),
        bits: cfg.bits,
        seed: cfg.seed,
        config_hash: Some(hash.to_owned()),
    };
    let report = evaluate(&model.scorer(), &ds, &opts, report_meta)?;
    report.save_json(dir.join("eval.json"))?;

    let reference = mf_reference(cfg, &ds, &opts)?;
    let keys = UserKeys::from_dataset(&ds, reference.as_ref());
    write_per_user_csv(dir.join("per_user.csv"), &report, &keys)?;

    // Bucket curves of the per-user NDCG at the largest cutoff.
    let k = *report.ks.iter().max().expect("ks validated non-empty");
    if let Some(values) = report.per_user_ndcg(k, ds.n_users) {
        let evaluated: Vec<usize> = (0..ds.n_users).filter(|&u| values[u].is_some()).collect();
        let y: Vec<f64> = evaluated.iter().map(|&u| values[u].unwrap()).collect();
        let mut curves: Vec<(&str, Vec<f64>)> = vec![
            ("n-rated", evaluated.iter().map(|&u| keys.n_rated[u]).collect()),
            ("avg-item-popularity", evaluated.iter().map(|&u| keys.avg_popularity[u]).collect()),
        ];
        if let Some(mf) = &keys.mf_ndcg {
            curves.push(("mf-ndcg", evaluated.iter().map(|&u| mf[u].unwrap_or(0.0)).collect()));
        }
        if y.len() >= 2 {
            for (name, x) in curves {
                let curve = bucket_curve(&x, &y, cfg.eval.bucket_window)?;
                write_curve_csv(dir.join(format!("curve_{name}.csv")), &curve)?;
            }
        }
    }

    let cols: Vec<String> = report
        .ks
        .iter()
        .zip(&report.mean_ndcg)
        .map(|(k, v)| format!("NDCG@{k} {v:.4}"))
        .collect();
    println!("{} on {} users: {}, MRR {:.4}", cfg.model, report.users, cols.join(", "), report.mrr);
    Ok(())
}

pub fn rank(cfg: &RunConfig, user: &str, k: usize, codes: Option<&Path>) -> Result<()> {
    let manifest = load_dataset(cfg.data_dir()).ok().map(|(_, m)| m);
    let (user_labels, item_labels) = match &manifest {
        Some(m) if codes.is_none() => (Some(&m.user_labels), Some(&m.item_labels)),
        _ => (None, None),
    };
    let u = match user_labels {
        Some(labels) => labels
            .iter()
            .position(|l| l == user)
            .with_context(|| format!("unknown user {user:?}"))?,
        None => user.parse::<usize>().with_context(|| format!("user must be an index, got {user:?}"))?,
    };
    let item_name = |i: usize| item_labels.map_or_else(|| i.to_string(), |l| l[i].clone());

    let ranked: Vec<(usize, String)> = if let Some(dir) = codes {
        let (users, items) = load_code_pair(dir)?;
        let code = users.get(u).with_context(|| format!("user {u} out of range ({} users)", users.len()))?;
        let hamming = matches!(cfg.model, ModelKind::VhHamming | ModelKind::MfMean | ModelKind::MfMedian);
        if hamming {
            rank_items_hamming(&code, &items, k)?
        } else {
            rank_items(&code, &hashcf_core::NegatedItemStore::from_items(&items), k)?
        }
        .into_iter()
        .map(|(i, d)| (i, d.to_string()))
        .collect()
    } else {
        let dir = cfg.model_dir();
        require_checkpoint(&dir)?;
        let (_, model) = load_model(&dir, cfg.model)?;
        match &model {
            Model::Vh { users, negated, hamming, items } => {
                let code = users.get(u).with_context(|| format!("user {u} out of range"))?;
                if *hamming {
                    rank_items_hamming(&code, items, k)?
                } else {
                    rank_items(&code, negated, k)?
                }
                .into_iter()
                .map(|(i, d)| (i, d.to_string()))
                .collect()
            }
            Model::Quantized { users, items } => {
                let code = users.get(u).with_context(|| format!("user {u} out of range"))?;
                rank_items_hamming(&code, items, k)?.into_iter().map(|(i, d)| (i, d.to_string())).collect()
            }
            Model::Mf(p) => {
                let row = p.users.checked_row("user", u)?;
                let mut scored: Vec<(usize, f64)> = (0..p.items.rows())
                    .map(|i| {
                        let b = p.biases.as_ref().map_or(0.0, |b| b.items[i] as f64);
                        (i, dot(row, p.items.row(i)) + b)
                    })
                    .collect();
                scored.sort_by(|a, b| b.1.total_cmp(&a.1));
                scored.truncate(k);
                scored.into_iter().map(|(i, s)| (i, format!("{s:.6}"))).collect()
            }
        }
    };
    let score_name = match (codes.is_some(), cfg.model) {
        (_, ModelKind::Mf) if codes.is_none() => "score",
        (_, ModelKind::VhHamming | ModelKind::MfMean | ModelKind::MfMedian) => "hamming",
        _ => "phd",
    };
    println!("rank,item,{score_name}");
    for (pos, (i, s)) in ranked.iter().enumerate() {
        println!("{},{},{s}", pos + 1, item_name(*i));
    }
    Ok(())
}

pub fn bench_distance_cmd(cfg: &RunConfig, hash: &str, n: Option<usize>, reps: Option<usize>) -> Result<()> {
    let dc = DistanceConfig {
        n: n.unwrap_or(cfg.bench.n),
        m: cfg.bits,
        reps: reps.unwrap_or(cfg.bench.reps),
        seed: cfg.seed,
        kernels: cfg.bench.kernels.clone(),
    };
    let out = bench_distance(&dc)?;
    let dir = cfg.out.join("bench");
    fs::create_dir_all(&dir)?;
    let csv = out.to_csv();
    fs::write(dir.join("distance.csv"), &csv)?;
    write_json(
        &dir.join("distance.json"),
        &serde_json::json!({ "config_hash": hash, "seed": cfg.seed, "bench": out }),
    )?;
    print!("{csv}");
    Ok(())
}

pub fn bench_convergence_cmd(cfg: &RunConfig, hash: &str) -> Result<()> {
    let ds = load_prepared(cfg)?;
    let seeds = if cfg.bench.convergence_seeds.is_empty() {
        vec![cfg.seed, cfg.seed + 1, cfg.seed + 2]
    } else {
        cfg.bench.convergence_seeds.clone()
    };
    let report = bench_convergence(&ds, &cfg.train, &seeds)?;
    let dir = cfg.out.join("bench");
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("convergence.csv"), report.curves_csv())?;
    write_json(
        &dir.join("convergence.json"),
        &serde_json::json!({
            "config_hash": hash,
            "seeds": report.seeds,
            "mean_ratio": report.mean_ratio,
            "phd_batch_seconds": report.phd_batch_seconds,
            "hamming_batch_seconds": report.hamming_batch_seconds,
            "batch_time_diff_pct": report.batch_time_diff_pct,
        }),
    )?;
    for s in &report.seeds {
        let reach = s.phd_epochs_to_reach.map_or("never".to_owned(), |e| e.to_string());
        println!(
            "seed {}: hamming ran {} epochs (final val loss {:.4}); phd reached it at epoch {reach}",
            s.seed, s.hamming_epochs, s.hamming_final_val_loss
        );
    }
    match report.mean_ratio {
        Some(r) => println!("mean epochs ratio {r:.3}"),
        None => println!("mean epochs ratio: undefined (target not reached)"),
    }
    println!(
        "per-batch time: phd {:.6}s, hamming {:.6}s ({:.1}% apart)",
        report.phd_batch_seconds, report.hamming_batch_seconds, report.batch_time_diff_pct
    );
    Ok(())
}

/// Joins `eval.json` reports into one CSV, a row per run.
pub fn report(cfg: &RunConfig, runs: &[PathBuf]) -> Result<()> {
    let dirs: Vec<PathBuf> = if runs.is_empty() {
        let mut found: Vec<PathBuf> = fs::read_dir(&cfg.out)
            .with_context(|| format!("listing {}", cfg.out.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join("eval.json").is_file())
            .collect();
        found.sort();
        found
    } else {
        runs.to_vec()
    };
    if dirs.is_empty() {
        bail!("no eval.json found (run `eval` first or pass run directories)");
    }
    let mut reports = Vec::new();
    for d in &dirs {
        let path = d.join("eval.json");
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let r: EvalReport = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        reports.push((d, r));
    }
    let mut ks: Vec<usize> = reports.iter().flat_map(|(_, r)| r.ks.clone()).collect();
    ks.sort_unstable();
    ks.dedup();
    let mut out = String::from("run,model,bits,seed");
    for k in &ks {
        out += &format!(",ndcg{k}");
    }
    out += ",mrr\n";
    for (d, r) in &reports {
        let name = d.file_name().map_or_else(|| d.display().to_string(), |n| n.to_string_lossy().into_owned());
        out += &format!("{name},{},{},{}", r.meta.model, r.meta.bits, r.meta.seed);
        for k in &ks {
            out += &r.ndcg(*k).map_or(",".to_owned(), |v| format!(",{v:.4}"));
        }
        out += &format!(",{:.4}\n", r.mrr);
    }
    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join("report.csv"), &out)?;
    print!("{out}");
    Ok(())
}

pub fn synth(cfg: &RunConfig) -> Result<()> {
    let p = planted(&cfg.synth)?;
    fs::create_dir_all(&cfg.out)?;
    let ratings = cfg.out.join("ratings.csv");
    write_ratings_csv(&ratings, &p.ratings)?;
    let codes = cfg.out.join("planted");
    fs::create_dir_all(&codes)?;
    save_codes(codes.join(models::USER_CODES), &p.users, false)?;
    save_codes(codes.join(models::ITEM_CODES), &p.items, false)?;
    println!(
        "wrote {} ratings ({} users, {} items) to {}; planted codes in {}",
        p.ratings.interactions.len(),
        cfg.synth.users,
        cfg.synth.items,
        ratings.display(),
        codes.display()
    );
    Ok(())
}
