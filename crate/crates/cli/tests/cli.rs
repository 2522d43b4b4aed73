use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hashcf_core::bitcode::file::load_codes;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hashcf"))
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn hashcf(out: &Path, args: &[&str]) -> Output {
    let o = bin()
        .arg("--config")
        .arg(bundled("small.json"))
        .arg("--dataset")
        .arg(bundled("ratings.csv"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap();
    o
}

fn ok(o: Output) -> String {
    let stdout = String::from_utf8_lossy(&o.stdout).into_owned();
    assert!(o.status.success(), "stdout: {stdout}\nstderr: {}", String::from_utf8_lossy(&o.stderr));
    stdout
}

#[test]
fn prepare_train_eval_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let s = ok(hashcf(out, &["prepare"]));
    assert!(s.contains("100 users, 60 items"), "{s}");
    for f in ["manifest.json", "train.csv", "validation.csv", "test.csv"] {
        assert!(out.join("data").join(f).is_file(), "{f}");
    }
    for model in ["vh-phd", "mf-mean"] {
        ok(hashcf(out, &["--model", model, "train"]));
        let s = ok(hashcf(out, &["--model", model, "eval"]));
        assert!(s.contains("NDCG@10"), "{s}");
        let run = out.join(model);
        for f in ["model.json", "model.bin", "users.bhc", "items.bhc", "eval.json", "per_user.csv", "train_log.csv"] {
            assert!(run.join(f).is_file(), "{model}/{f}");
        }
        assert!(run.join("curve_n-rated.csv").is_file());
        let per_user = fs::read_to_string(run.join("per_user.csv")).unwrap();
        assert!(per_user.starts_with("user,ndcg5,ndcg10,rr,key_mf,key_nrated,key_pop\n"), "{per_user}");
        let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("eval.json")).unwrap()).unwrap();
        assert_eq!(report["meta"]["model"], model);
        assert_eq!(report["meta"]["config_hash"].as_str().unwrap().len(), 64);
    }
    let table = ok(hashcf(out, &["report"]));
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "run,model,bits,seed,ndcg5,ndcg10,mrr");
    assert_eq!(lines.len(), 3, "{table}");
    assert!(out.join("report.csv").is_file());
}

#[test]
fn rank_returns_planted_best_item_first() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    ok(bin().arg("--out").arg(out).arg("synth").output().unwrap());
    let (users, _) = load_codes(out.join("planted/users.bhc")).unwrap();
    let (items, _) = load_codes(out.join("planted/items.bhc")).unwrap();
    for u in [0usize, 7, 42] {
        let uc = users.get(u).unwrap();
        // Bit-by-bit count of positions where the user is +1 and the item -1.
        let phd: Vec<u32> = items
            .iter()
            .map(|ic| (0..uc.bits()).filter(|&j| uc.bit(j) && !ic.bit(j)).count() as u32)
            .collect();
        let best = *phd.iter().min().unwrap();
        let first = phd.iter().position(|&d| d == best).unwrap();
        let s = ok(bin()
            .arg("--out")
            .arg(out)
            .args(["rank", "--user", &u.to_string(), "--k", "5", "--codes"])
            .arg(out.join("planted"))
            .output()
            .unwrap());
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "rank,item,phd");
        assert_eq!(lines[1], format!("1,{first},{best}"), "user {u}");
        assert_eq!(lines.len(), 6);
    }
}

#[test]
fn eval_without_checkpoint_fails_with_status_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = hashcf(dir.path(), &["eval"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("checkpoint not found"), "{err}");
}

#[test]
fn usage_errors_exit_with_status_2() {
    let o = bin().args(["--no-such-flag", "eval"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().args(["--model", "svd", "train"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_dataset_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin().arg("--out").arg(dir.path()).args(["--dataset", "nope.csv", "prepare"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dataset not found"));
}

fn tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for out in [a.path(), b.path()] {
        ok(hashcf(out, &["prepare"]));
        ok(hashcf(out, &["train"]));
        ok(hashcf(out, &["eval"]));
    }
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    assert!(ta.len() >= 12, "{}", ta.len());
    for ((pa, ba), (pb, bb)) in ta.iter().zip(&tb) {
        assert_eq!(pa, pb);
        assert!(ba == bb, "{} differs", pa.display());
    }
    assert_eq!(ta.len(), tb.len());
}

#[test]
fn bench_commands_write_results() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let s = ok(hashcf(out, &["--bits", "64", "bench-distance", "--n", "5000", "--reps", "3"]));
    assert!(s.starts_with("kernel,n,m,reps,mean_seconds,overhead_pct\nhamming,5000,64,3,"), "{s}");
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("bench/distance.json")).unwrap()).unwrap();
    assert_eq!(json["bench"]["results"].as_array().unwrap().len(), 3);
    assert!(out.join("bench/distance.csv").is_file());

    ok(hashcf(out, &["prepare"]));
    let s = ok(hashcf(out, &["bench-convergence"]));
    assert!(s.contains("mean epochs ratio"), "{s}");
    let curves = fs::read_to_string(out.join("bench/convergence.csv")).unwrap();
    assert!(curves.starts_with("kind,seed,epoch,train_loss,val_loss,val_ndcg10\n"));
    assert!(curves.contains("\nhamming,2,"));
    assert!(out.join("bench/convergence.json").is_file());
}
