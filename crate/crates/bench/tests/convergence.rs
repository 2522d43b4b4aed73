use hashcf_bench::{bench_convergence, bench_distance, DistanceConfig, Kernel};
use hashcf_core::data::{split, SplitProportions};
use hashcf_core::synth::{planted, PlantedConfig};
use hashcf_core::vhmodel::{train, Dissimilarity, TrainConfig};

fn dataset() -> hashcf_core::RatingsDataset {
    let p = planted(&PlantedConfig { users: 120, items: 40, ratings_per_user: 30, ..Default::default() }).unwrap();
    split(&p.ratings, SplitProportions::default(), 0).unwrap()
}

#[test]
fn report_covers_both_kinds_and_all_seeds() {
    let ds = dataset();
    let base = TrainConfig { bits: 8, epochs: 6, patience: None, ..Default::default() };
    let report = bench_convergence(&ds, &base, &[0, 1]).unwrap();
    assert_eq!(report.runs.len(), 4);
    assert_eq!(report.seeds.len(), 2);
    for s in &report.seeds {
        assert_eq!(s.hamming_epochs, 6);
        if let (Some(e), Some(r)) = (s.phd_epochs_to_reach, s.ratio) {
            assert!((r - e as f64 / 6.0).abs() < 1e-12);
        }
    }
    assert!(report.phd_batch_seconds > 0.0 && report.hamming_batch_seconds > 0.0);
    let csv = report.curves_csv();
    assert!(csv.starts_with("kind,seed,epoch,train_loss,val_loss,val_ndcg10\nphd,0,1,"));
    assert_eq!(csv.lines().count(), 1 + 4 * 6);
    assert!(bench_convergence(&ds, &base, &[]).is_err());
}

#[test]
fn identical_configs_give_identical_curves() {
    let ds = dataset();
    let cfg = TrainConfig { bits: 8, epochs: 4, kind: Dissimilarity::Hamming, seed: 3, ..Default::default() };
    assert_eq!(train(&ds, &cfg).unwrap().log, train(&ds, &cfg).unwrap().log);
}

#[test]
fn checksums_are_seed_stable() {
    let cfg = DistanceConfig { n: 2000, m: 64, reps: 1, seed: 5, kernels: vec![Kernel::Hamming, Kernel::Phd] };
    let a = bench_distance(&cfg).unwrap();
    let b = bench_distance(&cfg).unwrap();
    assert_eq!(a.checksums, b.checksums);
    // Random 64-bit codes: Hamming averages m/2, PHD m/4 per code.
    let per = |k: Kernel| a.checksums.iter().find(|c| c.kernel == k).unwrap().optimized / 2000.0;
    assert!((per(Kernel::Hamming) - 32.0).abs() < 1.0);
    assert!((per(Kernel::Phd) - 16.0).abs() < 1.0);
}

#[test]
fn batch_times_match() {
    let p = planted(&PlantedConfig { users: 400, items: 100, ratings_per_user: 60, ..Default::default() }).unwrap();
    let ds = split(&p.ratings, SplitProportions::default(), 0).unwrap();
    let base = TrainConfig { bits: 32, epochs: 15, patience: None, ..Default::default() };
    let report = bench_convergence(&ds, &base, &[0, 1]).unwrap();
    assert!(
        report.batch_time_diff_pct < 10.0,
        "phd {}s vs hamming {}s per batch",
        report.phd_batch_seconds,
        report.hamming_batch_seconds
    );
}
