use std::collections::HashMap;
use std::fs;

use hashcf_core::baselines::{mf_train, quantize, MfConfig, Statistic};
use hashcf_core::bitcode::file::{load_codes, save_codes};
use hashcf_core::data::{load_dataset, save_dataset, split, Interaction, RatingBounds, RatingSet, SplitProportions};
use hashcf_core::eval::{evaluate, EvalOptions, ReportMeta, Scorer};
use hashcf_core::synth::{planted, PlantedConfig};
use proptest::prelude::*;

fn rating_set() -> impl Strategy<Value = RatingSet> {
    (1usize..12, 1usize..30).prop_flat_map(|(users, items)| {
        prop::collection::btree_set((0..users as u32, 0..items as u32), 1..200).prop_map(move |pairs| {
            let interactions: Vec<Interaction> = pairs
                .into_iter()
                .map(|(u, i)| Interaction {
                    user: u,
                    item: i,
                    rating: 1.0 + ((u + 2 * i) % 5) as f64,
                    timestamp: None,
                })
                .collect();
            RatingSet {
                interactions,
                user_labels: (0..users).map(|u| format!("u{u}")).collect(),
                item_labels: (0..items).map(|i| format!("i{i}")).collect(),
                bounds: RatingBounds::default(),
            }
        })
    })
}

fn labelled(ds: &hashcf_core::RatingsDataset, xs: &[Interaction]) -> Vec<(String, String)> {
    xs.iter()
        .map(|x| (ds.user_labels[x.user as usize].clone(), ds.item_labels[x.item as usize].clone()))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_partitions_each_user(set in rating_set(), seed in any::<u64>()) {
        let props = SplitProportions::default();
        let ds = split(&set, props, seed).unwrap();
        let mut per_user: HashMap<&str, usize> = HashMap::new();
        for x in &set.interactions {
            *per_user.entry(set.user_labels[x.user as usize].as_str()).or_default() += 1;
        }
        let mut seen: HashMap<String, [usize; 3]> = HashMap::new();
        for (part, xs) in [&ds.train, &ds.validation, &ds.test].into_iter().enumerate() {
            for (u, _) in labelled(&ds, xs) {
                seen.entry(u).or_default()[part] += 1;
            }
        }
        for (u, n) in per_user {
            let (tr, va) = props.sizes(n);
            if tr == 0 {
                prop_assert!(!seen.contains_key(u));
            } else {
                prop_assert_eq!(seen[u], [tr, va, n - tr - va]);
            }
        }
        // No (user, item) pair lands in two splits.
        let mut all: Vec<_> = ds.all().map(|x| (x.user, x.item)).collect();
        let len = all.len();
        all.sort_unstable();
        all.dedup();
        prop_assert_eq!(all.len(), len);
        prop_assert_eq!(split(&set, props, seed).unwrap(), ds);
    }
}

#[test]
fn saved_splits_are_byte_identical_and_reload() {
    let p = planted(&PlantedConfig { users: 30, items: 20, ratings_per_user: 15, ..Default::default() }).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let ds = split(&p.ratings, SplitProportions::default(), 7).unwrap();
        save_dataset(dir.path(), &ds, Some("abc")).unwrap();
    }
    for f in ["train.csv", "validation.csv", "test.csv", "manifest.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let (ds, manifest) = load_dataset(a.path()).unwrap();
    assert_eq!(ds, split(&p.ratings, SplitProportions::default(), 7).unwrap());
    assert_eq!(manifest.config_hash.as_deref(), Some("abc"));
}

#[test]
fn quantized_mf_codes_evaluate_and_round_trip() {
    let p = planted(&PlantedConfig { users: 40, items: 30, ratings_per_user: 20, ..Default::default() }).unwrap();
    let ds = split(&p.ratings, SplitProportions::default(), 3).unwrap();
    let mf = mf_train(&ds, &MfConfig { dim: 8, epochs: 5, batch_size: 50, ..Default::default() }).unwrap();
    let opts = EvalOptions::default();
    let real = evaluate(&mf.params.scorer(), &ds, &opts, ReportMeta::default()).unwrap();
    assert!(real.mean_ndcg.iter().all(|v| (0.0..=1.0).contains(v)));
    let dir = tempfile::tempdir().unwrap();
    for stat in [Statistic::Mean, Statistic::Median] {
        let (users, items) = quantize(&mf.params, stat, false).unwrap();
        let path = dir.path().join("items.bhc");
        save_codes(&path, &items, false).unwrap();
        assert_eq!(load_codes(&path).unwrap(), (items.clone(), false));
        let report = evaluate(&Scorer::Hamming { users: &users, items: &items }, &ds, &opts, ReportMeta::default()).unwrap();
        assert_eq!(report.users, real.users);
    }
}
