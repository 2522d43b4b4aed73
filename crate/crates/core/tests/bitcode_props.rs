use hashcf_core::bitcode::file::{read_codes, write_codes};
use hashcf_core::bitcode::{counting_rank, hamming, negate, phd, phd_fast, rank_items, CodeTable, HashCode, NegatedItemStore};
use proptest::prelude::*;

fn code(bits: usize) -> impl Strategy<Value = HashCode> {
    prop::collection::vec(any::<bool>(), bits).prop_map(|b| HashCode::from_bools(&b).unwrap())
}

fn pair() -> impl Strategy<Value = (HashCode, HashCode)> {
    (1usize..200).prop_flat_map(|m| (code(m), code(m)))
}

fn scalar_phd(u: &HashCode, i: &HashCode) -> u32 {
    (0..u.bits()).filter(|&j| u.bit(j) && !i.bit(j)).count() as u32
}

proptest! {
    #[test]
    fn phd_forms_agree((u, i) in pair()) {
        let d = phd(&u, &i).unwrap();
        prop_assert_eq!(d, scalar_phd(&u, &i));
        prop_assert_eq!(d, phd_fast(&u, &negate(&i)).unwrap());
    }

    #[test]
    fn hamming_is_a_metric((a, b) in pair()) {
        let d = hamming(&a, &b).unwrap();
        prop_assert_eq!(d, (0..a.bits()).filter(|&j| a.bit(j) != b.bit(j)).count() as u32);
        prop_assert_eq!(d, hamming(&b, &a).unwrap());
        prop_assert_eq!(hamming(&a, &a).unwrap(), 0);
    }

    #[test]
    fn phd_bounds((u, i) in pair()) {
        let d = phd(&u, &i).unwrap();
        prop_assert!(d <= u.count_ones());
        prop_assert!(d <= hamming(&u, &i).unwrap());
        prop_assert_eq!(phd(&u, &u).unwrap(), 0);
        let ones = HashCode::ones(u.bits()).unwrap();
        prop_assert_eq!(phd(&ones, &i).unwrap(), hamming(&ones, &i).unwrap());
        // Asymmetry: both directions add up to the Hamming distance.
        prop_assert_eq!(d + phd(&i, &u).unwrap(), hamming(&u, &i).unwrap());
    }

    #[test]
    fn negation_is_an_involution(c in (1usize..300).prop_flat_map(code)) {
        let n = negate(&c);
        prop_assert_eq!(negate(&n), c.clone());
        prop_assert_eq!(n.count_ones() + c.count_ones(), c.bits() as u32);
        prop_assert_eq!(HashCode::from_words(n.words().to_vec(), n.bits()).unwrap(), n);
    }

    #[test]
    fn code_file_round_trip(
        codes in (1usize..150).prop_flat_map(|m| prop::collection::vec(code(m), 0..20).prop_map(move |v| (m, v))),
        negated in any::<bool>(),
    ) {
        let (m, codes) = codes;
        let table = CodeTable::from_codes(m, &codes).unwrap();
        let mut buf = Vec::new();
        write_codes(&mut buf, &table, negated).unwrap();
        let (back, flag) = read_codes(&buf[..]).unwrap();
        prop_assert_eq!(flag, negated);
        prop_assert_eq!(back, table);
    }

    #[test]
    fn counting_rank_matches_stable_sort(keys in prop::collection::vec(0u32..=64, 0..300), k in 1usize..400) {
        let got = counting_rank(&keys, 64, k);
        let mut oracle: Vec<(usize, u32)> = keys.iter().copied().enumerate().collect();
        oracle.sort_by_key(|&(idx, key)| (key, idx));
        oracle.truncate(k);
        prop_assert_eq!(got, oracle);
    }

    #[test]
    fn rank_items_orders_by_phd(
        (u, items) in (1usize..100).prop_flat_map(|m| (code(m), prop::collection::vec(code(m), 1..50))),
        k in 1usize..60,
    ) {
        let table = CodeTable::from_codes(u.bits(), &items).unwrap();
        let store = NegatedItemStore::from_items(&table);
        let ranked = rank_items(&u, &store, k).unwrap();
        prop_assert_eq!(ranked.len(), k.min(items.len()));
        for w in ranked.windows(2) {
            prop_assert!((w[0].1, w[0].0) < (w[1].1, w[1].0));
        }
        for &(idx, d) in &ranked {
            prop_assert_eq!(d, phd(&u, &items[idx]).unwrap());
        }
    }
}
