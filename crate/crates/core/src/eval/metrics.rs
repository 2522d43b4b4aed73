/// DCG over the first `k` positions with gain `2^rel - 1` and discount
/// `log2(position + 1)`, positions 1-based.
pub fn dcg_at_k(rels: &[f64], k: usize) -> f64 {
    rels.iter()
        .take(k)
        .enumerate()
        .map(|(idx, &rel)| (rel.exp2() - 1.0) / ((idx + 2) as f64).log2())
        .sum()
}

/// NDCG@k of a ranked list of relevance values. `None` for an empty list.
/// When the ideal DCG is zero no ordering can be wrong and the score is 1.
pub fn ndcg_at_k(rels: &[f64], k: usize) -> Option<f64> {
    ndcg_with_ideal(rels, rels, k)
}

/// NDCG@k where the ideal ordering is built from `ideal_pool` (which may
/// differ from the ranked list when ranking a wider candidate set).
pub fn ndcg_with_ideal(rels: &[f64], ideal_pool: &[f64], k: usize) -> Option<f64> {
    if rels.is_empty() || k == 0 {
        return None;
    }
    let mut ideal = ideal_pool.to_vec();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let best = dcg_at_k(&ideal, k);
    if best <= 0.0 {
        return Some(1.0);
    }
    Some(dcg_at_k(rels, k) / best)
}

/// Reciprocal of the 1-based position of the first item carrying the list's
/// maximum relevance. `None` for an empty list.
pub fn reciprocal_rank(rels: &[f64]) -> Option<f64> {
    let max = rels.iter().copied().reduce(f64::max)?;
    reciprocal_rank_of(rels, max)
}

/// Reciprocal rank of the first item whose relevance equals `target`.
pub fn reciprocal_rank_of(rels: &[f64], target: f64) -> Option<f64> {
    rels.iter()
        .position(|&r| r == target)
        .map(|pos| 1.0 / (pos + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ndcg_hand_values() {
        // DCG([3,2]) = 7/log2(2) + 3/log2(3)
        let dcg = 7.0 + 3.0 / 3f64.log2();
        assert!((dcg_at_k(&[3.0, 2.0], 2) - dcg).abs() < 1e-12);
        assert!((dcg - 8.89279).abs() < 1e-5);
        assert_eq!(ndcg_at_k(&[3.0, 2.0], 2), Some(1.0));
        let swapped = 3.0 + 7.0 / 3f64.log2();
        assert!((swapped - 7.41651).abs() < 1e-5);
        assert!((ndcg_at_k(&[2.0, 3.0], 2).unwrap() - 0.83399).abs() < 1e-5);
    }

    #[test]
    fn ndcg_edge_cases() {
        assert_eq!(ndcg_at_k(&[], 5), None);
        assert_eq!(ndcg_at_k(&[0.0, 0.0], 5), Some(1.0));
        assert_eq!(ndcg_at_k(&[5.0, 4.0, 4.0, 1.0], 10), Some(1.0));
        // Only the top-k matter.
        assert_eq!(ndcg_at_k(&[5.0, 1.0, 4.0], 1), Some(1.0));
    }

    #[test]
    fn rr_hand_values() {
        assert_eq!(reciprocal_rank(&[5.0, 3.0]), Some(1.0));
        assert_eq!(reciprocal_rank(&[3.0, 2.0, 5.0, 5.0]), Some(1.0 / 3.0));
        assert_eq!(reciprocal_rank(&[4.0, 4.0, 4.0]), Some(1.0));
        assert_eq!(reciprocal_rank(&[]), None);
    }
}
