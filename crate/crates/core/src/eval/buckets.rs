use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrderingKey {
    /// Reference MF NDCG@10 (user difficulty).
    MfNdcg,
    /// Number of rated items.
    NRated,
    /// Average popularity of the user's training items.
    AvgItemPopularity,
}

impl FromStr for OrderingKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mf-ndcg" => Ok(Self::MfNdcg),
            "n-rated" => Ok(Self::NRated),
            "avg-item-popularity" => Ok(Self::AvgItemPopularity),
            other => Err(Error::Config(format!("unknown ordering key {other:?}"))),
        }
    }
}

pub const DEFAULT_WINDOW: usize = 500;

/// Sorts users by `keys` (ascending, ties by input position) and smooths
/// `values` with a centered moving average over `min(window, n)` users.
/// Near the ends the window is shifted inward so it always covers that many
/// users. Returns `(key, smoothed value)` per user in sorted order.
pub fn bucket_curve(keys: &[f64], values: &[f64], window: usize) -> Result<Vec<(f64, f64)>> {
    if keys.len() != values.len() {
        return Err(Error::InvalidInput(format!(
            "{} keys for {} values",
            keys.len(),
            values.len()
        )));
    }
    let n = keys.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!("bucket curve needs at least 2 users, got {n}")));
    }
    if window == 0 {
        return Err(Error::InvalidInput("window must be at least 1".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]));

    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let w = window.min(n);
    Ok(order
        .iter()
        .enumerate()
        .map(|(pos, &i)| {
            let start = pos.saturating_sub(w / 2).min(n - w);
            let mean = sorted[start..start + w].iter().sum::<f64>() / w as f64;
            (keys[i], mean)
        })
        .collect())
}

pub fn write_curve_csv(path: impl AsRef<Path>, curve: &[(f64, f64)]) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "x,y")?;
    for (x, y) in curve {
        writeln!(out, "{x},{y}")?;
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_values_give_constant_curve() {
        let keys = [3.0, 1.0, 2.0, 5.0, 4.0];
        let curve = bucket_curve(&keys, &[0.7; 5], 2).unwrap();
        assert!(curve.iter().all(|(_, y)| (*y - 0.7).abs() < 1e-12));
        let xs: Vec<f64> = curve.iter().map(|c| c.0).collect();
        assert_eq!(xs, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn full_window_is_global_mean() {
        let keys = [0.5, 0.1, 0.9, 0.3];
        let values = [1.0, 0.0, 0.5, 0.25];
        for window in [4, 500] {
            let curve = bucket_curve(&keys, &values, window).unwrap();
            assert!(curve.iter().all(|(_, y)| (*y - 0.4375).abs() < 1e-12));
        }
    }

    #[test]
    fn window_one_is_identity() {
        let curve = bucket_curve(&[2.0, 1.0], &[0.2, 0.1], 1).unwrap();
        assert_eq!(curve, vec![(1.0, 0.1), (2.0, 0.2)]);
    }

    #[test]
    fn centered_window() {
        let keys: Vec<f64> = (0..5).map(f64::from).collect();
        let values = [0.0, 1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = bucket_curve(&keys, &values, 3).unwrap().into_iter().map(|c| c.1).collect();
        assert_eq!(ys, vec![1.0, 1.0, 2.0, 3.0, 3.0]);
    }

    #[test]
    fn too_few_users() {
        assert!(bucket_curve(&[1.0], &[1.0], 10).is_err());
        assert!(bucket_curve(&[1.0, 2.0], &[1.0], 10).is_err());
    }
}
