use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::mf::MfParams;
use crate::bitcode::{words_for, CodeTable};
use crate::embedding::Embedding;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statistic {
    Mean,
    Median,
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Statistic::Mean),
            "median" => Ok(Statistic::Median),
            _ => Err(Error::Config(format!("unknown statistic {s:?} (expected mean or median)"))),
        }
    }
}

/// Per-column threshold of `table`. The median of an even-length column is
/// the midpoint of the two middle values.
pub fn thresholds(table: &Embedding, stat: Statistic) -> Vec<f64> {
    let n = table.rows();
    (0..table.cols())
        .map(|c| {
            let mut col: Vec<f64> = table.column(c).map(|v| v as f64).collect();
            if n == 0 {
                return 0.0;
            }
            match stat {
                Statistic::Mean => col.iter().sum::<f64>() / n as f64,
                Statistic::Median => {
                    col.sort_by(f64::total_cmp);
                    if n % 2 == 1 {
                        col[n / 2]
                    } else {
                        0.5 * (col[n / 2 - 1] + col[n / 2])
                    }
                }
            }
        })
        .collect()
}

/// Bit `j` of row `r` is set iff `table[r][j] > tau[j]`.
pub fn binarize(table: &Embedding, tau: &[f64]) -> Result<CodeTable> {
    if tau.len() != table.cols() {
        return Err(Error::DimensionMismatch {
            left: tau.len(),
            right: table.cols(),
        });
    }
    let bits = table.cols();
    let stride = words_for(bits);
    let mut words = vec![0u64; table.rows() * stride];
    for r in 0..table.rows() {
        for (j, (&v, &t)) in table.row(r).iter().zip(tau).enumerate() {
            if v as f64 > t {
                words[r * stride + j / 64] |= 1 << (j % 64);
            }
        }
    }
    CodeTable::from_words(words, bits)
}

/// Quantizes MF factors into (user codes, item codes). Thresholds come from
/// each table separately unless `pooled`, in which case both tables share
/// one population.
pub fn quantize(params: &MfParams, stat: Statistic, pooled: bool) -> Result<(CodeTable, CodeTable)> {
    let (tu, ti) = if pooled {
        let mut data = params.users.as_slice().to_vec();
        data.extend_from_slice(params.items.as_slice());
        let both = Embedding::from_vec(params.users.rows() + params.items.rows(), params.dim(), data)?;
        let t = thresholds(&both, stat);
        (t.clone(), t)
    } else {
        (thresholds(&params.users, stat), thresholds(&params.items, stat))
    };
    Ok((binarize(&params.users, &tu)?, binarize(&params.items, &ti)?))
}
