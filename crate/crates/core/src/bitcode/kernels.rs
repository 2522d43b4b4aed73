//! Bit-level distance kernels.
//!
//! The word-slice functions are unchecked and meant for hot loops; callers
//! guarantee equal lengths and zeroed padding bits. The [`HashCode`] wrappers
//! check dimensions.

use super::code::{tail_mask, HashCode};
use crate::error::{Error, Result};

/// `popcount(a XOR b)`.
#[inline(always)]
pub fn hamming_words(a: &[u64], b: &[u64]) -> u32 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

/// `popcount(u XOR (u AND i))`, the projected Hamming dissimilarity evaluated
/// on the original item code.
#[inline(always)]
pub fn phd_words(u: &[u64], i: &[u64]) -> u32 {
    debug_assert_eq!(u.len(), i.len());
    u.iter().zip(i).map(|(x, y)| (x ^ (x & y)).count_ones()).sum()
}

/// `popcount(u AND i_neg)` where `i_neg` is the stored negation of the item
/// code. Same operation count as [`hamming_words`].
#[inline(always)]
pub fn phd_fast_words(u: &[u64], i_neg: &[u64]) -> u32 {
    debug_assert_eq!(u.len(), i_neg.len());
    u.iter().zip(i_neg).map(|(x, y)| (x & y).count_ones()).sum()
}

fn same_len(a: &HashCode, b: &HashCode) -> Result<()> {
    if a.bits() != b.bits() {
        return Err(Error::DimensionMismatch {
            left: a.bits(),
            right: b.bits(),
        });
    }
    Ok(())
}

fn zip_words(a: &HashCode, b: &HashCode, op: impl Fn(u64, u64) -> u64) -> HashCode {
    let words = a.words().iter().zip(b.words()).map(|(x, y)| op(*x, *y)).collect();
    HashCode::from_parts_unchecked(words, a.bits())
}

/// Number of positions where the codes differ.
pub fn hamming(a: &HashCode, b: &HashCode) -> Result<u32> {
    same_len(a, b)?;
    Ok(hamming_words(a.words(), b.words()))
}

/// Projection of `i` onto `u`: masks the item code by the query code.
pub fn project(u: &HashCode, i: &HashCode) -> Result<HashCode> {
    same_len(u, i)?;
    Ok(zip_words(u, i, |x, y| x & y))
}

/// Projected Hamming dissimilarity: the Hamming norm of `u` minus the
/// projection of `i` onto `u`. Asymmetric in its arguments.
pub fn phd(u: &HashCode, i: &HashCode) -> Result<u32> {
    same_len(u, i)?;
    Ok(phd_words(u.words(), i.words()))
}

/// Projected Hamming dissimilarity against a pre-negated item code.
pub fn phd_fast(u: &HashCode, i_neg: &HashCode) -> Result<u32> {
    same_len(u, i_neg)?;
    Ok(phd_fast_words(u.words(), i_neg.words()))
}

/// Flips the first `m` bits; padding stays zero.
pub fn negate(c: &HashCode) -> HashCode {
    let mut words: Vec<u64> = c.words().iter().map(|w| !w).collect();
    let last = words.len() - 1;
    words[last] &= tail_mask(c.bits());
    HashCode::from_parts_unchecked(words, c.bits())
}

pub fn xor(a: &HashCode, b: &HashCode) -> Result<HashCode> {
    same_len(a, b)?;
    Ok(zip_words(a, b, |x, y| x ^ y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> HashCode {
        HashCode::from_bit_str(s).unwrap()
    }

    #[test]
    fn hamming_examples() {
        let a = c("10110100");
        assert_eq!(hamming(&a, &a).unwrap(), 0);
        assert_eq!(hamming(&a, &c("10011100")).unwrap(), 2);
        assert_eq!(hamming(&c("1111"), &c("0000")).unwrap(), 4);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let err = hamming(&c("1111"), &c("11111")).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { left: 4, right: 5 }));
        assert!(project(&c("1"), &c("11")).is_err());
        assert!(phd(&c("1"), &c("11")).is_err());
        assert!(phd_fast(&c("1"), &c("11")).is_err());
    }

    #[test]
    fn project_examples() {
        let u = c("1100");
        let i = c("1010");
        assert_eq!(project(&u, &i).unwrap(), c("1000"));
        assert_eq!(project(&c("0000"), &i).unwrap(), c("0000"));
        let p = project(&u, &i).unwrap();
        assert_eq!(project(&u, &p).unwrap(), p);
    }

    #[test]
    fn phd_examples() {
        for i in ["0000", "1111", "1010"] {
            assert_eq!(phd(&c("0000"), &c(i)).unwrap(), 0);
        }
        let u = c("1110");
        let i = c("1000");
        assert_eq!(phd(&u, &i).unwrap(), 2);
        assert_eq!(phd(&i, &u).unwrap(), 0);
        assert_eq!(phd(&c("1111"), &c("1010")).unwrap(), 2);
        assert_eq!(hamming(&c("1111"), &c("1010")).unwrap(), 2);
    }

    #[test]
    fn phd_fast_examples() {
        assert_eq!(phd_fast(&c("1111"), &c("0101")).unwrap(), 2);
        assert_eq!(phd_fast(&c("0000"), &c("0110")).unwrap(), 0);
    }

    #[test]
    fn negate_examples() {
        assert_eq!(negate(&c("1010")), c("0101"));
        assert_eq!(negate(&c("1111")), c("0000"));
        let long = HashCode::from_signs(&[1; 100]).unwrap();
        assert_eq!(negate(&negate(&long)), long);
        assert_eq!(negate(&long).count_ones(), 0);
        assert_eq!(negate(&HashCode::zeros(100).unwrap()).count_ones(), 100);
    }

    #[test]
    fn phd_fast_matches_phd_exhaustive_8_bit() {
        for u in 0u64..256 {
            for i in 0u64..256 {
                let uc = HashCode::from_words(vec![u], 8).unwrap();
                let ic = HashCode::from_words(vec![i], 8).unwrap();
                let slow = phd(&uc, &ic).unwrap();
                assert_eq!(phd_fast(&uc, &negate(&ic)).unwrap(), slow);
                assert_eq!(slow, (u & !i).count_ones());
            }
        }
    }
}
