use std::fmt;

use crate::error::{Error, Result};

/// Largest bit length a code may have; the on-disk header stores `m` as a `u16`.
pub const MAX_BITS: usize = u16::MAX as usize;

/// Number of 64-bit words needed to hold `bits` bits.
#[inline]
pub const fn words_for(bits: usize) -> usize {
    bits.div_ceil(64)
}

/// Mask of the valid bits in the last word of an `bits`-bit code.
#[inline]
pub const fn tail_mask(bits: usize) -> u64 {
    match bits % 64 {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

fn check_bits(bits: usize) -> Result<()> {
    if bits == 0 || bits > MAX_BITS {
        return Err(Error::InvalidInput(format!(
            "code length must be in 1..={MAX_BITS}, got {bits}"
        )));
    }
    Ok(())
}

/// An `m`-bit binary hash code packed into little-endian 64-bit words.
///
/// Bit `j` set means code entry `+1`, clear means `-1`. Bits at positions
/// `>= m` are always zero, so popcounts over the raw words are exact.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct HashCode {
    words: Vec<u64>,
    bits: usize,
}

impl HashCode {
    /// All entries `-1`.
    pub fn zeros(bits: usize) -> Result<Self> {
        check_bits(bits)?;
        Ok(Self {
            words: vec![0; words_for(bits)],
            bits,
        })
    }

    /// All entries `+1`.
    pub fn ones(bits: usize) -> Result<Self> {
        let mut code = Self::zeros(bits)?;
        code.words.fill(u64::MAX);
        code.mask_tail();
        Ok(code)
    }

    /// Packs a `±1` sequence; entry `j` becomes bit `j`.
    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        let mut code = Self::zeros(signs.len())?;
        for (j, &s) in signs.iter().enumerate() {
            match s {
                1 => code.words[j / 64] |= 1 << (j % 64),
                -1 => {}
                other => {
                    return Err(Error::InvalidInput(format!(
                        "code entry {j} is {other}, expected -1 or +1"
                    )))
                }
            }
        }
        Ok(code)
    }

    pub fn from_bools(bits: &[bool]) -> Result<Self> {
        let mut code = Self::zeros(bits.len())?;
        for (j, _) in bits.iter().enumerate().filter(|(_, b)| **b) {
            code.words[j / 64] |= 1 << (j % 64);
        }
        Ok(code)
    }

    /// Builds a code from raw words. Fails if the word count is wrong or any
    /// bit at position `>= bits` is set.
    pub fn from_words(words: Vec<u64>, bits: usize) -> Result<Self> {
        check_bits(bits)?;
        if words.len() != words_for(bits) {
            return Err(Error::InvalidInput(format!(
                "{bits}-bit code needs {} words, got {}",
                words_for(bits),
                words.len()
            )));
        }
        if words[words.len() - 1] & !tail_mask(bits) != 0 {
            return Err(Error::InvalidInput(
                "bits beyond the code length are set".into(),
            ));
        }
        Ok(Self { words, bits })
    }

    /// Parses a string of `0`/`1` characters, bit 0 first.
    pub fn from_bit_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidInput(format!("bad bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_bools(&bits)
    }

    #[inline]
    pub fn bits(&self) -> usize {
        self.bits
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn bit(&self, j: usize) -> bool {
        assert!(j < self.bits, "bit {j} out of range for {}-bit code", self.bits);
        self.words[j / 64] >> (j % 64) & 1 == 1
    }

    /// Code entry `j` as `-1` or `+1`.
    #[inline]
    pub fn sign(&self, j: usize) -> i8 {
        if self.bit(j) {
            1
        } else {
            -1
        }
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn to_signs(&self) -> Vec<i8> {
        (0..self.bits).map(|j| self.sign(j)).collect()
    }

    fn mask_tail(&mut self) {
        let last = self.words.len() - 1;
        self.words[last] &= tail_mask(self.bits);
    }

    pub(crate) fn from_parts_unchecked(words: Vec<u64>, bits: usize) -> Self {
        debug_assert_eq!(words.len(), words_for(bits));
        Self { words, bits }
    }
}

impl fmt::Debug for HashCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HashCode({self})")
    }
}

/// Bit 0 first, so `[+1, -1, +1, -1]` prints as `1010`.
impl fmt::Display for HashCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.bits {
            f.write_str(if self.bit(j) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// A dense table of `len` codes of equal bit length, stored row-major in one
/// contiguous word buffer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeTable {
    words: Vec<u64>,
    bits: usize,
    stride: usize,
}

impl CodeTable {
    pub fn new(bits: usize) -> Result<Self> {
        check_bits(bits)?;
        Ok(Self {
            words: Vec::new(),
            bits,
            stride: words_for(bits),
        })
    }

    pub fn with_capacity(bits: usize, len: usize) -> Result<Self> {
        let mut table = Self::new(bits)?;
        table.words.reserve_exact(len * table.stride);
        Ok(table)
    }

    /// Wraps an existing word buffer; every row's padding bits must be zero.
    pub fn from_words(words: Vec<u64>, bits: usize) -> Result<Self> {
        let table = Self::new(bits)?;
        let stride = table.stride;
        if !words.len().is_multiple_of(stride) {
            return Err(Error::InvalidInput(format!(
                "word buffer of {} is not a multiple of stride {stride}",
                words.len()
            )));
        }
        let mask = tail_mask(bits);
        if words.chunks_exact(stride).any(|row| row[stride - 1] & !mask != 0) {
            return Err(Error::InvalidInput(
                "bits beyond the code length are set".into(),
            ));
        }
        Ok(Self {
            words,
            bits,
            stride,
        })
    }

    pub fn from_codes<'a>(bits: usize, codes: impl IntoIterator<Item = &'a HashCode>) -> Result<Self> {
        let mut table = Self::new(bits)?;
        for code in codes {
            table.push(code)?;
        }
        Ok(table)
    }

    pub fn push(&mut self, code: &HashCode) -> Result<()> {
        if code.bits() != self.bits {
            return Err(Error::DimensionMismatch {
                left: self.bits,
                right: code.bits(),
            });
        }
        self.words.extend_from_slice(code.words());
        Ok(())
    }

    #[inline]
    pub fn bits(&self) -> usize {
        self.bits
    }

    /// Words per code.
    #[inline]
    pub fn stride(&self) -> usize {
        self.stride
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.words.len() / self.stride
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    #[inline]
    pub fn row(&self, idx: usize) -> &[u64] {
        &self.words[idx * self.stride..(idx + 1) * self.stride]
    }

    pub fn get(&self, idx: usize) -> Option<HashCode> {
        (idx < self.len()).then(|| HashCode::from_parts_unchecked(self.row(idx).to_vec(), self.bits))
    }

    pub fn as_words(&self) -> &[u64] {
        &self.words
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = HashCode> + '_ {
        self.words
            .chunks_exact(self.stride)
            .map(|w| HashCode::from_parts_unchecked(w.to_vec(), self.bits))
    }

    /// Copy of the table with every code negated.
    pub fn negated(&self) -> Self {
        let mask = tail_mask(self.bits);
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        for row in words.chunks_exact_mut(self.stride) {
            row[self.stride - 1] &= mask;
        }
        Self {
            words,
            bits: self.bits,
            stride: self.stride,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pack_examples() {
        assert_eq!(HashCode::from_signs(&[1, 1, 1, 1]).unwrap().to_string(), "1111");
        assert_eq!(HashCode::from_signs(&[-1, -1, -1, -1]).unwrap().to_string(), "0000");
        let c = HashCode::from_signs(&[1, -1, 1, -1]).unwrap();
        assert_eq!(c.to_string(), "1010");
        assert_eq!(c.words(), &[0b0101]);
        assert_eq!(c.bits(), 4);
    }

    #[test]
    fn pack_rejects_non_sign_entries() {
        assert!(matches!(HashCode::from_signs(&[1, 0, -1]), Err(Error::InvalidInput(_))));
        assert!(matches!(HashCode::from_signs(&[2]), Err(Error::InvalidInput(_))));
        assert!(HashCode::from_signs(&[]).is_err());
    }

    #[test]
    fn ones_masks_high_bits() {
        let c = HashCode::ones(70).unwrap();
        assert_eq!(c.words().len(), 2);
        assert_eq!(c.words()[1], 0b11_1111);
        assert_eq!(c.count_ones(), 70);
        assert_eq!(HashCode::ones(64).unwrap().words(), &[u64::MAX]);
    }

    #[test]
    fn from_words_rejects_dirty_padding() {
        assert!(HashCode::from_words(vec![0b1_0000], 4).is_err());
        assert!(HashCode::from_words(vec![0b1111], 4).is_ok());
        assert!(HashCode::from_words(vec![0, 0], 4).is_err());
    }

    #[test]
    fn signs_round_trip() {
        let signs: Vec<i8> = (0..77).map(|j| if j % 3 == 0 { 1 } else { -1 }).collect();
        let c = HashCode::from_signs(&signs).unwrap();
        assert_eq!(c.to_signs(), signs);
        assert_eq!(HashCode::from_bit_str(&c.to_string()).unwrap(), c);
    }

    #[test]
    fn table_rows_and_negation() {
        let a = HashCode::from_bit_str("1010").unwrap();
        let b = HashCode::from_bit_str("1100").unwrap();
        let t = CodeTable::from_codes(4, [&a, &b]).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.get(1).unwrap(), b);
        assert!(t.get(2).is_none());
        let n = t.negated();
        assert_eq!(n.get(0).unwrap().to_string(), "0101");
        assert_eq!(n.get(1).unwrap().to_string(), "0011");
    }

    #[test]
    fn table_push_checks_length() {
        let mut t = CodeTable::new(8).unwrap();
        let err = t.push(&HashCode::zeros(4).unwrap()).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { left: 8, right: 4 }));
    }
}
