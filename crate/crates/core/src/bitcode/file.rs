//! Binary code file.
//!
//! Layout, all little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "BHCF"
//! 4       1     format version (1)
//! 5       2     m, bits per code
//! 7       8     code count
//! 15      1     flags; bit 0 set = codes are stored negated
//! 16      ...   count * ceil(m/64) u64 words, code-major
//! ```
//!
//! Bit `j` of a code lives in word `j / 64` at position `j % 64`; a set bit
//! is the code value `+1`, a clear bit is `-1`. Padding bits are zero.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::code::CodeTable;
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"BHCF";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 16;
const FLAG_NEGATED: u8 = 0b1;

pub fn write_codes<W: Write>(mut w: W, codes: &CodeTable, negated: bool) -> Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&[VERSION])?;
    w.write_all(&(codes.bits() as u16).to_le_bytes())?;
    w.write_all(&(codes.len() as u64).to_le_bytes())?;
    w.write_all(&[if negated { FLAG_NEGATED } else { 0 }])?;
    for word in codes.as_words() {
        w.write_all(&word.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a code table and whether it is stored negated.
pub fn read_codes<R: Read>(mut r: R) -> Result<(CodeTable, bool)> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    if header[0..4] != MAGIC {
        return Err(Error::Format("missing BHCF magic".into()));
    }
    if header[4] != VERSION {
        return Err(Error::Format(format!("unsupported version {}", header[4])));
    }
    let bits = u16::from_le_bytes([header[5], header[6]]) as usize;
    let count = u64::from_le_bytes(header[7..15].try_into().unwrap());
    let flags = header[15];
    if flags & !FLAG_NEGATED != 0 {
        return Err(Error::Format(format!("unknown flag bits {flags:#04x}")));
    }
    if bits == 0 {
        return Err(Error::Format("zero code length".into()));
    }
    let n_words = usize::try_from(count)
        .ok()
        .and_then(|c| c.checked_mul(bits.div_ceil(64)))
        .ok_or_else(|| Error::Format(format!("code count {count} too large")))?;

    let mut words = Vec::new();
    words
        .try_reserve_exact(n_words)
        .map_err(|_| Error::Format(format!("cannot allocate {n_words} words")))?;
    let mut buf = [0u8; 8];
    for _ in 0..n_words {
        r.read_exact(&mut buf)
            .map_err(|e| Error::Format(format!("truncated body: {e}")))?;
        words.push(u64::from_le_bytes(buf));
    }
    if r.read(&mut buf)? != 0 {
        return Err(Error::Format("trailing bytes after last code".into()));
    }
    let table = CodeTable::from_words(words, bits).map_err(|e| Error::Format(e.to_string()))?;
    Ok((table, flags & FLAG_NEGATED != 0))
}

pub fn save_codes(path: impl AsRef<Path>, codes: &CodeTable, negated: bool) -> Result<()> {
    write_codes(BufWriter::new(File::create(path)?), codes, negated)
}

pub fn load_codes(path: impl AsRef<Path>) -> Result<(CodeTable, bool)> {
    read_codes(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitcode::HashCode;

    #[test]
    fn header_layout_is_fixed() {
        let code = HashCode::from_bit_str("1010000011").unwrap();
        let table = CodeTable::from_codes(10, [&code]).unwrap();
        let mut buf = Vec::new();
        write_codes(&mut buf, &table, true).unwrap();
        assert_eq!(
            buf,
            [
                b'B', b'H', b'C', b'F', 1, 10, 0, 1, 0, 0, 0, 0, 0, 0, 0, 1, //
                0b0000_0101, 0b11, 0, 0, 0, 0, 0, 0
            ]
        );
        let (back, negated) = read_codes(buf.as_slice()).unwrap();
        assert!(negated);
        assert_eq!(back, table);
    }

    #[test]
    fn rejects_corruption() {
        let table = CodeTable::from_codes(4, [&HashCode::ones(4).unwrap()]).unwrap();
        let mut buf = Vec::new();
        write_codes(&mut buf, &table, false).unwrap();

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_codes(bad.as_slice()), Err(Error::Format(_))));

        let mut dirty = buf.clone();
        dirty[HEADER_LEN] = 0xff;
        assert!(read_codes(dirty.as_slice()).is_err());

        assert!(read_codes(&buf[..buf.len() - 1]).is_err());

        let mut trailing = buf.clone();
        trailing.push(0);
        assert!(read_codes(trailing.as_slice()).is_err());
    }
}
