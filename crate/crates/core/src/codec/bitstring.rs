use crate::error::{Error, Result};

/// Packed sequence of bits, most significant bit first within each byte.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    bytes: Vec<u8>,
    len: usize,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if bit {
            let last = self.bytes.len() - 1;
            self.bytes[last] |= 0x80 >> (self.len % 8);
        }
        self.len += 1;
    }

    /// Bit at `index`, or `None` past the end.
    pub fn get(&self, index: usize) -> Option<bool> {
        if index >= self.len {
            return None;
        }
        Some(self.bytes[index / 8] & (0x80 >> (index % 8)) != 0)
    }

    pub fn flip(&mut self, index: usize) {
        assert!(index < self.len, "bit index {index} out of range");
        self.bytes[index / 8] ^= 0x80 >> (index % 8);
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.get(i).unwrap_or(false))
    }

    /// Length-prefixed wire form: 64-bit little-endian bit count, then the
    /// packed bytes with the final byte zero-padded.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + self.bytes.len());
        out.extend_from_slice(&(self.len as u64).to_le_bytes());
        out.extend_from_slice(&self.bytes);
        out
    }

    /// Parses the wire form, returning the bit string and the number of
    /// bytes consumed from `data`.
    pub fn from_bytes(data: &[u8]) -> Result<(Self, usize)> {
        let header: [u8; 8] = data
            .get(..8)
            .and_then(|h| h.try_into().ok())
            .ok_or_else(|| Error::format("bit string", "missing length prefix"))?;
        let len = u64::from_le_bytes(header) as usize;
        let n_bytes = len.div_ceil(8);
        let body = data
            .get(8..8 + n_bytes)
            .ok_or_else(|| Error::format("bit string", format!("truncated body for {len} bits")))?;
        if !len.is_multiple_of(8) && body[n_bytes - 1] & (0xff >> (len % 8)) != 0 {
            return Err(Error::format("bit string", "nonzero padding bits"));
        }
        Ok((
            Self {
                bytes: body.to_vec(),
                len,
            },
            8 + n_bytes,
        ))
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut bits = BitString::new();
        for b in iter {
            bits.push(b);
        }
        bits
    }
}

impl std::fmt::Debug for BitString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitString({} bits: ", self.len)?;
        for b in self.iter().take(64) {
            f.write_str(if b { "1" } else { "0" })?;
        }
        if self.len > 64 {
            f.write_str("...")?;
        }
        f.write_str(")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_is_valid() {
        let b = BitString::new();
        assert_eq!(b.len(), 0);
        assert_eq!(b.to_bytes(), vec![0u8; 8]);
        let (back, used) = BitString::from_bytes(&b.to_bytes()).unwrap();
        assert_eq!(back, b);
        assert_eq!(used, 8);
    }

    #[test]
    fn final_byte_is_zero_padded() {
        let b: BitString = [true, false, true].into_iter().collect();
        assert_eq!(b.to_bytes(), vec![3, 0, 0, 0, 0, 0, 0, 0, 0b1010_0000]);
    }

    #[test]
    fn rejects_truncated_and_dirty_padding() {
        assert!(BitString::from_bytes(&[9, 0, 0, 0, 0, 0, 0, 0, 0xff]).is_err());
        assert!(BitString::from_bytes(&[3, 0, 0, 0, 0, 0, 0, 0, 0xff]).is_err());
    }

    proptest! {
        #[test]
        fn wire_roundtrip(bits in proptest::collection::vec(any::<bool>(), 0..200)) {
            let b: BitString = bits.iter().copied().collect();
            prop_assert_eq!(b.len(), bits.len());
            let (back, used) = BitString::from_bytes(&b.to_bytes()).unwrap();
            prop_assert_eq!(used, 8 + bits.len().div_ceil(8));
            prop_assert_eq!(back.iter().collect::<Vec<_>>(), bits);
        }
    }
}
