use rand::Rng;

/// Fixed-length bit string, least-significant bit of byte 0 first.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct BitString {
    len: usize,
    bytes: Vec<u8>,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            bytes: vec![0; len.div_ceil(8)],
        }
    }

    /// Takes the first `len` bits of `bytes`; missing bytes read as zero and
    /// bits past `len` are cleared.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Self {
        let mut out = Self::zeros(len);
        let take = out.bytes.len().min(bytes.len());
        out.bytes[..take].copy_from_slice(&bytes[..take]);
        out.mask_tail();
        out
    }

    pub fn from_u64(value: u64, len: usize) -> Self {
        Self::from_bytes(&value.to_le_bytes(), len)
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut out = Self::zeros(len);
        rng.fill(&mut out.bytes[..]);
        out.mask_tail();
        out
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        self.bytes[i / 8] >> (i % 8) & 1 == 1
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        if bit {
            self.bytes[i / 8] |= 1 << (i % 8);
        } else {
            self.bytes[i / 8] &= !(1 << (i % 8));
        }
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Bits `[start, start + width)` as an integer, `width <= 64`.
    pub fn read_u64(&self, start: usize, width: usize) -> u64 {
        assert!(width <= 64 && start + width <= self.len);
        (0..width).fold(0u64, |acc, b| acc | (self.get(start + b) as u64) << b)
    }

    pub fn write_u64(&mut self, start: usize, width: usize, value: u64) {
        assert!(width <= 64 && start + width <= self.len);
        for b in 0..width {
            self.set(start + b, value >> b & 1 == 1);
        }
    }

    pub fn complement(&self) -> Self {
        let mut out = Self {
            len: self.len,
            bytes: self.bytes.iter().map(|b| !b).collect(),
        };
        out.mask_tail();
        out
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.bytes)
    }

    pub fn from_hex(hex_str: &str, len: usize) -> Result<Self, hex::FromHexError> {
        let bytes = hex::decode(hex_str)?;
        if bytes.len() != len.div_ceil(8) {
            return Err(hex::FromHexError::InvalidStringLength);
        }
        Ok(Self::from_bytes(&bytes, len))
    }

    fn mask_tail(&mut self) {
        let extra = self.bytes.len() * 8 - self.len;
        if extra > 0 {
            let last = self.bytes.len() - 1;
            self.bytes[last] &= 0xff >> extra;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tail_bits_are_cleared() {
        let b = BitString::from_bytes(&[0xff, 0xff], 11);
        assert_eq!(b.as_bytes(), &[0xff, 0x07]);
        assert_eq!(b.complement().as_bytes(), &[0x00, 0x00]);
    }

    #[test]
    fn u64_fields() {
        let mut b = BitString::zeros(40);
        b.write_u64(3, 20, 0xabcde);
        assert_eq!(b.read_u64(3, 20), 0xabcde);
        assert!(!b.get(0));
    }

    proptest! {
        #[test]
        fn hex_round_trip(bytes in proptest::collection::vec(any::<u8>(), 1..40), cut in 0usize..8) {
            let len = bytes.len() * 8 - cut;
            let b = BitString::from_bytes(&bytes, len);
            prop_assert_eq!(BitString::from_hex(&b.to_hex(), len).unwrap(), b);
        }
    }
}
