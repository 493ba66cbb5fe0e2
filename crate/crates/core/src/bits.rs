//! Packed bit vectors used for particle positions and knapsack selections.

use std::fmt;

use thiserror::Error;

const WORD_BITS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BitsError {
    #[error("bit-vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid hex encoding for {len} bits: {reason}")]
    BadHex { len: usize, reason: String },
}

/// Fixed-length bit vector stored in little-endian `u64` words.
///
/// Bits past `len` in the last word are always zero, so word-wise
/// equality and popcount are exact.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(WORD_BITS)],
            len,
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut out = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                out.set(i, true);
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, index: usize) -> bool {
        assert!(index < self.len, "bit index {index} out of range {}", self.len);
        (self.words[index / WORD_BITS] >> (index % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, index: usize, value: bool) {
        assert!(index < self.len, "bit index {index} out of range {}", self.len);
        let mask = 1u64 << (index % WORD_BITS);
        let word = &mut self.words[index / WORD_BITS];
        if value {
            *word |= mask;
        } else {
            *word &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, index: usize) {
        assert!(index < self.len, "bit index {index} out of range {}", self.len);
        self.words[index / WORD_BITS] ^= 1u64 << (index % WORD_BITS);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }

    /// Number of differing bits. Panics on length mismatch; see
    /// [`BitString::try_hamming`] for the checked form.
    #[inline]
    pub fn hamming(&self, other: &Self) -> usize {
        assert_eq!(self.len, other.len, "hamming on unequal lengths");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    pub fn try_hamming(&self, other: &Self) -> Result<usize, BitsError> {
        if self.len != other.len {
            return Err(BitsError::LengthMismatch {
                left: self.len,
                right: other.len,
            });
        }
        Ok(self.hamming(other))
    }

    /// Lower-case hex of the packed words, most significant nibble first,
    /// exactly `ceil(len / 4)` digits. Bit 0 is the lowest bit of the last digit.
    pub fn to_hex(&self) -> String {
        let digits = self.len.div_ceil(4);
        let mut out = String::with_capacity(digits);
        for d in (0..digits).rev() {
            let bit = d * 4;
            let word = self.words[bit / WORD_BITS];
            let nibble = (word >> (bit % WORD_BITS)) & 0xf;
            out.push(char::from_digit(nibble as u32, 16).unwrap());
        }
        out
    }

    pub fn from_hex(hex: &str, len: usize) -> Result<Self, BitsError> {
        let digits = len.div_ceil(4);
        let bad = |reason: String| BitsError::BadHex { len, reason };
        if hex.len() != digits {
            return Err(bad(format!("expected {digits} digits, got {}", hex.len())));
        }
        let mut out = Self::zeros(len);
        for (pos, ch) in hex.chars().enumerate() {
            let nibble = ch
                .to_digit(16)
                .ok_or_else(|| bad(format!("non-hex character {ch:?}")))? as u64;
            let bit = (digits - 1 - pos) * 4;
            out.words[bit / WORD_BITS] |= nibble << (bit % WORD_BITS);
        }
        if out.tail_dirty() {
            return Err(bad("bits set beyond length".into()));
        }
        Ok(out)
    }

    fn tail_dirty(&self) -> bool {
        let rem = self.len % WORD_BITS;
        rem != 0 && self.words.last().is_some_and(|w| w >> rem != 0)
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.iter().map(|b| if b { '1' } else { '0' }).collect();
        write!(f, "BitString({s})")
    }
}

impl std::str::FromStr for BitString {
    type Err = BitsError;

    /// Parses a `0`/`1` string, index 0 first.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bools = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(BitsError::BadHex {
                    len: s.len(),
                    reason: format!("not a binary digit: {other:?}"),
                }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_bools(&bools))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn hamming_examples() {
        assert_eq!(bs("0000").hamming(&bs("0000")), 0);
        assert_eq!(bs("1100").hamming(&bs("0011")), 4);
        assert_eq!(bs("1100").hamming(&bs("0000")), 2);
    }

    #[test]
    fn hamming_length_mismatch() {
        assert_eq!(
            bs("10").try_hamming(&bs("100")),
            Err(BitsError::LengthMismatch { left: 2, right: 3 })
        );
    }

    #[test]
    fn hex_rejects_dirty_tail() {
        // 5 bits -> 2 digits; 0x3f would set bit 5.
        assert!(BitString::from_hex("3f", 5).is_err());
        assert_eq!(BitString::from_hex("1f", 5).unwrap().count_ones(), 5);
    }

    proptest! {
        #[test]
        fn hex_roundtrip(bits in proptest::collection::vec(any::<bool>(), 0..300)) {
            let b = BitString::from_bools(&bits);
            let back = BitString::from_hex(&b.to_hex(), bits.len()).unwrap();
            prop_assert_eq!(back, b);
        }

        #[test]
        fn hamming_matches_bitwise(pair in (0usize..200).prop_flat_map(|n| (
            proptest::collection::vec(any::<bool>(), n),
            proptest::collection::vec(any::<bool>(), n),
        ))) {
            let (a, b) = pair;
            let expected = a.iter().zip(&b).filter(|(x, y)| x != y).count();
            prop_assert_eq!(BitString::from_bools(&a).hamming(&BitString::from_bools(&b)), expected);
        }
    }
}
