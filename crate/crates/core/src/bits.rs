use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary vector with one `u8` per bit, each entry 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BitVector(Vec<u8>);

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        BitVector(vec![0; len])
    }

    /// Builds a vector from raw bytes, rejecting anything other than 0/1.
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::param(
                "bits",
                format!("entry {pos} is {}, expected 0 or 1", bits[pos]),
            ));
        }
        Ok(BitVector(bits))
    }

    pub fn from_bools(bits: impl IntoIterator<Item = bool>) -> Self {
        BitVector(bits.into_iter().map(u8::from).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().map(|&b| b as usize).sum()
    }

    /// Bitwise complement.
    pub fn complement(&self) -> Self {
        BitVector(self.0.iter().map(|&b| b ^ 1).collect())
    }

    /// Packs bits most-significant-bit first; the final byte is zero padded.
    pub fn to_packed(&self) -> Vec<u8> {
        self.0
            .chunks(8)
            .map(|chunk| {
                chunk
                    .iter()
                    .enumerate()
                    .fold(0u8, |acc, (i, &b)| acc | (b << (7 - i)))
            })
            .collect()
    }

    pub fn from_packed(bytes: &[u8], len: usize) -> Result<Self> {
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::dim("packed bit field", len.div_ceil(8), bytes.len()));
        }
        Ok(BitVector(
            (0..len)
                .map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1)
                .collect(),
        ))
    }
}

impl std::ops::Index<usize> for BitVector {
    type Output = u8;

    fn index(&self, i: usize) -> &u8 {
        &self.0[i]
    }
}

impl AsRef<[u8]> for BitVector {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

impl std::fmt::Display for BitVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in &self.0 {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}
