use serde::{Deserialize, Serialize};

use crate::bits::BitVector;
use crate::error::{Error, Result};

/// Bit-serial CRC over a message of arbitrary bit length, MSB first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrcSpec {
    pub width: u8,
    pub poly: u32,
    pub init: u32,
}

impl CrcSpec {
    /// Standard generator for the supported widths. Width 16 is
    /// CRC-16/CCITT (0x1021, init 0xFFFF).
    pub fn for_width(width: usize) -> Result<Self> {
        let (poly, init) = match width {
            0 => (0, 0),
            8 => (0x07, 0),
            16 => (0x1021, 0xFFFF),
            24 => (0x86_4CFB, 0xB7_04CE),
            32 => (0x04C1_1DB7, 0xFFFF_FFFF),
            _ => {
                return Err(Error::param(
                    "crc_bits",
                    format!("{width} is not one of 0, 8, 16, 24, 32"),
                ))
            }
        };
        Ok(CrcSpec {
            width: width as u8,
            poly,
            init,
        })
    }

    fn mask(&self) -> u64 {
        (1u64 << self.width) - 1
    }

    pub fn checksum_bits(&self, message: &[u8]) -> u32 {
        if self.width == 0 {
            return 0;
        }
        let top = 1u64 << (self.width - 1);
        let mut reg = self.init as u64;
        for &bit in message {
            let feedback = ((reg & top) != 0) ^ (bit == 1);
            reg = (reg << 1) & self.mask();
            if feedback {
                reg ^= self.poly as u64;
            }
        }
        reg as u32
    }

    /// Checksum as `width` bits, most significant first.
    pub fn checksum(&self, message: &[u8]) -> BitVector {
        let value = self.checksum_bits(message);
        BitVector::from_bools((0..self.width).rev().map(|i| (value >> i) & 1 == 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bytes_to_bits(bytes: &[u8]) -> Vec<u8> {
        bytes
            .iter()
            .flat_map(|&b| (0..8).rev().map(move |i| (b >> i) & 1))
            .collect()
    }

    #[test]
    fn ccitt_false_check_value() {
        let spec = CrcSpec::for_width(16).unwrap();
        assert_eq!(spec.checksum_bits(&bytes_to_bits(b"123456789")), 0x29B1);
    }

    #[test]
    fn crc8_check_value() {
        let spec = CrcSpec::for_width(8).unwrap();
        assert_eq!(spec.checksum_bits(&bytes_to_bits(b"123456789")), 0xF4);
    }

    #[test]
    fn crc32_mpeg2_check_value() {
        let spec = CrcSpec::for_width(32).unwrap();
        assert_eq!(spec.checksum_bits(&bytes_to_bits(b"123456789")), 0x0376_E6E7);
    }

    #[test]
    fn checksum_bits_are_msb_first() {
        let spec = CrcSpec::for_width(16).unwrap();
        let msg = [1, 0, 1, 1, 0, 0, 1, 0, 1, 1];
        let value = spec.checksum_bits(&msg);
        let bits = spec.checksum(&msg);
        assert_eq!(bits.len(), 16);
        let rebuilt = bits.as_slice().iter().fold(0u32, |acc, &b| (acc << 1) | b as u32);
        assert_eq!(rebuilt, value);
    }

    #[test]
    fn unsupported_width() {
        assert!(CrcSpec::for_width(5).is_err());
        assert!(CrcSpec::for_width(0).unwrap().checksum(&[1, 0]).is_empty());
    }
}
