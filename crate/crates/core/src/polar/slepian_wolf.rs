use serde::{Deserialize, Serialize};

use super::code::PolarCode;
use super::transform::polar_transform_in_place;
use crate::bits::BitVector;
use crate::error::{Error, Result};

/// Magnitude bound on channel LLRs.
pub const LLR_CLAMP: f64 = 40.0;

/// Frozen-position values of the transformed source, in frozen-set order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Syndrome(pub BitVector);

/// ln P(bit = 0) / P(bit = 1) per position.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrVector(pub Vec<f64>);

#[derive(Debug, Clone, PartialEq)]
pub struct SwEncoding {
    pub syndrome: Syndrome,
    /// Message-position values of the transformed source.
    pub reference: BitVector,
    /// CRC of `reference` XOR the CRC-field values of the transformed
    /// source. Together with the reference this pins every information bit.
    pub crc_checksum: BitVector,
}

/// Compresses `q` to its syndrome and extracts the reference message.
pub fn sw_encode(q: &BitVector, code: &PolarCode) -> Result<SwEncoding> {
    if q.len() != code.n() {
        return Err(Error::dim("sw_encode", code.n(), q.len()));
    }
    let mut u = q.as_slice().to_vec();
    polar_transform_in_place(&mut u);
    let pick = |positions: &[usize]| BitVector::from_bools(positions.iter().map(|&i| u[i] == 1));
    let reference = pick(code.message_positions());
    let crc_checksum = masked_checksum(code, reference.as_slice(), code.crc_positions().iter().map(|&i| u[i]));
    Ok(SwEncoding {
        syndrome: Syndrome(pick(code.frozen_set())),
        reference,
        crc_checksum,
    })
}

/// `CRC(message) XOR field`, the quantity stored at enrollment and
/// recomputed per candidate path during decoding.
pub(crate) fn masked_checksum(
    code: &PolarCode,
    message: &[u8],
    field: impl IntoIterator<Item = u8>,
) -> BitVector {
    let crc = code.crc().checksum(message);
    BitVector::from_bools(crc.as_slice().iter().zip(field).map(|(&a, b)| a != b))
}

/// Channel LLRs for side information observed through BSC(`crossover_p`).
pub fn llr_from_side_info(q_side: &BitVector, crossover_p: f64) -> Result<LlrVector> {
    if !(crossover_p > 0.0 && crossover_p < 1.0) {
        return Err(Error::param(
            "crossover_p",
            format!("{crossover_p} is outside (0, 1)"),
        ));
    }
    let magnitude = ((1.0 - crossover_p) / crossover_p)
        .ln()
        .clamp(-LLR_CLAMP, LLR_CLAMP);
    Ok(LlrVector(
        q_side
            .as_slice()
            .iter()
            .map(|&b| if b == 0 { magnitude } else { -magnitude })
            .collect(),
    ))
}
