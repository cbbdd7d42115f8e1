use crate::bits::BitVector;
use crate::error::{Error, Result};

/// In-place `x = u F^{(x)n}` over GF(2), natural order, with
/// `F = [[1, 0], [1, 1]]`. The length must be a power of two.
pub fn polar_transform_in_place(bits: &mut [u8]) {
    let n = bits.len();
    debug_assert!(n.is_power_of_two());
    let mut half = 1;
    while half < n {
        for block in bits.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, &b) in lo.iter_mut().zip(hi.iter()) {
                *a ^= b;
            }
        }
        half *= 2;
    }
}

pub fn polar_transform(u: &BitVector) -> Result<BitVector> {
    if !u.len().is_power_of_two() {
        return Err(Error::param(
            "u",
            format!("length {} is not a power of two", u.len()),
        ));
    }
    let mut bits = u.clone().into_inner();
    polar_transform_in_place(&mut bits);
    BitVector::from_bits(bits)
}
