use serde::{Deserialize, Serialize};

use super::crc::CrcSpec;
use crate::error::{Error, Result};
use crate::rng::fnv1a;

pub const DEFAULT_LIST_SIZE: usize = 8;

/// Geometry of a polar code built for a BSC.
///
/// The information set `A` holds `k + crc_bits` synthetic channels. Its `k`
/// most reliable members carry the message; the remaining `crc_bits` are
/// the CRC field. Everything else is frozen and pinned to syndrome bits.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarCode {
    n: usize,
    k: usize,
    crc: CrcSpec,
    design_p: f64,
    list_size: usize,
    /// ln of the Bhattacharyya parameter per synthetic channel.
    ln_bhattacharyya: Vec<f64>,
    info_set: Vec<usize>,
    frozen_set: Vec<usize>,
    message_positions: Vec<usize>,
    crc_positions: Vec<usize>,
    /// Ordinal within `info_set` of each message / CRC-field position.
    message_ordinals: Vec<usize>,
    crc_ordinals: Vec<usize>,
    frozen_mask: Vec<bool>,
    /// `info_prefix[i]` = number of information positions below `i`.
    info_prefix: Vec<usize>,
}

/// Serializable summary identifying a constructed code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeDescription {
    pub n: usize,
    pub k: usize,
    pub crc_bits: usize,
    pub design_p: f64,
    pub list_size: usize,
    pub fingerprint: u64,
    pub info_set: Vec<usize>,
}

/// ln z^- = ln(2z - z^2) = ln z + ln(2 - z)
fn ln_minus(ln_z: f64) -> f64 {
    if ln_z == f64::NEG_INFINITY {
        return ln_z;
    }
    ln_z + (2.0 - ln_z.exp()).ln()
}

/// Builds the code for BSC(`design_p`) from the Bhattacharyya recursion
/// `z- = 2z - z^2`, `z+ = z^2`, evaluated in the log domain. The `k + crc_bits`
/// channels with the smallest parameter form the information set; ties go to
/// the lower index.
pub fn construct_code(n: usize, k: usize, crc_bits: usize, design_p: f64) -> Result<PolarCode> {
    if !n.is_power_of_two() || n < 2 {
        return Err(Error::param("n", format!("{n} is not a power of two >= 2")));
    }
    if k == 0 {
        return Err(Error::param("k", "message length must be positive"));
    }
    if k + crc_bits >= n {
        return Err(Error::param(
            "k",
            format!("k + crc_bits = {} must be below n = {n}", k + crc_bits),
        ));
    }
    if !(0.0..=0.5).contains(&design_p) {
        return Err(Error::param("design_p", format!("{design_p} is outside [0, 0.5]")));
    }
    let crc = CrcSpec::for_width(crc_bits)?;

    let ln_z0 = if design_p == 0.0 {
        f64::NEG_INFINITY
    } else {
        std::f64::consts::LN_2 + 0.5 * (design_p * (1.0 - design_p)).ln()
    };
    let mut ln_z = vec![ln_z0];
    while ln_z.len() < n {
        ln_z = ln_z
            .iter()
            .flat_map(|&z| [ln_minus(z), 2.0 * z])
            .collect();
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| ln_z[a].total_cmp(&ln_z[b]).then(a.cmp(&b)));

    let sorted = |mut v: Vec<usize>| {
        v.sort_unstable();
        v
    };
    let info_set = sorted(order[..k + crc_bits].to_vec());
    let message_positions = sorted(order[..k].to_vec());
    let crc_positions = sorted(order[k..k + crc_bits].to_vec());
    let frozen_set = sorted(order[k + crc_bits..].to_vec());

    let ordinals = |positions: &[usize]| -> Vec<usize> {
        positions
            .iter()
            .map(|p| info_set.binary_search(p).expect("position in info set"))
            .collect()
    };
    let message_ordinals = ordinals(&message_positions);
    let crc_ordinals = ordinals(&crc_positions);
    let mut frozen_mask = vec![true; n];
    for &i in &info_set {
        frozen_mask[i] = false;
    }
    let mut info_prefix = Vec::with_capacity(n + 1);
    info_prefix.push(0);
    for i in 0..n {
        info_prefix.push(info_prefix[i] + usize::from(!frozen_mask[i]));
    }

    Ok(PolarCode {
        n,
        k,
        crc,
        design_p,
        list_size: DEFAULT_LIST_SIZE,
        ln_bhattacharyya: ln_z,
        info_set,
        frozen_set,
        message_positions,
        crc_positions,
        message_ordinals,
        crc_ordinals,
        frozen_mask,
        info_prefix,
    })
}

impl PolarCode {
    pub fn with_list_size(mut self, list_size: usize) -> Result<Self> {
        if list_size == 0 {
            return Err(Error::param("list_size", "must be positive"));
        }
        self.list_size = list_size;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn crc_bits(&self) -> usize {
        self.crc.width as usize
    }

    pub fn crc(&self) -> &CrcSpec {
        &self.crc
    }

    pub fn design_p(&self) -> f64 {
        self.design_p
    }

    pub fn list_size(&self) -> usize {
        self.list_size
    }

    pub fn syndrome_len(&self) -> usize {
        self.frozen_set.len()
    }

    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    pub fn frozen_set(&self) -> &[usize] {
        &self.frozen_set
    }

    pub fn message_positions(&self) -> &[usize] {
        &self.message_positions
    }

    pub fn crc_positions(&self) -> &[usize] {
        &self.crc_positions
    }

    pub fn ln_bhattacharyya(&self) -> &[f64] {
        &self.ln_bhattacharyya
    }

    pub(crate) fn message_ordinals(&self) -> &[usize] {
        &self.message_ordinals
    }

    pub(crate) fn crc_ordinals(&self) -> &[usize] {
        &self.crc_ordinals
    }

    pub(crate) fn is_frozen(&self, i: usize) -> bool {
        self.frozen_mask[i]
    }

    /// True when every position in `start..start + len` is frozen.
    pub(crate) fn all_frozen(&self, start: usize, len: usize) -> bool {
        self.info_prefix[start + len] == self.info_prefix[start]
    }

    /// Stable identifier of the information set and sizes.
    pub fn fingerprint(&self) -> u64 {
        let mut bytes = Vec::with_capacity(4 * (self.info_set.len() + 3));
        for v in [self.n, self.k, self.crc_bits()]
            .into_iter()
            .chain(self.message_positions.iter().copied())
            .chain(self.crc_positions.iter().copied())
        {
            bytes.extend_from_slice(&(v as u32).to_be_bytes());
        }
        fnv1a(&bytes)
    }

    pub fn describe(&self) -> CodeDescription {
        CodeDescription {
            n: self.n,
            k: self.k,
            crc_bits: self.crc_bits(),
            design_p: self.design_p,
            list_size: self.list_size,
            fingerprint: self.fingerprint(),
            info_set: self.info_set.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_bit_code_keeps_upper_branch() {
        for p in [0.01, 0.2, 0.45] {
            let code = construct_code(2, 1, 0, p).unwrap();
            assert_eq!(code.info_set(), &[1]);
            assert_eq!(code.frozen_set(), &[0]);
        }
    }

    #[test]
    fn zero_design_p_still_partitions() {
        let code = construct_code(64, 5, 8, 0.0).unwrap();
        assert_eq!(code.info_set().len(), 13);
        assert_eq!(code.frozen_set().len(), 51);
        assert!(code.ln_bhattacharyya().iter().all(|&z| z == f64::NEG_INFINITY));
    }

    #[test]
    fn reference_operating_point_sizes() {
        let k = (0.01f64 * 1024.0).round() as usize;
        assert_eq!(k, 10);
        let code = construct_code(1024, k, 16, 0.2).unwrap();
        assert_eq!(code.syndrome_len(), 998);
        assert_eq!(code.message_positions().len(), 10);
        assert_eq!(code.crc_positions().len(), 16);
        assert_eq!(code.list_size(), DEFAULT_LIST_SIZE);
    }

    #[test]
    fn crc_field_sits_on_least_reliable_info_channels() {
        let code = construct_code(256, 20, 8, 0.1).unwrap();
        let z = code.ln_bhattacharyya();
        let worst_msg = code.message_positions().iter().map(|&i| z[i]).fold(f64::MIN, f64::max);
        let best_crc = code.crc_positions().iter().map(|&i| z[i]).fold(f64::MAX, f64::min);
        assert!(worst_msg <= best_crc);
    }

    #[test]
    fn rejects_infeasible_sizes() {
        assert!(construct_code(1000, 10, 16, 0.1).is_err());
        assert!(construct_code(32, 16, 16, 0.1).is_err());
        assert!(construct_code(32, 0, 0, 0.1).is_err());
        assert!(construct_code(32, 4, 3, 0.1).is_err());
        assert!(construct_code(32, 4, 0, 0.7).is_err());
        assert!(construct_code(32, 4, 0, 0.1).unwrap().with_list_size(0).is_err());
    }

    proptest! {
        #[test]
        fn partition_and_reliability_order(log_n in 1u32..=10, frac in 0.0f64..1.0, p in 0.001f64..0.5) {
            let n = 1usize << log_n;
            let k = 1 + ((n - 2) as f64 * frac) as usize;
            let code = construct_code(n, k, 0, p).unwrap();
            let mut all: Vec<usize> = code.info_set().iter().chain(code.frozen_set()).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert_eq!(code.info_set().len(), k);
            let z = code.ln_bhattacharyya();
            let worst_info = code.info_set().iter().map(|&i| z[i]).fold(f64::NEG_INFINITY, f64::max);
            let best_frozen = code.frozen_set().iter().map(|&i| z[i]).fold(f64::INFINITY, f64::min);
            prop_assert!(worst_info <= best_frozen);
            let again = construct_code(n, k, 0, p).unwrap();
            prop_assert_eq!(code.info_set(), again.info_set());
        }
    }
}
