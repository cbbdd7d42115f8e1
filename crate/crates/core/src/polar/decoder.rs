//! Successive cancellation (list) decoding with frozen positions pinned to
//! syndrome bits instead of zeros.
//!
//! The list decoder runs the usual recursive tree over LLR blocks, carrying
//! every live path through each node at once. A node whose whole subtree is
//! frozen is settled in one step: its sub-codeword is the transform of the
//! pinned bits and each path pays the matching log-domain penalty.

use super::code::PolarCode;
use super::slepian_wolf::{masked_checksum, LlrVector, Syndrome, LLR_CLAMP};
use super::transform::polar_transform_in_place;
use crate::bits::BitVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeOutput {
    pub message: BitVector,
    /// Whether the selected path satisfied the stored checksum.
    pub crc_ok: bool,
}

#[inline]
fn check_node(a: f64, b: f64) -> f64 {
    let m = a.abs().min(b.abs());
    if (a < 0.0) != (b < 0.0) {
        -m
    } else {
        m
    }
}

#[inline]
fn bit_node(a: f64, b: f64, upper: u8) -> f64 {
    if upper == 0 {
        b + a
    } else {
        b - a
    }
}

/// -ln P(bit | llr) = ln(1 + exp(-(1 - 2 bit) llr))
#[inline]
fn penalty(llr: f64, bit: u8) -> f64 {
    let x = if bit == 0 { -llr } else { llr };
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn prepare(
    llr: &LlrVector,
    syndrome: &Syndrome,
    crc_checksum: &BitVector,
    code: &PolarCode,
) -> Result<(Vec<f64>, Vec<u8>)> {
    if llr.0.len() != code.n() {
        return Err(Error::dim("decode: llr", code.n(), llr.0.len()));
    }
    if syndrome.0.len() != code.syndrome_len() {
        return Err(Error::dim("decode: syndrome", code.syndrome_len(), syndrome.0.len()));
    }
    if crc_checksum.len() != code.crc_bits() {
        return Err(Error::dim("decode: crc checksum", code.crc_bits(), crc_checksum.len()));
    }
    if llr.0.iter().any(|v| v.is_nan()) {
        return Err(Error::param("llr", "contains NaN"));
    }
    let clamped = llr.0.iter().map(|v| v.clamp(-LLR_CLAMP, LLR_CLAMP)).collect();
    let mut pinned = vec![0u8; code.n()];
    for (&pos, &b) in code.frozen_set().iter().zip(syndrome.0.as_slice()) {
        pinned[pos] = b;
    }
    Ok((clamped, pinned))
}

fn split_info(code: &PolarCode, info_bits: &[u8]) -> (Vec<u8>, Vec<u8>) {
    let message = code.message_ordinals().iter().map(|&o| info_bits[o]).collect();
    let field = code.crc_ordinals().iter().map(|&o| info_bits[o]).collect();
    (message, field)
}

fn passes_crc(code: &PolarCode, info_bits: &[u8], crc_checksum: &BitVector) -> bool {
    let (message, field) = split_info(code, info_bits);
    masked_checksum(code, &message, field) == *crc_checksum
}

#[derive(Debug, Clone)]
struct Path {
    metric: f64,
    info_bits: Vec<u8>,
}

/// Survivors of a subtree: for each, the index of the path it descends from
/// (relative to the paths alive when the subtree was entered) and its
/// sub-codeword.
struct Branch {
    parents: Vec<usize>,
    words: Vec<u8>,
}

struct ListDecoder<'a> {
    code: &'a PolarCode,
    pinned: &'a [u8],
    paths: Vec<Path>,
}

impl ListDecoder<'_> {
    fn node(&mut self, offset: usize, llr: &[f64], n: usize) -> Branch {
        let live = self.paths.len();
        debug_assert_eq!(llr.len(), live * n);

        if self.code.all_frozen(offset, n) {
            let mut word = self.pinned[offset..offset + n].to_vec();
            polar_transform_in_place(&mut word);
            for (path, block) in self.paths.iter_mut().zip(llr.chunks_exact(n)) {
                path.metric += block.iter().zip(&word).map(|(&l, &b)| penalty(l, b)).sum::<f64>();
            }
            return Branch {
                parents: (0..live).collect(),
                words: word.repeat(live),
            };
        }

        if n == 1 {
            return self.fork(llr);
        }

        let half = n / 2;
        let mut left_llr = Vec::with_capacity(live * half);
        for block in llr.chunks_exact(n) {
            let (a, b) = block.split_at(half);
            left_llr.extend(a.iter().zip(b).map(|(&x, &y)| check_node(x, y)));
        }
        let left = self.node(offset, &left_llr, half);

        let mut right_llr = Vec::with_capacity(left.parents.len() * half);
        for (s, &parent) in left.parents.iter().enumerate() {
            let (a, b) = llr[parent * n..(parent + 1) * n].split_at(half);
            let upper = &left.words[s * half..(s + 1) * half];
            right_llr.extend((0..half).map(|k| bit_node(a[k], b[k], upper[k])));
        }
        let right = self.node(offset + half, &right_llr, half);

        let mut words = Vec::with_capacity(right.parents.len() * n);
        let mut parents = Vec::with_capacity(right.parents.len());
        for (r, &lp) in right.parents.iter().enumerate() {
            let upper = &left.words[lp * half..(lp + 1) * half];
            let lower = &right.words[r * half..(r + 1) * half];
            words.extend(upper.iter().zip(lower).map(|(&x, &y)| x ^ y));
            words.extend_from_slice(lower);
            parents.push(left.parents[lp]);
        }
        Branch { parents, words }
    }

    /// Information leaf: every path splits on both bit values and the
    /// `list_size` best continuations survive.
    fn fork(&mut self, llr: &[f64]) -> Branch {
        let mut candidates: Vec<(f64, usize, u8)> = self
            .paths
            .iter()
            .zip(llr)
            .enumerate()
            .flat_map(|(i, (path, &l))| {
                [(path.metric + penalty(l, 0), i, 0), (path.metric + penalty(l, 1), i, 1)]
            })
            .collect();
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        candidates.truncate(self.code.list_size());

        let old = std::mem::take(&mut self.paths);
        self.paths = candidates
            .iter()
            .map(|&(metric, i, bit)| {
                let mut info_bits = Vec::with_capacity(self.code.info_set().len());
                info_bits.extend_from_slice(&old[i].info_bits);
                info_bits.push(bit);
                Path { metric, info_bits }
            })
            .collect();
        Branch {
            parents: candidates.iter().map(|c| c.1).collect(),
            words: candidates.iter().map(|c| c.2).collect(),
        }
    }
}

/// CRC-aided SCL decoding of the source whose syndrome is `syndrome`,
/// observed through `llr`.
///
/// Returns the message of the most likely surviving path that satisfies the
/// stored checksum, or of the most likely path overall with `crc_ok = false`
/// when none does. The list size comes from `code`.
pub fn scl_decode(
    llr: &LlrVector,
    syndrome: &Syndrome,
    crc_checksum: &BitVector,
    code: &PolarCode,
) -> Result<DecodeOutput> {
    let (llr, pinned) = prepare(llr, syndrome, crc_checksum, code)?;
    let mut decoder = ListDecoder {
        code,
        pinned: &pinned,
        paths: vec![Path {
            metric: 0.0,
            info_bits: Vec::with_capacity(code.info_set().len()),
        }],
    };
    decoder.node(0, &llr, code.n());

    let mut ranked: Vec<usize> = (0..decoder.paths.len()).collect();
    ranked.sort_by(|&a, &b| {
        decoder.paths[a]
            .metric
            .total_cmp(&decoder.paths[b].metric)
            .then(a.cmp(&b))
    });
    let chosen = ranked
        .iter()
        .copied()
        .find(|&i| passes_crc(code, &decoder.paths[i].info_bits, crc_checksum));
    let (index, crc_ok) = match chosen {
        Some(i) => (i, true),
        None => (ranked[0], false),
    };
    let (message, _) = split_info(code, &decoder.paths[index].info_bits);
    Ok(DecodeOutput {
        message: BitVector::from_bits(message)?,
        crc_ok,
    })
}

fn sc_node(code: &PolarCode, pinned: &[u8], offset: usize, llr: &[f64], u: &mut [u8]) -> Vec<u8> {
    let n = llr.len();
    if n == 1 {
        let bit = if code.is_frozen(offset) {
            pinned[offset]
        } else {
            u8::from(llr[0] < 0.0)
        };
        u[offset] = bit;
        return vec![bit];
    }
    let half = n / 2;
    let (a, b) = llr.split_at(half);
    let left_llr: Vec<f64> = a.iter().zip(b).map(|(&x, &y)| check_node(x, y)).collect();
    let upper = sc_node(code, pinned, offset, &left_llr, u);
    let right_llr: Vec<f64> = (0..half).map(|k| bit_node(a[k], b[k], upper[k])).collect();
    let lower = sc_node(code, pinned, offset + half, &right_llr, u);
    upper
        .iter()
        .zip(&lower)
        .map(|(&x, &y)| x ^ y)
        .chain(lower.iter().copied())
        .collect()
}

/// Plain successive cancellation with hard decisions at every leaf.
pub fn sc_decode(
    llr: &LlrVector,
    syndrome: &Syndrome,
    crc_checksum: &BitVector,
    code: &PolarCode,
) -> Result<DecodeOutput> {
    let (llr, pinned) = prepare(llr, syndrome, crc_checksum, code)?;
    let mut u = vec![0u8; code.n()];
    sc_node(code, &pinned, 0, &llr, &mut u);
    let info_bits: Vec<u8> = code.info_set().iter().map(|&i| u[i]).collect();
    let crc_ok = passes_crc(code, &info_bits, crc_checksum);
    let (message, _) = split_info(code, &info_bits);
    Ok(DecodeOutput {
        message: BitVector::from_bits(message)?,
        crc_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::super::code::construct_code;
    use super::super::slepian_wolf::{llr_from_side_info, sw_encode};
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    fn random_bits<R: Rng>(n: usize, rng: &mut R) -> BitVector {
        BitVector::from_bools((0..n).map(|_| rng.random::<bool>()))
    }

    fn through_bsc<R: Rng>(q: &BitVector, p: f64, rng: &mut R) -> BitVector {
        BitVector::from_bools(q.as_slice().iter().map(|&b| (b == 1) ^ rng.random_bool(p)))
    }

    #[test]
    fn exact_side_information_recovers_reference() {
        let code = construct_code(1024, 10, 16, 0.2).unwrap();
        let mut rng = seeded(21);
        for _ in 0..200 {
            let q = random_bits(1024, &mut rng);
            let enc = sw_encode(&q, &code).unwrap();
            let llr = llr_from_side_info(&q, 1e-3).unwrap();
            let out = scl_decode(&llr, &enc.syndrome, &enc.crc_checksum, &code).unwrap();
            assert_eq!(out.message, enc.reference);
            assert!(out.crc_ok);
        }
    }

    #[test]
    fn noisy_side_information_below_capacity() {
        let code = construct_code(256, 16, 8, 0.1).unwrap();
        let mut rng = seeded(22);
        let mut failures = 0;
        for _ in 0..200 {
            let q = random_bits(256, &mut rng);
            let enc = sw_encode(&q, &code).unwrap();
            let side = through_bsc(&q, 0.1, &mut rng);
            let llr = llr_from_side_info(&side, 0.1).unwrap();
            let out = scl_decode(&llr, &enc.syndrome, &enc.crc_checksum, &code).unwrap();
            failures += usize::from(out.message != enc.reference);
        }
        assert!(failures <= 4, "{failures} failures");
    }

    #[test]
    fn list_of_one_is_successive_cancellation() {
        let code = construct_code(512, 40, 8, 0.2).unwrap().with_list_size(1).unwrap();
        let mut rng = seeded(23);
        for _ in 0..200 {
            let q = random_bits(512, &mut rng);
            let enc = sw_encode(&q, &code).unwrap();
            let side = through_bsc(&q, 0.2, &mut rng);
            let llr = llr_from_side_info(&side, 0.2).unwrap();
            let sc = sc_decode(&llr, &enc.syndrome, &enc.crc_checksum, &code).unwrap();
            let scl = scl_decode(&llr, &enc.syndrome, &enc.crc_checksum, &code).unwrap();
            assert_eq!(sc, scl);
        }
    }

    #[test]
    fn larger_lists_keep_sc_successes() {
        let base = construct_code(512, 40, 8, 0.2).unwrap();
        let mut rng = seeded(24);
        let mut checked = 0;
        for _ in 0..200 {
            let q = random_bits(512, &mut rng);
            let enc = sw_encode(&q, &base).unwrap();
            let side = through_bsc(&q, 0.15, &mut rng);
            let llr = llr_from_side_info(&side, 0.15).unwrap();
            let sc = sc_decode(&llr, &enc.syndrome, &enc.crc_checksum, &base).unwrap();
            if sc.message != enc.reference {
                continue;
            }
            checked += 1;
            for l in [2, 4, 8] {
                let code = base.clone().with_list_size(l).unwrap();
                let out = scl_decode(&llr, &enc.syndrome, &enc.crc_checksum, &code).unwrap();
                assert_eq!(out.message, sc.message, "L={l}");
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn uninformative_side_information_gives_coin_flips() {
        let code = construct_code(1024, 10, 16, 0.2).unwrap();
        let mut rng = seeded(25);
        let trials = 400;
        let mut errors = 0;
        for _ in 0..trials {
            let q = random_bits(1024, &mut rng);
            let enc = sw_encode(&q, &code).unwrap();
            let llr = llr_from_side_info(&random_bits(1024, &mut rng), 0.5).unwrap();
            let out = scl_decode(&llr, &enc.syndrome, &enc.crc_checksum, &code).unwrap();
            errors += out
                .message
                .as_slice()
                .iter()
                .zip(enc.reference.as_slice())
                .filter(|(a, b)| a != b)
                .count();
        }
        let ber = errors as f64 / (trials * 10) as f64;
        let se = (0.25 / (trials * 10) as f64).sqrt();
        assert!((ber - 0.5).abs() < 4.0 * se, "{ber}");
    }

    #[test]
    fn dimension_checks() {
        let code = construct_code(64, 4, 8, 0.2).unwrap();
        let q = BitVector::zeros(64);
        let enc = sw_encode(&q, &code).unwrap();
        let llr = llr_from_side_info(&q, 0.1).unwrap();
        assert!(scl_decode(&LlrVector(vec![0.0; 32]), &enc.syndrome, &enc.crc_checksum, &code).is_err());
        assert!(scl_decode(&llr, &Syndrome(BitVector::zeros(3)), &enc.crc_checksum, &code).is_err());
        assert!(scl_decode(&llr, &enc.syndrome, &BitVector::zeros(16), &code).is_err());
        let mut bad = llr.clone();
        bad.0[3] = f64::NAN;
        assert!(scl_decode(&bad, &enc.syndrome, &enc.crc_checksum, &code).is_err());
    }

    #[test]
    fn decoding_is_deterministic() {
        let code = construct_code(1024, 10, 16, 0.25).unwrap();
        let mut rng = seeded(26);
        let q = random_bits(1024, &mut rng);
        let enc = sw_encode(&q, &code).unwrap();
        let llr = llr_from_side_info(&through_bsc(&q, 0.3, &mut rng), 0.25).unwrap();
        let a = scl_decode(&llr, &enc.syndrome, &enc.crc_checksum, &code).unwrap();
        let b = scl_decode(&llr, &enc.syndrome, &enc.crc_checksum, &code).unwrap();
        assert_eq!(a, b);
    }
}
