//! Enrollment and verification: the two phases of reconciliation-based
//! authentication.
//!
//! # Enrollment record byte layout
//!
//! All integers are big-endian. Bit fields are packed most significant bit
//! first and zero padded to a whole byte.
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `b"PLAR"`                         |
//! | 4      | 1    | format version (`1`)                    |
//! | 5      | 4    | code length `n` (u32)                   |
//! | 9      | 4    | message length `k` (u32)                |
//! | 13     | 1    | CRC width `c` (u8)                      |
//! | 14     | 8    | code fingerprint (u64)                  |
//! | 22     | 4+s  | syndrome: bit count `n-k-c` (u32), bits |
//! | ..     | 4+t  | CRC checksum: bit count `c` (u32), bits |
//! | ..     | 4+r  | reference: bit count `k` (u32), bits    |
//!
//! The record must end exactly after the reference field.

use serde::{Deserialize, Serialize};

use crate::bits::BitVector;
use crate::error::{Error, Result};
use crate::hypotest::{decide, Decision};
use crate::polar::{llr_from_side_info, scl_decode, sw_encode, PolarCode, Syndrome};

const MAGIC: &[u8; 4] = b"PLAR";
const FORMAT_VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeId {
    pub n: u32,
    pub k: u32,
    pub crc_bits: u8,
    pub fingerprint: u64,
}

impl CodeId {
    pub fn of(code: &PolarCode) -> Self {
        CodeId {
            n: code.n() as u32,
            k: code.k() as u32,
            crc_bits: code.crc_bits() as u8,
            fingerprint: code.fingerprint(),
        }
    }
}

/// Helper data kept by Bob after the training phase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnrollmentRecord {
    pub code_id: CodeId,
    pub syndrome: Syndrome,
    pub crc_checksum: BitVector,
    /// Reconciled vector of the training phase.
    pub reference: BitVector,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthOutcome {
    pub reconciled: BitVector,
    /// Hamming distance between `reconciled` and the enrolled reference.
    pub eta: usize,
    pub crc_ok: bool,
    pub decision: Option<Decision>,
}

impl AuthOutcome {
    pub fn decide(mut self, eta_th: i64) -> Self {
        self.decision = Some(decide(self.eta, eta_th));
        self
    }
}

pub fn enroll(q_a: &BitVector, code: &PolarCode) -> Result<EnrollmentRecord> {
    let enc = sw_encode(q_a, code)?;
    Ok(EnrollmentRecord {
        code_id: CodeId::of(code),
        syndrome: enc.syndrome,
        crc_checksum: enc.crc_checksum,
        reference: enc.reference,
    })
}

/// Probability that two mean-zero 1-bit quantizations disagree between the
/// enrolled and the fresh measurement of the legitimate channel.
///
/// The fresh and enrolled real features are jointly Gaussian with
/// correlation `beta / (1 + 1/snr)`; sign disagreement of such a pair has
/// probability `arccos(rho) / pi`.
pub fn crossover_probability(beta: f64, snr_db: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::param("beta", format!("{beta} is outside [0, 1]")));
    }
    if snr_db.is_nan() {
        return Err(Error::param("snr_db", "is NaN"));
    }
    let rho = beta / (1.0 + 10f64.powf(-snr_db / 10.0));
    Ok(rho.clamp(-1.0, 1.0).acos() / std::f64::consts::PI)
}

pub fn hamming(a: &BitVector, b: &BitVector) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::dim("hamming", a.len(), b.len()));
    }
    Ok(a.as_slice()
        .iter()
        .zip(b.as_slice())
        .filter(|(x, y)| x != y)
        .count())
}

/// Reconciles `q_u` against the enrolled syndrome, decoding as if `q_u` were
/// the enrolled vector seen through BSC(`p_assumed`).
pub fn verify(
    q_u: &BitVector,
    record: &EnrollmentRecord,
    p_assumed: f64,
    code: &PolarCode,
) -> Result<AuthOutcome> {
    if record.code_id != CodeId::of(code) {
        return Err(Error::Record(format!(
            "record was enrolled with code {:?}, verifier uses {:?}",
            record.code_id,
            CodeId::of(code)
        )));
    }
    if q_u.len() != code.n() {
        return Err(Error::dim("verify", code.n(), q_u.len()));
    }
    let llr = llr_from_side_info(q_u, p_assumed)?;
    let out = scl_decode(&llr, &record.syndrome, &record.crc_checksum, code)?;
    let eta = hamming(&out.message, &record.reference)?;
    Ok(AuthOutcome {
        reconciled: out.message,
        eta,
        crc_ok: out.crc_ok,
        decision: None,
    })
}

fn push_field(buf: &mut Vec<u8>, bits: &BitVector) {
    buf.extend_from_slice(&(bits.len() as u32).to_be_bytes());
    buf.extend_from_slice(&bits.to_packed());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos + len;
        let slice = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Record(format!("truncated while reading {what}")))?;
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn field(&mut self, what: &str, expected: usize) -> Result<BitVector> {
        let len = self.u32(what)? as usize;
        if len != expected {
            return Err(Error::Record(format!("{what} holds {len} bits, expected {expected}")));
        }
        BitVector::from_packed(self.take(len.div_ceil(8), what)?, len)
    }
}

impl EnrollmentRecord {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.push(FORMAT_VERSION);
        buf.extend_from_slice(&self.code_id.n.to_be_bytes());
        buf.extend_from_slice(&self.code_id.k.to_be_bytes());
        buf.push(self.code_id.crc_bits);
        buf.extend_from_slice(&self.code_id.fingerprint.to_be_bytes());
        push_field(&mut buf, &self.syndrome.0);
        push_field(&mut buf, &self.crc_checksum);
        push_field(&mut buf, &self.reference);
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4, "magic")? != MAGIC {
            return Err(Error::Record("bad magic".into()));
        }
        let version = r.take(1, "version")?[0];
        if version != FORMAT_VERSION {
            return Err(Error::Record(format!("unsupported version {version}")));
        }
        let n = r.u32("n")?;
        let k = r.u32("k")?;
        let crc_bits = r.take(1, "crc width")?[0];
        let fingerprint = u64::from_be_bytes(r.take(8, "fingerprint")?.try_into().unwrap());
        let syndrome_len = (n as usize)
            .checked_sub(k as usize + crc_bits as usize)
            .ok_or_else(|| Error::Record(format!("k + c exceeds n = {n}")))?;
        let syndrome = Syndrome(r.field("syndrome", syndrome_len)?);
        let crc_checksum = r.field("crc checksum", crc_bits as usize)?;
        let reference = r.field("reference", k as usize)?;
        if r.pos != bytes.len() {
            return Err(Error::Record(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(EnrollmentRecord {
            code_id: CodeId {
                n,
                k,
                crc_bits,
                fingerprint,
            },
            syndrome,
            crc_checksum,
            reference,
        })
    }

    /// Human-readable form for debugging.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Record(e.to_string()))
    }
}
