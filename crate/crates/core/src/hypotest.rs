//! Binomial model of the reconciled-vector Hamming distance and the
//! threshold test built on it.
//!
//! Under either hypothesis the distance between two K-bit reconciled vectors
//! is a sum of i.i.d. Bernoulli bit errors, so `eta ~ Binomial(K, p)` with
//! `p = p0` for the legitimate user and `p = p1` for an impersonator. The
//! false-alarm and detection probabilities are upper tails of those laws.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Above this K the mass function switches from exact binomial
/// coefficients to log-gamma.
const EXACT_LIMIT: usize = 30;

/// Which user transmits in the authentication slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    /// Alice, the enrolled user.
    H0,
    /// Eve, an impersonator.
    H1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    /// Legitimate user (eta <= threshold).
    H0Accept,
    /// Impersonation detected.
    H1Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialTest {
    pub k: usize,
    pub p0: f64,
    pub p1: f64,
    /// `-1` always rejects, `k` always accepts.
    pub eta_th: i64,
}

impl BinomialTest {
    pub fn validate(&self) -> Result<()> {
        check_prob("p0", self.p0)?;
        check_prob("p1", self.p1)?;
        check_threshold(self.k, self.eta_th)
    }

    pub fn p_fa(&self) -> Result<f64> {
        p_fa(self.k, self.p0, self.eta_th)
    }

    pub fn p_d(&self) -> Result<f64> {
        p_d(self.k, self.p1, self.eta_th)
    }
}

fn check_prob(name: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::param(name, format!("{p} is outside [0, 1]")))
    }
}

fn check_threshold(k: usize, eta_th: i64) -> Result<()> {
    if (-1..=k as i64).contains(&eta_th) {
        Ok(())
    } else {
        Err(Error::param("eta_th", format!("{eta_th} is outside [-1, {k}]")))
    }
}

fn exact_binomial(k: usize, n: usize) -> f64 {
    let n = n.min(k - n);
    (0..n).fold(1u64, |acc, i| acc * (k - i) as u64 / (i + 1) as u64) as f64
}

/// `P(eta = n)` for `eta ~ Binomial(k, p)`.
pub fn pmf(k: usize, p: f64, n: usize) -> Result<f64> {
    check_prob("p", p)?;
    if n > k {
        return Err(Error::param("n", format!("{n} exceeds k = {k}")));
    }
    if p == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    if p == 1.0 {
        return Ok(if n == k { 1.0 } else { 0.0 });
    }
    if k <= EXACT_LIMIT {
        return Ok(exact_binomial(k, n) * p.powi(n as i32) * (1.0 - p).powi((k - n) as i32));
    }
    let ln_choose = ln_gamma(k as f64 + 1.0) - ln_gamma(n as f64 + 1.0) - ln_gamma((k - n) as f64 + 1.0);
    Ok((ln_choose + n as f64 * p.ln() + (k - n) as f64 * (-p).ln_1p()).exp())
}

fn upper_tail(k: usize, p: f64, eta_th: i64) -> Result<f64> {
    check_prob("p", p)?;
    check_threshold(k, eta_th)?;
    let first = (eta_th + 1) as usize;
    let mut total = 0.0;
    for n in first..=k {
        total += pmf(k, p, n)?;
    }
    Ok(total.min(1.0))
}

/// `P(eta > eta_th | H0)`.
pub fn p_fa(k: usize, p0: f64, eta_th: i64) -> Result<f64> {
    upper_tail(k, p0, eta_th)
}

/// `P(eta > eta_th | H1)`.
pub fn p_d(k: usize, p1: f64, eta_th: i64) -> Result<f64> {
    upper_tail(k, p1, eta_th)
}

/// Smallest integer threshold in `[0, k]` whose false-alarm probability does
/// not exceed `target_pfa`.
pub fn threshold_for_pfa(k: usize, p0: f64, target_pfa: f64) -> Result<i64> {
    if !(target_pfa > 0.0 && target_pfa < 1.0) {
        return Err(Error::param("target_pfa", format!("{target_pfa} is outside (0, 1)")));
    }
    for eta_th in 0..k as i64 {
        if p_fa(k, p0, eta_th)? <= target_pfa {
            return Ok(eta_th);
        }
    }
    Ok(k as i64)
}

pub fn decide(eta: usize, eta_th: i64) -> Decision {
    if eta as i64 <= eta_th {
        Decision::H0Accept
    } else {
        Decision::H1Reject
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Tail probability by walking all 2^k error patterns.
    fn enumerate_tail(k: usize, p: f64, eta_th: i64) -> f64 {
        (0u32..1 << k)
            .filter(|pattern| pattern.count_ones() as i64 > eta_th)
            .map(|pattern| {
                let w = pattern.count_ones() as i32;
                p.powi(w) * (1.0 - p).powi(k as i32 - w)
            })
            .sum()
    }

    #[test]
    fn degenerate_distributions() {
        assert_eq!(pmf(10, 0.0, 0).unwrap(), 1.0);
        assert_eq!(pmf(10, 0.0, 3).unwrap(), 0.0);
        assert_eq!(pmf(10, 1.0, 10).unwrap(), 1.0);
        assert!(pmf(10, 0.3, 11).is_err());
        assert!(pmf(10, 1.3, 1).is_err());
    }

    #[test]
    fn half_coin_center() {
        assert!((pmf(10, 0.5, 5).unwrap() - 252.0 / 1024.0).abs() < 1e-15);
    }

    #[test]
    fn log_gamma_path_agrees_with_exact_path() {
        // k = 31 is the first log-gamma case; compare with enumeration-free
        // exact coefficients computed in u128.
        let k = 40usize;
        for n in [0, 1, 7, 20, 39, 40] {
            let c = (0..n.min(k - n)).fold(1u128, |acc, i| acc * (k - i) as u128 / (i + 1) as u128);
            let exact = c as f64 * 0.3f64.powi(n as i32) * 0.7f64.powi((k - n) as i32);
            let got = pmf(k, 0.3, n).unwrap();
            assert!((got - exact).abs() <= 1e-12 * exact.max(1e-300), "n={n}");
        }
    }

    #[test]
    fn false_alarm_examples() {
        assert_eq!(p_fa(10, 0.0, 0).unwrap(), 0.0);
        assert!((p_fa(10, 0.5, 4).unwrap() - 638.0 / 1024.0).abs() < 1e-15);
        assert!((p_fa(10, 0.5, 4).unwrap() - enumerate_tail(10, 0.5, 4)).abs() < 1e-15);
        assert_eq!(p_fa(10, 0.3, 10).unwrap(), 0.0);
        assert!((p_fa(10, 0.3, -1).unwrap() - 1.0).abs() < 1e-15);
        assert!(p_fa(10, 0.3, 11).is_err());
        assert!(p_fa(10, 0.3, -2).is_err());
    }

    #[test]
    fn detection_examples() {
        assert!((p_d(10, 0.5, 4).unwrap() - 0.6230).abs() < 1e-4);
        for eta_th in 0..10 {
            assert_eq!(p_d(10, 1.0, eta_th).unwrap(), 1.0);
        }
        let th = threshold_for_pfa(10, 0.0, 1e-3).unwrap();
        assert_eq!(th, 0);
        // 1 - 0.4975^10
        assert!((p_d(10, 0.5025, th).unwrap() - (1.0 - 0.4975f64.powi(10))).abs() < 1e-12);
        assert!(p_d(10, 0.5025, th).unwrap() > 0.999);
    }

    #[test]
    fn threshold_examples() {
        // Exact tails for p0 = 1/10: weights C(10, n) 9^(10-n) / 10^10.
        let weight = |n: u32| {
            let c = (0..n).fold(1u128, |acc, i| acc * (10 - i) as u128 / (i + 1) as u128);
            c * 9u128.pow(10 - n)
        };
        let tail = |th: u32| (th + 1..=10).map(weight).sum::<u128>() as f64 / 1e10;
        assert!((tail(4) - 1.634_937_4e-3).abs() < 1e-12);
        assert!((tail(5) - 1.469_026e-4).abs() < 1e-12);
        assert!((p_fa(10, 0.1, 4).unwrap() - tail(4)).abs() < 1e-15);
        assert_eq!(threshold_for_pfa(10, 0.1, 1e-3).unwrap(), 5);
        assert_eq!(threshold_for_pfa(10, 0.0, 1e-3).unwrap(), 0);
        assert_eq!(threshold_for_pfa(10, 0.3, 0.999999).unwrap(), 0);
        assert!(threshold_for_pfa(10, 0.3, 0.0).is_err());
        assert_eq!(threshold_for_pfa(10, 1.0, 1e-3).unwrap(), 10);
    }

    #[test]
    fn decision_rule() {
        assert_eq!(decide(0, 0), Decision::H0Accept);
        assert_eq!(decide(3, 3), Decision::H0Accept);
        assert_eq!(decide(10, 9), Decision::H1Reject);
        assert_eq!(decide(0, -1), Decision::H1Reject);
    }

    #[test]
    fn exhaustive_equivalence_small_k() {
        for k in 1..=12usize {
            for p in [0.1, 0.25, 0.5] {
                for eta_th in -1..=k as i64 {
                    let closed = p_fa(k, p, eta_th).unwrap();
                    assert!((closed - enumerate_tail(k, p, eta_th)).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn binomial_test_struct() {
        let t = BinomialTest { k: 10, p0: 0.1, p1: 0.5, eta_th: 5 };
        t.validate().unwrap();
        assert!(t.p_fa().unwrap() < 1e-3);
        assert!(t.p_d().unwrap() > 0.3);
        assert!(BinomialTest { eta_th: 11, ..t }.validate().is_err());
    }

    proptest! {
        #[test]
        fn normalized(k in 1usize..=64, p in 0.0f64..=1.0) {
            let total: f64 = (0..=k).map(|n| pmf(k, p, n).unwrap()).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn tails_monotone(k in 1usize..=64, p in 0.0f64..=1.0, dp in 0.0f64..0.2) {
            let p_hi = (p + dp).min(1.0);
            let mut prev = 1.0 + 1e-12;
            for eta_th in -1..=k as i64 {
                let v = p_d(k, p, eta_th).unwrap();
                prop_assert!(v <= prev + 1e-12);
                prop_assert!(p_d(k, p_hi, eta_th).unwrap() + 1e-12 >= v);
                prev = v;
            }
        }
    }
}
