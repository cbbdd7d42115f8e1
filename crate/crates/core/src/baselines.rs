//! Comparison schemes: a norm test on raw channel estimates and a
//! key-based challenge-response exchange whose statistic is the real part
//! of the key-derotated response sum.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitVector;
use crate::channel::{
    attacker_channel, complex_gaussian, draw_channel, evolve_channel, measure, ChannelParams,
    ChannelState, Measurement,
};
use crate::error::{Error, Result};
use crate::hypotest::{Decision, Hypothesis};

/// Squared distance between two channel estimates, `sum |a_i - b_i|^2`.
pub fn norm_stat(h_hat_t: &Measurement, h_hat_t1: &Measurement) -> Result<f64> {
    if h_hat_t.values.len() != h_hat_t1.values.len() {
        return Err(Error::dim("norm_stat", h_hat_t.values.len(), h_hat_t1.values.len()));
    }
    Ok(h_hat_t
        .values
        .iter()
        .zip(&h_hat_t1.values)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum())
}

/// Norm statistic for one enrolled/fresh measurement pair.
pub fn norm_trial<R: Rng + ?Sized>(
    params: &ChannelParams,
    hypothesis: Hypothesis,
    rng: &mut R,
) -> Result<f64> {
    let h_t = draw_channel(params, rng)?;
    let enrolled = measure(&h_t, params, rng)?;
    let fresh_channel = match hypothesis {
        Hypothesis::H0 => evolve_channel(&h_t, params, rng)?,
        Hypothesis::H1 => attacker_channel(params, rng)?,
    };
    let fresh = measure(&fresh_channel, params, rng)?;
    norm_stat(&enrolled, &fresh)
}

/// Smallest sample value that at most `floor(alpha * n)` samples exceed.
pub fn upper_quantile(samples: &mut [f64], alpha: f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len();
    let allowed = (alpha * n as f64).floor() as usize;
    samples[n - 1 - allowed.min(n - 1)]
}

/// Largest sample value that at most `floor(alpha * n)` samples fall below.
pub fn lower_quantile(samples: &mut [f64], alpha: f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len();
    let allowed = (alpha * n as f64).floor() as usize;
    samples[allowed.min(n - 1)]
}

fn check_calibration(target_pfa: f64, trials: usize) -> Result<()> {
    if !(target_pfa > 0.0 && target_pfa < 1.0) {
        return Err(Error::param("target_pfa", format!("{target_pfa} is outside (0, 1)")));
    }
    let needed = (10.0 / target_pfa).ceil() as usize;
    if trials < needed {
        return Err(Error::param(
            "trials",
            format!("{trials} trials cannot calibrate P_FA = {target_pfa}; need at least {needed}"),
        ));
    }
    Ok(())
}

/// Monte Carlo `(1 - target_pfa)` quantile of the norm statistic under H0.
pub fn norm_threshold<R: Rng + ?Sized>(
    params: &ChannelParams,
    target_pfa: f64,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    check_calibration(target_pfa, trials)?;
    let mut stats = (0..trials)
        .map(|_| norm_trial(params, Hypothesis::H0, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(upper_quantile(&mut stats, target_pfa))
}

pub fn norm_decide(stat: f64, threshold: f64) -> Decision {
    if stat <= threshold {
        Decision::H0Accept
    } else {
        Decision::H1Reject
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KeyOwner {
    Bob,
    User,
}

/// Two key bits per antenna, antenna-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyMaterial {
    pub bits: BitVector,
    pub owner: KeyOwner,
}

impl KeyMaterial {
    pub fn random<R: Rng + ?Sized>(n_antennas: usize, owner: KeyOwner, rng: &mut R) -> Self {
        KeyMaterial {
            bits: BitVector::from_bools((0..2 * n_antennas).map(|_| rng.random::<bool>())),
            owner,
        }
    }

    fn phases(&self) -> impl Iterator<Item = f64> + '_ {
        self.bits
            .as_slice()
            .chunks_exact(2)
            .map(|pair| key_map([pair[0], pair[1]]))
    }
}

/// Gray-coded quadrant phase of a two-bit key symbol.
pub fn key_map(two_bits: [u8; 2]) -> f64 {
    match two_bits {
        [0, 0] => 0.0,
        [0, 1] => FRAC_PI_2,
        [1, 1] => PI,
        _ => 3.0 * FRAC_PI_2,
    }
}

/// One inquiry/response/completion exchange; returns
/// `Re{ sum_i exp(-j M(k_B,i)) y_i }`.
///
/// Bob sends unit symbols with uniform phases over `inquiry`. The user
/// measures the received phase, pre-compensates it and rotates by its key
/// phase, and answers over `response`. Bob strips his own inquiry phase and
/// derotates by his key.
pub fn key_scheme_stat<R: Rng + ?Sized>(
    inquiry: &ChannelState,
    response: &ChannelState,
    user_keys: &KeyMaterial,
    bob_keys: &KeyMaterial,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<f64> {
    params.validate()?;
    let nb = params.n_antennas;
    for (what, len) in [
        ("key_scheme_stat: inquiry channel", inquiry.gains.len()),
        ("key_scheme_stat: response channel", response.gains.len()),
    ] {
        if len != nb {
            return Err(Error::dim(what, nb, len));
        }
    }
    for (what, keys) in [("key_scheme_stat: user keys", user_keys), ("key_scheme_stat: bob keys", bob_keys)] {
        if keys.bits.len() != 2 * nb {
            return Err(Error::dim(what, 2 * nb, keys.bits.len()));
        }
    }
    let sigma_z2 = params.sigma_z2();
    let mut total = 0.0;
    for (((&h_t, &h_t1), user_phase), bob_phase) in inquiry
        .gains
        .iter()
        .zip(&response.gains)
        .zip(user_keys.phases())
        .zip(bob_keys.phases())
    {
        let s_b = Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI));
        let x_u = h_t * s_b + complex_gaussian(sigma_z2, rng);
        let s_u = Complex64::from_polar(1.0, user_phase - x_u.arg());
        let x_b = h_t1 * s_u + complex_gaussian(sigma_z2, rng);
        let y = x_b * s_b;
        total += (Complex64::from_polar(1.0, -bob_phase) * y).re;
    }
    Ok(total)
}

/// Key statistic for one exchange. Under H0 Alice answers with the shared
/// key over her evolved channel; under H1 Eve answers with her own random
/// key over her own channels.
pub fn key_trial<R: Rng + ?Sized>(
    params: &ChannelParams,
    hypothesis: Hypothesis,
    rng: &mut R,
) -> Result<f64> {
    let bob_keys = KeyMaterial::random(params.n_antennas, KeyOwner::Bob, rng);
    let (inquiry, response, user_keys) = match hypothesis {
        Hypothesis::H0 => {
            let h_t = draw_channel(params, rng)?;
            let h_t1 = evolve_channel(&h_t, params, rng)?;
            let keys = KeyMaterial {
                bits: bob_keys.bits.clone(),
                owner: KeyOwner::User,
            };
            (h_t, h_t1, keys)
        }
        Hypothesis::H1 => {
            let e_t = attacker_channel(params, rng)?;
            let e_t1 = attacker_channel(params, rng)?;
            (e_t, e_t1, KeyMaterial::random(params.n_antennas, KeyOwner::User, rng))
        }
    };
    key_scheme_stat(&inquiry, &response, &user_keys, &bob_keys, params, rng)
}

/// Monte Carlo `target_pfa` lower quantile of the key statistic under H0.
pub fn key_threshold<R: Rng + ?Sized>(
    params: &ChannelParams,
    target_pfa: f64,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    check_calibration(target_pfa, trials)?;
    let mut stats = (0..trials)
        .map(|_| key_trial(params, Hypothesis::H0, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(lower_quantile(&mut stats, target_pfa))
}

/// Accept when the statistic reaches the threshold.
pub fn key_scheme_decide(stat: f64, threshold: f64) -> Decision {
    if stat >= threshold {
        Decision::H0Accept
    } else {
        Decision::H1Reject
    }
}
