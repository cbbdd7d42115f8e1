//! Gauss-Markov fading channels and Bob's noisy channel estimates.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Receive antennas at Bob.
    pub n_antennas: usize,
    /// Correlation between consecutive slots of the legitimate channel.
    pub beta: f64,
    /// Per-entry channel variance.
    pub sigma_h2: f64,
    /// Ratio sigma_h2 / sigma_z2 in dB. `f64::INFINITY` means noiseless.
    pub snr_db: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            n_antennas: 32,
            beta: 0.9,
            sigma_h2: 1.0,
            snr_db: 10.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_antennas == 0 {
            return Err(Error::param("n_antennas", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::param("beta", format!("{} is outside [0, 1]", self.beta)));
        }
        if !(self.sigma_h2 > 0.0 && self.sigma_h2.is_finite()) {
            return Err(Error::param(
                "sigma_h2",
                format!("{} is not a positive finite variance", self.sigma_h2),
            ));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::param("snr_db", format!("{} is not usable", self.snr_db)));
        }
        Ok(())
    }

    /// Measurement noise variance. Clamped to the smallest positive normal
    /// double so the noiseless limit stays a valid Gaussian.
    pub fn sigma_z2(&self) -> f64 {
        (self.sigma_h2 / 10f64.powf(self.snr_db / 10.0)).max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Owner {
    Alice,
    Eve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    pub gains: Vec<Complex64>,
    pub owner: Owner,
    pub slot: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub values: Vec<Complex64>,
}

/// One CN(0, variance) sample: two independent real Gaussians of variance
/// `variance / 2`.
pub fn complex_gaussian<R: Rng + ?Sized>(variance: f64, rng: &mut R) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

fn gaussian_vector<R: Rng + ?Sized>(len: usize, variance: f64, rng: &mut R) -> Vec<Complex64> {
    (0..len).map(|_| complex_gaussian(variance, rng)).collect()
}

/// Alice's channel at slot 0.
pub fn draw_channel<R: Rng + ?Sized>(params: &ChannelParams, rng: &mut R) -> Result<ChannelState> {
    params.validate()?;
    Ok(ChannelState {
        gains: gaussian_vector(params.n_antennas, params.sigma_h2, rng),
        owner: Owner::Alice,
        slot: 0,
    })
}

/// Advances Alice's channel one slot: `beta * h + sqrt(1 - beta^2) * n`.
pub fn evolve_channel<R: Rng + ?Sized>(
    state: &ChannelState,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<ChannelState> {
    params.validate()?;
    if state.owner != Owner::Alice {
        return Err(Error::param("state.owner", "only Alice's channel evolves"));
    }
    if state.gains.len() != params.n_antennas {
        return Err(Error::dim("evolve_channel", params.n_antennas, state.gains.len()));
    }
    let innovation = (1.0 - params.beta * params.beta).sqrt();
    let gains = state
        .gains
        .iter()
        .map(|&h| params.beta * h + innovation * complex_gaussian(params.sigma_h2, rng))
        .collect();
    Ok(ChannelState {
        gains,
        owner: Owner::Alice,
        slot: state.slot + 1,
    })
}

/// Applies [`evolve_channel`] `steps` times.
pub fn evolve_channel_by<R: Rng + ?Sized>(
    state: &ChannelState,
    params: &ChannelParams,
    steps: u64,
    rng: &mut R,
) -> Result<ChannelState> {
    let mut current = state.clone();
    for _ in 0..steps {
        current = evolve_channel(&current, params, rng)?;
    }
    Ok(current)
}

/// Eve's channel to Bob, independent of Alice's.
pub fn attacker_channel<R: Rng + ?Sized>(
    params: &ChannelParams,
    rng: &mut R,
) -> Result<ChannelState> {
    params.validate()?;
    Ok(ChannelState {
        gains: gaussian_vector(params.n_antennas, params.sigma_h2, rng),
        owner: Owner::Eve,
        slot: 1,
    })
}

/// Bob's estimate of `state` with fresh CN(0, sigma_z2) noise.
pub fn measure<R: Rng + ?Sized>(
    state: &ChannelState,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<Measurement> {
    params.validate()?;
    if state.gains.len() != params.n_antennas {
        return Err(Error::dim("measure", params.n_antennas, state.gains.len()));
    }
    let sigma_z2 = params.sigma_z2();
    Ok(Measurement {
        values: state
            .gains
            .iter()
            .map(|&h| h + complex_gaussian(sigma_z2, rng))
            .collect(),
    })
}
