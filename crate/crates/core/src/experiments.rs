//! Monte Carlo harness: bit-error estimation, PMF validation, ROC curves and
//! detection-probability sweeps over SNR and code rate.
//!
//! Every trial draws from its own generator keyed by (master seed, scenario
//! fingerprint, stream, trial index). Trials run in parallel but results are
//! collected and reduced in trial order, so output does not depend on the
//! thread count.

use std::fmt;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{key_trial, lower_quantile, norm_trial, upper_quantile};
use crate::bits::BitVector;
use crate::channel::{
    attacker_channel, draw_channel, evolve_channel_by, measure, ChannelParams, ChannelState,
};
use crate::error::{Error, Result};
use crate::features::{assemble_features, quantize, FeatureConfig};
use crate::hypotest::{p_d, p_fa, pmf, threshold_for_pfa, Hypothesis};
use crate::polar::{construct_code, PolarCode, DEFAULT_LIST_SIZE};
use crate::recon::{crossover_probability, enroll, verify, AuthOutcome};
use crate::rng::{fnv1a, trial_rng};

/// Lower clamp on the assumed BSC crossover, keeping LLRs finite.
const MIN_CROSSOVER: f64 = 1e-9;
/// Below this many expected false alarms the empirical rate is flagged.
const MIN_EXPECTED_EVENTS: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodeParams {
    /// K / N; K = round(rate * N).
    pub rate: f64,
    pub crc_bits: usize,
    pub list_size: usize,
    /// Construction crossover. Defaults to the legitimate-channel crossover
    /// at the operating point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design_p: Option<f64>,
}

impl Default for CodeParams {
    fn default() -> Self {
        CodeParams {
            rate: 0.01,
            crc_bits: 16,
            list_size: DEFAULT_LIST_SIZE,
            design_p: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub channel: ChannelParams,
    pub features: FeatureConfig,
    pub code: CodeParams,
    pub target_pfa: f64,
    /// Trials per hypothesis for the reconciliation scheme.
    pub trials: usize,
    /// Trials per sample set for the comparison schemes.
    pub baseline_trials: usize,
    pub master_seed: u64,
    /// Slots between enrollment and authentication.
    pub slot_gap: u64,
    pub sampling: Sampling,
}

/// How the M stacked measurements of one phase relate to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// M independent channel realizations, each evolving on its own
    /// between phases.
    #[default]
    Independent,
    /// One channel realization measured M times with fresh noise.
    SameState,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            channel: ChannelParams::default(),
            features: FeatureConfig::default(),
            code: CodeParams::default(),
            target_pfa: 1e-3,
            trials: 10_000,
            baseline_trials: 100_000,
            master_seed: 0,
            slot_gap: 1,
            sampling: Sampling::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        self.features.validate()?;
        if self.features.n_antennas != self.channel.n_antennas {
            return Err(Error::param(
                "n_antennas",
                "feature and channel antenna counts differ",
            ));
        }
        if self.trials < 100 {
            return Err(Error::param("trials", format!("{} is below 100", self.trials)));
        }
        if self.baseline_trials < 100 {
            return Err(Error::param(
                "baseline_trials",
                format!("{} is below 100", self.baseline_trials),
            ));
        }
        if !(self.target_pfa > 0.0 && self.target_pfa < 1.0) {
            return Err(Error::param(
                "target_pfa",
                format!("{} is outside (0, 1)", self.target_pfa),
            ));
        }
        if self.slot_gap == 0 {
            return Err(Error::param("slot_gap", "must be at least 1"));
        }
        self.message_len().map(|_| ())
    }

    pub fn block_length(&self) -> usize {
        self.features.block_length()
    }

    pub fn message_len(&self) -> Result<usize> {
        let rate = self.code.rate;
        if !(rate > 0.0 && rate < 1.0) {
            return Err(Error::param("rate", format!("{rate} is outside (0, 1)")));
        }
        let n = self.block_length();
        let k = (rate * n as f64).round() as usize;
        if k == 0 {
            return Err(Error::param("rate", format!("round({rate} * {n}) is zero")));
        }
        if k + self.code.crc_bits >= n {
            return Err(Error::param(
                "rate",
                format!("K + CRC = {} leaves no frozen positions at N = {n}", k + self.code.crc_bits),
            ));
        }
        Ok(k)
    }

    /// Legitimate-channel crossover the verifier assumes.
    pub fn assumed_crossover(&self) -> Result<f64> {
        Ok(crossover_probability(self.channel.beta, self.channel.snr_db)?.max(MIN_CROSSOVER))
    }

    pub fn build_code(&self) -> Result<PolarCode> {
        let design_p = match self.code.design_p {
            Some(p) => p,
            None => self.assumed_crossover()?.clamp(1e-6, 0.5),
        };
        construct_code(self.block_length(), self.message_len()?, self.code.crc_bits, design_p)?
            .with_list_size(self.code.list_size)
    }

    /// Fingerprint of everything that changes the simulated law. Seed,
    /// trial counts and target P_FA are excluded.
    pub fn scenario_hash(&self) -> u64 {
        let key = serde_json::json!({
            "channel": self.channel,
            "features": self.features,
            "code": self.code,
            "slot_gap": self.slot_gap,
            "sampling": self.sampling,
        });
        fnv1a(key.to_string().as_bytes())
    }

    pub fn with_snr(&self, snr_db: f64) -> Self {
        let mut cfg = self.clone();
        cfg.channel.snr_db = snr_db;
        cfg
    }

    pub fn with_rate(&self, rate: f64) -> Self {
        let mut cfg = self.clone();
        cfg.code.rate = rate;
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Polar Slepian-Wolf reconciliation.
    Proposed,
    /// Norm test on raw estimates.
    Norm,
    /// Key-based challenge-response.
    Key,
    BerH0,
    BerH1,
    PmfH0,
    PmfH1,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::Norm => "norm",
            Scheme::Key => "key",
            Scheme::BerH0 => "ber_h0",
            Scheme::BerH1 => "ber_h1",
            Scheme::PmfH0 => "pmf_h0",
            Scheme::PmfH1 => "pmf_h1",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One plotted point. `x` is P_FA, SNR in dB, code rate, or the distance
/// value for PMF rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub y_closed: Option<f64>,
    pub y_empirical: f64,
    pub achieved_pfa: Option<f64>,
    pub stderr: f64,
    pub trials_used: usize,
    pub scheme: Scheme,
}

impl CurvePoint {
    /// The value to report: closed form when present, else empirical.
    pub fn y(&self) -> f64 {
        self.y_closed.unwrap_or(self.y_empirical)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub points: Vec<CurvePoint>,
    pub warnings: Vec<String>,
    /// Constructed codes, one per operating point.
    pub codes: Vec<crate::polar::CodeDescription>,
}

impl Report {
    fn absorb(&mut self, other: Report) {
        self.points.extend(other.points);
        self.warnings.extend(other.warnings);
        self.codes.extend(other.codes);
    }

    pub fn scheme(&self, scheme: Scheme) -> impl Iterator<Item = &CurvePoint> {
        self.points.iter().filter(move |p| p.scheme == scheme)
    }
}

pub const CSV_HEADER: &str = "x,y_closed,y_empirical,achieved_pfa,stderr,trials,scheme";

pub fn write_csv<W: Write>(points: &[CurvePoint], mut out: W) -> std::io::Result<()> {
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    writeln!(out, "{CSV_HEADER}")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            p.x,
            opt(p.y_closed),
            p.y_empirical,
            opt(p.achieved_pfa),
            p.stderr,
            p.trials_used,
            p.scheme
        )?;
    }
    Ok(())
}

mod stream {
    pub const PROPOSED_H0: u64 = 0;
    pub const PROPOSED_H1: u64 = 1;
    pub const NORM_CALIBRATION: u64 = 2;
    pub const NORM_H1: u64 = 3;
    pub const NORM_HOLDOUT: u64 = 4;
    pub const KEY_CALIBRATION: u64 = 5;
    pub const KEY_H1: u64 = 6;
    pub const KEY_HOLDOUT: u64 = 7;
}

fn measure_block<R: Rng + ?Sized>(
    states: &[ChannelState],
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<BitVector> {
    let measurements = (0..cfg.features.m_samples)
        .map(|i| measure(&states[i % states.len()], &cfg.channel, rng))
        .collect::<Result<Vec<_>>>()?;
    quantize(&assemble_features(&measurements, &cfg.features)?)
}

/// One enrollment followed by one authentication attempt.
pub fn proposed_trial<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    code: &PolarCode,
    hypothesis: Hypothesis,
    rng: &mut R,
) -> Result<AuthOutcome> {
    let realizations = match cfg.sampling {
        Sampling::Independent => cfg.features.m_samples,
        Sampling::SameState => 1,
    };
    let h_a = (0..realizations)
        .map(|_| draw_channel(&cfg.channel, rng))
        .collect::<Result<Vec<_>>>()?;
    let record = enroll(&measure_block(&h_a, cfg, rng)?, code)?;
    let h_u = h_a
        .iter()
        .map(|h| match hypothesis {
            Hypothesis::H0 => evolve_channel_by(h, &cfg.channel, cfg.slot_gap, rng),
            Hypothesis::H1 => attacker_channel(&cfg.channel, rng),
        })
        .collect::<Result<Vec<_>>>()?;
    let q_u = measure_block(&h_u, cfg, rng)?;
    verify(&q_u, &record, cfg.assumed_crossover()?, code)
}

/// Distances from `cfg.trials` independent trials under one hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaSamples {
    pub k: usize,
    pub etas: Vec<usize>,
    pub crc_ok: usize,
}

impl EtaSamples {
    /// Mean per-bit disagreement.
    pub fn ber(&self) -> f64 {
        self.etas.iter().sum::<usize>() as f64 / (self.etas.len() * self.k) as f64
    }

    pub fn histogram(&self) -> Vec<f64> {
        let mut counts = vec![0usize; self.k + 1];
        for &e in &self.etas {
            counts[e] += 1;
        }
        counts
            .into_iter()
            .map(|c| c as f64 / self.etas.len() as f64)
            .collect()
    }

    pub fn exceed_rate(&self, eta_th: i64) -> f64 {
        self.etas.iter().filter(|&&e| e as i64 > eta_th).count() as f64 / self.etas.len() as f64
    }
}

pub fn simulate_eta(cfg: &ScenarioConfig, code: &PolarCode, hypothesis: Hypothesis) -> Result<EtaSamples> {
    cfg.validate()?;
    let stream = match hypothesis {
        Hypothesis::H0 => stream::PROPOSED_H0,
        Hypothesis::H1 => stream::PROPOSED_H1,
    };
    let scenario = cfg.scenario_hash();
    let outcomes = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(cfg.master_seed, scenario, stream, t);
            proposed_trial(cfg, code, hypothesis, &mut rng).map(|o| (o.eta, o.crc_ok))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EtaSamples {
        k: code.k(),
        crc_ok: outcomes.iter().filter(|o| o.1).count(),
        etas: outcomes.into_iter().map(|o| o.0).collect(),
    })
}

/// Mean per-bit disagreement between enrolled and reconciled vectors.
pub fn estimate_ber(hypothesis: Hypothesis, cfg: &ScenarioConfig) -> Result<f64> {
    Ok(simulate_eta(cfg, &cfg.build_code()?, hypothesis)?.ber())
}

fn ber_point(samples: &EtaSamples, x: f64, scheme: Scheme) -> CurvePoint {
    let p = samples.ber();
    let bits = (samples.etas.len() * samples.k) as f64;
    CurvePoint {
        x,
        y_closed: None,
        y_empirical: p,
        achieved_pfa: None,
        stderr: (p * (1.0 - p) / bits).sqrt(),
        trials_used: samples.etas.len(),
        scheme,
    }
}

/// p0 and p1 estimates at the configured operating point.
pub fn estimate_ber_report(cfg: &ScenarioConfig) -> Result<Report> {
    let code = cfg.build_code()?;
    let h0 = simulate_eta(cfg, &code, Hypothesis::H0)?;
    let h1 = simulate_eta(cfg, &code, Hypothesis::H1)?;
    let x = cfg.channel.snr_db;
    Ok(Report {
        points: vec![ber_point(&h0, x, Scheme::BerH0), ber_point(&h1, x, Scheme::BerH1)],
        warnings: Vec::new(),
        codes: vec![code.describe()],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PmfRow {
    pub hypothesis: Hypothesis,
    pub n: usize,
    pub empirical: f64,
    pub closed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PmfValidation {
    pub rows: Vec<PmfRow>,
    pub p0_hat: f64,
    pub p1_hat: f64,
    /// Total-variation distance between histogram and binomial PMF.
    pub tv_h0: f64,
    pub tv_h1: f64,
    pub trials: usize,
    pub code: crate::polar::CodeDescription,
}

impl PmfValidation {
    pub fn report(&self) -> Report {
        let points = self
            .rows
            .iter()
            .map(|r| CurvePoint {
                x: r.n as f64,
                y_closed: Some(r.closed),
                y_empirical: r.empirical,
                achieved_pfa: None,
                stderr: (r.empirical * (1.0 - r.empirical) / self.trials as f64).sqrt(),
                trials_used: self.trials,
                scheme: match r.hypothesis {
                    Hypothesis::H0 => Scheme::PmfH0,
                    Hypothesis::H1 => Scheme::PmfH1,
                },
            })
            .collect();
        Report {
            points,
            warnings: Vec::new(),
            codes: vec![self.code.clone()],
        }
    }
}

/// Empirical distance histograms against Binomial(K, p_hat) under each
/// hypothesis.
pub fn pmf_validation(cfg: &ScenarioConfig) -> Result<PmfValidation> {
    let code = cfg.build_code()?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for hypothesis in [Hypothesis::H0, Hypothesis::H1] {
        let samples = simulate_eta(cfg, &code, hypothesis)?;
        let p_hat = samples.ber();
        let mut tv = 0.0;
        for (n, empirical) in samples.histogram().into_iter().enumerate() {
            let closed = pmf(samples.k, p_hat, n)?;
            tv += (empirical - closed).abs();
            rows.push(PmfRow {
                hypothesis,
                n,
                empirical,
                closed,
            });
        }
        summary.push((p_hat, tv / 2.0));
    }
    Ok(PmfValidation {
        rows,
        p0_hat: summary[0].0,
        p1_hat: summary[1].0,
        tv_h0: summary[0].1,
        tv_h1: summary[1].1,
        trials: cfg.trials,
        code: code.describe(),
    })
}

fn binomial_stderr(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn proposed_points(
    h0: &EtaSamples,
    h1: &EtaSamples,
    pfa_grid: &[f64],
    x_of: impl Fn(f64) -> f64,
    report: &mut Report,
) -> Result<()> {
    let k = h0.k;
    let (p0, p1) = (h0.ber(), h1.ber());
    for &alpha in pfa_grid {
        let eta_th = threshold_for_pfa(k, p0, alpha)?;
        let achieved = p_fa(k, p0, eta_th)?;
        let empirical_fa = h0.exceed_rate(eta_th);
        let expected_events = alpha * h0.etas.len() as f64;
        if expected_events < MIN_EXPECTED_EVENTS {
            report.warnings.push(format!(
                "proposed scheme at P_FA target {alpha}: only {expected_events:.1} false alarms \
                 expected in {} trials; empirical P_FA {empirical_fa} is unreliable, closed form \
                 {achieved} is primary",
                h0.etas.len()
            ));
        }
        let y_emp = h1.exceed_rate(eta_th);
        report.points.push(CurvePoint {
            x: x_of(alpha),
            y_closed: Some(p_d(k, p1, eta_th)?),
            y_empirical: y_emp,
            achieved_pfa: Some(achieved),
            stderr: binomial_stderr(y_emp, h1.etas.len()),
            trials_used: h1.etas.len(),
            scheme: Scheme::Proposed,
        });
    }
    Ok(())
}

/// Baseline statistics under H0 (calibration), H1, and an H0 holdout.
struct BaselineSamples {
    calibration: Vec<f64>,
    attack: Vec<f64>,
    holdout: Vec<f64>,
}

fn baseline_samples<F>(cfg: &ScenarioConfig, streams: [u64; 3], trial: F) -> Result<BaselineSamples>
where
    F: Fn(&ChannelParams, Hypothesis, &mut crate::rng::SimRng) -> Result<f64> + Sync,
{
    let scenario = cfg.scenario_hash();
    let run = |stream: u64, hypothesis: Hypothesis| {
        (0..cfg.baseline_trials as u64)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(cfg.master_seed, scenario, stream, t);
                trial(&cfg.channel, hypothesis, &mut rng)
            })
            .collect::<Result<Vec<f64>>>()
    };
    Ok(BaselineSamples {
        calibration: run(streams[0], Hypothesis::H0)?,
        attack: run(streams[1], Hypothesis::H1)?,
        holdout: run(streams[2], Hypothesis::H0)?,
    })
}

fn baseline_points(
    samples: &BaselineSamples,
    scheme: Scheme,
    pfa_grid: &[f64],
    x_of: impl Fn(f64) -> f64,
    report: &mut Report,
) {
    let n = samples.attack.len();
    let mut sorted = samples.calibration.clone();
    for &alpha in pfa_grid {
        // Norm test rejects large statistics; key test rejects small ones.
        let (rejects, threshold): (Box<dyn Fn(f64) -> bool>, f64) = match scheme {
            Scheme::Norm => {
                let th = upper_quantile(&mut sorted, alpha);
                (Box::new(move |s| s > th), th)
            }
            _ => {
                let th = lower_quantile(&mut sorted, alpha);
                (Box::new(move |s| s < th), th)
            }
        };
        let rate = |xs: &[f64]| xs.iter().filter(|&&s| rejects(s)).count() as f64 / xs.len() as f64;
        let y = rate(&samples.attack);
        let achieved = rate(&samples.holdout);
        if alpha * (n as f64) < MIN_EXPECTED_EVENTS {
            report.warnings.push(format!(
                "{scheme} threshold {threshold} at P_FA target {alpha} rests on fewer than \
                 {MIN_EXPECTED_EVENTS} calibration events"
            ));
        }
        report.points.push(CurvePoint {
            x: x_of(alpha),
            y_closed: None,
            y_empirical: y,
            achieved_pfa: Some(achieved),
            stderr: binomial_stderr(y, n),
            trials_used: n,
            scheme,
        });
    }
}

fn baselines_report(cfg: &ScenarioConfig, pfa_grid: &[f64], x_of: impl Fn(f64) -> f64 + Copy) -> Result<Report> {
    let mut report = Report::default();
    let norm = baseline_samples(
        cfg,
        [stream::NORM_CALIBRATION, stream::NORM_H1, stream::NORM_HOLDOUT],
        norm_trial,
    )?;
    baseline_points(&norm, Scheme::Norm, pfa_grid, x_of, &mut report);
    let key = baseline_samples(
        cfg,
        [stream::KEY_CALIBRATION, stream::KEY_H1, stream::KEY_HOLDOUT],
        key_trial,
    )?;
    baseline_points(&key, Scheme::Key, pfa_grid, x_of, &mut report);
    Ok(report)
}

fn check_grid(name: &'static str, values: &[f64], valid: impl Fn(f64) -> bool) -> Result<()> {
    if values.is_empty() {
        return Err(Error::param(name, "is empty"));
    }
    if let Some(bad) = values.iter().find(|&&v| !valid(v)) {
        return Err(Error::param(name, format!("contains invalid value {bad}")));
    }
    Ok(())
}

/// ROC at the configured operating point for all three schemes.
pub fn roc_curve(cfg: &ScenarioConfig, pfa_grid: &[f64]) -> Result<Report> {
    check_grid("pfa_grid", pfa_grid, |a| a > 0.0 && a < 1.0)?;
    cfg.validate()?;
    let code = cfg.build_code()?;
    let h0 = simulate_eta(cfg, &code, Hypothesis::H0)?;
    let h1 = simulate_eta(cfg, &code, Hypothesis::H1)?;
    let mut report = Report {
        codes: vec![code.describe()],
        ..Report::default()
    };
    proposed_points(&h0, &h1, pfa_grid, |a| a, &mut report)?;
    report.absorb(baselines_report(cfg, pfa_grid, |a| a)?);
    Ok(report)
}

/// P_D at `cfg.target_pfa` per SNR. The code is rebuilt for each SNR with
/// the matching design crossover.
pub fn pd_vs_snr(cfg: &ScenarioConfig, snr_list: &[f64]) -> Result<Report> {
    check_grid("snr_list", snr_list, |s| s.is_finite())?;
    let mut report = Report::default();
    for &snr in snr_list {
        let point = cfg.with_snr(snr);
        point.validate()?;
        let code = point.build_code()?;
        let h0 = simulate_eta(&point, &code, Hypothesis::H0)?;
        let h1 = simulate_eta(&point, &code, Hypothesis::H1)?;
        report.codes.push(code.describe());
        proposed_points(&h0, &h1, &[cfg.target_pfa], |_| snr, &mut report)?;
        report.absorb(baselines_report(&point, &[cfg.target_pfa], |_| snr)?);
    }
    Ok(report)
}

/// P_D at `cfg.target_pfa` per code rate, reconciliation scheme only.
pub fn pd_vs_rate(cfg: &ScenarioConfig, rate_list: &[f64]) -> Result<Report> {
    check_grid("rate_list", rate_list, |r| r > 0.0 && r < 1.0)?;
    let mut report = Report::default();
    for &rate in rate_list {
        let point = cfg.with_rate(rate);
        point.validate()?;
        let code = point.build_code()?;
        let h0 = simulate_eta(&point, &code, Hypothesis::H0)?;
        let h1 = simulate_eta(&point, &code, Hypothesis::H1)?;
        report.codes.push(code.describe());
        proposed_points(&h0, &h1, &[cfg.target_pfa], |_| rate, &mut report)?;
    }
    Ok(report)
}

/// Runs `f` on a dedicated pool with `threads` workers (0 = rayon default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::param("threads", e.to_string()))?;
    Ok(pool.install(f))
}
