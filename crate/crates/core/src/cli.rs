//! `pla` command line: loads a TOML config, applies flag overrides, runs one
//! experiment and writes `<subcommand>.csv` plus `<subcommand>.manifest.json`.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 runtime error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::error::Error;
use crate::experiments::{
    estimate_ber_report, pd_vs_rate, pd_vs_snr, pmf_validation, proposed_trial, roc_curve,
    with_threads, write_csv, CodeParams, Report, Sampling, ScenarioConfig,
};
use crate::features::FeatureConfig;
use crate::hypotest::{threshold_for_pfa, Hypothesis};
use crate::polar::CodeDescription;
use crate::rng::trial_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub n_antennas: usize,
    pub beta: f64,
    pub sigma_h2: f64,
    /// Operating point for validate-pmf, estimate-ber and the demo.
    pub snr_db: f64,
    pub m_samples: usize,
    pub sampling: Sampling,
}

impl Default for ChannelSection {
    fn default() -> Self {
        let c = ChannelParams::default();
        ChannelSection {
            n_antennas: c.n_antennas,
            beta: c.beta,
            sigma_h2: c.sigma_h2,
            snr_db: c.snr_db,
            m_samples: FeatureConfig::default().m_samples,
            sampling: Sampling::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub seed: u64,
    pub trials: usize,
    pub baseline_trials: usize,
    pub target_pfa: f64,
    pub slot_gap: u64,
    pub roc_snr_db: f64,
    pub rate_snr_db: f64,
    pub pfa_grid: Vec<f64>,
    pub snr_list: Vec<f64>,
    pub rate_list: Vec<f64>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        let s = ScenarioConfig::default();
        ExperimentSection {
            seed: s.master_seed,
            trials: s.trials,
            baseline_trials: s.baseline_trials,
            target_pfa: s.target_pfa,
            slot_gap: s.slot_gap,
            roc_snr_db: 5.0,
            rate_snr_db: 15.0,
            pfa_grid: (1..=20).map(|i| i as f64 * 0.025).collect(),
            snr_list: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            rate_list: vec![0.01, 0.05, 0.1, 0.2, 0.4, 0.5, 0.7],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub channel: ChannelSection,
    pub code: CodeParams,
    pub experiment: ExperimentSection,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn scenario(&self, snr_db: f64) -> ScenarioConfig {
        ScenarioConfig {
            channel: ChannelParams {
                n_antennas: self.channel.n_antennas,
                beta: self.channel.beta,
                sigma_h2: self.channel.sigma_h2,
                snr_db,
            },
            features: FeatureConfig {
                m_samples: self.channel.m_samples,
                n_antennas: self.channel.n_antennas,
            },
            code: self.code.clone(),
            target_pfa: self.experiment.target_pfa,
            trials: self.experiment.trials,
            baseline_trials: self.experiment.baseline_trials,
            master_seed: self.experiment.seed,
            slot_gap: self.experiment.slot_gap,
            sampling: self.channel.sampling,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pla", version, about = "Channel-based authentication via polar Slepian-Wolf reconciliation")]
pub struct Cli {
    /// TOML config; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores). Output does not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, global = true, default_value = "results")]
    pub out: PathBuf,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    pub force: bool,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    #[arg(long, global = true)]
    pub list_size: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Overrides {
    /// One value, or a comma-separated list for pd-vs-snr.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub snr_db: Vec<f64>,
    /// One value, or a comma-separated list for pd-vs-rate.
    #[arg(long, value_delimiter = ',')]
    pub rate: Vec<f64>,
    /// One value, or a comma-separated grid for roc.
    #[arg(long, value_delimiter = ',')]
    pub pfa: Vec<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Distance histograms against the binomial model.
    ValidatePmf(Overrides),
    /// Detection vs false-alarm probability for all schemes.
    Roc(Overrides),
    PdVsSnr(Overrides),
    PdVsRate(Overrides),
    EstimateBer(Overrides),
    /// Enroll once, then authenticate Alice and Eve.
    EnrollVerifyDemo(Overrides),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::ValidatePmf(_) => "validate-pmf",
            Command::Roc(_) => "roc",
            Command::PdVsSnr(_) => "pd-vs-snr",
            Command::PdVsRate(_) => "pd-vs-rate",
            Command::EstimateBer(_) => "estimate-ber",
            Command::EnrollVerifyDemo(_) => "enroll-verify-demo",
        }
    }

    fn overrides(&self) -> &Overrides {
        match self {
            Command::ValidatePmf(o)
            | Command::Roc(o)
            | Command::PdVsSnr(o)
            | Command::PdVsRate(o)
            | Command::EstimateBer(o)
            | Command::EnrollVerifyDemo(o) => o,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    pub timestamp_unix: u64,
    pub master_seed: u64,
    pub config: FileConfig,
    pub codes: Vec<CodeDescription>,
    pub outputs: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } | Error::Dimension { .. } => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn single(name: &str, values: &[f64]) -> Result<Option<f64>, Failure> {
    match values {
        [] => Ok(None),
        [v] => Ok(Some(*v)),
        _ => Err(Failure::Config(format!("--{name} takes one value for this subcommand"))),
    }
}

/// Config after flag overrides, plus the operating SNR for single-point runs.
fn resolve(cli: &Cli) -> Result<(FileConfig, f64), Failure> {
    let mut cfg = match &cli.config {
        Some(path) => FileConfig::load(path).map_err(Failure::Config)?,
        None => FileConfig::default(),
    };
    let o = cli.command.overrides();
    if let Some(seed) = cli.seed {
        cfg.experiment.seed = seed;
    }
    if let Some(trials) = cli.trials {
        cfg.experiment.trials = trials;
    }
    if let Some(l) = cli.list_size {
        cfg.code.list_size = l;
    }
    let mut snr = match cli.command {
        Command::Roc(_) => cfg.experiment.roc_snr_db,
        Command::PdVsRate(_) => cfg.experiment.rate_snr_db,
        _ => cfg.channel.snr_db,
    };
    match cli.command {
        Command::PdVsSnr(_) if !o.snr_db.is_empty() => cfg.experiment.snr_list = o.snr_db.clone(),
        _ => {
            if let Some(s) = single("snr-db", &o.snr_db)? {
                snr = s;
            }
        }
    }
    match cli.command {
        Command::PdVsRate(_) if !o.rate.is_empty() => cfg.experiment.rate_list = o.rate.clone(),
        _ => {
            if let Some(r) = single("rate", &o.rate)? {
                cfg.code.rate = r;
            }
        }
    }
    match cli.command {
        Command::Roc(_) if !o.pfa.is_empty() => cfg.experiment.pfa_grid = o.pfa.clone(),
        _ => {
            if let Some(p) = single("pfa", &o.pfa)? {
                cfg.experiment.target_pfa = p;
            }
        }
    }
    cfg.scenario(snr).validate()?;
    Ok((cfg, snr))
}

/// Nominal legitimate bit error rate used to set the demo threshold.
const DEMO_P0: f64 = 1e-4;

fn demo(scenario: &ScenarioConfig) -> Result<Report, Error> {
    use crate::experiments::{CurvePoint, Scheme};
    let code = scenario.build_code()?;
    let eta_th = threshold_for_pfa(code.k(), DEMO_P0, scenario.target_pfa)?;
    let mut points = Vec::new();
    let mut lines = Vec::new();
    for (stream, hypothesis, scheme) in [
        (0, Hypothesis::H0, Scheme::BerH0),
        (1, Hypothesis::H1, Scheme::BerH1),
    ] {
        let mut rng = trial_rng(scenario.master_seed, scenario.scenario_hash(), 100 + stream, 0);
        let outcome = proposed_trial(scenario, &code, hypothesis, &mut rng)?.decide(eta_th);
        lines.push(format!(
            "{hypothesis:?}: eta = {}, crc_ok = {}, decision = {:?}",
            outcome.eta, outcome.crc_ok, outcome.decision
        ));
        points.push(CurvePoint {
            x: scenario.channel.snr_db,
            y_closed: None,
            y_empirical: outcome.eta as f64 / code.k() as f64,
            achieved_pfa: None,
            stderr: 0.0,
            trials_used: 1,
            scheme,
        });
    }
    Ok(Report {
        points,
        warnings: lines,
        codes: vec![code.describe()],
    })
}

fn execute(cli: &Cli, cfg: &FileConfig, snr: f64) -> Result<Report, Error> {
    let scenario = cfg.scenario(snr);
    let e = &cfg.experiment;
    with_threads(cli.threads, || match cli.command {
        Command::ValidatePmf(_) => {
            let v = pmf_validation(&scenario)?;
            let mut report = v.report();
            report.warnings.push(format!(
                "p0_hat = {}, p1_hat = {}, TV(H0) = {}, TV(H1) = {}",
                v.p0_hat, v.p1_hat, v.tv_h0, v.tv_h1
            ));
            Ok(report)
        }
        Command::Roc(_) => roc_curve(&scenario, &e.pfa_grid),
        Command::PdVsSnr(_) => pd_vs_snr(&scenario, &e.snr_list),
        Command::PdVsRate(_) => pd_vs_rate(&scenario, &e.rate_list),
        Command::EstimateBer(_) => estimate_ber_report(&scenario),
        Command::EnrollVerifyDemo(_) => demo(&scenario),
    })?
}

fn print_summary(report: &Report, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{:>10} {:>12} {:>12} {:>12} {:>12}", "scheme", "x", "y_closed", "y_empirical", "achieved_pfa")?;
    for p in &report.points {
        let opt = |v: Option<f64>| v.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into());
        writeln!(
            out,
            "{:>10} {:>12} {:>12} {:>12.6} {:>12}",
            p.scheme.as_str(),
            p.x,
            opt(p.y_closed),
            p.y_empirical,
            opt(p.achieved_pfa)
        )?;
    }
    for w in &report.warnings {
        writeln!(out, "note: {w}")?;
    }
    Ok(())
}

fn run_cli(cli: Cli) -> Result<(), Failure> {
    let (cfg, snr) = resolve(&cli)?;
    let name = cli.command.name();
    let csv_path = cli.out.join(format!("{name}.csv"));
    let manifest_path = cli.out.join(format!("{name}.manifest.json"));
    if !cli.force {
        if let Some(existing) = [&csv_path, &manifest_path].into_iter().find(|p| p.exists()) {
            return Err(Failure::Config(format!(
                "{} exists; pass --force to overwrite",
                existing.display()
            )));
        }
    }
    let report = execute(&cli, &cfg, snr)?;

    let mut csv = Vec::new();
    write_csv(&report.points, &mut csv).map_err(|e| Failure::Runtime(e.to_string()))?;
    let manifest = RunManifest {
        subcommand: name.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        master_seed: cfg.experiment.seed,
        config: cfg,
        codes: report.codes.clone(),
        outputs: vec![csv_path.clone(), manifest_path.clone()],
        warnings: report.warnings.clone(),
    };
    let manifest = serde_json::to_vec_pretty(&manifest).map_err(|e| Failure::Runtime(e.to_string()))?;
    let io = |e: std::io::Error| Failure::Runtime(e.to_string());
    fs::create_dir_all(&cli.out).map_err(io)?;
    fs::write(&csv_path, csv).map_err(io)?;
    fs::write(&manifest_path, manifest).map_err(io)?;

    let mut stdout = std::io::stdout().lock();
    print_summary(&report, &mut stdout).map_err(io)?;
    writeln!(stdout, "wrote {} and {}", csv_path.display(), manifest_path.display()).map_err(io)?;
    Ok(())
}

/// Parses `args` (program name first) and runs the selected experiment.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run_cli(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = FileConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<FileConfig>(&text).unwrap(), cfg);
    }

    #[test]
    fn default_scenario_is_valid() {
        let cfg = FileConfig::default();
        let s = cfg.scenario(cfg.channel.snr_db);
        s.validate().unwrap();
        assert_eq!(s, ScenarioConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_name() {
        let err = toml::from_str::<FileConfig>("[code]\nrat = 0.1\n").unwrap_err();
        assert!(err.to_string().contains("rat"), "{err}");
    }

    #[test]
    fn partial_files_keep_defaults() {
        let cfg: FileConfig = toml::from_str("[channel]\nsnr_db = 3.0\n").unwrap();
        assert_eq!(cfg.channel.snr_db, 3.0);
        assert_eq!(cfg.channel.n_antennas, 32);
        assert_eq!(cfg.code.list_size, 8);
        let cfg: FileConfig = toml::from_str("[code]\nrate = 0.1\n").unwrap();
        assert_eq!(cfg.code.crc_bits, 16);
    }

    #[test]
    fn list_flags_only_where_lists_make_sense() {
        let cli = Cli::try_parse_from(["pla", "roc", "--snr-db", "1,2"]).unwrap();
        assert!(matches!(resolve(&cli), Err(Failure::Config(_))));
        let cli = Cli::try_parse_from(["pla", "pd-vs-snr", "--snr-db", "-5,2"]).unwrap();
        let (cfg, _) = resolve(&cli).ok().unwrap();
        assert_eq!(cfg.experiment.snr_list, vec![-5.0, 2.0]);
    }
}
