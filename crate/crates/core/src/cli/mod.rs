//! Configuration, dispatch and artifact writing behind the `laserlab`
//! binary. Kept free of argument-parsing dependencies so that it can be
//! driven from tests.
//!
//! Configuration is layered: experiment defaults, then the `--smoke` preset,
//! then `key = value` lines from the config file, then flags. A key the
//! chosen experiment does not know is an error.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use thiserror::Error as ThisError;

use crate::experiments::{
    check_separability, identity_check, run_distillation, run_molmer, run_phase_locking, run_teleportation, Detection,
    DistillParams, ExperimentReport, IdentityParams, LockParams, MolmerParams, PhaseModel, Reference, Status,
    TeleportParams,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Command {
    IdentityCheck,
    Molmer,
    PhaseLock,
    Separability,
    Distill,
    Teleport,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::IdentityCheck,
        Command::Molmer,
        Command::PhaseLock,
        Command::Separability,
        Command::Distill,
        Command::Teleport,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::IdentityCheck => "identity-check",
            Command::Molmer => "molmer",
            Command::PhaseLock => "phase-lock",
            Command::Separability => "separability",
            Command::Distill => "distill",
            Command::Teleport => "teleport",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    /// Keys accepted in config files and `--set`.
    pub fn keys(self) -> &'static [&'static str] {
        match self {
            Command::IdentityCheck => &[
                "alpha",
                "mags",
                "dim",
                "grid",
                "tolerance",
                "beam_mag",
                "beam_dim",
                "correlation_threshold",
                "cross_r",
                "cross_dim",
                "cross_tolerance",
            ],
            Command::Molmer => &[
                "alpha",
                "mag_a",
                "mag_b",
                "n_packets",
                "trials",
                "grid",
                "detection",
                "max_detections",
                "thresholds",
                "phase_model",
            ],
            Command::PhaseLock => {
                &["alpha", "mag_a", "mag_b", "n_packets", "trials", "grid", "detection", "level", "min_pass_rate"]
            }
            Command::Separability => &["r", "dim", "grid"],
            Command::Distill => &["r", "lo_mag", "n_lo", "dim", "trials", "grid", "sweep", "fraction"],
            Command::Teleport => &[
                "r",
                "beta",
                "reference",
                "delta",
                "trials",
                "dim",
                "gain",
                "bins",
                "level",
                "tolerance",
                "degrade_margin",
                "no_signal_tolerance",
                "phase_model",
            ],
        }
    }

    /// Small preset that finishes in well under a second.
    pub fn smoke_preset(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Command::IdentityCheck => &[("mags", "1"), ("beam_dim", "8"), ("cross_r", "0.3")],
            Command::Molmer => &[("trials", "100"), ("thresholds", "3:0.5")],
            Command::PhaseLock => &[("trials", "100"), ("min_pass_rate", "0.9")],
            Command::Separability => &[("r", "0.3"), ("dim", "10")],
            Command::Distill => &[("trials", "20"), ("dim", "10"), ("sweep", "0,8"), ("fraction", "0.8")],
            Command::Teleport => {
                &[("trials", "2000"), ("dim", "24"), ("tolerance", "0.03"), ("no_signal_tolerance", "0.05")]
            }
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, ThisError)]
pub enum ConfigError {
    #[error("unknown key `{key}` for {command} (known: {known})")]
    UnknownKey { key: String, command: Command, known: String },
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    BadValue { key: String, value: String, reason: String },
    #[error("line {line} of {path}: expected `key = value`")]
    Syntax { path: String, line: usize },
    #[error("a seed is required (--seed <u64>)")]
    MissingSeed,
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
}

#[derive(Debug, ThisError)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Experiment(#[from] crate::Error),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
}

impl RunError {
    /// Process exit status for this error: 2 for configuration problems, 3
    /// for failures while running or writing.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 3,
        }
    }
}

/// Experiment parameters after layering.
#[derive(Clone, Debug, PartialEq)]
pub enum Params {
    Identity(IdentityParams),
    Molmer(MolmerParams),
    PhaseLock(LockParams),
    Separability { r: f64, dim: usize, grid: Option<usize> },
    Distill(DistillParams),
    Teleport(TeleportParams),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub params: Params,
}

/// Raw inputs gathered from the command line.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub config: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub trials: Option<usize>,
    pub dim: Option<usize>,
    /// `key=value` pairs, applied in order after the typed flags.
    pub set: Vec<String>,
    pub smoke: bool,
}

/// Parses a flat `key = value` file. `#` starts a comment.
pub fn parse_kv(text: &str, path: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { path: path.into(), line: i + 1 })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(ConfigError::Syntax { path: path.into(), line: i + 1 });
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

fn split_pair(s: &str) -> Result<(String, String), ConfigError> {
    let (k, v) = s.split_once('=').ok_or_else(|| ConfigError::BadValue {
        key: s.into(),
        value: String::new(),
        reason: "expected key=value".into(),
    })?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

/// Layers defaults, smoke preset, config file and flags into a validated
/// configuration.
pub fn parse_config(command: Command, ov: &Overrides) -> Result<RunConfig, ConfigError> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    if ov.smoke {
        pairs.extend(command.smoke_preset().iter().map(|(k, v)| (k.to_string(), v.to_string())));
    }
    let mut seed = None;
    if let Some(path) = &ov.config {
        let shown = path.display().to_string();
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read { path: shown.clone(), source })?;
        for (k, v) in parse_kv(&text, &shown)? {
            if k == "seed" {
                seed = Some(parse_num::<u64>(&k, &v)?);
            } else {
                pairs.push((k, v));
            }
        }
    }
    if let Some(t) = ov.trials {
        pairs.push(("trials".into(), t.to_string()));
    }
    if let Some(d) = ov.dim {
        pairs.push(("dim".into(), d.to_string()));
    }
    for s in &ov.set {
        let (k, v) = split_pair(s)?;
        if k == "seed" {
            seed = Some(parse_num::<u64>(&k, &v)?);
        } else {
            pairs.push((k, v));
        }
    }
    let seed = ov.seed.or(seed).ok_or(ConfigError::MissingSeed)?;

    for (k, _) in &pairs {
        if !command.keys().contains(&k.as_str()) {
            return Err(ConfigError::UnknownKey { key: k.clone(), command, known: command.keys().join(", ") });
        }
    }
    let params = build_params(command, &pairs)?;
    Ok(RunConfig { command, seed, out_dir: ov.out_dir.clone(), params })
}

fn bad(key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadValue { key: key.into(), value: value.into(), reason: reason.into() }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    v.parse::<T>().map_err(|e| bad(key, v, e.to_string()))
}

fn nonneg(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = parse_num(key, v)?;
    if !(x >= 0.0) || !x.is_finite() {
        return Err(bad(key, v, "must be a finite nonnegative number"));
    }
    Ok(x)
}

fn finite(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = parse_num(key, v)?;
    if !x.is_finite() {
        return Err(bad(key, v, "must be finite"));
    }
    Ok(x)
}

fn probability(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = parse_num(key, v)?;
    if !(x > 0.0 && x < 1.0) {
        return Err(bad(key, v, "must lie strictly between 0 and 1"));
    }
    Ok(x)
}

fn fraction(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = parse_num(key, v)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(bad(key, v, "must lie in [0, 1]"));
    }
    Ok(x)
}

fn at_least(key: &str, v: &str, min: usize) -> Result<usize, ConfigError> {
    let n: usize = parse_num(key, v)?;
    if n < min {
        return Err(bad(key, v, format!("must be at least {min}")));
    }
    Ok(n)
}

fn list<T>(key: &str, v: &str, item: impl Fn(&str, &str) -> Result<T, ConfigError>) -> Result<Vec<T>, ConfigError> {
    let items: Result<Vec<T>, _> = v.split(',').map(|s| item(key, s.trim())).collect();
    let items = items?;
    if items.is_empty() {
        return Err(bad(key, v, "empty list"));
    }
    Ok(items)
}

fn detection(key: &str, v: &str) -> Result<Detection, ConfigError> {
    match v {
        "two-port" | "two_port" => Ok(Detection::TwoPort),
        "four-port" | "four_port" => Ok(Detection::FourPort),
        _ => Err(bad(key, v, "expected two-port or four-port")),
    }
}

fn phase_model(key: &str, v: &str) -> Result<PhaseModel, ConfigError> {
    match v {
        "mixture" => Ok(PhaseModel::Mixture),
        "fixed" => Ok(PhaseModel::Fixed),
        _ => Err(bad(key, v, "expected mixture or fixed")),
    }
}

fn complex(key: &str, v: &str) -> Result<C64, ConfigError> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [re] => Ok(C64::new(finite(key, re)?, 0.0)),
        [re, im] => Ok(C64::new(finite(key, re)?, finite(key, im)?)),
        _ => Err(bad(key, v, "expected `re` or `re,im`")),
    }
}

fn build_params(command: Command, pairs: &[(String, String)]) -> Result<Params, ConfigError> {
    // last assignment of a key wins
    let kv: BTreeMap<&str, &str> = pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
    let get = |k: &str| kv.get(k).copied();
    Ok(match command {
        Command::IdentityCheck => {
            let mut p = IdentityParams::default();
            if let Some(v) = get("mags") {
                p.mags = list("mags", v, nonneg)?;
            }
            if let Some(v) = get("alpha") {
                p.mags = vec![nonneg("alpha", v)?];
            }
            if let Some(v) = get("dim") {
                p.dim = Some(at_least("dim", v, 2)?);
            }
            if let Some(v) = get("grid") {
                p.grid = Some(at_least("grid", v, 1)?);
            }
            if let Some(v) = get("tolerance") {
                p.tolerance = nonneg("tolerance", v)?;
            }
            if let Some(v) = get("beam_mag") {
                p.beam_mag = nonneg("beam_mag", v)?;
            }
            if let Some(v) = get("beam_dim") {
                p.beam_dim = at_least("beam_dim", v, 2)?;
            }
            if let Some(v) = get("correlation_threshold") {
                p.correlation_threshold = nonneg("correlation_threshold", v)?;
            }
            if let Some(v) = get("cross_r") {
                p.cross_r = list("cross_r", v, nonneg)?;
            }
            if let Some(v) = get("cross_dim") {
                p.cross_dim = at_least("cross_dim", v, 2)?;
            }
            if let Some(v) = get("cross_tolerance") {
                p.cross_tolerance = nonneg("cross_tolerance", v)?;
            }
            Params::Identity(p)
        }
        Command::Molmer => {
            let mut p = MolmerParams::default();
            if let Some(v) = get("alpha") {
                let a = nonneg("alpha", v)?;
                (p.mag_a, p.mag_b) = (a, a);
            }
            if let Some(v) = get("mag_a") {
                p.mag_a = nonneg("mag_a", v)?;
            }
            if let Some(v) = get("mag_b") {
                p.mag_b = nonneg("mag_b", v)?;
            }
            if let Some(v) = get("n_packets") {
                p.n_packets = at_least("n_packets", v, 1)?;
            }
            if let Some(v) = get("trials") {
                p.trials = at_least("trials", v, 1)?;
            }
            if let Some(v) = get("grid") {
                p.grid = at_least("grid", v, crate::inference::MIN_GRID)?;
            }
            if let Some(v) = get("detection") {
                p.detection = detection("detection", v)?;
            }
            if let Some(v) = get("max_detections") {
                p.max_detections = at_least("max_detections", v, 1)?;
            }
            if let Some(v) = get("thresholds") {
                p.thresholds = list("thresholds", v, |k, s| {
                    let (n, r) = s.split_once(':').ok_or_else(|| bad(k, s, "expected detections:R"))?;
                    Ok((at_least(k, n.trim(), 1)?, fraction(k, r.trim())?))
                })?;
            }
            if let Some(v) = get("phase_model") {
                p.phase_model = phase_model("phase_model", v)?;
            }
            Params::Molmer(p)
        }
        Command::PhaseLock => {
            let mut p = LockParams::default();
            if let Some(v) = get("alpha") {
                let a = nonneg("alpha", v)?;
                (p.mag_a, p.mag_b) = (a, a);
            }
            if let Some(v) = get("mag_a") {
                p.mag_a = nonneg("mag_a", v)?;
            }
            if let Some(v) = get("mag_b") {
                p.mag_b = nonneg("mag_b", v)?;
            }
            if let Some(v) = get("n_packets") {
                p.n_packets = at_least("n_packets", v, 1)?;
            }
            if let Some(v) = get("trials") {
                p.trials = at_least("trials", v, 1)?;
            }
            if let Some(v) = get("grid") {
                p.grid = at_least("grid", v, crate::inference::MIN_GRID)?;
            }
            if let Some(v) = get("detection") {
                p.detection = detection("detection", v)?;
            }
            if let Some(v) = get("level") {
                p.level = probability("level", v)?;
            }
            if let Some(v) = get("min_pass_rate") {
                p.min_pass_rate = fraction("min_pass_rate", v)?;
            }
            Params::PhaseLock(p)
        }
        Command::Separability => {
            let r = get("r").map_or(Ok(0.4), |v| nonneg("r", v))?;
            let dim = get("dim").map_or(Ok(14), |v| at_least("dim", v, 2))?;
            let grid = get("grid").map(|v| at_least("grid", v, 1)).transpose()?;
            Params::Separability { r, dim, grid }
        }
        Command::Distill => {
            let mut p = DistillParams::default();
            if let Some(v) = get("r") {
                p.r = nonneg("r", v)?;
            }
            if let Some(v) = get("lo_mag") {
                p.lo_mag = nonneg("lo_mag", v)?;
            }
            if let Some(v) = get("n_lo") {
                p.n_lo = parse_num("n_lo", v)?;
            }
            if let Some(v) = get("dim") {
                p.dim = at_least("dim", v, 2)?;
            }
            if let Some(v) = get("trials") {
                p.trials = at_least("trials", v, 2)?;
            }
            if let Some(v) = get("grid") {
                p.grid = at_least("grid", v, crate::inference::MIN_GRID)?;
            }
            if let Some(v) = get("sweep") {
                p.sweep = list("sweep", v, parse_num::<usize>)?;
            }
            if let Some(v) = get("fraction") {
                p.fraction = fraction("fraction", v)?;
            }
            Params::Distill(p)
        }
        Command::Teleport => {
            let mut p = TeleportParams::default();
            if let Some(v) = get("r") {
                p.r = nonneg("r", v)?;
            }
            if let Some(v) = get("beta") {
                p.beta = complex("beta", v)?;
            }
            let delta = get("delta").map(|v| finite("delta", v)).transpose()?;
            if let Some(v) = get("reference") {
                p.reference = match v {
                    "shared" => Reference::Shared,
                    "independent" => Reference::Independent,
                    "offset" => Reference::Offset(delta.unwrap_or(std::f64::consts::PI)),
                    _ => return Err(bad("reference", v, "expected shared, independent or offset")),
                };
            } else if let Some(d) = delta {
                p.reference = Reference::Offset(d);
            }
            if let Some(v) = get("trials") {
                p.trials = at_least("trials", v, 2)?;
            }
            if let Some(v) = get("dim") {
                p.dim = at_least("dim", v, 2)?;
            }
            if let Some(v) = get("gain") {
                p.gain = finite("gain", v)?;
            }
            if let Some(v) = get("bins") {
                p.bins = at_least("bins", v, 1)?;
            }
            if let Some(v) = get("level") {
                p.level = probability("level", v)?;
            }
            if let Some(v) = get("tolerance") {
                p.tolerance = nonneg("tolerance", v)?;
            }
            if let Some(v) = get("degrade_margin") {
                p.degrade_margin = finite("degrade_margin", v)?;
            }
            if let Some(v) = get("no_signal_tolerance") {
                p.no_signal_tolerance = nonneg("no_signal_tolerance", v)?;
            }
            if let Some(v) = get("phase_model") {
                p.phase_model = phase_model("phase_model", v)?;
            }
            Params::Teleport(p)
        }
    })
}

/// Runs the configured experiment and returns its report.
pub fn run_command(cfg: &RunConfig) -> Result<ExperimentReport, RunError> {
    let seed = cfg.seed;
    let mut report = match &cfg.params {
        Params::Identity(p) => identity_check(p)?.report(),
        Params::Molmer(p) => run_molmer(p, seed)?.report(),
        Params::PhaseLock(p) => run_phase_locking(p, seed)?.report(),
        Params::Separability { r, dim, grid } => check_separability(*r, *dim, *grid)?.report(),
        Params::Distill(p) => run_distillation(p, seed)?.report(),
        Params::Teleport(p) => run_teleportation(p, seed)?.report(),
    };
    report.seed = Some(seed);
    Ok(report)
}

/// 0 when no verdict failed, 1 otherwise.
pub fn exit_code(report: &ExperimentReport) -> i32 {
    if report.passed() {
        0
    } else {
        1
    }
}

/// Writes `<experiment>.json` and one `<experiment>_<trace>.csv` per trace
/// into `dir`, returning the written paths.
pub fn emit_report(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let werr = |path: &Path, source| RunError::Write { path: path.display().to_string(), source };
    fs::create_dir_all(dir).map_err(|e| werr(dir, e))?;
    let mut written = Vec::new();
    let json = dir.join(format!("{}.json", report.experiment));
    fs::write(&json, report.to_json()).map_err(|e| werr(&json, e))?;
    written.push(json);
    for t in &report.traces {
        let path = dir.join(format!("{}_{}.csv", report.experiment, t.name));
        fs::write(&path, &t.csv).map_err(|e| werr(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// One line per verdict, for terminal output.
pub fn summary_lines(report: &ExperimentReport) -> Vec<String> {
    report
        .verdicts
        .iter()
        .map(|v| {
            let tag = match v.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::NotApplicable => "N/A ",
            };
            format!("{tag} {}: {}", v.name, v.detail)
        })
        .collect()
}
