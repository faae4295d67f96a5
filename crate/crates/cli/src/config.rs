//! Experiment configuration: defaults, a flat key=value config file, and
//! command-line overrides, in that precedence order (CLI wins).

use skg_core::{Error, Result};
use std::collections::HashMap;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Efficiency,
    SetSize,
    EffectiveRate,
    ProtocolDemo,
    Selftest,
}

impl std::str::FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "efficiency" => Ok(Self::Efficiency),
            "set_size" | "set-size" => Ok(Self::SetSize),
            "effective_rate" | "effective-rate" => Ok(Self::EffectiveRate),
            "protocol_demo" | "protocol-demo" => Ok(Self::ProtocolDemo),
            "selftest" => Ok(Self::Selftest),
            other => Err(Error::InvalidConfig(format!("unknown experiment '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n_subcarriers: usize,
    pub snr_db: Vec<f64>,
    pub kappa: Vec<f64>,
    pub beta: Vec<f64>,
    pub theta: Vec<f64>,
    pub sigma_e2: Vec<f64>,
    pub gain_variance: f64,
    /// T_f·B product entering α = θ·T_f·B/ln 2; normalized to 1 by default.
    pub frame_bandwidth: f64,
    pub trials: usize,
    pub seed: u64,
    pub dp_resolution: f64,
    pub output_path: Option<PathBuf>,
    pub threads: usize,
    pub tamper_bit: Option<usize>,
    pub exhaust_crps: bool,
}

impl ExperimentConfig {
    /// Grid defaults mirror the reference comparisons: N=12 subcarriers,
    /// SNR 10 dB, κ=2, 25 log-spaced β values in [1e-4, 1], θ ∈ {1e-4, 100}.
    pub fn defaults(experiment: Experiment) -> Self {
        Self {
            experiment,
            n_subcarriers: 12,
            snr_db: vec![10.0],
            kappa: vec![2.0],
            beta: log_grid(1e-4, 1.0, 25),
            theta: vec![1e-4, 100.0],
            sigma_e2: vec![0.0],
            gain_variance: 1.0,
            frame_bandwidth: 1.0,
            trials: 1000,
            seed: 42,
            dp_resolution: 1e-4,
            output_path: None,
            threads: 0, // rayon default
            tamper_bit: None,
            exhaust_crps: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.n_subcarriers == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        for (name, list) in [
            ("snr_db", &self.snr_db),
            ("kappa", &self.kappa),
            ("beta", &self.beta),
            ("theta", &self.theta),
            ("sigma_e2", &self.sigma_e2),
        ] {
            if list.is_empty() {
                return Err(Error::InvalidConfig(format!("{name} list is empty")));
            }
        }
        if !(self.dp_resolution > 0.0) {
            return Err(Error::InvalidConfig("dp_resolution must be positive".into()));
        }
        Ok(())
    }

    /// Applies `key = value` pairs from a flat config file.
    pub fn apply_file(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key = value", lineno + 1)))?;
            self.apply_kv(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "n" | "n_subcarriers" => self.n_subcarriers = parse_scalar(value)? as usize,
            "snr_db" => self.snr_db = parse_values(value)?,
            "kappa" => self.kappa = parse_values(value)?,
            "beta" | "beta_grid" => self.beta = parse_values(value)?,
            "theta" => self.theta = parse_values(value)?,
            "sigma_e2" => self.sigma_e2 = parse_values(value)?,
            "sigma2" | "gain_variance" => self.gain_variance = parse_scalar(value)?,
            "tfb" | "frame_bandwidth" => self.frame_bandwidth = parse_scalar(value)?,
            "trials" => self.trials = parse_scalar(value)? as usize,
            "seed" => {
                self.seed = value
                    .parse::<u64>()
                    .map_err(|_| Error::InvalidConfig(format!("bad seed '{value}'")))?
            }
            "dp_resolution" => self.dp_resolution = parse_scalar(value)?,
            "out" | "output" => self.output_path = Some(PathBuf::from(value)),
            "threads" => self.threads = parse_scalar(value)? as usize,
            other => return Err(Error::InvalidConfig(format!("unknown key '{other}'"))),
        }
        Ok(())
    }
}

fn parse_scalar(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidConfig(format!("bad number '{s}'")))
}

/// A value list: either comma-separated numbers ("0.0001,100") or a grid
/// spec "start:end:COUNTlog" / "start:end:COUNTlin".
pub fn parse_values(s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidConfig(format!("bad grid spec '{s}'")));
        }
        let start = parse_scalar(parts[0])?;
        let end = parse_scalar(parts[1])?;
        let (count_str, log) = if let Some(c) = parts[2].strip_suffix("log") {
            (c, true)
        } else if let Some(c) = parts[2].strip_suffix("lin") {
            (c, false)
        } else {
            (parts[2], false)
        };
        let count: usize = count_str
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad grid count '{}'", parts[2])))?;
        if count == 0 {
            return Err(Error::InvalidConfig("grid count must be positive".into()));
        }
        if log {
            if !(start > 0.0 && end > 0.0) {
                return Err(Error::InvalidConfig("log grid needs positive endpoints".into()));
            }
            Ok(log_grid(start, end, count))
        } else {
            Ok(lin_grid(start, end, count))
        }
    } else {
        s.split(',').map(parse_scalar).collect()
    }
}

pub fn log_grid(start: f64, end: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    let (a, b) = (start.ln(), end.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

pub fn lin_grid(start: f64, end: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    (0..count)
        .map(|i| start + (end - start) * i as f64 / (count - 1) as f64)
        .collect()
}

/// Parses a whole config file into a map (used by tests to check echoes).
pub fn parse_config_map(text: &str) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for raw in text.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some((k, v)) = line.split_once('=') {
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    Ok(map)
}
