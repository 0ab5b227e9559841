//! Run configuration: a `key = value` file merged with command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::inversion::InversionConfig;
use crate::model::{Gamma, QueueParams, Regime};
use crate::simulator::{SimConfig, DEFAULT_WARMUP};

pub const KEYS: [&str; 13] = [
    "lambda",
    "mu0",
    "mu1",
    "gamma",
    "K",
    "regime",
    "s_grid",
    "t_grid",
    "seed",
    "customers",
    "warmup",
    "replications",
    "out_dir",
];

pub const DEFAULT_S_GRID: &str = "0:10:101";
pub const DEFAULT_T_GRID: &str = "0.05:20:400";
pub const DEFAULT_CUSTOMERS: u64 = 100_000;

/// Raw string values by key, before interpretation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: Vec<(String, String)>,
}

impl Settings {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Sets `key`, rejecting names outside [`KEYS`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(Error::Domain(format!("unknown key `{key}`")));
        }
        self.values.push((key.to_string(), value.trim().to_string()));
        Ok(())
    }

    /// Parses config text. Blank lines and lines starting with `#` are
    /// skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut settings = Settings::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Domain(format!("line {}: expected `key = value`", i + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(Error::Domain(format!("line {}: empty value for `{key}`", i + 1)));
            }
            if !KEYS.contains(&key) {
                return Err(Error::Domain(format!("line {}: unknown key `{key}`", i + 1)));
            }
            settings.set(key, value)?;
        }
        Ok(settings)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Domain(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Later values win.
    pub fn merge(&mut self, other: &Settings) {
        self.values.extend(other.values.iter().cloned());
    }
}

fn parse_value<T: std::str::FromStr>(settings: &Settings, key: &str) -> Result<Option<T>> {
    settings
        .get(key)
        .map(|v| v.parse::<T>().map_err(|_| Error::Domain(format!("invalid value `{v}` for `{key}`"))))
        .transpose()
}

fn required<T: std::str::FromStr>(settings: &Settings, key: &str) -> Result<T> {
    parse_value(settings, key)?.ok_or_else(|| Error::Domain(format!("missing required key `{key}`")))
}

/// A `start:stop:count` linear grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::Domain(format!("grid `{spec}` must be `start:stop:count`"));
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].parse().map_err(|_| bad())?;
    let stop: f64 = parts[1].parse().map_err(|_| bad())?;
    let count: usize = parts[2].parse().map_err(|_| bad())?;
    if !(start.is_finite() && stop.is_finite()) || count == 0 {
        return Err(bad());
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    if stop <= start {
        return Err(Error::Domain(format!("grid `{spec}` must be ascending")));
    }
    let step = (stop - start) / (count - 1) as f64;
    Ok((0..count).map(|i| if i + 1 == count { stop } else { start + i as f64 * step }).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: QueueParams,
    pub s_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub inversion: InversionConfig,
    pub seed: u64,
    pub customers: u64,
    pub warmup: u64,
    pub replications: u32,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn resolve(settings: &Settings, inversion: InversionConfig) -> Result<Self> {
        let lambda = required(settings, "lambda")?;
        let mu0 = required(settings, "mu0")?;
        let mu1 = required(settings, "mu1")?;
        let k: i64 = required(settings, "K")?;
        let gamma: Option<Gamma> = parse_value(settings, "gamma")?;
        let regime: Option<Regime> = parse_value(settings, "regime")?;
        let (gamma, regime) = match (gamma, regime) {
            (None, None) | (Some(Gamma::Continuous), None) => (Gamma::Continuous, Regime::Continuous),
            (Some(g @ Gamma::Rate(_)), None) => (g, Regime::Exponential),
            (None, Some(Regime::Continuous)) => (Gamma::Continuous, Regime::Continuous),
            (None, Some(r)) => return Err(Error::Regime(format!("{r} regime needs `gamma`"))),
            (Some(g), Some(r)) => (g, r),
        };
        let params = QueueParams { lambda, mu0, mu1, gamma, k, regime }.validate()?;

        let s_grid = parse_grid(settings.get("s_grid").unwrap_or(DEFAULT_S_GRID))?;
        if s_grid.iter().any(|&s| s < 0.0) {
            return Err(Error::Domain("s_grid must not go below 0".into()));
        }
        let t_grid = parse_grid(settings.get("t_grid").unwrap_or(DEFAULT_T_GRID))?;
        if t_grid[0] <= 0.0 {
            return Err(Error::Domain("t_grid must start above 0".into()));
        }
        let replications = parse_value(settings, "replications")?.unwrap_or(1);
        let customers = parse_value(settings, "customers")?.unwrap_or(DEFAULT_CUSTOMERS);
        if customers == 0 || replications == 0 {
            return Err(Error::Domain("customers and replications must be positive".into()));
        }
        Ok(RunConfig {
            params,
            s_grid,
            t_grid,
            inversion: inversion.validate()?,
            seed: parse_value(settings, "seed")?.unwrap_or(1),
            customers,
            warmup: parse_value(settings, "warmup")?.unwrap_or(DEFAULT_WARMUP),
            replications,
            out_dir: settings.get("out_dir").map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".")),
        })
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            params: self.params,
            customers: self.customers,
            warmup: self.warmup,
            seed: self.seed,
            replications: self.replications,
        }
    }
}
