//! Experiment configuration: a flat TOML file plus command-line overrides.
//!
//! ```toml
//! kind = "sweep-snr"        # random-vs-opt | sweep-snr | sweep-m | sweep-n | inspect
//! n = 20                    # number, list, or "start:stop[:step]" (inclusive)
//! m = 5
//! snr_db = "-10:10:2"
//! eig_low = 0.1
//! eig_high = 2.0
//! trials = 0                # Monte Carlo trials per point, 0 disables
//! random_transforms = 0
//! seed = 1
//! workers = 1
//! out = "results.csv"
//!
//! # inspect only; paths are relative to the config file
//! sigma_x = "sx.txt"
//! sigma_e = "se.txt"
//! transform = "t.txt"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};

pub const DEFAULT_EIG_LOW: f64 = 0.1;
pub const DEFAULT_EIG_HIGH: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    RandomVsOpt,
    SweepSnr,
    SweepM,
    SweepN,
    Inspect,
}

impl Kind {
    pub fn is_sweep(self) -> bool {
        matches!(self, Kind::SweepSnr | Kind::SweepM | Kind::SweepN)
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random-vs-opt" => Ok(Kind::RandomVsOpt),
            "sweep-snr" => Ok(Kind::SweepSnr),
            "sweep-m" => Ok(Kind::SweepM),
            "sweep-n" => Ok(Kind::SweepN),
            "inspect" => Ok(Kind::Inspect),
            other => Err(Error::Config(format!("unknown experiment kind '{other}'"))),
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::RandomVsOpt => "random-vs-opt",
            Kind::SweepSnr => "sweep-snr",
            Kind::SweepM => "sweep-m",
            Kind::SweepN => "sweep-n",
            Kind::Inspect => "inspect",
        })
    }
}

/// A scalar, an explicit list, or an inclusive `"start:stop[:step]"` range.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ValueSpec {
    Int(i64),
    Float(f64),
    List(Vec<f64>),
    Range(String),
}

impl ValueSpec {
    pub fn values(&self, key: &str) -> Result<Vec<f64>> {
        let out = match self {
            ValueSpec::Int(v) => vec![*v as f64],
            ValueSpec::Float(v) => vec![*v],
            ValueSpec::List(v) => v.clone(),
            ValueSpec::Range(s) => parse_range(key, s)?,
        };
        if out.is_empty() {
            return Err(Error::Config(format!("'{key}' is empty")));
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!("'{key}' contains non-finite values")));
        }
        Ok(out)
    }
}

fn parse_range(key: &str, s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let num = |p: &str| {
        p.parse::<f64>()
            .map_err(|_| Error::Config(format!("'{key}': cannot parse '{p}' in range '{s}'")))
    };
    let (start, stop, step) = match parts.as_slice() {
        [a] => {
            let v = num(a)?;
            (v, v, 1.0)
        }
        [a, b] => (num(a)?, num(b)?, 1.0),
        [a, b, c] => (num(a)?, num(b)?, num(c)?),
        _ => return Err(Error::Config(format!("'{key}': malformed range '{s}'"))),
    };
    if !(step > 0.0) {
        return Err(Error::Config(format!(
            "'{key}': range step must be positive"
        )));
    }
    if stop < start {
        return Err(Error::Config(format!("'{key}': empty range '{s}'")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

fn to_dims(key: &str, values: &[f64]) -> Result<Vec<usize>> {
    values
        .iter()
        .map(|&v| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!(
                    "'{key}' must hold positive integers, got {v}"
                )))
            }
        })
        .collect()
}

/// Raw file contents; every field optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub kind: Option<String>,
    pub n: Option<ValueSpec>,
    pub m: Option<ValueSpec>,
    pub snr_db: Option<ValueSpec>,
    pub eig_low: Option<f64>,
    pub eig_high: Option<f64>,
    pub trials: Option<u64>,
    pub random_transforms: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<u64>,
    pub out: Option<PathBuf>,
    pub sigma_x: Option<PathBuf>,
    pub sigma_e: Option<PathBuf>,
    pub transform: Option<PathBuf>,
}

impl RawConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut raw = Self::from_toml(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut raw.sigma_x, &mut raw.sigma_e, &mut raw.transform] {
            if let Some(rel) = p.as_mut() {
                if rel.is_relative() {
                    *rel = base.join(&*rel);
                }
            }
        }
        Ok(raw)
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct InspectInputs {
    pub sigma_x: PathBuf,
    pub sigma_e: PathBuf,
    pub transform: PathBuf,
}

/// Validated experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    pub snr_db: Vec<f64>,
    pub eig_range: (f64, f64),
    pub trials: usize,
    pub random_transforms: usize,
    pub seed: u64,
    pub workers: usize,
    pub output_path: Option<PathBuf>,
    pub inspect: Option<InspectInputs>,
}

impl ExperimentConfig {
    /// Resolves `raw` for the experiment `kind` selected on the command line.
    pub fn resolve(kind_hint: Option<Kind>, raw: RawConfig, ov: Overrides) -> Result<Self> {
        let file_kind = raw.kind.as_deref().map(Kind::from_str).transpose()?;
        let kind = match (kind_hint, file_kind) {
            (Some(h), Some(f)) if h != f => {
                return Err(Error::Config(format!(
                    "config declares kind '{f}' but command '{h}' was requested"
                )))
            }
            (_, Some(f)) => f,
            (Some(h), None) => h,
            (None, None) => return Err(Error::Config("config must declare 'kind'".into())),
        };

        let get =
            |spec: &Option<ValueSpec>, key: &str| spec.as_ref().map(|s| s.values(key)).transpose();
        let n_raw = get(&raw.n, "n")?;
        let m_raw = get(&raw.m, "m")?;
        let snr_raw = get(&raw.snr_db, "snr_db")?;

        let (n, m) = match kind {
            Kind::RandomVsOpt | Kind::SweepSnr | Kind::Inspect => {
                let n = to_dims("n", &n_raw.unwrap_or_else(|| vec![10.0]))?;
                let m = to_dims("m", &m_raw.unwrap_or_else(|| vec![3.0]))?;
                (n, m)
            }
            Kind::SweepM => {
                let n = to_dims("n", &n_raw.unwrap_or_else(|| vec![50.0]))?;
                let m = match m_raw {
                    Some(v) => to_dims("m", &v)?,
                    None if n.len() == 1 && n[0] >= 2 => (1..n[0]).collect(),
                    None => return Err(Error::Config("'m' is required".into())),
                };
                (n, m)
            }
            Kind::SweepN => {
                let n = to_dims(
                    "n",
                    &n_raw.ok_or_else(|| Error::Config("'n' is required".into()))?,
                )?;
                let m = to_dims("m", &m_raw.unwrap_or_else(|| vec![3.0]))?;
                (n, m)
            }
        };
        let snr_db = snr_raw.unwrap_or_else(|| vec![0.0]);

        let swept = match kind {
            Kind::SweepSnr => "snr_db",
            Kind::SweepM => "m",
            Kind::SweepN => "n",
            _ => "",
        };
        for (key, len) in [("n", n.len()), ("m", m.len()), ("snr_db", snr_db.len())] {
            if key != swept && len != 1 && kind != Kind::Inspect {
                return Err(Error::Config(format!(
                    "'{key}' must be a single value for {kind}"
                )));
            }
        }
        if kind != Kind::Inspect {
            for &ni in &n {
                for &mi in &m {
                    if mi >= ni {
                        return Err(Error::Config(format!(
                            "infeasible point m={mi}, n={ni}: need m < n"
                        )));
                    }
                }
            }
        }

        let eig_range = (
            raw.eig_low.unwrap_or(DEFAULT_EIG_LOW),
            raw.eig_high.unwrap_or(DEFAULT_EIG_HIGH),
        );
        if !(eig_range.0 > 0.0 && eig_range.0 <= eig_range.1 && eig_range.1.is_finite()) {
            return Err(Error::Config(format!(
                "eigenvalue range must satisfy 0 < eig_low <= eig_high, got {eig_range:?}"
            )));
        }

        let trials = ov.trials.or(raw.trials).unwrap_or(0) as usize;
        if trials > 0 && trials < crate::montecarlo::MIN_TRIALS {
            return Err(Error::Config(format!(
                "trials must be 0 or at least {}",
                crate::montecarlo::MIN_TRIALS
            )));
        }
        let default_random = if kind == Kind::RandomVsOpt { 1000 } else { 0 };
        let random_transforms = raw.random_transforms.unwrap_or(default_random) as usize;
        if kind == Kind::RandomVsOpt && random_transforms == 0 {
            return Err(Error::Config("random_transforms must be positive".into()));
        }
        let workers = ov.workers.or(raw.workers).unwrap_or(1) as usize;
        if workers == 0 {
            return Err(Error::Config("workers must be positive".into()));
        }

        let inspect = if kind == Kind::Inspect {
            let need = |p: Option<PathBuf>, key: &str| {
                p.ok_or_else(|| Error::Config(format!("inspect needs '{key}'")))
            };
            Some(InspectInputs {
                sigma_x: need(raw.sigma_x, "sigma_x")?,
                sigma_e: need(raw.sigma_e, "sigma_e")?,
                transform: need(raw.transform, "transform")?,
            })
        } else {
            None
        };

        Ok(Self {
            kind,
            n,
            m,
            snr_db,
            eig_range,
            trials,
            random_transforms,
            seed: ov.seed.or(raw.seed).unwrap_or(0),
            workers,
            output_path: ov.out.or(raw.out),
            inspect,
        })
    }
}
