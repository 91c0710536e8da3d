//! Flat `key = value` run configuration with strict key checking.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Trace,
    Stack,
    Extract,
    Fit,
    Design,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Trace => "trace",
            Command::Stack => "stack",
            Command::Extract => "extract",
            Command::Fit => "fit",
            Command::Design => "design",
        }
    }

    /// Keys accepted by this command besides the shared ones.
    fn keys(self) -> &'static [&'static str] {
        const SWEEP: [&str; 4] = ["d_min", "d_max", "points", "spacing"];
        const QUAD: [&str; 4] = ["scheme", "nodes", "rel_tol", "kappa_max"];
        match self {
            Command::Trace => &[
                "c0", "period", "reduction", "ell_star", "model", "u_th", "v_s", "d_s", "d_h", "d_w", "g_newton",
                SWEEP[0], SWEEP[1], SWEEP[2], SWEEP[3], "grid",
            ],
            Command::Stack => &[
                "positions", "couplings", "lambda", "cantor_level", "outer", "reduction", QUAD[0], QUAD[1], QUAD[2],
                QUAD[3],
            ],
            Command::Extract => &[
                "level", "lambda_hat", "reduction", "gap", SWEEP[0], SWEEP[1], SWEEP[2], SWEEP[3], QUAD[0],
                QUAD[1], QUAD[2], QUAD[3], "fit", "max_harmonics", "ridge", "ell_star",
            ],
            Command::Fit => &[
                "input", "period", "reduction", "max_harmonics", "ridge", "ell_star", "scan_min", "scan_max",
                "scan_points",
            ],
            Command::Design => &["outer", "reduction", "d", "margin"],
        }
    }

    fn accepts(self, key: &str) -> bool {
        const SHARED: [&str; 3] = ["command", "out", "format"];
        if SHARED.contains(&key) || self.keys().contains(&key) {
            return true;
        }
        // cos_k / sin_k harmonic amplitudes of the trace model
        self == Command::Trace
            && ["cos_", "sin_"].iter().any(|p| {
                key.strip_prefix(p)
                    .and_then(|k| k.parse::<usize>().ok())
                    .is_some_and(|k| k >= 1)
            })
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trace" => Ok(Command::Trace),
            "stack" => Ok(Command::Stack),
            "extract" => Ok(Command::Extract),
            "fit" => Ok(Command::Fit),
            "design" => Ok(Command::Design),
            other => Err(Error::Usage(format!("unknown command `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Usage(format!("unknown format `{other}` (expected csv or json)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

/// Separation sweep `d_min..=d_max` with `points` samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub d_min: f64,
    pub d_max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl Sweep {
    pub fn new(d_min: f64, d_max: f64, points: usize, spacing: Spacing) -> Result<Self> {
        if !(d_min > 0.0) || !d_max.is_finite() {
            return Err(Error::Usage(format!("d_min must be positive, got {d_min}")));
        }
        if !(d_min < d_max) {
            return Err(Error::Usage(format!("d_min = {d_min} must be below d_max = {d_max}")));
        }
        if points < 2 {
            return Err(Error::Usage(format!("points must be at least 2, got {points}")));
        }
        Ok(Self {
            d_min,
            d_max,
            points,
            spacing,
        })
    }

    pub fn grid(&self) -> Vec<f64> {
        let last = self.points - 1;
        (0..self.points)
            .map(|i| {
                if i == last {
                    return self.d_max;
                }
                let f = i as f64 / last as f64;
                match self.spacing {
                    Spacing::Linear => self.d_min + (self.d_max - self.d_min) * f,
                    Spacing::Log => (self.d_min.ln() + (self.d_max / self.d_min).ln() * f).exp(),
                }
            })
            .collect()
    }
}

/// Parsed configuration for one subcommand.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    values: BTreeMap<String, String>,
    base_dir: PathBuf,
}

impl RunConfig {
    pub fn parse(command: Command, text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Usage(format!("line {}: expected `key = value`, got `{line}`", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(Error::Usage(format!("line {}: empty key", lineno + 1)));
            }
            if !command.accepts(key) {
                return Err(Error::Usage(format!(
                    "line {}: unknown key `{key}` for command `{}`",
                    lineno + 1,
                    command.name()
                )));
            }
            if values.insert(key.to_string(), value.to_string()).is_some() {
                return Err(Error::Usage(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
        }
        if let Some(declared) = values.get("command") {
            let declared: Command = declared.parse()?;
            if declared != command {
                return Err(Error::Usage(format!(
                    "config declares command `{}` but `{}` was invoked",
                    declared.name(),
                    command.name()
                )));
            }
        }
        Ok(Self {
            command,
            values,
            base_dir: base_dir.into(),
        })
    }

    pub fn load(command: Command, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(command, &text, base)
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Usage(format!("key `{key}`: cannot parse `{v}`"))),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .ok_or_else(|| Error::Usage(format!("missing required key `{key}` for `{}`", self.command.name())))
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated list of numbers.
    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.values
            .get(key)
            .map(|v| {
                v.split(',')
                    .map(|item| {
                        item.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::Usage(format!("key `{key}`: cannot parse `{}`", item.trim())))
                    })
                    .collect()
            })
            .transpose()
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        match self.raw(key) {
            None | Some("false") | Some("no") | Some("0") => Ok(false),
            Some("true") | Some("yes") | Some("1") => Ok(true),
            Some(other) => Err(Error::Usage(format!("key `{key}`: expected true or false, got `{other}`"))),
        }
    }

    /// A path value, resolved against the config file's directory.
    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.raw(key).map(|v| self.base_dir.join(v))
    }

    /// Sweep from `d_min`, `d_max`, `points`, `spacing`, if any of them is present.
    pub fn sweep(&self, default_spacing: Spacing) -> Result<Option<Sweep>> {
        if !["d_min", "d_max", "points", "spacing"].iter().any(|k| self.has(k)) {
            return Ok(None);
        }
        let spacing = match self.raw("spacing") {
            None => default_spacing,
            Some("linear") => Spacing::Linear,
            Some("log") => Spacing::Log,
            Some(other) => {
                return Err(Error::Usage(format!("key `spacing`: expected linear or log, got `{other}`")));
            }
        };
        Sweep::new(self.require("d_min")?, self.require("d_max")?, self.require("points")?, spacing).map(Some)
    }

    /// Harmonic pairs from `cos_k` / `sin_k` keys; missing entries are zero.
    pub fn harmonics(&self) -> Result<Vec<(f64, f64)>> {
        let mut max_k = 0;
        for key in self.values.keys() {
            for p in ["cos_", "sin_"] {
                if let Some(k) = key.strip_prefix(p).and_then(|k| k.parse::<usize>().ok()) {
                    max_k = max_k.max(k);
                }
            }
        }
        (1..=max_k)
            .map(|k| Ok((self.get_or(&format!("cos_{k}"), 0.0)?, self.get_or(&format!("sin_{k}"), 0.0)?)))
            .collect()
    }
}
