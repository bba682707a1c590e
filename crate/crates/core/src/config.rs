//! Run configuration for the `prmimo` tool.
//!
//! Configuration files are flat `key=value` text. Blank lines and lines
//! starting with `#` are ignored; keys may use `-` or `_`. The same keys are
//! accepted as command-line flags (`--key value`), which override the file.
//!
//! ```text
//! # reference scenario with 20 clusters
//! ncl = 20
//! snr-db = -10:5:20
//! schemes = physical,pattern,ideal
//! ```

use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use crate::cfpa::DesignOptions;
use crate::channel::{ArrayGeometry, Condition};
use crate::eval::{Scenario, Scheme};

/// Upper bound on SNR grid length, to keep malformed grids from exhausting
/// memory.
pub const MAX_GRID_POINTS: usize = 10_000;

pub const KEYS: &[&str] = &[
    "nt",
    "nr",
    "ncl",
    "nray",
    "xi-deg",
    "spacing",
    "snr-db",
    "trials",
    "seed",
    "condition",
    "schemes",
    "safeguard",
    "renormalize",
    "workers",
    "out",
    "emit-plot",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected key=value, got '{text}'")]
    Syntax { line: usize, text: String },
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("line {line}: key '{key}' set twice")]
    Duplicate { line: usize, key: String },
    #[error("invalid value for '{key}': {msg}")]
    Value { key: String, msg: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

fn value_err(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Value { key: key.to_string(), msg: msg.into() }
}

/// Arithmetic SNR grid `start:step:stop` in dB, inclusive of `stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrGrid {
    pub start: f64,
    pub step: f64,
    pub stop: f64,
}

impl SnrGrid {
    pub fn points(&self) -> Vec<f64> {
        let n = grid_len(self.start, self.step, self.stop);
        (0..n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

fn grid_len(start: f64, step: f64, stop: f64) -> usize {
    ((stop - start) / step + 1e-9).floor() as usize + 1
}

impl fmt::Display for SnrGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.step, self.stop)
    }
}

/// Parses `start:step:stop` or a single value.
pub fn parse_snr_grid(s: &str) -> Result<SnrGrid, ConfigError> {
    let key = "snr-db";
    let num = |t: &str| -> Result<f64, ConfigError> {
        let v: f64 = t.trim().parse().map_err(|_| value_err(key, format!("'{t}' is not a number")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(value_err(key, format!("'{t}' is not finite")))
        }
    };
    let parts: Vec<&str> = s.split(':').collect();
    let grid = match parts.as_slice() {
        [single] => {
            let v = num(single)?;
            SnrGrid { start: v, step: 1.0, stop: v }
        }
        [start, step, stop] => SnrGrid { start: num(start)?, step: num(step)?, stop: num(stop)? },
        _ => return Err(value_err(key, format!("expected start:step:stop, got '{s}'"))),
    };
    if !(grid.step > 0.0) {
        return Err(value_err(key, "step must be positive"));
    }
    if grid.stop < grid.start {
        return Err(value_err(key, "stop must not be below start"));
    }
    let span = (grid.stop - grid.start) / grid.step;
    if !(span < MAX_GRID_POINTS as f64) {
        return Err(value_err(key, format!("grid exceeds {MAX_GRID_POINTS} points")));
    }
    if grid.points().windows(2).any(|w| !(w[0] < w[1])) {
        return Err(value_err(key, "step is below the floating-point resolution of the grid"));
    }
    Ok(grid)
}

/// Comma-separated scheme list; duplicates collapse, order is normalized.
pub fn parse_schemes(s: &str) -> Result<Vec<Scheme>, ConfigError> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let scheme: Scheme =
            part.trim().parse().map_err(|e: crate::Error| value_err("schemes", e.to_string()))?;
        if !out.contains(&scheme) {
            out.push(scheme);
        }
    }
    out.sort();
    Ok(out)
}

fn parse_bool(key: &str, s: &str) -> Result<bool, ConfigError> {
    match s {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(value_err(key, format!("expected true|false, got '{s}'"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, s: &str) -> Result<T, ConfigError> {
    s.parse().map_err(|_| value_err(key, format!("cannot parse '{s}'")))
}

fn parse_real(key: &str, s: &str) -> Result<f64, ConfigError> {
    let v: f64 = parse_num(key, s)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(value_err(key, format!("'{s}' is not finite")))
    }
}

/// Canonical form of a configuration key (`_` → `-`).
pub fn normalize_key(key: &str) -> String {
    key.trim().replace('_', "-")
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n_t: usize,
    pub n_r: usize,
    pub n_cl: usize,
    pub n_ray: usize,
    pub xi_deg: f64,
    /// Antenna spacing in wavelengths, used at both ends.
    pub spacing: f64,
    pub snr_db: SnrGrid,
    pub trials: usize,
    pub seed: u64,
    pub condition: Condition,
    pub schemes: Vec<Scheme>,
    pub safeguard: bool,
    pub renormalize: bool,
    /// Worker threads; 0 picks the number of available cores.
    pub workers: usize,
    pub output_dir: PathBuf,
    pub emit_plot: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_t: 32,
            n_r: 8,
            n_cl: 10,
            n_ray: 8,
            xi_deg: 3.0,
            spacing: 0.5,
            snr_db: SnrGrid { start: -10.0, step: 5.0, stop: 20.0 },
            trials: 1000,
            seed: 1,
            condition: Condition::Ill,
            schemes: Scheme::ALL.to_vec(),
            safeguard: false,
            renormalize: true,
            workers: 0,
            output_dir: PathBuf::from("prmimo-out"),
            emit_plot: false,
        }
    }
}

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = normalize_key(key);
        let value = value.trim();
        let k = key.as_str();
        match k {
            "nt" => self.n_t = parse_num(k, value)?,
            "nr" => self.n_r = parse_num(k, value)?,
            "ncl" => self.n_cl = parse_num(k, value)?,
            "nray" => self.n_ray = parse_num(k, value)?,
            "xi-deg" => self.xi_deg = parse_real(k, value)?,
            "spacing" => self.spacing = parse_real(k, value)?,
            "snr-db" => self.snr_db = parse_snr_grid(value)?,
            "trials" => self.trials = parse_num(k, value)?,
            "seed" => self.seed = parse_num(k, value)?,
            "condition" => {
                self.condition = value.parse().map_err(|e: crate::Error| value_err(k, e.to_string()))?
            }
            "schemes" => self.schemes = parse_schemes(value)?,
            "safeguard" => self.safeguard = parse_bool(k, value)?,
            "renormalize" => self.renormalize = parse_bool(k, value)?,
            "workers" => self.workers = parse_num(k, value)?,
            "out" => {
                if value.is_empty() {
                    return Err(value_err(k, "output directory is empty"));
                }
                self.output_dir = PathBuf::from(value)
            }
            "emit-plot" => self.emit_plot = parse_bool(k, value)?,
            _ => return Err(ConfigError::UnknownKey(key)),
        }
        Ok(())
    }

    /// Applies every `key=value` line of a configuration file.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        let mut seen: Vec<String> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line: i + 1, text: line.to_string() })?;
            let key = normalize_key(key);
            if key.is_empty() {
                return Err(ConfigError::Syntax { line: i + 1, text: line.to_string() });
            }
            if seen.contains(&key) {
                return Err(ConfigError::Duplicate { line: i + 1, key });
            }
            self.set(&key, value)?;
            seen.push(key);
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Validated scenario for the campaign runner.
    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        let geometry = ArrayGeometry::new(self.n_t, self.n_r, self.spacing, self.spacing)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(self.xi_deg >= 0.0) {
            return Err(ConfigError::Invalid(format!("xi-deg must be >= 0, got {}", self.xi_deg)));
        }
        let scenario = Scenario {
            geometry,
            n_cl: self.n_cl,
            n_ray: self.n_ray,
            condition: self.condition,
            angle_spread: self.xi_deg.to_radians(),
            snr_grid_db: self.snr_db.points(),
            trials: self.trials,
            master_seed: self.seed,
            schemes: self.schemes.clone(),
            design: DesignOptions { renormalize: self.renormalize },
            safeguard: self.safeguard,
        };
        scenario.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(scenario)
    }

    /// Every key with its current value, in [`KEYS`] order. Feeding the
    /// lines back through [`RunConfig::apply_text`] reproduces the config.
    pub fn to_key_values(&self) -> Vec<(&'static str, String)> {
        let schemes: Vec<&str> = self.schemes.iter().map(Scheme::as_str).collect();
        vec![
            ("nt", self.n_t.to_string()),
            ("nr", self.n_r.to_string()),
            ("ncl", self.n_cl.to_string()),
            ("nray", self.n_ray.to_string()),
            ("xi-deg", self.xi_deg.to_string()),
            ("spacing", self.spacing.to_string()),
            ("snr-db", self.snr_db.to_string()),
            ("trials", self.trials.to_string()),
            ("seed", self.seed.to_string()),
            ("condition", self.condition.as_str().to_string()),
            ("schemes", schemes.join(",")),
            ("safeguard", self.safeguard.to_string()),
            ("renormalize", self.renormalize.to_string()),
            ("workers", self.workers.to_string()),
            ("out", self.output_dir.display().to_string()),
            ("emit-plot", self.emit_plot.to_string()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_reference_scenario() {
        let cfg = RunConfig::default();
        let s = cfg.scenario().unwrap();
        assert_eq!((s.geometry.n_t(), s.geometry.n_r(), s.n_cl, s.n_ray), (32, 8, 10, 8));
        assert_eq!(s.condition, Condition::Ill);
        assert_eq!(s.trials, 1000);
        assert_eq!(s.snr_grid_db, vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0]);
        assert!((s.angle_spread - 3f64.to_radians()).abs() < 1e-15);
        assert_eq!(s.geometry.spacing_t(), 0.5);
    }

    #[test]
    fn file_text_with_comments() {
        let cfg = RunConfig::from_text("# c\n\nncl = 20\nxi_deg=1.5\nschemes=ideal, physical\n").unwrap();
        assert_eq!(cfg.n_cl, 20);
        assert_eq!(cfg.xi_deg, 1.5);
        assert_eq!(cfg.schemes, vec![Scheme::Ideal, Scheme::Physical]);
    }

    #[test]
    fn file_errors() {
        assert!(matches!(RunConfig::from_text("ncl 20"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(RunConfig::from_text("foo=1"), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(RunConfig::from_text("ncl=2\nncl=3"), Err(ConfigError::Duplicate { line: 2, .. })));
        assert!(matches!(RunConfig::from_text("trials=-1"), Err(ConfigError::Value { .. })));
        assert!(matches!(RunConfig::from_text("=3"), Err(ConfigError::Syntax { .. })));
    }

    #[test]
    fn invariant_violations() {
        let cfg = RunConfig { n_r: 16, n_t: 8, ..Default::default() };
        assert!(matches!(cfg.scenario(), Err(ConfigError::Invalid(_))));
        let cfg = RunConfig { trials: 0, ..Default::default() };
        assert!(cfg.scenario().is_err());
        let cfg = RunConfig { xi_deg: -1.0, ..Default::default() };
        assert!(cfg.scenario().is_err());
    }

    #[test]
    fn snr_grids() {
        assert_eq!(parse_snr_grid("-10:5:20").unwrap().points().len(), 7);
        assert_eq!(parse_snr_grid("3").unwrap().points(), vec![3.0]);
        assert_eq!(parse_snr_grid("0:0.1:0.3").unwrap().points().len(), 4);
        for bad in [
            "",
            "1:2",
            "0:0:5",
            "5:1:0",
            "0:1e-9:1",
            "a:1:2",
            "0:1:inf",
            "1:2:3:4",
            "1e20:5000:100000000000000016384",
        ] {
            assert!(parse_snr_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn schemes_parse() {
        assert_eq!(parse_schemes("pattern,ideal,pattern").unwrap(), vec![Scheme::Ideal, Scheme::Pattern]);
        assert!(parse_schemes("").is_err());
        assert!(parse_schemes("physical,,ideal").is_err());
    }

    #[test]
    fn key_values_round_trip() {
        let cfg = RunConfig {
            n_cl: 20,
            snr_db: SnrGrid { start: -2.5, step: 0.5, stop: 1.0 },
            condition: Condition::Good,
            schemes: vec![Scheme::Pattern],
            safeguard: true,
            ..Default::default()
        };
        let text: String = cfg.to_key_values().iter().map(|(k, v)| format!("{k}={v}\n")).collect();
        assert_eq!(RunConfig::from_text(&text).unwrap(), cfg);
        assert_eq!(cfg.to_key_values().len(), KEYS.len());
    }
}
