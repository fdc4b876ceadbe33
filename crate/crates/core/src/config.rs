//! Scenario files: flat `key = value` lines grouped under `[section]` headers.
//!
//! ```text
//! # comments start with '#' or ';'
//! [energy]
//! p_cons = 0.005
//! [experiment]
//! experiment = fig3a
//! snr_db = 60:110:1
//! ```
//!
//! Keys are unique across sections, so a bare key before the first header
//! (or in a command-line override) is resolved to its owning section.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::scenario::{
    ChannelParams, EnergyParams, NakagamiShape, Scenario, ScenarioGeometry, Tolerances, DEFAULT_GRID,
};

/// Upper bound on the number of points a single sweep may expand to.
pub const MAX_SWEEP_POINTS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn new(line: Option<usize>, field: Option<&str>, message: impl Into<String>) -> Self {
        Self { line, field: field.map(str::to_string), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(field) = &self.field {
            write!(f, "field `{field}`: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Fig3a,
    Fig3b,
    Fig4,
    Fig5a,
    Fig5b,
    Single,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Fig3a,
        Experiment::Fig3b,
        Experiment::Fig4,
        Experiment::Fig5a,
        Experiment::Fig5b,
        Experiment::Single,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fig3a => "fig3a",
            Experiment::Fig3b => "fig3b",
            Experiment::Fig4 => "fig4",
            Experiment::Fig5a => "fig5a",
            Experiment::Fig5b => "fig5b",
            Experiment::Single => "single",
        }
    }
}

impl std::str::FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| {
            format!("unknown experiment `{s}` (expected one of fig3a, fig3b, fig4, fig5a, fig5b, single)")
        })
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub geometry: ScenarioGeometry,
    pub channel: ChannelParams,
    pub energy: EnergyParams,
    pub grid: usize,
    pub tol: Tolerances,
    pub experiment: Experiment,
    /// `P0 / σ0²` in dB.
    pub snr_db: Vec<f64>,
    /// Common path-loss exponent for the fig3b sweep.
    pub alpha0: Vec<f64>,
    pub r0: Vec<f64>,
    pub m_list: Vec<NakagamiShape>,
    pub trials: usize,
    pub base_seed: u64,
    pub out: PathBuf,
    /// Throughput (bit/Hz) the fig3b energies are measured at.
    pub target_throughput: f64,
    /// Peak-to-average power ratio of the bounded-burst column in fig3a.
    pub pm_ratio_db: f64,
    pub allow_rate_slip: bool,
}

impl ScenarioConfig {
    pub fn scenario(&self) -> crate::Result<Scenario> {
        let mut sc = Scenario::new(self.geometry, self.channel, self.energy, self.grid)?;
        sc.tol = self.tol;
        Ok(sc)
    }
}

const SECTIONS: [(&str, &[&str]); 5] = [
    ("geometry", &["d0", "l0", "v0"]),
    ("channel", &["gc_db", "gs_db", "alpha_c", "alpha_s", "m"]),
    ("energy", &["xi", "p_cons", "p0", "sigma0_sq", "p_m"]),
    ("numerics", &["grid", "golden_tol", "coarse_points", "sub_points"]),
    (
        "experiment",
        &[
            "experiment",
            "snr_db",
            "alpha0",
            "r0",
            "m_list",
            "trials",
            "base_seed",
            "out",
            "target_throughput",
            "pm_ratio_db",
            "allow_rate_slip",
        ],
    ),
];

fn section_of(key: &str) -> Option<&'static str> {
    SECTIONS.iter().find(|(_, keys)| keys.contains(&key)).map(|(s, _)| *s)
}

/// A `key=value` or `section.key=value` assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Override {
    pub section: &'static str,
    pub key: String,
    pub value: String,
}

pub fn parse_override(text: &str) -> Result<Override, ConfigError> {
    let (lhs, value) = text
        .split_once('=')
        .ok_or_else(|| ConfigError::new(None, None, format!("override `{text}` is not of the form key=value")))?;
    let lhs = lhs.trim();
    let value = value.trim();
    let (section, key) = match lhs.split_once('.') {
        Some((s, k)) => (Some(s.trim()), k.trim()),
        None => (None, lhs),
    };
    let owner = section_of(key).ok_or_else(|| ConfigError::new(None, Some(key), "unknown key"))?;
    if let Some(s) = section {
        if s != owner {
            return Err(ConfigError::new(None, Some(key), format!("key belongs to [{owner}], not [{s}]")));
        }
    }
    Ok(Override { section: owner, key: key.to_string(), value: value.to_string() })
}

fn parse_number(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_nan() {
        return Err("NaN is not allowed".to_string());
    }
    Ok(v)
}

/// `a:b:s` (inclusive), a comma list, or a single number.
pub fn parse_sweep(s: &str) -> Result<Vec<f64>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty sweep".to_string());
    }
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("range `{s}` must be start:stop:step"));
        }
        let a = parse_number(parts[0])?;
        let b = parse_number(parts[1])?;
        let step = parse_number(parts[2])?;
        if !(a.is_finite() && b.is_finite() && step.is_finite()) {
            return Err(format!("range `{s}` must be finite"));
        }
        if !(step > 0.0) {
            return Err(format!("range step must be > 0, got {step}"));
        }
        if b < a {
            return Err(format!("range stop {b} is below start {a}"));
        }
        let span = (b - a) / step;
        if !(span < MAX_SWEEP_POINTS as f64) {
            return Err(format!("range `{s}` expands to more than {MAX_SWEEP_POINTS} points"));
        }
        let count = (span + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|i| a + i as f64 * step).collect());
    }
    let values = s.split(',').map(parse_number).collect::<Result<Vec<_>, _>>()?;
    if values.len() > MAX_SWEEP_POINTS {
        return Err(format!("list has more than {MAX_SWEEP_POINTS} entries"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err("sweep values must be finite".to_string());
    }
    Ok(values)
}

fn parse_shape(s: &str) -> Result<NakagamiShape, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinite" | "infinity" => Ok(NakagamiShape::Infinite),
        other => {
            let v = parse_number(other)?;
            if v.is_infinite() {
                Ok(NakagamiShape::Infinite)
            } else {
                Ok(NakagamiShape::Finite(v))
            }
        }
    }
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(format!("`{other}` is not a boolean")),
    }
}

fn parse_count(s: &str) -> Result<usize, String> {
    s.trim().parse::<usize>().map_err(|_| format!("`{s}` is not a non-negative integer"))
}

/// Raw values with the line each came from, before cross-field validation.
#[derive(Debug, Clone)]
struct Draft {
    geo: [f64; 3],
    gc_db: f64,
    gs_db: f64,
    alpha_c: f64,
    alpha_s: f64,
    m: NakagamiShape,
    xi: f64,
    p_cons: f64,
    p0: f64,
    sigma0_sq: f64,
    p_m: Option<f64>,
    grid: usize,
    tol: Tolerances,
    experiment: Experiment,
    snr_db: Option<Vec<f64>>,
    alpha0: Option<Vec<f64>>,
    r0: Option<Vec<f64>>,
    m_list: Option<Vec<NakagamiShape>>,
    trials: usize,
    base_seed: u64,
    out: PathBuf,
    target_throughput: f64,
    pm_ratio_db: f64,
    allow_rate_slip: bool,
    lines: Vec<(String, Option<usize>)>,
}

impl Default for Draft {
    fn default() -> Self {
        Self {
            geo: [10.0, 100.0, 20.0],
            gc_db: 10.0,
            gs_db: 10.0,
            alpha_c: 3.0,
            alpha_s: 3.0,
            m: NakagamiShape::Infinite,
            xi: 0.5,
            p_cons: 5e-3,
            p0: 1e9,
            sigma0_sq: 1.0,
            p_m: None,
            grid: DEFAULT_GRID,
            tol: Tolerances::default(),
            experiment: Experiment::Single,
            snr_db: None,
            alpha0: None,
            r0: None,
            m_list: None,
            trials: 1000,
            base_seed: 1,
            out: PathBuf::from("."),
            target_throughput: 60.0,
            pm_ratio_db: 20.0,
            allow_rate_slip: false,
            lines: Vec::new(),
        }
    }
}

impl Draft {
    fn line_of(&self, key: &str) -> Option<usize> {
        self.lines.iter().rev().find(|(k, _)| k == key).and_then(|(_, l)| *l)
    }

    fn set(&mut self, key: &str, value: &str, line: Option<usize>) -> Result<(), ConfigError> {
        let err = |m: String| ConfigError::new(line, Some(key), m);
        let num = || parse_number(value).map_err(err);
        match key {
            "d0" => self.geo[0] = num()?,
            "l0" => self.geo[1] = num()?,
            "v0" => self.geo[2] = num()?,
            "gc_db" => self.gc_db = num()?,
            "gs_db" => self.gs_db = num()?,
            "alpha_c" => self.alpha_c = num()?,
            "alpha_s" => self.alpha_s = num()?,
            "m" => self.m = parse_shape(value).map_err(err)?,
            "xi" => self.xi = num()?,
            "p_cons" => self.p_cons = num()?,
            "p0" => self.p0 = num()?,
            "sigma0_sq" => self.sigma0_sq = num()?,
            "p_m" => {
                self.p_m = match value.trim().to_ascii_lowercase().as_str() {
                    "none" | "inf" | "" => None,
                    _ => Some(num()?),
                }
            }
            "grid" => self.grid = parse_count(value).map_err(err)?,
            "golden_tol" => self.tol.golden_time = num()?,
            "coarse_points" => self.tol.coarse_points = parse_count(value).map_err(err)?,
            "sub_points" => self.tol.sub_points = parse_count(value).map_err(err)?,
            "experiment" => self.experiment = value.trim().parse().map_err(err)?,
            "snr_db" => self.snr_db = Some(parse_sweep(value).map_err(err)?),
            "alpha0" => self.alpha0 = Some(parse_sweep(value).map_err(err)?),
            "r0" => self.r0 = Some(parse_sweep(value).map_err(err)?),
            "m_list" => {
                let shapes = value.split(',').map(parse_shape).collect::<Result<Vec<_>, _>>().map_err(err)?;
                self.m_list = Some(shapes);
            }
            "trials" => self.trials = parse_count(value).map_err(err)?,
            "base_seed" => {
                self.base_seed =
                    value.trim().parse().map_err(|_| err(format!("`{value}` is not an unsigned 64-bit integer")))?
            }
            "out" => self.out = PathBuf::from(value.trim()),
            "target_throughput" => self.target_throughput = num()?,
            "pm_ratio_db" => self.pm_ratio_db = num()?,
            "allow_rate_slip" => self.allow_rate_slip = parse_bool(value).map_err(err)?,
            _ => return Err(ConfigError::new(line, Some(key), "unknown key")),
        }
        self.lines.push((key.to_string(), line));
        Ok(())
    }

    fn fail(&self, key: &str, e: crate::WhetError) -> ConfigError {
        let message = match e {
            crate::WhetError::InvalidParameter { reason, .. } => reason,
            other => other.to_string(),
        };
        ConfigError::new(self.line_of(key), Some(key), message)
    }

    fn build(self) -> Result<ScenarioConfig, ConfigError> {
        let geometry = ScenarioGeometry::new(self.geo[0], self.geo[1], self.geo[2]).map_err(|e| {
            let key = match &e {
                crate::WhetError::InvalidParameter { name, .. } => *name,
                _ => "d0",
            };
            self.fail(key, e)
        })?;
        let db = |x: f64| 10f64.powf(x / 10.0);
        let channel =
            ChannelParams::new(db(self.gc_db), db(self.gs_db), self.alpha_c, self.alpha_s, self.m).map_err(|e| {
                let key = match &e {
                    crate::WhetError::InvalidParameter { name: "gc", .. } => "gc_db",
                    crate::WhetError::InvalidParameter { name: "gs", .. } => "gs_db",
                    crate::WhetError::InvalidParameter { name, .. } => name,
                    _ => "m",
                };
                self.fail(key, e)
            })?;
        let energy = EnergyParams::new(self.xi, self.p_cons, self.p0, self.sigma0_sq, self.p_m).map_err(|e| {
            let key = match &e {
                crate::WhetError::InvalidParameter { name, .. } => *name,
                _ => "p0",
            };
            self.fail(key, e)
        })?;
        crate::scenario::TimeGrid::new(self.grid, geometry.t_end()).map_err(|e| self.fail("grid", e))?;
        if !(self.tol.golden_time > 0.0 && self.tol.golden_time.is_finite()) {
            return Err(ConfigError::new(self.line_of("golden_tol"), Some("golden_tol"), "must be finite and > 0"));
        }
        if self.tol.coarse_points < 3 || self.tol.coarse_points > MAX_SWEEP_POINTS {
            return Err(ConfigError::new(
                self.line_of("coarse_points"),
                Some("coarse_points"),
                format!("must lie in [3, {MAX_SWEEP_POINTS}]"),
            ));
        }
        if self.tol.sub_points < 3 || self.tol.sub_points.is_multiple_of(2) || self.tol.sub_points > MAX_SWEEP_POINTS {
            return Err(ConfigError::new(
                self.line_of("sub_points"),
                Some("sub_points"),
                format!("must be odd and lie in [3, {MAX_SWEEP_POINTS}]"),
            ));
        }
        if self.trials == 0 {
            return Err(ConfigError::new(self.line_of("trials"), Some("trials"), "must be >= 1"));
        }
        for (key, v) in [("target_throughput", self.target_throughput), ("pm_ratio_db", self.pm_ratio_db)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::new(self.line_of(key), Some(key), format!("must be finite and > 0, got {v}")));
            }
        }
        if let Some(r0) = &self.r0 {
            if r0.iter().any(|&r| !(r > 0.0)) {
                return Err(ConfigError::new(self.line_of("r0"), Some("r0"), "rates must be > 0"));
            }
        }
        if let Some(alpha) = &self.alpha0 {
            if alpha.iter().any(|&a| !(a >= 0.0)) {
                return Err(ConfigError::new(self.line_of("alpha0"), Some("alpha0"), "exponents must be >= 0"));
            }
        }
        if let Some(ms) = &self.m_list {
            if ms.iter().any(|m| matches!(m, NakagamiShape::Finite(v) if !(*v >= 0.5))) {
                return Err(ConfigError::new(self.line_of("m_list"), Some("m_list"), "Nakagami shapes must be >= 0.5"));
            }
        }
        let experiment = self.experiment;
        let default_r0 = match experiment {
            Experiment::Fig5b => vec![70.0],
            _ => vec![60.0],
        };
        let default_m = match experiment {
            Experiment::Fig5b => {
                vec![NakagamiShape::Finite(3.0), NakagamiShape::Finite(6.0), NakagamiShape::Finite(20.0)]
            }
            _ => vec![
                NakagamiShape::Finite(3.0),
                NakagamiShape::Finite(6.0),
                NakagamiShape::Finite(50.0),
                NakagamiShape::Infinite,
            ],
        };
        Ok(ScenarioConfig {
            geometry,
            channel,
            energy,
            grid: self.grid,
            tol: self.tol,
            experiment,
            snr_db: self.snr_db.unwrap_or_else(|| parse_sweep("60:110:5").expect("valid default")),
            alpha0: self.alpha0.unwrap_or_else(|| parse_sweep("2:4:0.25").expect("valid default")),
            r0: self.r0.unwrap_or(default_r0),
            m_list: self.m_list.unwrap_or(default_m),
            trials: self.trials,
            base_seed: self.base_seed,
            out: self.out,
            target_throughput: self.target_throughput,
            pm_ratio_db: self.pm_ratio_db,
            allow_rate_slip: self.allow_rate_slip,
        })
    }
}

fn strip_comment(line: &str) -> &str {
    let cut = line.find(['#', ';']).unwrap_or(line.len());
    line[..cut].trim()
}

fn parse_into(draft: &mut Draft, text: &str) -> Result<(), ConfigError> {
    let mut section: Option<&'static str> = None;
    let mut seen: Vec<String> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::new(Some(line_no), None, format!("malformed section header `{line}`")))?
                .trim();
            section = Some(
                SECTIONS
                    .iter()
                    .find(|(s, _)| *s == name)
                    .map(|(s, _)| *s)
                    .ok_or_else(|| ConfigError::new(Some(line_no), None, format!("unknown section [{name}]")))?,
            );
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::new(Some(line_no), None, format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim();
        let owner = section_of(key).ok_or_else(|| ConfigError::new(Some(line_no), Some(key), "unknown key"))?;
        if let Some(s) = section {
            if s != owner {
                return Err(ConfigError::new(Some(line_no), Some(key), format!("key belongs to [{owner}], not [{s}]")));
            }
        }
        if seen.iter().any(|k| k == key) {
            return Err(ConfigError::new(Some(line_no), Some(key), "duplicate key"));
        }
        seen.push(key.to_string());
        draft.set(key, value.trim(), Some(line_no))?;
    }
    Ok(())
}

/// Parses configuration text; an empty string yields the reference scenario.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    parse_config_with(text, &[])
}

/// Parses configuration text, then applies overrides in order.
pub fn parse_config_with(text: &str, overrides: &[Override]) -> Result<ScenarioConfig, ConfigError> {
    let mut draft = Draft::default();
    parse_into(&mut draft, text)?;
    for o in overrides {
        draft.set(&o.key, &o.value, None)?;
    }
    draft.build()
}

pub fn load_config(path: &Path, overrides: &[Override]) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new(None, None, format!("cannot read {}: {e}", path.display())))?;
    parse_config_with(&text, overrides)
}
