//! Flat `key = value` configuration files.
//!
//! ```text
//! # model
//! beta1 = 0.8
//! beta2 = 0.8
//! delta1 = 0.2
//! delta2 = 0.2
//! r1 = 0.5
//! r2 = 0.5
//! c1 = 0.5
//! c2 = 0.5
//! c_d = 0.4
//! q = 0.1
//! # simulation (optional)
//! h = 1e-4
//! t_max = 200
//! # one line per initial state: y1, y2, z_s, z1, z2
//! x0 = 0.6, 0.4, 0.1, 0.9, 0.7
//! # outputs (optional)
//! out = results
//! formats = csv, json
//! # a config with `sweep` lines is a sweep config
//! sweep = q, 0.05, 0.95, 19
//! targets = DFE0, L0
//! ```
//!
//! Blank lines and lines starting with `#` or `;` are ignored.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equilibria::{EquilibriumKind, LineKind};
use crate::integrator::{IntegratorError, SimConfig};
use crate::model::{in_gamma, validate_params, ModelParams, State, ValidationReport};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("missing required key `{key}`")]
    Missing { key: String },
    #[error("line {line}: invalid value for `{key}`: {message}")]
    InvalidValue {
        line: usize,
        key: String,
        message: String,
    },
    #[error("initial state #{index} {state} lies outside the invariant region")]
    OutsideGamma { index: usize, state: State },
    #[error("parameter assumptions violated:\n{0}")]
    Assumptions(ValidationReport),
    #[error(transparent)]
    Simulation(#[from] IntegratorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn as_str(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(format!("unknown format `{other}` (expected csv, json or svg)")),
        }
    }
}

/// Parses a comma-separated list of formats.
pub fn parse_formats(s: &str) -> Result<BTreeSet<Format>, String> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(str::parse)
        .collect()
}

/// Names of the [`ModelParams`] fields, usable as sweep axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ParamName {
    Beta1,
    Beta2,
    Delta1,
    Delta2,
    R1,
    R2,
    C1,
    C2,
    CD,
    Q,
}

impl ParamName {
    pub const ALL: [ParamName; 10] = [
        Self::Beta1,
        Self::Beta2,
        Self::Delta1,
        Self::Delta2,
        Self::R1,
        Self::R2,
        Self::C1,
        Self::C2,
        Self::CD,
        Self::Q,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Beta1 => "beta1",
            Self::Beta2 => "beta2",
            Self::Delta1 => "delta1",
            Self::Delta2 => "delta2",
            Self::R1 => "r1",
            Self::R2 => "r2",
            Self::C1 => "c1",
            Self::C2 => "c2",
            Self::CD => "c_d",
            Self::Q => "q",
        }
    }

    pub fn get(self, p: &ModelParams) -> f64 {
        *Self::slot(self, &mut p.clone())
    }

    pub fn set(self, p: &mut ModelParams, value: f64) {
        *Self::slot(self, p) = value;
    }

    fn slot(self, p: &mut ModelParams) -> &mut f64 {
        match self {
            Self::Beta1 => &mut p.beta1,
            Self::Beta2 => &mut p.beta2,
            Self::Delta1 => &mut p.delta1,
            Self::Delta2 => &mut p.delta2,
            Self::R1 => &mut p.r1,
            Self::R2 => &mut p.r2,
            Self::C1 => &mut p.c1,
            Self::C2 => &mut p.c2,
            Self::CD => &mut p.c_d,
            Self::Q => &mut p.q,
        }
    }
}

impl fmt::Display for ParamName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ParamName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s.trim())
            .ok_or_else(|| format!("`{s}` is not a model parameter"))
    }
}

/// An isolated fixed point or a line, as named in sweeps and match reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Point(EquilibriumKind),
    Line(LineKind),
}

impl Target {
    pub fn all() -> impl Iterator<Item = Target> {
        EquilibriumKind::ALL
            .into_iter()
            .map(Target::Point)
            .chain(LineKind::ALL.into_iter().map(Target::Line))
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Point(k) => k.fmt(f),
            Target::Line(k) => k.fmt(f),
        }
    }
}

impl Serialize for Target {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        s.parse()
            .map(Target::Point)
            .or_else(|_| s.parse().map(Target::Line))
            .map_err(|_| format!("unknown equilibrium or line `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub model: ModelParams,
    pub sim: SimConfig,
    pub initial_states: Vec<State>,
    pub outputs: PathBuf,
    pub formats: BTreeSet<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepAxis {
    pub param: ParamName,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl SweepAxis {
    /// Evenly spaced grid including both ends.
    pub fn values(&self) -> Vec<f64> {
        let span = self.max - self.min;
        (0..self.steps)
            .map(|k| self.min + span * k as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub base: ScenarioConfig,
    pub axes: Vec<SweepAxis>,
    /// Equilibria and lines to classify; empty means existence only.
    pub targets: Vec<Target>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Config {
    Scenario(ScenarioConfig),
    Sweep(SweepConfig),
}

impl Config {
    pub fn scenario(&self) -> &ScenarioConfig {
        match self {
            Config::Scenario(s) => s,
            Config::Sweep(s) => &s.base,
        }
    }

    pub fn scenario_mut(&mut self) -> &mut ScenarioConfig {
        match self {
            Config::Scenario(s) => s,
            Config::Sweep(s) => &mut s.base,
        }
    }
}

/// A parsed config together with the parameter validation it passed.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: Config,
    pub validation: ValidationReport,
}

const MODEL_KEYS: [&str; 10] = [
    "beta1", "beta2", "delta1", "delta2", "r1", "r2", "c1", "c2", "c_d", "q",
];
const SINGLE_KEYS: [&str; 9] = [
    "h",
    "t_max",
    "record_every",
    "conv_eps",
    "conv_window",
    "project",
    "out",
    "formats",
    "targets",
];
const REPEATED_KEYS: [&str; 2] = ["x0", "sweep"];

struct Entry<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

impl Entry<'_> {
    fn invalid(&self, message: impl Into<String>) -> ConfigError {
        ConfigError::InvalidValue {
            line: self.line,
            key: self.key.to_string(),
            message: message.into(),
        }
    }

    fn number(&self) -> Result<f64, ConfigError> {
        let v: f64 = self
            .value
            .parse()
            .map_err(|_| self.invalid(format!("`{}` is not a number", self.value)))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.invalid("value must be finite"))
        }
    }

    fn numbers(&self) -> Result<Vec<f64>, ConfigError> {
        self.value
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| self.invalid(format!("`{}` is not a finite number", t.trim())))
            })
            .collect()
    }
}

fn tokenize(text: &str) -> Result<Vec<Entry<'_>>, ConfigError> {
    let mut entries: Vec<Entry> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with(';') {
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            message: format!("expected `key = value`, found `{trimmed}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        let known = MODEL_KEYS.contains(&key)
            || SINGLE_KEYS.contains(&key)
            || REPEATED_KEYS.contains(&key);
        if !known {
            return Err(ConfigError::UnknownKey { line, key: key.to_string() });
        }
        if !REPEATED_KEYS.contains(&key) && entries.iter().any(|e| e.key == key) {
            return Err(ConfigError::Duplicate { line, key: key.to_string() });
        }
        entries.push(Entry { line, key, value });
    }
    Ok(entries)
}

/// Parses and validates a config. Soft assumption failures become hard
/// errors under `strict`.
pub fn parse_config(text: &str, strict: bool) -> Result<LoadedConfig, ConfigError> {
    let entries = tokenize(text)?;
    let find = |key: &str| entries.iter().find(|e| e.key == key);

    let mut values = [0.0; 10];
    for (slot, key) in values.iter_mut().zip(MODEL_KEYS) {
        *slot = find(key)
            .ok_or_else(|| ConfigError::Missing { key: key.to_string() })?
            .number()?;
    }
    let [beta1, beta2, delta1, delta2, r1, r2, c1, c2, c_d, q] = values;
    let model = ModelParams { beta1, beta2, delta1, delta2, r1, r2, c1, c2, c_d, q };

    let mut sim = SimConfig::default();
    for (key, slot) in [
        ("h", &mut sim.h),
        ("t_max", &mut sim.t_max),
        ("conv_eps", &mut sim.conv_eps),
        ("conv_window", &mut sim.conv_window),
    ] {
        if let Some(e) = find(key) {
            *slot = e.number()?;
        }
    }
    if let Some(e) = find("record_every") {
        sim.record_every = e
            .value
            .parse()
            .map_err(|_| e.invalid("expected a positive integer"))?;
    }
    if let Some(e) = find("project") {
        sim.project = e
            .value
            .parse()
            .map_err(|_| e.invalid("expected true or false"))?;
    }
    sim.validate()?;

    let mut initial_states = Vec::new();
    for e in entries.iter().filter(|e| e.key == "x0") {
        let v = e.numbers()?;
        let arr: [f64; 5] = v
            .try_into()
            .map_err(|v: Vec<f64>| e.invalid(format!("expected 5 coordinates, found {}", v.len())))?;
        let state = State::from_array(arr);
        if !in_gamma(&state, 0.0) {
            return Err(ConfigError::OutsideGamma { index: initial_states.len(), state });
        }
        initial_states.push(state);
    }
    if initial_states.is_empty() {
        return Err(ConfigError::Missing { key: "x0".into() });
    }

    let outputs = find("out").map_or_else(|| PathBuf::from("out"), |e| PathBuf::from(e.value));
    let formats = match find("formats") {
        Some(e) => parse_formats(e.value).map_err(|m| e.invalid(m))?,
        None => BTreeSet::from([Format::Csv]),
    };

    let validation = validate_params(&model, strict);
    if !validation.is_ok() {
        return Err(ConfigError::Assumptions(validation));
    }

    let base = ScenarioConfig { model, sim, initial_states, outputs, formats };
    let mut axes = Vec::new();
    for e in entries.iter().filter(|e| e.key == "sweep") {
        let parts: Vec<&str> = e.value.split(',').map(str::trim).collect();
        let [name, min, max, steps] = parts[..] else {
            return Err(e.invalid("expected `param, min, max, steps`"));
        };
        let param: ParamName = name.parse().map_err(|m: String| e.invalid(m))?;
        let bound = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| e.invalid(format!("`{s}` is not a finite number")))
        };
        let (min, max) = (bound(min)?, bound(max)?);
        let steps: usize = steps
            .parse()
            .map_err(|_| e.invalid(format!("`{steps}` is not a step count")))?;
        if steps < 2 {
            return Err(e.invalid("a sweep axis needs at least 2 steps"));
        }
        if axes.iter().any(|a: &SweepAxis| a.param == param) {
            return Err(e.invalid(format!("`{param}` is swept twice")));
        }
        axes.push(SweepAxis { param, min, max, steps });
    }
    if axes.len() > 2 {
        let e = entries.iter().filter(|e| e.key == "sweep").nth(2).unwrap();
        return Err(e.invalid("at most two sweep axes are supported"));
    }
    let targets = match find("targets") {
        Some(e) => {
            let mut seen = BTreeSet::new();
            let mut out = Vec::new();
            for t in e.value.split(',').filter(|t| !t.trim().is_empty()) {
                let target: Target = t.parse().map_err(|m: String| e.invalid(m))?;
                if seen.insert(target) {
                    out.push(target);
                }
            }
            out
        }
        None => Vec::new(),
    };
    if axes.is_empty() && !targets.is_empty() {
        let e = find("targets").unwrap();
        return Err(e.invalid("`targets` is only meaningful in a sweep config"));
    }

    let config = if axes.is_empty() {
        Config::Scenario(base)
    } else {
        Config::Sweep(SweepConfig { base, axes, targets })
    };
    Ok(LoadedConfig { config, validation })
}

pub fn load_config(path: impl AsRef<Path>, strict: bool) -> Result<LoadedConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, strict)
}

/// Serializes a config so that [`parse_config`] reads back the same value.
/// Numbers use the shortest representation that round-trips exactly.
pub fn write_config(config: &Config) -> String {
    let base = config.scenario();
    let m = &base.model;
    let mut out = String::new();
    let values = [m.beta1, m.beta2, m.delta1, m.delta2, m.r1, m.r2, m.c1, m.c2, m.c_d, m.q];
    for (key, v) in MODEL_KEYS.iter().zip(values) {
        writeln!(out, "{key} = {v:?}").unwrap();
    }
    let s = &base.sim;
    writeln!(out, "h = {:?}", s.h).unwrap();
    writeln!(out, "t_max = {:?}", s.t_max).unwrap();
    writeln!(out, "record_every = {}", s.record_every).unwrap();
    writeln!(out, "conv_eps = {:?}", s.conv_eps).unwrap();
    writeln!(out, "conv_window = {:?}", s.conv_window).unwrap();
    writeln!(out, "project = {}", s.project).unwrap();
    for x in &base.initial_states {
        let coords: Vec<String> = x.to_array().iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "x0 = {}", coords.join(", ")).unwrap();
    }
    writeln!(out, "out = {}", base.outputs.display()).unwrap();
    let formats: Vec<&str> = base.formats.iter().map(|f| f.as_str()).collect();
    writeln!(out, "formats = {}", formats.join(", ")).unwrap();
    if let Config::Sweep(sweep) = config {
        for a in &sweep.axes {
            writeln!(out, "sweep = {}, {:?}, {:?}, {}", a.param, a.min, a.max, a.steps).unwrap();
        }
        if !sweep.targets.is_empty() {
            let t: Vec<String> = sweep.targets.iter().map(|t| t.to_string()).collect();
            writeln!(out, "targets = {}", t.join(", ")).unwrap();
        }
    }
    out
}
