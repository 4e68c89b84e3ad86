//! Experiment configuration: TOML text, defaults, preset merging and
//! validation that reports every violation with its key path.
//!
//! ```toml
//! preset = "fig3"            # optional base; keys below override it
//!
//! [units]                    # hbar, mass, omega (all > 0)
//! [[slits]]                  # center, sigma0 (> 0), v0, phase_offset
//! [time]                     # t0, t_screen (> t0)
//! [integrator]               # dt, substep_fraction, max_substeps, node_retry_factor
//! [ensemble]                 # count, seed
//! [[events]]                 # time, action = "open" | "close", slit | index, rebirth
//! [screen]                   # x_min, x_max, bins
//! [grid]                     # x_min, x_max, points, times
//! [bundle]                   # count, record_every
//! [oracle]                   # tolerance
//! [outputs]                  # directory, trajectories, histogram, fields, diagnostics
//! [[companions]]             # mass plus its own [[companions.slits]]
//! ```
//!
//! Arrays in a config replace the preset's arrays wholesale; tables merge
//! key by key.

use std::fmt;

use bouncer::dynamics::{HistogramSpec, IntegratorSettings};
use bouncer::wavefield::{
    GaussianSlitMode, RebirthPolicy, SwitchAction, SwitchingEvent, WavefieldState,
};
use bouncer::UnitsConstants;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::presets;

/// One problem found in a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Dotted key path, e.g. `slits[1].sigma0`; empty for the whole document.
    pub path: String,
    pub message: String,
}

/// Every problem found in a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub violations: Vec<Violation>,
}

impl ConfigError {
    fn single(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            violations: vec![Violation {
                path: path.into(),
                message: message.into(),
            }],
        }
    }

    /// True when some violation is reported at `path`.
    pub fn mentions(&self, path: &str) -> bool {
        self.violations.iter().any(|v| v.path == path)
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration:")?;
        for v in &self.violations {
            if v.path.is_empty() {
                writeln!(f, "  {}", v.message)?;
            } else {
                writeln!(f, "  {}: {}", v.path, v.message)?;
            }
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UnitsConfig {
    pub hbar: f64,
    pub mass: f64,
    pub omega: f64,
}

impl Default for UnitsConfig {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
            omega: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlitConfig {
    pub center: f64,
    pub sigma0: f64,
    #[serde(default)]
    pub v0: f64,
    #[serde(default)]
    pub phase_offset: f64,
}

impl SlitConfig {
    pub fn mode(&self) -> Result<GaussianSlitMode, bouncer::Error> {
        GaussianSlitMode::new(self.center, self.sigma0, self.v0, self.phase_offset)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimeConfig {
    pub t0: f64,
    pub t_screen: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            t0: 0.0,
            t_screen: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub substep_fraction: f64,
    pub max_substeps: u32,
    pub node_retry_factor: u32,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        let s = IntegratorSettings::default();
        Self {
            dt: s.dt,
            substep_fraction: s.substep_fraction,
            max_substeps: s.max_substeps,
            node_retry_factor: s.node_retry_factor,
        }
    }
}

impl IntegratorConfig {
    pub fn settings(&self) -> IntegratorSettings {
        IntegratorSettings {
            dt: self.dt,
            substep_fraction: self.substep_fraction,
            max_substeps: self.max_substeps,
            node_retry_factor: self.node_retry_factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleConfig {
    pub count: usize,
    pub seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            count: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventAction {
    Open,
    Close,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RebirthConfig {
    #[default]
    FreshWidth,
    #[serde(rename = "evolved_from_t0")]
    EvolvedFromOrigin,
}

impl From<RebirthConfig> for RebirthPolicy {
    fn from(r: RebirthConfig) -> Self {
        match r {
            RebirthConfig::FreshWidth => RebirthPolicy::FreshWidth,
            RebirthConfig::EvolvedFromOrigin => RebirthPolicy::EvolvedFromOrigin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventConfig {
    pub time: f64,
    pub action: EventAction,
    /// Slit to open.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slit: Option<SlitConfig>,
    /// Position, in the slit list in force just before the event, of the slit to close.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    #[serde(default)]
    pub rebirth: RebirthConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScreenConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub bins: usize,
}

impl Default for ScreenConfig {
    fn default() -> Self {
        Self {
            x_min: -12.0,
            x_max: 12.0,
            bins: 120,
        }
    }
}

impl ScreenConfig {
    pub fn spec(&self) -> HistogramSpec {
        HistogramSpec {
            x_min: self.x_min,
            x_max: self.x_max,
            bins: self.bins,
        }
    }
}

/// Sampling grid for field and diagnostics dumps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    /// Number of time rows from `t0` to `t_screen` inclusive.
    pub times: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            x_min: -12.0,
            x_max: 12.0,
            points: 481,
            times: 51,
        }
    }
}

impl GridConfig {
    pub fn xs(&self) -> Vec<f64> {
        linspace(self.x_min, self.x_max, self.points)
    }
}

pub(crate) fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BundleConfig {
    /// Fully recorded trajectories started at evenly spaced quantiles.
    pub count: usize,
    pub record_every: usize,
}

impl Default for BundleConfig {
    fn default() -> Self {
        Self {
            count: 40,
            record_every: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    /// Largest allowed `|v_channels - v_grid| / max(|v_channels|, 1)`.
    pub tolerance: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputsConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directory: Option<String>,
    pub trajectories: bool,
    pub histogram: bool,
    pub fields: bool,
    pub diagnostics: bool,
}

impl Default for OutputsConfig {
    fn default() -> Self {
        Self {
            directory: None,
            trajectories: true,
            histogram: true,
            fields: false,
            diagnostics: true,
        }
    }
}

/// A further particle integrated in its own field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompanionConfig {
    pub mass: f64,
    pub slits: Vec<SlitConfig>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub description: String,
    /// Free-text modelling assumptions echoed into the manifest.
    pub assumptions: Vec<String>,
    pub units: UnitsConfig,
    pub slits: Vec<SlitConfig>,
    pub time: TimeConfig,
    pub integrator: IntegratorConfig,
    pub ensemble: EnsembleConfig,
    pub events: Vec<EventConfig>,
    pub screen: ScreenConfig,
    pub grid: GridConfig,
    pub bundle: BundleConfig,
    pub oracle: OracleConfig,
    pub outputs: OutputsConfig,
    pub companions: Vec<CompanionConfig>,
}

enum Schema {
    Leaf,
    Table(&'static [(&'static str, Schema)]),
    ArrayOf(&'static Schema),
}

const SLIT: Schema = Schema::Table(&[
    ("center", Schema::Leaf),
    ("sigma0", Schema::Leaf),
    ("v0", Schema::Leaf),
    ("phase_offset", Schema::Leaf),
]);

const ROOT: Schema = Schema::Table(&[
    ("preset", Schema::Leaf),
    ("description", Schema::Leaf),
    ("assumptions", Schema::Leaf),
    (
        "units",
        Schema::Table(&[
            ("hbar", Schema::Leaf),
            ("mass", Schema::Leaf),
            ("omega", Schema::Leaf),
        ]),
    ),
    ("slits", Schema::ArrayOf(&SLIT)),
    (
        "time",
        Schema::Table(&[("t0", Schema::Leaf), ("t_screen", Schema::Leaf)]),
    ),
    (
        "integrator",
        Schema::Table(&[
            ("dt", Schema::Leaf),
            ("substep_fraction", Schema::Leaf),
            ("max_substeps", Schema::Leaf),
            ("node_retry_factor", Schema::Leaf),
        ]),
    ),
    (
        "ensemble",
        Schema::Table(&[("count", Schema::Leaf), ("seed", Schema::Leaf)]),
    ),
    (
        "events",
        Schema::ArrayOf(&Schema::Table(&[
            ("time", Schema::Leaf),
            ("action", Schema::Leaf),
            ("slit", SLIT),
            ("index", Schema::Leaf),
            ("rebirth", Schema::Leaf),
        ])),
    ),
    (
        "screen",
        Schema::Table(&[
            ("x_min", Schema::Leaf),
            ("x_max", Schema::Leaf),
            ("bins", Schema::Leaf),
        ]),
    ),
    (
        "grid",
        Schema::Table(&[
            ("x_min", Schema::Leaf),
            ("x_max", Schema::Leaf),
            ("points", Schema::Leaf),
            ("times", Schema::Leaf),
        ]),
    ),
    (
        "bundle",
        Schema::Table(&[("count", Schema::Leaf), ("record_every", Schema::Leaf)]),
    ),
    ("oracle", Schema::Table(&[("tolerance", Schema::Leaf)])),
    (
        "outputs",
        Schema::Table(&[
            ("directory", Schema::Leaf),
            ("trajectories", Schema::Leaf),
            ("histogram", Schema::Leaf),
            ("fields", Schema::Leaf),
            ("diagnostics", Schema::Leaf),
        ]),
    ),
    (
        "companions",
        Schema::ArrayOf(&Schema::Table(&[
            ("mass", Schema::Leaf),
            ("slits", Schema::ArrayOf(&SLIT)),
        ])),
    ),
]);

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn check_keys(value: &Value, schema: &Schema, path: &str, out: &mut Vec<Violation>) {
    match schema {
        Schema::Leaf => {}
        Schema::Table(fields) => {
            let Some(table) = value.as_table() else {
                out.push(Violation {
                    path: path.to_string(),
                    message: "expected a table".into(),
                });
                return;
            };
            for (key, v) in table {
                match fields.iter().find(|(name, _)| name == key) {
                    Some((_, sub)) => check_keys(v, sub, &join(path, key), out),
                    None => out.push(Violation {
                        path: join(path, key),
                        message: "unknown key".into(),
                    }),
                }
            }
        }
        Schema::ArrayOf(item) => {
            let Some(items) = value.as_array() else {
                out.push(Violation {
                    path: path.to_string(),
                    message: "expected an array".into(),
                });
                return;
            };
            for (i, v) in items.iter().enumerate() {
                check_keys(v, item, &format!("{path}[{i}]"), out);
            }
        }
    }
}

/// Overlays `top` on `base`: tables merge recursively, everything else is replaced.
fn merge(base: &mut Table, top: Table) {
    for (key, value) in top {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

fn parse_table(text: &str) -> Result<Table, ConfigError> {
    text.parse::<Table>()
        .map_err(|e| ConfigError::single("", format!("malformed TOML: {e}")))
}

/// Parses, merges the named preset underneath, and validates.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    parse_with_base(text, None)
}

/// Like [`parse_config`] with `base_preset` used when the text names none.
pub fn parse_with_base(text: &str, base_preset: Option<&str>) -> Result<ExperimentConfig, ConfigError> {
    let user = parse_table(text)?;
    let preset_name = match user.get("preset") {
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(ConfigError::single("preset", "expected a string")),
        None => base_preset.map(str::to_string),
    };
    let mut merged = match &preset_name {
        Some(name) => {
            let preset = presets::find(name).ok_or_else(|| {
                ConfigError::single(
                    "preset",
                    format!("unknown preset {name:?}; known: {}", presets::names().join(", ")),
                )
            })?;
            parse_table(preset.text)?
        }
        None => Table::new(),
    };
    merge(&mut merged, user);
    if let Some(name) = preset_name {
        merged.insert("preset".into(), Value::String(name));
    }
    let merged = Value::Table(merged);

    let mut violations = Vec::new();
    check_keys(&merged, &ROOT, "", &mut violations);
    let config: Option<ExperimentConfig> =
        match serde_path_to_error::deserialize(merged.clone()) {
            Ok(c) => Some(c),
            Err(e) => {
                let path = e.path().to_string();
                violations.push(Violation {
                    path: if path == "." { String::new() } else { path },
                    message: e.into_inner().to_string(),
                });
                None
            }
        };
    if let Some(c) = &config {
        violations.extend(c.validate());
    }
    match config {
        Some(c) if violations.is_empty() => Ok(c),
        _ => Err(ConfigError { violations }),
    }
}

fn require(out: &mut Vec<Violation>, ok: bool, path: impl Into<String>, message: impl Into<String>) {
    if !ok {
        out.push(Violation {
            path: path.into(),
            message: message.into(),
        });
    }
}

fn positive(out: &mut Vec<Violation>, value: f64, path: impl Into<String>) {
    require(
        out,
        value > 0.0 && value.is_finite(),
        path,
        format!("must be positive and finite (got {value})"),
    );
}

fn finite(out: &mut Vec<Violation>, value: f64, path: impl Into<String>) {
    require(out, value.is_finite(), path, format!("must be finite (got {value})"));
}

fn check_slit(out: &mut Vec<Violation>, s: &SlitConfig, path: &str) {
    finite(out, s.center, join(path, "center"));
    positive(out, s.sigma0, join(path, "sigma0"));
    finite(out, s.v0, join(path, "v0"));
    finite(out, s.phase_offset, join(path, "phase_offset"));
}

impl ExperimentConfig {
    /// Range checks; each violation carries its key path.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let o = &mut out;
        positive(o, self.units.hbar, "units.hbar");
        positive(o, self.units.mass, "units.mass");
        positive(o, self.units.omega, "units.omega");
        require(o, !self.slits.is_empty(), "slits", "at least one slit is required");
        for (i, s) in self.slits.iter().enumerate() {
            check_slit(o, s, &format!("slits[{i}]"));
        }
        finite(o, self.time.t0, "time.t0");
        finite(o, self.time.t_screen, "time.t_screen");
        require(
            o,
            self.time.t_screen > self.time.t0,
            "time.t_screen",
            format!("must exceed time.t0 = {}", self.time.t0),
        );
        positive(o, self.integrator.dt, "integrator.dt");
        positive(o, self.integrator.substep_fraction, "integrator.substep_fraction");
        require(o, self.integrator.max_substeps >= 1, "integrator.max_substeps", "must be at least 1");
        require(
            o,
            self.integrator.node_retry_factor >= 1,
            "integrator.node_retry_factor",
            "must be at least 1",
        );
        for (i, e) in self.events.iter().enumerate() {
            let p = format!("events[{i}]");
            require(
                o,
                e.time.is_finite() && e.time >= self.time.t0,
                join(&p, "time"),
                format!("must be finite and not before time.t0 (got {})", e.time),
            );
            match e.action {
                EventAction::Open => match &e.slit {
                    Some(s) => check_slit(o, s, &join(&p, "slit")),
                    None => o.push(Violation {
                        path: join(&p, "slit"),
                        message: "required when action = \"open\"".into(),
                    }),
                },
                EventAction::Close => require(
                    o,
                    e.index.is_some(),
                    join(&p, "index"),
                    "required when action = \"close\"",
                ),
            }
        }
        finite(o, self.screen.x_min, "screen.x_min");
        require(
            o,
            self.screen.x_max > self.screen.x_min && self.screen.x_max.is_finite(),
            "screen.x_max",
            "must be finite and exceed screen.x_min",
        );
        require(o, self.screen.bins >= 1, "screen.bins", "must be at least 1");
        finite(o, self.grid.x_min, "grid.x_min");
        require(
            o,
            self.grid.x_max > self.grid.x_min && self.grid.x_max.is_finite(),
            "grid.x_max",
            "must be finite and exceed grid.x_min",
        );
        require(o, self.grid.points >= 2, "grid.points", "must be at least 2");
        require(o, self.grid.times >= 1, "grid.times", "must be at least 1");
        require(o, self.bundle.record_every >= 1, "bundle.record_every", "must be at least 1");
        positive(o, self.oracle.tolerance, "oracle.tolerance");
        for (i, c) in self.companions.iter().enumerate() {
            let p = format!("companions[{i}]");
            positive(o, c.mass, join(&p, "mass"));
            require(o, !c.slits.is_empty(), join(&p, "slits"), "at least one slit is required");
            for (k, s) in c.slits.iter().enumerate() {
                check_slit(o, s, &format!("{p}.slits[{k}]"));
            }
        }
        if out.is_empty() {
            if let Err(e) = self.state() {
                out.push(Violation {
                    path: "events".into(),
                    message: e.to_string(),
                });
            }
        }
        out
    }

    pub fn units(&self) -> Result<UnitsConstants, bouncer::Error> {
        UnitsConstants::new(self.units.hbar, self.units.mass, self.units.omega)
    }

    fn modes(slits: &[SlitConfig]) -> Result<Vec<GaussianSlitMode>, bouncer::Error> {
        slits.iter().map(SlitConfig::mode).collect()
    }

    /// Wave field of the primary particle with all events scheduled.
    pub fn state(&self) -> Result<WavefieldState, bouncer::Error> {
        let mut state = WavefieldState::from_modes(self.time.t0, Self::modes(&self.slits)?);
        for e in &self.events {
            let action = match e.action {
                EventAction::Open => SwitchAction::Open(
                    e.slit
                        .ok_or_else(|| bouncer::Error::Config("open event without slit".into()))?
                        .mode()?,
                ),
                EventAction::Close => SwitchAction::Close(
                    e.index
                        .ok_or_else(|| bouncer::Error::Config("close event without index".into()))?,
                ),
            };
            state = state.with_event(SwitchingEvent {
                time: e.time,
                action,
                rebirth: e.rebirth.into(),
            })?;
        }
        Ok(state)
    }

    /// Field and units of each companion particle.
    pub fn companion_states(&self) -> Result<Vec<(WavefieldState, UnitsConstants)>, bouncer::Error> {
        let units = self.units()?;
        self.companions
            .iter()
            .map(|c| {
                Ok((
                    WavefieldState::from_modes(self.time.t0, Self::modes(&c.slits)?),
                    units.with_mass(c.mass)?,
                ))
            })
            .collect()
    }

    /// Canonical TOML text; parsing it gives back an equal config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }
}
