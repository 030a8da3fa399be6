//! Run configuration: a TOML file, `--set key=value` overrides and the
//! `MSWAVE_OUT_DIR` environment variable.

use std::path::{Path, PathBuf};

use mswave_core::diagnostics::BlowupThresholds;
use mswave_core::dynamics::{Couplings, IntegratorConfig, Scheme};
use mswave_core::spectral::Grid;
use mswave_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::presets::{FieldPreset, WavePreset};

/// Environment variable overriding `output.out_dir`.
pub const OUT_DIR_ENV: &str = "MSWAVE_OUT_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n: usize,
    #[serde(rename = "L")]
    pub len: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 32, len: 16.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsConfig {
    pub gamma: f64,
    pub epsilon: f64,
    pub hartree_on: bool,
    pub power_on: bool,
    pub magnetic_on: bool,
    pub current_source_on: bool,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            gamma: 2.0,
            epsilon: 0.0,
            hartree_on: true,
            power_on: true,
            magnetic_on: true,
            current_source_on: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub cfl_guard: f64,
    pub blowup: BlowupThresholds,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self { dt: 1e-3, t_end: 1.0, scheme: Scheme::Strang, cfl_guard: 1.0, blowup: BlowupThresholds::default() }
    }
}

/// Initial data: presets for `u`, `A(0)` and `dA/dt(0)`, or a snapshot file
/// which then takes precedence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    pub u: WavePreset,
    pub a0: FieldPreset,
    pub a1: FieldPreset,
    pub snapshot: Option<PathBuf>,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            u: WavePreset::default(),
            a0: FieldPreset::Zero,
            a1: FieldPreset::Zero,
            snapshot: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Steps between snapshots (0 = initial and final only).
    pub snapshot_every: usize,
    /// Steps between diagnostics rows (0 = initial and final only).
    pub diagnostics_every: usize,
    pub out_dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { snapshot_every: 0, diagnostics_every: 1, out_dir: PathBuf::from("mswave-out") }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub physics: PhysicsConfig,
    pub integrator: IntegratorSection,
    pub initial: InitialConfig,
    pub output: OutputConfig,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Parses the right-hand side of `--set`: a TOML value if it parses as one,
/// otherwise a bare string.
fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Applies `section.key=value` to a TOML table, creating tables on the way.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| config_err(format!("override `{assignment}` is not of the form key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(config_err(format!("bad key `{key}`")));
    }
    let mut cur = table;
    for part in &path[..path.len() - 1] {
        let entry = cur.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| config_err(format!("`{part}` in `{key}` is not a table")))?;
    }
    cur.insert(path[path.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

impl RunConfig {
    /// Builds a configuration from optional TOML text and overrides, in that
    /// order, then validates it.
    pub fn from_sources(text: Option<&str>, overrides: &[String]) -> Result<Self> {
        let mut table = match text {
            Some(t) => t.parse::<toml::Table>().map_err(|e| config_err(e.to_string()))?,
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` (if given), applies `MSWAVE_OUT_DIR` and then the overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => Some(
                std::fs::read_to_string(p).map_err(|e| config_err(format!("{}: {e}", p.display())))?,
            ),
            None => None,
        };
        let mut all = Vec::new();
        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            if !dir.is_empty() {
                all.push(format!("output.out_dir={}", toml::Value::String(dir)));
            }
        }
        all.extend(overrides.iter().cloned());
        Self::from_sources(text.as_deref(), &all)
    }

    pub fn validate(&self) -> Result<()> {
        Grid::new(self.grid.n, self.grid.len).map_err(|e| config_err(e.to_string()))?;
        let g = self.physics.gamma;
        if !(g > 1.0 && g <= 3.0) {
            return Err(config_err(format!("physics.gamma = {g} must lie in (1, 3]")));
        }
        let e = self.physics.epsilon;
        if !(e >= 0.0 && e.is_finite()) {
            return Err(config_err(format!("physics.epsilon = {e} must be >= 0")));
        }
        let i = &self.integrator;
        if !(i.dt > 0.0 && i.dt.is_finite()) {
            return Err(config_err(format!("integrator.dt = {} must be positive", i.dt)));
        }
        if !(i.t_end >= 0.0 && i.t_end.is_finite()) {
            return Err(config_err(format!("integrator.t_end = {} must be >= 0", i.t_end)));
        }
        if !(i.cfl_guard > 0.0 && i.cfl_guard <= 1.0) {
            return Err(config_err(format!("integrator.cfl_guard = {} must lie in (0, 1]", i.cfl_guard)));
        }
        self.initial.u.validate().map_err(|e| config_err(e.to_string()))?;
        self.initial.a0.validate().map_err(|e| config_err(e.to_string()))?;
        self.initial.a1.validate().map_err(|e| config_err(e.to_string()))?;
        Ok(())
    }

    /// Warnings for exponents outside the range covered by the local theory.
    pub fn warnings(&self) -> Vec<String> {
        let g = self.physics.gamma;
        let mut w = Vec::new();
        if g <= 1.5 {
            w.push(format!("gamma = {g} <= 3/2: outside the range of the local well-posedness theory"));
        }
        if g >= 3.0 {
            w.push(format!("gamma = {g} >= 3: outside the range of the weak-solution theory"));
        }
        w
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.n, self.grid.len)
    }

    pub fn couplings(&self) -> Couplings {
        Couplings {
            hartree: self.physics.hartree_on,
            power: self.physics.power_on,
            magnetic: self.physics.magnetic_on,
            current_source: self.physics.current_source_on,
        }
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            dt: self.integrator.dt,
            t_end: self.integrator.t_end,
            scheme: self.integrator.scheme,
            cfl_guard: self.integrator.cfl_guard,
            couplings: self.couplings(),
            force_smoothing: false,
            blowup: self.integrator.blowup,
            diagnostics_every: self.output.diagnostics_every,
            snapshot_every: self.output.snapshot_every,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes")
    }
}
