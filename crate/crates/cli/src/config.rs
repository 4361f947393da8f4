//! JSON run configuration. Every section is optional; missing parts fall back
//! to the defaults of the command being run.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use spinlev::core_model::{ParamsFile, PhysicalParams};
use spinlev::numerics::{linspace, logspace};
use spinlev::pulse_kernel::SequenceKind;
use spinlev::witness::{Initial, WitnessMode};

use crate::UsageError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: String,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default = "default_scale")]
    pub scale: Scale,
}

fn default_scale() -> Scale {
    Scale::Linear
}

impl SweepSpec {
    pub fn new(variable: &str, start: f64, stop: f64, points: usize, scale: Scale) -> Self {
        Self { variable: variable.into(), start, stop, points, scale }
    }

    pub fn grid(&self) -> Result<Vec<f64>, UsageError> {
        if self.points < 2 {
            return Err(UsageError(format!("sweep needs at least 2 points, got {}", self.points)));
        }
        if !(self.start < self.stop) || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(UsageError(format!("sweep needs start < stop, got [{}, {}]", self.start, self.stop)));
        }
        match self.scale {
            Scale::Linear => Ok(linspace(self.start, self.stop, self.points)),
            Scale::Log if self.start > 0.0 => Ok(logspace(self.start, self.stop, self.points)),
            Scale::Log => Err(UsageError(format!("log sweep needs start > 0, got {}", self.start))),
        }
    }
}

/// Witness scan settings. `coupling` is λ (pulseless) or g/ω (pulsed).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessSpec {
    #[serde(default = "default_mode")]
    pub mode: WitnessMode,
    #[serde(default = "default_initial")]
    pub initial: Initial,
    #[serde(default = "one")]
    pub coupling: f64,
    #[serde(default = "hundred")]
    pub freq_hz: f64,
    #[serde(default)]
    pub larmor_hz: f64,
    /// fixed time in s when sweeping n̄ (default 0.1π/ω)
    #[serde(default)]
    pub t_s: Option<f64>,
    /// fixed n̄ when sweeping t
    #[serde(default)]
    pub nbar: f64,
    #[serde(default)]
    pub nbar_over_q: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_mode() -> WitnessMode {
    WitnessMode::Pulsed
}
fn default_initial() -> Initial {
    Initial::Thermal
}
fn one() -> f64 {
    1.0
}
fn hundred() -> f64 {
    100.0
}
fn default_threshold() -> f64 {
    1e-3
}

impl Default for WitnessSpec {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: Option<ParamsFile>,
    pub sequences: Option<Vec<SequenceKind>>,
    pub sweep: Option<SweepSpec>,
    /// sequence length, s
    pub tau_s: Option<f64>,
    /// force frequency when not swept, Hz
    pub nu_hz: Option<f64>,
    /// fixed g/ω; optimal coupling per point when absent
    pub g_over_omega: Option<f64>,
    /// n̄/Q values; each overrides the params' thermal occupation
    pub nbar_over_q: Option<Vec<f64>>,
    pub witness: Option<WitnessSpec>,
    /// ωτ for `table` and `trajectory`
    pub omega_tau: Option<f64>,
    /// initial coherent amplitude [re, im] for `trajectory`
    pub alpha: Option<[f64; 2]>,
    pub samples: Option<usize>,
    pub tolerance_scale: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, UsageError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| UsageError(format!("invalid config {}: {e}", path.display())))
    }

    pub fn physical(&self) -> Result<PhysicalParams, UsageError> {
        let p = match &self.params {
            Some(f) => PhysicalParams::try_from(f).map_err(|e| UsageError(e.to_string()))?,
            None => spinlev::acceptance::micro_diamond_params(),
        };
        p.validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(p)
    }

    pub fn sequences(&self) -> Result<Vec<SequenceKind>, UsageError> {
        let s = self.sequences.clone().unwrap_or_else(|| SequenceKind::NAMED.to_vec());
        if s.is_empty() || s.contains(&SequenceKind::Custom) {
            return Err(UsageError("sequences must be a non-empty list of named kinds".into()));
        }
        Ok(s)
    }

    pub fn positive(name: &str, v: f64) -> Result<f64, UsageError> {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(UsageError(format!("{name} must be finite and > 0, got {v}")))
        }
    }
}

pub fn default_pulsed_time(freq_hz: f64) -> f64 {
    0.1 * PI / (2.0 * PI * freq_hz)
}
