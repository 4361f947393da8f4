//! Parameter records and SI ↔ natural-unit conversion.
//!
//! Natural units: ħ = 1, oscillator length x₀ = √(ħ/2mω), coupling
//! g = γ_e ∂B x₀ / 2 and λ = 2g/ω. Dimensionless quadratures are
//! q = (a + a†)/√2 and p = (a − a†)/(i√2).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;
/// NV gyromagnetic ratio, rad/(s·T).
pub const GAMMA_E_DEFAULT: f64 = 2.0 * PI * 27e9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Thermal {
    /// Bath temperature in K.
    Temperature(f64),
    /// Mean phonon number.
    Nbar(f64),
}

/// Laboratory description of the levitated oscillator and its spins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// kg
    pub mass: f64,
    /// ω, rad/s
    pub trap_frequency: f64,
    /// ∂B, T/m
    pub gradient: f64,
    /// γ_e, rad/(s·T)
    pub gyromagnetic_ratio: f64,
    pub n_spins: u64,
    pub quality_factor: f64,
    pub thermal: Thermal,
    /// s
    pub t2: f64,
    /// s
    pub t2_star: f64,
    /// γ_c, 1/s
    pub cooling_rate: f64,
    /// t_c, s
    pub cooling_time: f64,
    /// ω_L, rad/s
    pub larmor_frequency: f64,
}

impl Default for PhysicalParams {
    /// 1 μm-radius diamond in a 100 Hz trap.
    fn default() -> Self {
        Self {
            mass: diamond_sphere_mass(1e-6),
            trap_frequency: 2.0 * PI * 100.0,
            gradient: 1e4,
            gyromagnetic_ratio: GAMMA_E_DEFAULT,
            n_spins: 1,
            quality_factor: 1e6,
            thermal: Thermal::Nbar(0.0),
            t2: 1e-3,
            t2_star: 1e-5,
            cooling_rate: 1e3,
            cooling_time: 1e-4,
            larmor_frequency: 0.0,
        }
    }
}

/// Mass of a diamond sphere (ρ = 3.5 g/cm³) of the given radius in m.
pub fn diamond_sphere_mass(radius: f64) -> f64 {
    3500.0 * 4.0 / 3.0 * PI * radius.powi(3)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NaturalParams {
    pub g: f64,
    pub omega: f64,
    pub lambda: f64,
    pub nbar: f64,
    /// mechanical damping ω/Q
    pub gamma: f64,
    /// oscillator length, m
    pub x0: f64,
    pub larmor: f64,
}

impl NaturalParams {
    /// Natural parameters straight from (g, ω) with no bath or Larmor term.
    pub fn from_coupling(g: f64, omega: f64) -> Self {
        Self {
            g,
            omega,
            lambda: 2.0 * g / omega,
            nbar: 0.0,
            gamma: 0.0,
            x0: f64::NAN,
            larmor: 0.0,
        }
    }

    /// n̄/Q, the bath heating per mechanical radian.
    pub fn nbar_over_q(&self) -> f64 {
        self.nbar * self.gamma / self.omega
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("trap_frequency", self.trap_frequency),
            ("quality_factor", self.quality_factor),
            ("gyromagnetic_ratio", self.gyromagnetic_ratio),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        let nonneg = [
            ("gradient", self.gradient.abs()),
            ("t2", self.t2),
            ("t2_star", self.t2_star),
            ("cooling_rate", self.cooling_rate),
            ("cooling_time", self.cooling_time),
            ("larmor_frequency", self.larmor_frequency.abs()),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Domain(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.n_spins < 1 {
            return Err(Error::Domain("n_spins must be >= 1".into()));
        }
        match self.thermal {
            Thermal::Temperature(t) | Thermal::Nbar(t) if !(t.is_finite() && t >= 0.0) => {
                Err(Error::Domain(format!("temperature / nbar must be finite and >= 0, got {t}")))
            }
            _ => Ok(()),
        }
    }

    pub fn x0(&self) -> f64 {
        (HBAR / (2.0 * self.mass * self.trap_frequency)).sqrt()
    }

    pub fn nbar(&self) -> f64 {
        match self.thermal {
            Thermal::Nbar(n) => n,
            Thermal::Temperature(t) => nbar_from_temperature(t, self.trap_frequency),
        }
    }

    /// Gradient that realizes coupling `g` (rad/s) with everything else fixed.
    pub fn gradient_for_coupling(&self, g: f64) -> f64 {
        2.0 * g / (self.gyromagnetic_ratio * self.x0())
    }

    pub fn with_coupling(&self, g: f64) -> Self {
        Self { gradient: self.gradient_for_coupling(g), ..*self }
    }
}

pub fn to_natural(p: &PhysicalParams) -> Result<NaturalParams> {
    p.validate()?;
    let omega = p.trap_frequency;
    let x0 = p.x0();
    let g = p.gyromagnetic_ratio * p.gradient * x0 / 2.0;
    Ok(NaturalParams {
        g,
        omega,
        lambda: 2.0 * g / omega,
        nbar: p.nbar(),
        gamma: omega / p.quality_factor,
        x0,
        larmor: p.larmor_frequency,
    })
}

/// (g/ω)₁ / (g/ω)₂.
pub fn coupling_ratio_scaling(p1: &PhysicalParams, p2: &PhysicalParams) -> Result<f64> {
    let n1 = to_natural(p1)?;
    let n2 = to_natural(p2)?;
    Ok((n1.g / n1.omega) / (n2.g / n2.omega))
}

/// Bose occupation 1/(e^{ħω/k_bT} − 1); zero at T = 0.
pub fn nbar_from_temperature(temperature: f64, omega: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    1.0 / (HBAR * omega / (K_B * temperature)).exp_m1()
}

/// JSON parameter record as read from config files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub mass_kg: f64,
    pub freq_hz: f64,
    pub gradient_t_per_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_e_rad_per_s_t: Option<f64>,
    #[serde(default = "one")]
    pub n_spins: u64,
    pub q_factor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature_k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nbar: Option<f64>,
    #[serde(default)]
    pub t2_s: f64,
    #[serde(default)]
    pub t2star_s: f64,
    #[serde(default)]
    pub cooling_rate_hz: f64,
    #[serde(default)]
    pub cooling_time_s: f64,
    #[serde(default)]
    pub larmor_hz: f64,
}

fn one() -> u64 {
    1
}

impl TryFrom<&ParamsFile> for PhysicalParams {
    type Error = Error;

    fn try_from(f: &ParamsFile) -> Result<Self> {
        let thermal = match (f.temperature_k, f.nbar) {
            (Some(t), None) => Thermal::Temperature(t),
            (None, Some(n)) => Thermal::Nbar(n),
            _ => {
                return Err(Error::Domain(
                    "exactly one of temperature_k / nbar must be given".into(),
                ))
            }
        };
        let p = PhysicalParams {
            mass: f.mass_kg,
            trap_frequency: 2.0 * PI * f.freq_hz,
            gradient: f.gradient_t_per_m,
            gyromagnetic_ratio: f.gamma_e_rad_per_s_t.unwrap_or(GAMMA_E_DEFAULT),
            n_spins: f.n_spins,
            quality_factor: f.q_factor,
            thermal,
            t2: f.t2_s,
            t2_star: f.t2star_s,
            // the cooling rate is a rate in 1/s, not an angular frequency
            cooling_rate: f.cooling_rate_hz,
            cooling_time: f.cooling_time_s,
            larmor_frequency: 2.0 * PI * f.larmor_hz,
        };
        p.validate()?;
        Ok(p)
    }
}

impl From<&PhysicalParams> for ParamsFile {
    fn from(p: &PhysicalParams) -> Self {
        let (temperature_k, nbar) = match p.thermal {
            Thermal::Temperature(t) => (Some(t), None),
            Thermal::Nbar(n) => (None, Some(n)),
        };
        ParamsFile {
            mass_kg: p.mass,
            freq_hz: p.trap_frequency / (2.0 * PI),
            gradient_t_per_m: p.gradient,
            gamma_e_rad_per_s_t: Some(p.gyromagnetic_ratio),
            n_spins: p.n_spins,
            q_factor: p.quality_factor,
            temperature_k,
            nbar,
            t2_s: p.t2,
            t2star_s: p.t2_star,
            cooling_rate_hz: p.cooling_rate,
            cooling_time_s: p.cooling_time,
            larmor_hz: p.larmor_frequency / (2.0 * PI),
        }
    }
}
