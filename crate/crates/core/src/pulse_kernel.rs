//! Pulse sequences and their scalar functionals: sign profile, residual
//! displacement Δn, phase response kernel χ(ν) and the squeezing parameter ζ.
//!
//! Everything is integrated segment by segment in closed form. Cross-segment
//! double integrals factorize into products of single-segment exponential
//! integrals, accumulated with running sums, so a sequence with `M` segments
//! costs O(M).

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::numerics::{exp_divided_difference, seg_exp};
use crate::{Error, Result};

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceKind {
    Ramsey,
    HahnEcho,
    CarrPurcell2,
    Custom,
}

impl SequenceKind {
    pub const NAMED: [SequenceKind; 3] =
        [SequenceKind::Ramsey, SequenceKind::HahnEcho, SequenceKind::CarrPurcell2];

    pub fn name(self) -> &'static str {
        match self {
            SequenceKind::Ramsey => "ramsey",
            SequenceKind::HahnEcho => "hahn_echo",
            SequenceKind::CarrPurcell2 => "carr_purcell2",
            SequenceKind::Custom => "custom",
        }
    }
}

impl std::str::FromStr for SequenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ramsey" => Ok(SequenceKind::Ramsey),
            "hahn_echo" | "hahn" | "echo" => Ok(SequenceKind::HahnEcho),
            "carr_purcell2" | "carr_purcell" | "cp" => Ok(SequenceKind::CarrPurcell2),
            other => Err(Error::Domain(format!("unknown sequence kind '{other}'"))),
        }
    }
}

/// Free evolution of length τ interrupted by instantaneous π pulses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub kind: SequenceKind,
    pub total_time: f64,
    pub pulse_times: Vec<f64>,
}

/// A constant-sign stretch `[start, end)` of the sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub sign: f64,
}

impl Segment {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }
}

fn check_time(tau: f64) -> Result<()> {
    if tau.is_finite() && tau > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("total time must be finite and > 0, got {tau}")))
    }
}

impl PulseSequence {
    pub fn named(kind: SequenceKind, tau: f64) -> Result<Self> {
        check_time(tau)?;
        let pulse_times = match kind {
            SequenceKind::Ramsey => vec![],
            SequenceKind::HahnEcho => vec![0.5 * tau],
            SequenceKind::CarrPurcell2 => vec![0.25 * tau, 0.75 * tau],
            SequenceKind::Custom => {
                return Err(Error::Domain("custom sequences need explicit pulse times".into()))
            }
        };
        Ok(Self { kind, total_time: tau, pulse_times })
    }

    pub fn ramsey(tau: f64) -> Result<Self> {
        Self::named(SequenceKind::Ramsey, tau)
    }

    pub fn hahn_echo(tau: f64) -> Result<Self> {
        Self::named(SequenceKind::HahnEcho, tau)
    }

    pub fn carr_purcell2(tau: f64) -> Result<Self> {
        Self::named(SequenceKind::CarrPurcell2, tau)
    }

    pub fn custom(tau: f64, pulse_times: Vec<f64>) -> Result<Self> {
        check_time(tau)?;
        let mut prev = 0.0;
        for &t in &pulse_times {
            if !(t > prev && t < tau) {
                return Err(Error::Domain(format!(
                    "pulse times must satisfy 0 < t1 < t2 < ... < tau; offending {t}"
                )));
            }
            prev = t;
        }
        Ok(Self { kind: SequenceKind::Custom, total_time: tau, pulse_times })
    }

    /// Sign of the effective coupling at `t`: +1 before the first pulse,
    /// flipping at every pulse, right-continuous.
    pub fn sign(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.total_time).contains(&t) {
            return Err(Error::Domain(format!(
                "t = {t} outside [0, {}]",
                self.total_time
            )));
        }
        let flips = self.pulse_times.iter().filter(|&&p| t >= p).count();
        Ok(if flips % 2 == 0 { 1.0 } else { -1.0 })
    }

    pub fn segments(&self) -> Vec<Segment> {
        let mut out = Vec::with_capacity(self.pulse_times.len() + 1);
        let mut start = 0.0;
        let mut sign = 1.0;
        for &p in &self.pulse_times {
            out.push(Segment { start, end: p, sign });
            start = p;
            sign = -sign;
        }
        out.push(Segment { start, end: self.total_time, sign });
        out
    }

    /// Segments restricted to `[t0, t1]`.
    pub fn segments_within(&self, t0: f64, t1: f64) -> Vec<Segment> {
        self.segments()
            .into_iter()
            .filter_map(|s| {
                let a = s.start.max(t0);
                let b = s.end.min(t1);
                (b > a).then_some(Segment { start: a, end: b, sign: s.sign })
            })
            .collect()
    }

    /// ∫₀^τ sign(t) dt.
    pub fn sign_integral(&self) -> f64 {
        self.segments().iter().map(|s| s.sign * s.len()).sum()
    }
}

/// Spin-conditioned displacement β per unit σ_z and the phonon number |β|².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Displacement {
    pub beta: C64,
    pub delta_n: f64,
}

/// sin(ωa)/ω, continuous at ω = 0.
fn sin_over(omega: f64, a: f64) -> f64 {
    a * crate::numerics::sinc(omega * a)
}

/// β = −i g ∫₀^τ e^{−iω(τ−t)} sign(t) dt and Δn = |β|².
pub fn residual_displacement(seq: &PulseSequence, g: f64, omega: f64) -> Displacement {
    let tau = seq.total_time;
    let centre = C64::from_polar(1.0, -0.5 * omega * tau);
    let beta = match seq.kind {
        SequenceKind::Ramsey => -I * 2.0 * g * sin_over(omega, 0.5 * tau) * centre,
        SequenceKind::HahnEcho => {
            let s = sin_over(omega, 0.25 * tau);
            -4.0 * g * omega * s * s * centre
        }
        SequenceKind::CarrPurcell2 => {
            let s8 = sin_over(omega, 0.125 * tau);
            I * 8.0 * g * omega * omega * sin_over(omega, 0.25 * tau) * s8 * s8 * centre
        }
        SequenceKind::Custom => segments_displacement(&seq.segments(), tau, g, omega),
    };
    Displacement { beta, delta_n: beta.norm_sqr() }
}

/// Piecewise displacement over arbitrary segments ending at `t_end`.
pub fn segments_displacement(segs: &[Segment], t_end: f64, g: f64, omega: f64) -> C64 {
    let sum: C64 = segs.iter().map(|s| seg_exp(omega, s.start, s.end) * s.sign).sum();
    -I * g * C64::from_polar(1.0, -omega * t_end) * sum
}

/// Σ_i w_i Σ_{j≤i} u_j ∫_{seg i} dt ∫_{seg j, t'<t} dt' sin(ω(t − t')) e^{−iνt'}
/// for outer weights `w` and inner weights `u` (one per segment).
pub fn weighted_double_integral(segs: &[Segment], w: &[f64], u: &[f64], omega: f64, nu: f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    let mut s1 = C64::new(0.0, 0.0); // Σ u_j G_j(−ω−ν)
    let mut s2 = C64::new(0.0, 0.0); // Σ u_j G_j(ω−ν)
    for (k, seg) in segs.iter().enumerate() {
        let (a, b) = (seg.start, seg.end);
        let h = b - a;
        let cross = (seg_exp(omega, a, b) * s1 - seg_exp(-omega, a, b) * s2) / (2.0 * I);
        let diag = C64::from_polar(1.0, -nu * a)
            * (exp_divided_difference(omega, -nu, h) - exp_divided_difference(-omega, -nu, h))
            / (2.0 * I);
        acc += (cross + diag * u[k]) * w[k];
        s1 += seg_exp(-omega - nu, a, b) * u[k];
        s2 += seg_exp(omega - nu, a, b) * u[k];
    }
    acc
}

/// Phase picked up per unit tone amplitude: φ = K(ν)·f for f(t) = f e^{−iνt},
/// with K(ν) = g ∫₀^τ sign(t) ∫₀^t sin(ω(t−t′)) e^{−iνt′} dt′ dt.
pub fn phase_kernel(seq: &PulseSequence, g: f64, omega: f64, nu: f64) -> C64 {
    let segs = seq.segments();
    let w: Vec<f64> = segs.iter().map(|s| g * s.sign).collect();
    let u = vec![1.0; segs.len()];
    weighted_double_integral(&segs, &w, &u, omega, nu)
}

/// χ(ν) with the 1/√(2π) Fourier measure: φ = ∫ χ(ν) f(ν) dν.
pub fn response_kernel(seq: &PulseSequence, g: f64, omega: f64, nu: f64) -> C64 {
    phase_kernel(seq, g, omega, nu) / (2.0 * PI).sqrt()
}

/// Kernel sampled on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseKernel {
    pub nu: Vec<f64>,
    pub chi: Vec<C64>,
}

pub fn response_kernel_grid(seq: &PulseSequence, g: f64, omega: f64, nu: &[f64]) -> ResponseKernel {
    use rayon::prelude::*;
    let chi = nu.par_iter().map(|&v| response_kernel(seq, g, omega, v)).collect();
    ResponseKernel { nu: nu.to_vec(), chi }
}

/// Static response φ/f (ν = 0).
pub fn dc_response(seq: &PulseSequence, g: f64, omega: f64) -> f64 {
    phase_kernel(seq, g, omega, 0.0).re
}

/// Ramsey kernel in the printed closed form 2g(ν[cos ωτ − 1] − ω[cos ντ − 1]) / (νω(ν − ω)).
///
/// This expression is real and not Hermitian; it coincides with
/// 2 Re ∫₀^τ∫₀^t e^{−iω(t−t′)} e^{−iνt′}, i.e. it weights the oscillator's
/// momentum response rather than its position. Kept for the −16g/ω² anchor
/// at τ = 2π/ω, ν = ω/2; [`phase_kernel`] is the canonical response.
pub fn ramsey_kernel_closed_form(g: f64, omega: f64, tau: f64, nu: f64) -> f64 {
    let c = (omega * tau).cos() - 1.0;
    let d = nu - omega;
    if (d * tau).abs() < 1e-6 {
        let n1 = c + omega * tau * (omega * tau).sin();
        let n2 = omega * tau * tau * (omega * tau).cos();
        let n3 = -omega * tau.powi(3) * (omega * tau).sin();
        return 2.0 * g * (n1 + n2 * d / 2.0 + n3 * d * d / 6.0) / (nu * omega);
    }
    if (nu * tau).abs() < 1e-6 {
        return 2.0 * g * (c + omega * tau * tau * nu / 2.0) / (omega * d);
    }
    2.0 * g * (nu * c - omega * ((nu * tau).cos() - 1.0)) / (nu * omega * d)
}

/// Small-ωτ approximation of the two-pulse kernel:
/// (gωτ³/32) e^{−iντ/2} e^{−(9ω² + ν²)τ²/64}.
pub fn cp_approx_kernel(g: f64, omega: f64, tau: f64, nu: f64) -> C64 {
    let mag = g * omega * tau.powi(3) / 32.0
        * (-(9.0 * omega * omega + nu * nu) * tau * tau / 64.0).exp();
    C64::from_polar(mag, -0.5 * nu * tau)
}

/// ζ = g² ∫₀^τ ∫₀^t sin(ω(t−t′)) sign(t) sign(t′) dt′ dt.
pub fn squeezing_parameter(seq: &PulseSequence, g: f64, omega: f64) -> f64 {
    let segs = seq.segments();
    let s: Vec<f64> = segs.iter().map(|x| x.sign).collect();
    g * g * weighted_double_integral(&segs, &s, &s, omega, 0.0).re
}

/// Closed-form ζ for the named sequences.
pub fn squeezing_closed_form(kind: SequenceKind, g: f64, omega: f64, tau: f64) -> Result<f64> {
    if omega == 0.0 {
        return Ok(0.0);
    }
    let x = omega * tau;
    let body = match kind {
        SequenceKind::Ramsey => x - x.sin(),
        SequenceKind::HahnEcho => x - 4.0 * (x / 2.0).sin() + x.sin(),
        SequenceKind::CarrPurcell2 => {
            x - 4.0 * (x / 4.0).sin() - 4.0 * (x / 2.0).sin() + 4.0 * (0.75 * x).sin() - x.sin()
        }
        SequenceKind::Custom => {
            return Err(Error::Domain("no closed form for custom sequences".into()))
        }
    };
    Ok(g * g * body / (omega * omega))
}

/// Closed-form Δn/g² for the named sequences.
pub fn delta_n_closed_form(kind: SequenceKind, omega: f64, tau: f64) -> Result<f64> {
    let x = omega * tau;
    let w2 = omega * omega;
    Ok(match kind {
        SequenceKind::Ramsey => 4.0 * (x / 2.0).sin().powi(2) / w2,
        SequenceKind::HahnEcho => 16.0 * (x / 4.0).sin().powi(4) / w2,
        SequenceKind::CarrPurcell2 => 64.0 * (x / 8.0).sin().powi(4) * (x / 4.0).sin().powi(2) / w2,
        SequenceKind::Custom => {
            return Err(Error::Domain("no closed form for custom sequences".into()))
        }
    })
}

/// Leading-order (ωτ ≪ 1) figures of merit per sequence, as tabulated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeadingOrderRow {
    pub phi_per_gf: f64,
    pub delta_n_per_g2: f64,
    /// force SQL / ξ^{1/4}
    pub force_sql_scale: f64,
    /// g*√N at ξ = 1/4
    pub g_star_scale: f64,
    /// |ζ|/g²
    pub zeta_per_g2: f64,
    /// set when ωτ ≥ 0.5
    pub out_of_regime: bool,
}

pub fn leading_order_row(kind: SequenceKind, g: f64, omega: f64, tau: f64) -> Result<LeadingOrderRow> {
    let _ = g; // rows are normalized by g; kept for signature symmetry
    let (w, t) = (omega, tau);
    let row = match kind {
        SequenceKind::Ramsey => (w * t.powi(3) / 6.0, t * t, 6.0 / (w * t * t), 1.0 / t, w * t.powi(3) / 6.0),
        SequenceKind::HahnEcho => (
            w * t.powi(3) / 8.0,
            w * w * t.powi(4) / 16.0,
            2.0 / t,
            4.0 / (w * t * t),
            w * t.powi(3) / 12.0,
        ),
        SequenceKind::CarrPurcell2 => (
            w * t.powi(3) / 32.0,
            w.powi(4) * t.powi(6) / 1024.0,
            w,
            32.0 / (w * w * t.powi(3)),
            w * t.powi(3) / 48.0,
        ),
        SequenceKind::Custom => {
            return Err(Error::Domain("no tabulated row for custom sequences".into()))
        }
    };
    Ok(LeadingOrderRow {
        phi_per_gf: row.0,
        delta_n_per_g2: row.1,
        force_sql_scale: row.2,
        g_star_scale: row.3,
        zeta_per_g2: row.4,
        out_of_regime: omega * tau >= 0.5,
    })
}
