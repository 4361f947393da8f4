//! Exact evolution of the spin-conditioned oscillator branches.
//!
//! The interaction-picture Hamiltonian commutes with its own commutator, so
//! the two-term Magnus expansion is exact. Here the branches are propagated in
//! closed form over every constant-coupling segment, in the toggling frame of
//! the π pulses (branch `k` is labelled by its *initial* spin).
//!
//! Phase-space convention: the coherent amplitude β gives quadratures
//! `q = √2 Re β`, `p = √2 Im β` with `q = (a + a†)/√2`, `p = i(a† − a)/√2`.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::numerics::{ramp_exp, seg_exp};
use crate::pulse_kernel::{
    phase_kernel, squeezing_parameter, weighted_double_integral, PulseSequence, Segment,
};
use crate::{Error, Result};

const I: C64 = C64 { re: 0.0, im: 1.0 };
const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// A real tone `amplitude · cos(nu·t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tone {
    pub amplitude: f64,
    pub nu: f64,
    pub phase: f64,
}

/// External force in natural units (f = F·x0/ħ).
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Force {
    #[default]
    None,
    /// Piecewise-constant samples: `values[j]` holds on `[j·dt, (j+1)·dt)`.
    Samples { dt: f64, values: Vec<f64> },
    /// Sum of analytic tones.
    Tones(Vec<Tone>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MagnusPhases {
    /// β per unit σ_z at τ.
    pub displacement_per_sz: C64,
    /// Force-driven displacement at τ.
    pub displacement_force: C64,
    /// Cross-term phase g∫sign(t)∫sin(ω(t−t′))f(t′).
    pub force_phase_per_sz: f64,
    /// Coefficient of the σ_z² term.
    pub squeezing_zeta: f64,
}

/// Constant-coupling stretch: spin-sign and force both fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSegment {
    pub start: f64,
    pub end: f64,
    pub sign: f64,
    pub force: f64,
}

fn check_force_resolution(dt: f64, omega: f64, tau: f64) -> Result<()> {
    let scale = if omega > 0.0 { (2.0 * std::f64::consts::PI / omega).min(tau / 8.0) } else { tau / 8.0 };
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("force sample step must be > 0, got {dt}")));
    }
    if dt > scale / 16.0 {
        return Err(Error::Resolution(format!(
            "force sampled with dt = {dt:e}; need dt <= {:e} (16 points per min(2π/ω, τ/8))",
            scale / 16.0
        )));
    }
    Ok(())
}

/// Split `[t0, t1]` into constant-sign, constant-force pieces.
pub fn drive_segments(
    seq: &PulseSequence,
    omega: f64,
    force: &Force,
    t0: f64,
    t1: f64,
) -> Result<Vec<DriveSegment>> {
    let tau = seq.total_time;
    if !(0.0 <= t0 && t0 <= t1 && t1 <= tau) {
        return Err(Error::Domain(format!("window [{t0}, {t1}] outside [0, {tau}]")));
    }
    let pieces = seq.segments_within(t0, t1);
    match force {
        Force::None => Ok(pieces
            .iter()
            .map(|s| DriveSegment { start: s.start, end: s.end, sign: s.sign, force: 0.0 })
            .collect()),
        Force::Samples { dt, values } => {
            let dt = *dt;
            check_force_resolution(dt, omega, tau)?;
            if (values.len() as f64) * dt < tau * (1.0 - 1e-12) {
                return Err(Error::Domain(format!(
                    "{} force samples of dt = {dt:e} do not cover τ = {tau:e}",
                    values.len()
                )));
            }
            let mut out = Vec::new();
            for s in pieces {
                let mut a = s.start;
                while a < s.end {
                    let j = ((a / dt).floor() as usize).min(values.len() - 1);
                    let mut b = ((j + 1) as f64 * dt).min(s.end);
                    // guard against a boundary that rounds onto `a`
                    if b <= a {
                        b = ((j + 2) as f64 * dt).min(s.end);
                    }
                    let jm = ((0.5 * (a + b) / dt).floor() as usize).min(values.len() - 1);
                    out.push(DriveSegment { start: a, end: b, sign: s.sign, force: values[jm] });
                    a = b;
                }
            }
            Ok(out)
        }
        Force::Tones(_) => Err(Error::Domain(
            "tone forces are supported by magnus_phases only; sample them for state evolution".into(),
        )),
    }
}

pub fn magnus_phases(seq: &PulseSequence, g: f64, omega: f64, force: &Force) -> Result<MagnusPhases> {
    let tau = seq.total_time;
    let per_sz = crate::pulse_kernel::residual_displacement(seq, g, omega).beta;
    let zeta = squeezing_parameter(seq, g, omega);
    let (disp_f, phi) = match force {
        Force::None => (C64::new(0.0, 0.0), 0.0),
        Force::Tones(tones) => {
            let mut d = C64::new(0.0, 0.0);
            let mut phi = 0.0;
            for t in tones {
                let e = C64::from_polar(1.0, t.phase);
                let int = seg_exp(omega + t.nu, 0.0, tau) * e + seg_exp(omega - t.nu, 0.0, tau) * e.conj();
                d += 0.5 * t.amplitude * int;
                phi += t.amplitude * (e.conj() * phase_kernel(seq, g, omega, t.nu)).re;
            }
            (I * C64::from_polar(1.0, -omega * tau) * d, phi)
        }
        Force::Samples { .. } => {
            let segs = drive_segments(seq, omega, force, 0.0, tau)?;
            let sum: C64 = segs.iter().map(|s| seg_exp(omega, s.start, s.end) * s.force).sum();
            let plain: Vec<Segment> =
                segs.iter().map(|s| Segment { start: s.start, end: s.end, sign: s.sign }).collect();
            let w: Vec<f64> = segs.iter().map(|s| g * s.sign).collect();
            let u: Vec<f64> = segs.iter().map(|s| s.force).collect();
            let phi = weighted_double_integral(&plain, &w, &u, omega, 0.0).re;
            (I * C64::from_polar(1.0, -omega * tau) * sum, phi)
        }
    };
    Ok(MagnusPhases {
        displacement_per_sz: per_sz,
        displacement_force: disp_f,
        force_phase_per_sz: phi,
        squeezing_zeta: zeta,
    })
}

/// One coherent branch: `e^{iθ}|β⟩` (norm carried separately).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Branch {
    pub amplitude: C64,
    pub alpha: C64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntangledState {
    /// initial spin 0 (σ_z = +1)
    pub branch0: Branch,
    /// initial spin 1 (σ_z = −1)
    pub branch1: Branch,
    pub relative_phase: f64,
}

impl EntangledState {
    fn from_parts(b0: C64, th0: f64, b1: C64, th1: f64) -> Self {
        Self {
            branch0: Branch { amplitude: C64::from_polar(SQRT_HALF, th0), alpha: b0 },
            branch1: Branch { amplitude: C64::from_polar(SQRT_HALF, th1), alpha: b1 },
            relative_phase: th1 - th0,
        }
    }

    /// ⟨β₀|β₁⟩.
    pub fn branch_overlap(&self) -> C64 {
        coherent_overlap(self.branch0.alpha, self.branch1.alpha)
    }

    /// |β₀ − β₁|, the phase-space separation of the branches.
    pub fn separation(&self) -> f64 {
        (self.branch0.alpha - self.branch1.alpha).norm()
    }
}

/// ⟨a|b⟩ for coherent states.
pub fn coherent_overlap(a: C64, b: C64) -> C64 {
    (-0.5 * a.norm_sqr() - 0.5 * b.norm_sqr() + a.conj() * b).exp()
}

/// Propagate `(β, θ)` of a branch with spin eigenvalue `sigma` across segments.
///
/// Per segment with constant c = gσ·sign − f, `β(u) = β₀e^{−iωu} − ic∫₀^u e^{−iωv}dv`
/// and `θ̇ = −c Re β`.
pub fn propagate_branch(
    segs: &[DriveSegment],
    g: f64,
    omega: f64,
    sigma: f64,
    mut beta: C64,
    mut theta: f64,
) -> (C64, f64) {
    for s in segs {
        let h = s.end - s.start;
        let c = g * sigma * s.sign - s.force;
        let gm = seg_exp(-omega, 0.0, h);
        theta -= c * ((beta * gm).re + c * ramp_exp(-omega, h).im);
        beta = beta * C64::from_polar(1.0, -omega * h) - I * c * gm;
    }
    (beta, theta)
}

/// Evolve both branches over `[t0, t1]` of the sequence.
pub fn evolve_window(
    state: &EntangledState,
    seq: &PulseSequence,
    g: f64,
    omega: f64,
    force: &Force,
    t0: f64,
    t1: f64,
) -> Result<EntangledState> {
    let segs = drive_segments(seq, omega, force, t0, t1)?;
    let (b0, th0) =
        propagate_branch(&segs, g, omega, 1.0, state.branch0.alpha, state.branch0.amplitude.arg());
    let (b1, th1) =
        propagate_branch(&segs, g, omega, -1.0, state.branch1.alpha, state.branch1.amplitude.arg());
    Ok(EntangledState::from_parts(b0, th0, b1, th1))
}

/// `(|0⟩ + |1⟩)/√2 ⊗ |α⟩`.
pub fn initial_state(alpha: C64) -> EntangledState {
    EntangledState::from_parts(alpha, 0.0, alpha, 0.0)
}

/// Evolve `(|0⟩ + |1⟩)/√2 ⊗ |α⟩` through the whole sequence.
pub fn entangled_state(
    seq: &PulseSequence,
    alpha: C64,
    g: f64,
    omega: f64,
    force: &Force,
) -> Result<EntangledState> {
    evolve_window(&initial_state(alpha), seq, g, omega, force, 0.0, seq.total_time)
}

/// Closed-form pulseless branches `(α ± g/ω)e^{−iωτ} ∓ g/ω`.
pub fn pulseless_state(alpha: C64, g: f64, omega: f64, tau: f64) -> Result<EntangledState> {
    let seq = PulseSequence::ramsey(tau)?;
    let exact = entangled_state(&seq, alpha, g, omega, &Force::None)?;
    let e = C64::from_polar(1.0, -omega * tau);
    let c = g / omega;
    Ok(EntangledState {
        branch0: Branch { alpha: (alpha + c) * e - c, ..exact.branch0 },
        branch1: Branch { alpha: (alpha - c) * e + c, ..exact.branch1 },
        ..exact
    })
}

/// Closed-form single-echo branches `(α ± g/ω)e^{−iωτ} ± g/ω ∓ (2g/ω)e^{−iωτ/2}`.
pub fn pulsed_state(alpha: C64, g: f64, omega: f64, tau: f64) -> Result<EntangledState> {
    let seq = PulseSequence::hahn_echo(tau)?;
    let exact = entangled_state(&seq, alpha, g, omega, &Force::None)?;
    let e = C64::from_polar(1.0, -omega * tau);
    let eh = C64::from_polar(1.0, -0.5 * omega * tau);
    let c = g / omega;
    Ok(EntangledState {
        branch0: Branch { alpha: (alpha + c) * e + c - 2.0 * c * eh, ..exact.branch0 },
        branch1: Branch { alpha: (alpha - c) * e - c + 2.0 * c * eh, ..exact.branch1 },
        ..exact
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    /// ⟨q⟩ = √2 Re β
    pub x: f64,
    /// ⟨p⟩ = √2 Im β
    pub p: f64,
}

/// Mean phase-space path of one branch, sampled uniformly on `[0, τ]`.
pub fn trajectory(
    seq: &PulseSequence,
    g: f64,
    omega: f64,
    alpha: C64,
    spin_branch: u8,
    n_samples: usize,
) -> Result<Vec<TrajectoryPoint>> {
    if n_samples < 2 {
        return Err(Error::Domain(format!("need at least 2 samples, got {n_samples}")));
    }
    let sigma = match spin_branch {
        0 => 1.0,
        1 => -1.0,
        b => return Err(Error::Domain(format!("spin branch must be 0 or 1, got {b}"))),
    };
    let tau = seq.total_time;
    (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let t = if k + 1 == n_samples { tau } else { tau * k as f64 / (n_samples - 1) as f64 };
            let segs = drive_segments(seq, omega, &Force::None, 0.0, t)?;
            let (b, _) = propagate_branch(&segs, g, omega, sigma, alpha, 0.0);
            Ok(TrajectoryPoint { t, x: 2f64.sqrt() * b.re, p: 2f64.sqrt() * b.im })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse_kernel::SequenceKind;
    use std::f64::consts::PI;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn ramsey_displacement_reproduces_coherent_amplitude() {
        let (g, w, tau) = (0.3, 1.0, 1.7);
        let m = magnus_phases(&PulseSequence::ramsey(tau).unwrap(), g, w, &Force::None).unwrap();
        let direct = -I * g * (C64::from_polar(1.0, -w * tau) - 1.0) / (-I * w);
        assert!(close(m.displacement_per_sz, direct * C64::from_polar(1.0, 0.0), 1e-14));
        assert_eq!(m.displacement_force, C64::new(0.0, 0.0));
        assert_eq!(m.force_phase_per_sz, 0.0);
    }

    #[test]
    fn zero_coupling_leaves_only_force_displacement() {
        let seq = PulseSequence::hahn_echo(2.0).unwrap();
        let n = 2000;
        let force = Force::Samples { dt: 2.0 / n as f64, values: vec![0.4; n] };
        let m = magnus_phases(&seq, 0.0, 1.0, &force).unwrap();
        assert_eq!(m.squeezing_zeta, 0.0);
        assert_eq!(m.force_phase_per_sz, 0.0);
        assert_eq!(m.displacement_per_sz.norm(), 0.0);
        assert!(m.displacement_force.norm() > 0.1);
    }

    #[test]
    fn constant_force_phase_agrees_with_spectral_kernel() {
        let tau = 0.1;
        let seq = PulseSequence::hahn_echo(tau).unwrap();
        let n = 1024;
        let force = Force::Samples { dt: tau / n as f64, values: vec![2.5; n] };
        let t = magnus_phases(&seq, 1.0, 1.0, &force).unwrap();
        let tone = Force::Tones(vec![Tone { amplitude: 2.5, nu: 0.0, phase: 0.0 }]);
        let s = magnus_phases(&seq, 1.0, 1.0, &tone).unwrap();
        assert!((t.force_phase_per_sz - s.force_phase_per_sz).abs() < 1e-12 * s.force_phase_per_sz.abs());
        assert!(close(t.displacement_force, s.displacement_force, 1e-14));
    }

    #[test]
    fn sampled_tone_matches_analytic_tone() {
        let tau = 3.0;
        let seq = PulseSequence::carr_purcell2(tau).unwrap();
        let (a, nu, ph) = (0.7, 2.3, 0.4);
        let n = 200_000;
        let dt = tau / n as f64;
        let values: Vec<f64> = (0..n).map(|j| {
            let (t0, t1) = (j as f64 * dt, (j + 1) as f64 * dt);
            a * ((nu * t1 + ph).sin() - (nu * t0 + ph).sin()) / (nu * dt)
        }).collect();
        let s = magnus_phases(&seq, 0.9, 1.0, &Force::Samples { dt, values }).unwrap();
        let t = magnus_phases(&seq, 0.9, 1.0, &Force::Tones(vec![Tone { amplitude: a, nu, phase: ph }])).unwrap();
        assert!((s.force_phase_per_sz - t.force_phase_per_sz).abs() < 1e-6);
        assert!(close(s.displacement_force, t.displacement_force, 1e-6));
    }

    #[test]
    fn undersampled_force_is_rejected() {
        let seq = PulseSequence::ramsey(1.0).unwrap();
        let force = Force::Samples { dt: 0.1, values: vec![1.0; 10] };
        assert!(matches!(magnus_phases(&seq, 1.0, 1.0, &force), Err(Error::Resolution(_))));
    }

    #[test]
    fn zeta_matches_kernel_module() {
        for kind in SequenceKind::NAMED {
            let seq = PulseSequence::named(kind, 2.2).unwrap();
            let m = magnus_phases(&seq, 0.6, 1.1, &Force::None).unwrap();
            assert_eq!(m.squeezing_zeta, squeezing_parameter(&seq, 0.6, 1.1));
        }
    }

    #[test]
    fn pulseless_examples() {
        let a = C64::new(0.3, -0.2);
        let s = pulseless_state(a, 0.5, 1.0, PI).unwrap();
        assert!(close(s.branch0.alpha, -a - 1.0, 1e-14));
        assert!(close(s.branch1.alpha, -a + 1.0, 1e-14));
        let s = pulseless_state(a, 0.5, 1.0, 2.0 * PI).unwrap();
        assert!(close(s.branch0.alpha, a, 1e-14) && close(s.branch1.alpha, a, 1e-14));
        let s = pulseless_state(a, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(s.branch0.alpha, s.branch1.alpha);
    }

    #[test]
    fn closed_forms_match_segment_evolution() {
        let a = C64::new(-0.4, 0.9);
        for &tau in &[0.1, 1.0, PI, 5.0] {
            let p = pulsed_state(a, 0.8, 1.0, tau).unwrap();
            let e = entangled_state(&PulseSequence::hahn_echo(tau).unwrap(), a, 0.8, 1.0, &Force::None).unwrap();
            assert!(close(p.branch0.alpha, e.branch0.alpha, 1e-13));
            assert!(close(p.branch1.alpha, e.branch1.alpha, 1e-13));
            let p = pulseless_state(a, 0.8, 1.0, tau).unwrap();
            let e = entangled_state(&PulseSequence::ramsey(tau).unwrap(), a, 0.8, 1.0, &Force::None).unwrap();
            assert!(close(p.branch0.alpha, e.branch0.alpha, 1e-13));
        }
    }

    #[test]
    fn small_time_echo_separation() {
        let (g, w, tau) = (1.0, 1.0, 1e-3);
        let s = pulsed_state(C64::new(0.0, 0.0), g, w, tau).unwrap();
        let expected = 0.5 * w * g * tau * tau;
        assert!((s.separation() / expected - 1.0).abs() < 1e-3);
    }

    #[test]
    fn echo_displacement_is_second_order() {
        let tau = 1e-3;
        let r = magnus_phases(&PulseSequence::ramsey(tau).unwrap(), 1.0, 1.0, &Force::None).unwrap();
        let h = magnus_phases(&PulseSequence::hahn_echo(tau).unwrap(), 1.0, 1.0, &Force::None).unwrap();
        assert!(h.displacement_per_sz.norm() / r.displacement_per_sz.norm() < 2.0 * tau);
    }

    #[test]
    fn composition_over_split_windows() {
        let seq = PulseSequence::carr_purcell2(2.7).unwrap();
        let a = C64::new(0.2, 0.1);
        let n = 4096;
        let force = Force::Samples { dt: 2.7 / n as f64, values: (0..n).map(|j| (j as f64 * 0.01).sin()).collect() };
        let full = entangled_state(&seq, a, 0.7, 1.0, &force).unwrap();
        let half = evolve_window(&initial_state(a), &seq, 0.7, 1.0, &force, 0.0, 1.35).unwrap();
        let both = evolve_window(&half, &seq, 0.7, 1.0, &force, 1.35, 2.7).unwrap();
        assert!(close(full.branch0.alpha, both.branch0.alpha, 1e-12));
        assert!(close(full.branch1.alpha, both.branch1.alpha, 1e-12));
        assert!((full.relative_phase - both.relative_phase).abs() < 1e-12);
        assert!((full.branch0.amplitude.norm_sqr() + full.branch1.amplitude.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn coherence_phase_is_four_times_force_phase() {
        let seq = PulseSequence::hahn_echo(2.0).unwrap();
        let n = 1024;
        let force = Force::Samples { dt: 2.0 / n as f64, values: vec![0.05; n] };
        let m = magnus_phases(&seq, 0.3, 1.0, &force).unwrap();
        let s0 = entangled_state(&seq, C64::new(0.0, 0.0), 0.3, 1.0, &Force::None).unwrap();
        let s1 = entangled_state(&seq, C64::new(0.0, 0.0), 0.3, 1.0, &force).unwrap();
        let coh = |s: &EntangledState| (s.branch0.amplitude.conj() * s.branch1.amplitude * s.branch_overlap()).arg();
        let shift = coh(&s1) - coh(&s0);
        assert!((shift - 4.0 * m.force_phase_per_sz).abs() < 1e-12, "{shift} vs {}", 4.0 * m.force_phase_per_sz);
    }

    #[test]
    fn trajectory_endpoints_and_geometry() {
        let a = C64::new(0.5, 0.0);
        let seq = PulseSequence::hahn_echo(1.3).unwrap();
        let tr = trajectory(&seq, 0.4, 1.0, a, 1, 50).unwrap();
        let end = pulsed_state(a, 0.4, 1.0, 1.3).unwrap().branch1.alpha;
        let last = tr.last().unwrap();
        assert!((last.x - 2f64.sqrt() * end.re).abs() < 1e-12 && (last.p - 2f64.sqrt() * end.im).abs() < 1e-12);
        // Ramsey: circle of radius √2·g/ω about (−√2 g/ω, 0) for α = 0
        let tr = trajectory(&PulseSequence::ramsey(5.0).unwrap(), 0.4, 1.0, C64::new(0.0, 0.0), 0, 40).unwrap();
        for pt in &tr {
            let r = ((pt.x + 2f64.sqrt() * 0.4).powi(2) + pt.p.powi(2)).sqrt();
            assert!((r - 2f64.sqrt() * 0.4).abs() < 1e-12);
        }
        let tr = trajectory(&PulseSequence::ramsey(1.0).unwrap(), 0.0, 1.0, a, 0, 3).unwrap();
        assert!((tr[2].x - 2f64.sqrt() * 0.5 * 1f64.cos()).abs() < 1e-14);
        assert!(trajectory(&seq, 0.4, 1.0, a, 0, 1).is_err());
    }
}
