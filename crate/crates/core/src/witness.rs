//! Spin–oscillator entanglement witness
//! `W = Var S̃_x + Σ_{μ=y,z} Var(S̃_μ + a_μ q + b_μ p)` with `S̃ = σ/2`,
//! its separable bound `½ + |a_y b_z − a_z b_y|`, and thermal corrections.
//!
//! Quadratures are `q = (a + a†)/√2`, `p = i(a† − a)/√2`; coefficients are
//! dimensionless in those units.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::magnus_dynamics::EntangledState;
use crate::{Error, Result};

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WitnessCoefficients {
    pub a_y: f64,
    pub b_y: f64,
    pub a_z: f64,
    pub b_z: f64,
}

impl WitnessCoefficients {
    /// Coefficients for physical position (m) and momentum (kg·m/s):
    /// `a q = a √(mω/ħ) x`, `b p = b p_phys / √(mħω)`.
    pub fn to_si(&self, mass: f64, omega: f64) -> WitnessCoefficients {
        let fa = (mass * omega / crate::core_model::HBAR).sqrt();
        let fb = 1.0 / (mass * omega * crate::core_model::HBAR).sqrt();
        WitnessCoefficients { a_y: self.a_y * fa, b_y: self.b_y * fb, a_z: self.a_z * fa, b_z: self.b_z * fb }
    }
}

/// First and second moments of {σ_x, σ_y, σ_z, q, p}.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Moments {
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
    pub var_sx: f64,
    pub var_sy: f64,
    pub var_sz: f64,
    /// ⟨σ_y q⟩
    pub syq: f64,
    pub syp: f64,
    pub szq: f64,
    pub szp: f64,
    pub q: f64,
    pub p: f64,
    pub q2: f64,
    pub p2: f64,
    /// ⟨qp + pq⟩
    pub qp_sym: f64,
}

impl Moments {
    /// Exact moments of `Σ_k A_k |k⟩|β_k⟩`.
    pub fn from_state(s: &EntangledState) -> Moments {
        let (a0, a1) = (s.branch0.amplitude, s.branch1.amplitude);
        let (b0, b1) = (s.branch0.alpha, s.branch1.alpha);
        let (w0, w1) = (a0.norm_sqr(), a1.norm_sqr());
        let cross = a0.conj() * a1 * s.branch_overlap();
        // ⟨β0|q|β1⟩/⟨β0|β1⟩ and the same for p
        let xq = (b1 + b0.conj()) / SQRT2;
        let xp = C64::i() * (b0.conj() - b1) / SQRT2;
        let qk = |b: C64| SQRT2 * b.re;
        let pk = |b: C64| SQRT2 * b.im;
        let sx = 2.0 * cross.re;
        let sy = 2.0 * cross.im;
        let sz = w0 - w1;
        let q = w0 * qk(b0) + w1 * qk(b1);
        let p = w0 * pk(b0) + w1 * pk(b1);
        Moments {
            sx,
            sy,
            sz,
            var_sx: 1.0 - sx * sx,
            var_sy: 1.0 - sy * sy,
            var_sz: 1.0 - sz * sz,
            syq: 2.0 * (cross * xq).im,
            syp: 2.0 * (cross * xp).im,
            szq: w0 * qk(b0) - w1 * qk(b1),
            szp: w0 * pk(b0) - w1 * pk(b1),
            q,
            p,
            q2: w0 * (qk(b0).powi(2) + 0.5) + w1 * (qk(b1).powi(2) + 0.5),
            p2: w0 * (pk(b0).powi(2) + 0.5) + w1 * (pk(b1).powi(2) + 0.5),
            qp_sym: 2.0 * (w0 * qk(b0) * pk(b0) + w1 * qk(b1) * pk(b1)),
        }
    }

    /// Oscillator covariance matrix in (q, p).
    pub fn covariance(&self) -> [[f64; 2]; 2] {
        let cqp = 0.5 * self.qp_sym - self.q * self.p;
        [[self.q2 - self.q * self.q, cqp], [cqp, self.p2 - self.p * self.p]]
    }

    /// Cov(σ_y, (q, p)) and Cov(σ_z, (q, p)).
    pub fn spin_cross(&self) -> ([f64; 2], [f64; 2]) {
        (
            [self.syq - self.sy * self.q, self.syp - self.sy * self.p],
            [self.szq - self.sz * self.q, self.szp - self.sz * self.p],
        )
    }
}

pub fn separable_bound(c: &WitnessCoefficients) -> f64 {
    0.5 + (c.a_y * c.b_z - c.a_z * c.b_y).abs()
}

fn quad(cov: &[[f64; 2]; 2], v: [f64; 2]) -> f64 {
    cov[0][0] * v[0] * v[0] + 2.0 * cov[0][1] * v[0] * v[1] + cov[1][1] * v[1] * v[1]
}

/// Witness value for given moments and coefficients.
pub fn witness_value(m: &Moments, c: &WitnessCoefficients) -> f64 {
    let cov = m.covariance();
    let (cy, cz) = m.spin_cross();
    let part = |var: f64, v: [f64; 2], cr: [f64; 2]| 0.25 * var + quad(&cov, v) + v[0] * cr[0] + v[1] * cr[1];
    0.25 * m.var_sx + part(m.var_sy, [c.a_y, c.b_y], cy) + part(m.var_sz, [c.a_z, c.b_z], cz)
}

/// Minimizer of [`witness_value`] over the four coefficients: `v_μ = −½ C⁻¹ Cov(σ_μ, r)`.
pub fn optimize_coefficients(m: &Moments) -> Result<WitnessCoefficients> {
    let c = m.covariance();
    let det = c[0][0] * c[1][1] - c[0][1] * c[0][1];
    let scale = (c[0][0].abs() + c[1][1].abs()).max(f64::MIN_POSITIVE);
    if !(det.abs() > 1e-13 * scale * scale) {
        // smallest-eigenvalue direction of the symmetric 2×2 matrix
        let tr = c[0][0] + c[1][1];
        let lam = 0.5 * tr - (0.25 * (c[0][0] - c[1][1]).powi(2) + c[0][1] * c[0][1]).sqrt();
        let mut v = if c[0][1].abs() > 0.0 { [c[0][1], lam - c[0][0]] } else if c[0][0] <= c[1][1] { [1.0, 0.0] } else { [0.0, 1.0] };
        let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
        v = [v[0] / n, v[1] / n];
        return Err(Error::Degenerate { null_direction: v });
    }
    let solve = |r: [f64; 2]| {
        [
            -0.5 * (c[1][1] * r[0] - c[0][1] * r[1]) / det,
            -0.5 * (-c[0][1] * r[0] + c[0][0] * r[1]) / det,
        ]
    };
    let (cy, cz) = m.spin_cross();
    let vy = solve(cy);
    let vz = solve(cz);
    Ok(WitnessCoefficients { a_y: vy[0], b_y: vy[1], a_z: vz[0], b_z: vz[1] })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessResult {
    pub w_b: f64,
    pub w_en: f64,
    pub w_ratio: f64,
    /// ⌈w_ratio⁻²⌉; `None` when there is no violation.
    pub n_meas: Option<u64>,
}

impl WitnessResult {
    pub fn new(w_b: f64, w_en: f64) -> Self {
        let w_ratio = (w_b - w_en) / w_b;
        let n_meas = (w_ratio > 0.0).then(|| {
            let n = (1.0 / (w_ratio * w_ratio)).ceil();
            if n >= u64::MAX as f64 { u64::MAX } else { n as u64 }
        });
        Self { w_b, w_en, w_ratio, n_meas }
    }

    pub fn violated(&self) -> bool {
        self.w_ratio > 0.0
    }
}

/// Optimized witness on given moments.
pub fn witness_from_moments(m: &Moments) -> Result<(WitnessCoefficients, WitnessResult)> {
    let c = optimize_coefficients(m)?;
    Ok((c, WitnessResult::new(separable_bound(&c), witness_value(m, &c))))
}

fn one_minus_cos(omega: f64, t: f64) -> f64 {
    2.0 * (0.5 * omega * t).sin().powi(2)
}

/// Separable bound for a thermal start, optimal coefficients, time t without pulses.
/// The sign of cos(ω_L t) is kept as in the closed form; the bound itself is
/// ½ + |thermal_wb − ½|.
pub fn thermal_wb(lambda: f64, nbar: f64, omega: f64, omega_l: f64, t: f64) -> f64 {
    let k = lambda * lambda * one_minus_cos(omega, t);
    let th = 2.0 * nbar + 1.0;
    0.5 + (-th * k).exp() * (omega_l * t).cos() * k / (th + 2.0 * k)
}

/// Witness value for a thermal start, optimal coefficients, time t without pulses.
pub fn thermal_wen(lambda: f64, nbar: f64, omega: f64, t: f64) -> f64 {
    let k = lambda * lambda * one_minus_cos(omega, t);
    let th = 2.0 * nbar + 1.0;
    0.5 + th / (4.0 * (th + 2.0 * k)) - (-2.0 * th * k).exp() / 4.0 * (1.0 + 2.0 * th * k)
}

/// Optimal coefficients at t = π/ω for a thermal start.
pub fn halfperiod_coefficients(lambda: f64, nbar: f64) -> WitnessCoefficients {
    let th = 2.0 * nbar + 1.0;
    WitnessCoefficients {
        a_y: 0.0,
        b_y: SQRT2 * lambda * (-2.0 * th * lambda * lambda).exp(),
        a_z: SQRT2 * lambda / (th + 4.0 * lambda * lambda),
        b_z: 0.0,
    }
}

/// Separable bound at t = π/ω.
pub fn halfperiod_wb(lambda: f64, nbar: f64) -> f64 {
    let th = 2.0 * nbar + 1.0;
    let l2 = lambda * lambda;
    0.5 + 2.0 * (-2.0 * th * l2).exp() * l2 / (th + 4.0 * l2)
}

/// Witness value at t = π/ω.
pub fn halfperiod_wen(lambda: f64, nbar: f64) -> f64 {
    let th = 2.0 * nbar + 1.0;
    let l2 = lambda * lambda;
    0.5 + th / (4.0 * (th + 4.0 * l2)) - (-4.0 * th * l2).exp() / 4.0 * (1.0 + 4.0 * th * l2)
}

/// λ_eff = ωgτ²/4 for short echo sequences.
pub fn pulsed_effective_lambda(g: f64, omega: f64, tau: f64) -> f64 {
    0.25 * omega * g * tau * tau
}

/// Exact moments of the pulseless state after time t from a thermal start
/// (Glauber-P average over the initial coherent amplitude).
pub fn thermal_moments(lambda: f64, nbar: f64, omega: f64, omega_l: f64, t: f64) -> Moments {
    let c = 0.5 * lambda;
    let e = C64::from_polar(1.0, -omega * t);
    let k = 1.0 - e;
    let delta = c * (e - 1.0);
    let o0 = C64::from_polar((-2.0 * delta.norm_sqr()).exp(), omega_l * t);
    let kappa = 4.0 * c * k;
    let u = kappa / 2.0;
    let v = -kappa.conj() / 2.0;
    let big_e = (nbar * u * v).exp();
    let coh = o0 * big_e;
    let syx = (coh * (nbar * u * e.conj() + nbar * v * e + delta.conj() - delta)).im;
    let syp = (C64::i() * coh * (nbar * u * e.conj() - nbar * v * e + delta.conj() + delta)).im;
    let th = 1.0 + 2.0 * nbar;
    Moments {
        sx: coh.re,
        sy: coh.im,
        sz: 0.0,
        var_sx: 1.0 - coh.re * coh.re,
        var_sy: 1.0 - coh.im * coh.im,
        var_sz: 1.0,
        syq: syx / SQRT2,
        syp: syp / SQRT2,
        szq: SQRT2 * delta.re,
        szp: SQRT2 * delta.im,
        q: 0.0,
        p: 0.0,
        q2: 0.5 * (th + 4.0 * delta.re * delta.re),
        p2: 0.5 * (th + 4.0 * delta.im * delta.im),
        qp_sym: 4.0 * delta.re * delta.im,
    }
}

/// Bath-induced changes of the witness moments, stripped of zero-point factors.
/// Multiply `dq2`, `dp2`, `dqp` by q_zpf², p_zpf², q_zpf·p_zpf and the spin
/// cross terms by q_zpf, p_zpf (see [`BathDeltas::in_quadrature_units`]).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct BathDeltas {
    /// ΔVar S̃_x
    pub dvar_sx: f64,
    pub dq2: f64,
    pub dp2: f64,
    /// Δ⟨qp + pq⟩
    pub dqp: f64,
    /// Δ⟨S̃_y q + q S̃_y⟩
    pub dsyq: f64,
    /// Δ⟨S̃_y p + p S̃_y⟩
    pub dsyp: f64,
}

impl BathDeltas {
    /// Values for `q = (a+a†)/√2`, `p = i(a†−a)/√2` (q_zpf = p_zpf = 1/√2).
    pub fn in_quadrature_units(&self) -> BathDeltas {
        let z = std::f64::consts::FRAC_1_SQRT_2;
        BathDeltas {
            dvar_sx: self.dvar_sx,
            dq2: 0.5 * self.dq2,
            dp2: 0.5 * self.dp2,
            dqp: 0.5 * self.dqp,
            dsyq: z * self.dsyq,
            dsyp: z * self.dsyp,
        }
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.dvar_sx, self.dq2, self.dp2, self.dqp, self.dsyq, self.dsyp]
    }

    pub const NAMES: [&'static str; 6] = ["dvar_sx", "dq2", "dp2", "dqp_sym", "dsy_q", "dsy_p"];
}

pub fn bath_deltas(lambda: f64, nbar_over_q: f64, omega: f64, t: f64) -> BathDeltas {
    let x = omega * t;
    let r = nbar_over_q;
    BathDeltas {
        dvar_sx: 0.5 * lambda * lambda * r * (6.0 * x - 8.0 * x.sin() + (2.0 * x).sin()),
        dq2: 2.0 * r * (2.0 * x - (2.0 * x).sin()),
        dp2: 2.0 * r * (2.0 * x + (2.0 * x).sin()),
        dqp: 8.0 * r * x.sin().powi(2),
        dsyq: 16.0 * lambda * r * (0.5 * x).sin().powi(4),
        dsyp: -8.0 * lambda * r * (0.5 * x - x.sin() + 0.25 * (2.0 * x).sin()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initial {
    Ground,
    Thermal,
}

/// Witness with a continuous thermal bath. The noiseless optimal coefficients
/// (for a ground or thermal start) are kept fixed and the bath deltas added.
pub fn bath_witness(
    lambda: f64,
    nbar: f64,
    nbar_over_q: f64,
    omega: f64,
    omega_l: f64,
    t: f64,
    initial: Initial,
) -> Result<WitnessResult> {
    if nbar < 0.0 || nbar_over_q < 0.0 {
        return Err(Error::Domain("n̄ and n̄/Q must be ≥ 0".into()));
    }
    let n0 = match initial {
        Initial::Ground => 0.0,
        Initial::Thermal => nbar,
    };
    let m = thermal_moments(lambda, n0, omega, omega_l, t);
    let c = optimize_coefficients(&m)?;
    let d = bath_deltas(lambda, nbar_over_q, omega, t).in_quadrature_units();
    let extra = d.dvar_sx
        + c.a_y * c.a_y * d.dq2 + c.b_y * c.b_y * d.dp2 + c.a_y * c.b_y * d.dqp
        + c.a_z * c.a_z * d.dq2 + c.b_z * c.b_z * d.dp2 + c.a_z * c.b_z * d.dqp
        + c.a_y * d.dsyq + c.b_y * d.dsyp;
    Ok(WitnessResult::new(separable_bound(&c), witness_value(&m, &c) + extra))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessMode {
    Pulseless,
    Pulsed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// time t (pulseless) or total sequence time τ (pulsed)
    T,
    Nbar,
}

/// Violation scan definition. `coupling` is λ in pulseless mode and g/ω in
/// pulsed mode (where λ_eff = (g/ω)(ωτ)²/4 enters the half-period formulas;
/// the bath term is not applied there).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub mode: WitnessMode,
    pub sweep: SweepVariable,
    pub grid: Vec<f64>,
    pub coupling: f64,
    pub omega: f64,
    #[serde(default)]
    pub omega_l: f64,
    /// fixed time when sweeping n̄
    #[serde(default)]
    pub t: f64,
    /// fixed n̄ when sweeping time
    #[serde(default)]
    pub nbar: f64,
    #[serde(default)]
    pub nbar_over_q: f64,
    #[serde(default = "default_initial")]
    pub initial: Initial,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_initial() -> Initial {
    Initial::Thermal
}

fn default_threshold() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub sweep_value: f64,
    pub w_b: f64,
    pub w_en: f64,
    pub w_ratio: f64,
    /// NaN when there is no violation
    pub log10_w_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Landmarks {
    pub tau_asymp: Option<f64>,
    pub tau_star: Option<f64>,
    pub max_nbar: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub rows: Vec<ScanRow>,
    pub landmarks: Landmarks,
}

/// Witness at a single (time, n̄) point of a scan.
pub fn scan_point(cfg: &ScanConfig, t: f64, nbar: f64) -> Result<WitnessResult> {
    match cfg.mode {
        WitnessMode::Pulseless => {
            bath_witness(cfg.coupling, nbar, cfg.nbar_over_q, cfg.omega, cfg.omega_l, t, cfg.initial)
        }
        WitnessMode::Pulsed => {
            let l = pulsed_effective_lambda(cfg.coupling * cfg.omega, cfg.omega, t);
            let n = if cfg.initial == Initial::Ground { 0.0 } else { nbar };
            Ok(WitnessResult::new(halfperiod_wb(l, n), halfperiod_wen(l, n)))
        }
    }
}

pub fn violation_scan(cfg: &ScanConfig) -> Result<ScanResult> {
    if cfg.grid.is_empty() {
        return Err(Error::Domain("scan grid is empty".into()));
    }
    if cfg.grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("scan grid must be strictly increasing".into()));
    }
    let rows = cfg
        .grid
        .par_iter()
        .map(|&x| {
            let (t, n) = match cfg.sweep {
                SweepVariable::T => (x, cfg.nbar),
                SweepVariable::Nbar => (cfg.t, x),
            };
            let r = scan_point(cfg, t, n)?;
            let log = if r.w_ratio > 0.0 { r.w_ratio.log10() } else { f64::NAN };
            Ok(ScanRow { sweep_value: x, w_b: r.w_b, w_en: r.w_en, w_ratio: r.w_ratio, log10_w_ratio: log })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut landmarks = Landmarks::default();
    if cfg.sweep == SweepVariable::T {
        landmarks.tau_asymp = first_nonpositive(&rows);
        landmarks.tau_star = first_upward_crossing(&rows, cfg.threshold);
        if cfg.mode == WitnessMode::Pulsed && cfg.initial == Initial::Thermal {
            landmarks.max_nbar = max_nbar_at_threshold(cfg, cfg.threshold)?;
        }
    } else {
        landmarks.max_nbar = first_nonpositive(&rows);
    }
    Ok(ScanResult { rows, landmarks })
}

/// First grid point after a violating stretch where W_ratio ≤ 0.
fn first_nonpositive(rows: &[ScanRow]) -> Option<f64> {
    let start = rows.iter().position(|r| r.w_ratio > 0.0)?;
    rows[start..].iter().find(|r| r.w_ratio <= 0.0).map(|r| r.sweep_value)
}

/// First upward crossing of `level`, linearly interpolated.
fn first_upward_crossing(rows: &[ScanRow], level: f64) -> Option<f64> {
    rows.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        (a.w_ratio < level && b.w_ratio >= level).then(|| {
            a.sweep_value
                + (level - a.w_ratio) * (b.sweep_value - a.sweep_value) / (b.w_ratio - a.w_ratio)
        })
    })
}

/// Largest n̄ for which the best W_ratio over the scan's τ grid still reaches
/// `threshold`, by bisection. `None` if even n̄ = 0 falls short.
pub fn max_nbar_at_threshold(cfg: &ScanConfig, threshold: f64) -> Result<Option<f64>> {
    let best = |n: f64| -> Result<f64> {
        let mut m = f64::NEG_INFINITY;
        for &t in &cfg.grid {
            m = m.max(scan_point(cfg, t, n)?.w_ratio);
        }
        Ok(m)
    };
    if best(0.0)? < threshold {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while best(hi)? >= threshold {
        lo = hi;
        hi *= 2.0;
        if hi > 1e9 {
            return Ok(Some(f64::INFINITY));
        }
    }
    while hi - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        if best(mid)? >= threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// n̄ at which the pulsed violation at fixed τ vanishes.
pub fn pulsed_violation_cutoff(g_over_omega: f64, omega: f64, tau: f64) -> Option<f64> {
    let l = pulsed_effective_lambda(g_over_omega * omega, omega, tau);
    let ratio = |n: f64| {
        let wb = halfperiod_wb(l, n);
        (wb - halfperiod_wen(l, n)) / wb
    };
    if ratio(0.0) <= 0.0 {
        return None;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while ratio(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return None;
        }
    }
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if ratio(mid) > 0.0 { lo = mid } else { hi = mid }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::magnus_dynamics::pulseless_state;
    use std::f64::consts::PI;

    #[test]
    fn separable_bound_examples() {
        assert_eq!(separable_bound(&WitnessCoefficients::default()), 0.5);
        let c = WitnessCoefficients { a_z: 1.0, b_y: 1.0, ..Default::default() };
        assert_eq!(separable_bound(&c), 1.5);
    }

    #[test]
    fn halfperiod_bound_identity() {
        for i in 0..=20 {
            for j in 0..=10 {
                let (l, n) = (0.1 * i as f64, j as f64);
                let a = separable_bound(&halfperiod_coefficients(l, n));
                assert!((a - thermal_wb(l, n, 1.0, 0.0, PI)).abs() < 1e-12);
                assert!((a - halfperiod_wb(l, n)).abs() < 1e-12);
                assert!((thermal_wen(l, n, 1.0, PI) - halfperiod_wen(l, n)).abs() < 1e-12);
            }
        }
        assert_eq!(thermal_wb(0.0, 3.0, 1.0, 0.2, 1.0), 0.5);
        assert_eq!(thermal_wen(0.0, 3.0, 1.0, 1.0), 0.5);
    }

    #[test]
    fn optimizer_recovers_halfperiod_coefficients() {
        for &(l, n) in &[(0.3, 0.0), (1.0, 0.0), (0.5, 2.0), (1.7, 0.4)] {
            let c = optimize_coefficients(&thermal_moments(l, n, 1.0, 0.0, PI)).unwrap();
            let h = halfperiod_coefficients(l, n);
            for (x, y) in [(c.a_y, h.a_y), (c.b_y, h.b_y), (c.a_z, h.a_z), (c.b_z, h.b_z)] {
                assert!((x - y).abs() < 1e-10, "{c:?} vs {h:?}");
            }
        }
    }

    #[test]
    fn analytic_moments_reproduce_closed_forms() {
        for &(l, n, wt, wl) in &[(0.1, 0.0, PI / 2.0, 0.0), (0.5, 1.0, 1.3, 0.0), (1.2, 0.3, 4.0, 0.0), (0.7, 2.0, 2.2, 0.9), (0.7, 2.0, 2.2, 0.3)] {
            let m = thermal_moments(l, n, 1.0, wl, wt);
            let (_, r) = witness_from_moments(&m).unwrap();
            // the closed form keeps the sign of cos(ω_L t); the bound is ½ + |…|
            let wb = thermal_wb(l, n, 1.0, wl, wt);
            assert!((r.w_b - 0.5 - (wb - 0.5).abs()).abs() < 1e-12, "W_b at {l} {n} {wt} {wl}");
            if wl == 0.0 {
                assert!((r.w_en - thermal_wen(l, n, 1.0, wt)).abs() < 1e-12, "W_en at {l} {n} {wt}");
            }
        }
    }

    #[test]
    fn pure_state_moments_match_thermal_moments_at_zero_occupation() {
        let (l, wt) = (0.8, 1.9);
        let s = pulseless_state(C64::new(0.0, 0.0), 0.5 * l, 1.0, wt).unwrap();
        let a = Moments::from_state(&s);
        let b = thermal_moments(l, 0.0, 1.0, 0.0, wt);
        for (x, y) in [(a.sx, b.sx), (a.sy, b.sy), (a.syq, b.syq), (a.syp, b.syp), (a.szq, b.szq), (a.szp, b.szp), (a.q2, b.q2), (a.p2, b.p2), (a.qp_sym, b.qp_sym)] {
            assert!((x - y).abs() < 1e-12, "{a:?}\n{b:?}");
        }
    }

    #[test]
    fn product_state_has_zero_coefficients() {
        let s = pulseless_state(C64::new(0.4, 0.1), 0.0, 1.0, 2.0).unwrap();
        let (c, r) = witness_from_moments(&Moments::from_state(&s)).unwrap();
        assert!(c.a_y.abs() + c.b_y.abs() + c.a_z.abs() + c.b_z.abs() < 1e-14);
        assert!((r.w_en - 0.5).abs() < 1e-14 && (r.w_b - 0.5).abs() < 1e-14);
    }

    #[test]
    fn optimizer_beats_grid_search() {
        let m = thermal_moments(0.3, 0.2, 1.0, 0.4, 1.1);
        let c = optimize_coefficients(&m).unwrap();
        let best = witness_value(&m, &c);
        let grid: Vec<f64> = (0..=400).map(|i| -2.0 + 0.01 * i as f64).collect();
        let mut gmin = f64::INFINITY;
        // W separates into independent (a_y, b_y) and (a_z, b_z) blocks
        let mut my = f64::INFINITY;
        let mut mz = f64::INFINITY;
        for &a in &grid {
            for &b in &grid {
                let y = WitnessCoefficients { a_y: a, b_y: b, a_z: c.a_z, b_z: c.b_z };
                let z = WitnessCoefficients { a_y: c.a_y, b_y: c.b_y, a_z: a, b_z: b };
                my = my.min(witness_value(&m, &y));
                mz = mz.min(witness_value(&m, &z));
            }
        }
        gmin = gmin.min(my).min(mz);
        assert!(best <= gmin + 1e-15);
        assert!(gmin - best < 1e-4);
    }

    #[test]
    fn singular_covariance_names_null_direction() {
        let m = Moments { q2: 1.0, p2: 0.0, ..Default::default() };
        match optimize_coefficients(&m) {
            Err(Error::Degenerate { null_direction }) => {
                assert!(null_direction[0].abs() < 1e-12 && (null_direction[1].abs() - 1.0).abs() < 1e-12)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn violation_positive_for_ground_state() {
        for i in 1..=10 {
            let l = 0.1 * i as f64;
            assert!(halfperiod_wb(l, 0.0) > halfperiod_wen(l, 0.0));
        }
    }

    #[test]
    fn violation_ratio_nonincreasing_in_occupation() {
        for &l in &[0.2, 0.5, 1.0] {
            let mut prev = f64::INFINITY;
            for j in 0..200 {
                let n = 0.05 * j as f64;
                let r = WitnessResult::new(halfperiod_wb(l, n), halfperiod_wen(l, n)).w_ratio;
                assert!(r <= prev + 1e-15);
                prev = r;
            }
        }
    }

    #[test]
    fn bath_deltas_examples() {
        assert_eq!(bath_deltas(0.5, 0.0, 1.0, 2.0).as_array(), [0.0; 6]);
        let d = bath_deltas(0.5, 0.3, 1.0, 2.0 * PI);
        assert!((d.dq2 - 2.0 * 0.3 * 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn bath_witness_reduces_to_noiseless_value() {
        let r = bath_witness(0.5, 0.0, 0.0, 1.0, 0.0, 0.3, Initial::Ground).unwrap();
        assert!((r.w_en - thermal_wen(0.5, 0.0, 1.0, 0.3)).abs() < 1e-12);
        assert!((r.w_b - thermal_wb(0.5, 0.0, 1.0, 0.0, 0.3)).abs() < 1e-12);
    }

    #[test]
    fn bath_truncates_violation() {
        let early = bath_witness(0.5, 0.0, 1e-3, 1.0, 0.0, PI / 4.0, Initial::Ground).unwrap();
        assert!(early.violated());
        let late = bath_witness(0.5, 0.0, 1e-3, 1.0, 0.0, 2.0 * PI, Initial::Ground).unwrap();
        assert!(!late.violated());
        let n = early.n_meas.unwrap();
        assert_eq!(n, (1.0 / early.w_ratio.powi(2)).ceil() as u64);
    }

    #[test]
    fn zero_coupling_scan_has_no_landmarks() {
        let cfg = ScanConfig {
            mode: WitnessMode::Pulsed,
            sweep: SweepVariable::T,
            grid: crate::numerics::logspace(1e-3 * PI, PI, 100),
            coupling: 0.0,
            omega: 1.0,
            omega_l: 0.0,
            t: 0.0,
            nbar: 0.0,
            nbar_over_q: 0.0,
            initial: Initial::Thermal,
            threshold: 1e-3,
        };
        let r = violation_scan(&cfg).unwrap();
        assert!(r.rows.iter().all(|x| x.w_ratio == 0.0));
        assert_eq!(r.landmarks, Landmarks::default());
    }

    #[test]
    fn max_nbar_independent_of_coupling() {
        let mut out = vec![];
        for &go in &[0.5, 1.0, 2.0] {
            let cfg = ScanConfig {
                mode: WitnessMode::Pulsed,
                sweep: SweepVariable::T,
                grid: crate::numerics::logspace(1e-3 * PI, PI, 1201),
                coupling: go,
                omega: 1.0,
                omega_l: 0.0,
                t: 0.0,
                nbar: 0.0,
                nbar_over_q: 0.0,
                initial: Initial::Thermal,
                threshold: 1e-3,
            };
            out.push(max_nbar_at_threshold(&cfg, 1e-3).unwrap().unwrap());
        }
        assert!((out[0] - out[2]).abs() / out[1] < 0.05, "{out:?}");
    }
}
