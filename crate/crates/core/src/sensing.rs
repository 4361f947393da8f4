//! Force-sensing noise budget: projection noise, backaction from residual
//! phonons, bath dephasing, the resulting SQL and optimal coupling, and
//! squeezing-enhanced readout.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::core_model::{to_natural, PhysicalParams, HBAR, K_B};
use crate::pulse_kernel::{
    delta_n_closed_form, leading_order_row, phase_kernel, residual_displacement, PulseSequence,
    SequenceKind,
};
use crate::{Error, Result};

/// ξ = e^{−γ_c t_c}/(1 − e^{−γ_c t_c}), the steady-state backaction
/// enhancement from repeated cooling.
pub fn cooling_factor(gamma_c: f64, t_c: f64) -> Result<f64> {
    let x = gamma_c * t_c;
    if x == 0.0 {
        return Err(Error::Divergence("γ_c·t_c = 0: no cooling, ξ diverges".into()));
    }
    if !(x > 0.0 && x.is_finite() || x == f64::INFINITY) {
        return Err(Error::Domain(format!("γ_c·t_c must be > 0, got {x}")));
    }
    Ok(1.0 / x.exp_m1())
}

/// n* = ξ Δn.
pub fn backaction_occupation(delta_n: f64, xi: f64) -> f64 {
    xi * delta_n
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseBudget {
    /// 1/(4N)
    pub projection_var: f64,
    /// N Δn² ξ
    pub backaction_var: f64,
    pub thermal_var: f64,
    /// |∂φ/∂F|, rad/N
    pub signal_phase_per_force: f64,
}

impl NoiseBudget {
    pub fn total_var(&self) -> f64 {
        self.projection_var + self.backaction_var + self.thermal_var
    }
}

/// (1/(4N) + N Δn² ξ + thermal_var)/φ² for phase response φ per unit force.
pub fn noise_to_signal(phi_per_f: f64, delta_n: f64, xi: f64, n_spins: u64, thermal_var: f64) -> Result<f64> {
    if phi_per_f == 0.0 {
        return Err(Error::Divergence("zero phase response: NSR is infinite".into()));
    }
    let n = n_spins as f64;
    Ok((0.25 / n + n * delta_n * delta_n * xi + thermal_var) / (phi_per_f * phi_per_f))
}

/// Bath dephasing per shot, ½λ²(n̄/Q)[6ωτ − 8 sin ωτ + sin 2ωτ].
pub fn thermal_dephasing(lambda: f64, nbar_over_q: f64, omega: f64, tau: f64) -> f64 {
    let x = omega * tau;
    0.5 * lambda * lambda * nbar_over_q * (6.0 * x - 8.0 * x.sin() + (2.0 * x).sin())
}

/// ξ^{1/4} √(Δn/g²) / |φ/(g f)| evaluated at coupling `g`; g cancels.
pub fn force_sql_with_coupling(seq: &PulseSequence, g: f64, omega: f64, xi: f64) -> f64 {
    let dn = residual_displacement(seq, g, omega).delta_n / (g * g);
    let k = phase_kernel(seq, g, omega, 0.0).norm() / g;
    xi.powf(0.25) * dn.sqrt() / k
}

/// Force SQL in natural units (per √shot), independent of g.
pub fn force_sql(kind: SequenceKind, omega: f64, tau: f64, xi: f64) -> Result<f64> {
    Ok(force_sql_with_coupling(&PulseSequence::named(kind, tau)?, 1.0, omega, xi))
}

/// g* at which projection and backaction noise balance:
/// g*√N = 1/√(2 (Δn/g²) √ξ).
pub fn optimal_coupling(kind: SequenceKind, omega: f64, tau: f64, xi: f64, n_spins: u64) -> Result<f64> {
    let d = delta_n_closed_form(kind, omega, tau)?;
    let scale = leading_order_row(kind, 1.0, omega, tau)?.delta_n_per_g2;
    if !(d > 1e-20 * scale) {
        return Err(Error::Divergence(format!(
            "residual displacement vanishes for {} at ωτ = {}: coupling unbounded",
            kind.name(),
            omega * tau
        )));
    }
    if xi <= 0.0 {
        return Err(Error::Divergence("ξ = 0: no backaction, coupling unbounded".into()));
    }
    Ok(1.0 / (2.0 * d * xi.sqrt()).sqrt() / (n_spins as f64).sqrt())
}

/// Shot-noise-limited sensitivity 2mω²/(γ_e ∂B √T₂*)/√N, N/√Hz.
pub fn projection_limit_eta(mass: f64, omega: f64, gradient: f64, t2_star: f64, gamma_e: f64, n_spins: u64) -> f64 {
    2.0 * mass * omega * omega / (gamma_e * gradient * t2_star.sqrt()) / (n_spins as f64).sqrt()
}

/// Thermal force noise √(4 m (ω/Q) k_B T), N/√Hz.
pub fn thermal_limit_eta(mass: f64, omega: f64, q_factor: f64, temperature: f64) -> f64 {
    (4.0 * mass * omega / q_factor * K_B * temperature).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SqlGradient {
    /// √(ħt/m), m
    pub delta_x_sql: f64,
    /// 1/(γ_e τ √N Δx_SQL), T/m
    pub gradient: f64,
}

pub fn sql_gradient(mass: f64, t_between: f64, tau_precess: f64, n_spins: u64, gamma_e: f64) -> SqlGradient {
    let dx = (HBAR * t_between / mass).sqrt();
    SqlGradient { delta_x_sql: dx, gradient: 1.0 / (gamma_e * tau_precess * (n_spins as f64).sqrt() * dx) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensitivityPoint {
    pub sweep_value: f64,
    /// N/√Hz
    pub eta: f64,
    pub budget: NoiseBudget,
}

/// η(ν) = √(NSR(ν)·(τ + t_c)) · ħ/x0 for a force tone at angular frequency ν.
pub fn force_sensitivity(params: &PhysicalParams, seq: &PulseSequence, nu: f64) -> Result<SensitivityPoint> {
    let nat = to_natural(params)?;
    let xi = cooling_factor(params.cooling_rate, params.cooling_time)?;
    let tau = seq.total_time;
    let dn = residual_displacement(seq, nat.g, nat.omega).delta_n;
    let k = phase_kernel(seq, nat.g, nat.omega, nu).norm();
    let thermal = thermal_dephasing(nat.lambda, nat.nbar_over_q(), nat.omega, tau);
    let n = params.n_spins as f64;
    let budget = NoiseBudget {
        projection_var: 0.25 / n,
        backaction_var: n * dn * dn * xi,
        thermal_var: thermal,
        signal_phase_per_force: k * nat.x0 / HBAR,
    };
    if k == 0.0 {
        return Err(Error::Divergence(format!("zero response at ν = {nu}: η is infinite")));
    }
    let nsr = noise_to_signal(k, dn, xi, params.n_spins, thermal)?;
    Ok(SensitivityPoint {
        sweep_value: nu,
        eta: (nsr * (tau + params.cooling_time)).sqrt() * HBAR / nat.x0,
        budget,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensitivitySweep {
    /// coupling g in rad/s
    G,
    /// sequence length in s
    Tau,
    /// force frequency in rad/s
    Nu,
}

/// η over a grid. Values not swept take `tau`, `nu` and the params' gradient.
pub fn sensitivity_sweep(
    params: &PhysicalParams,
    kind: SequenceKind,
    tau: f64,
    nu: f64,
    sweep: SensitivitySweep,
    grid: &[f64],
) -> Result<Vec<Result<SensitivityPoint>>> {
    params.validate()?;
    PulseSequence::named(kind, tau)?;
    Ok(grid
        .par_iter()
        .map(|&x| {
            let (p, t, v) = match sweep {
                SensitivitySweep::G => (params.with_coupling(x), tau, nu),
                SensitivitySweep::Tau => (*params, x, nu),
                SensitivitySweep::Nu => (*params, tau, x),
            };
            let seq = PulseSequence::named(kind, t)?;
            let mut pt = force_sensitivity(&p, &seq, v)?;
            pt.sweep_value = x;
            Ok(pt)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SqueezedReadout {
    pub theta: f64,
    pub shot_noise_factor: f64,
    /// false when Nζ ≥ √N, outside the small-twist regime
    pub within_validity: bool,
}

/// θ = −atan(4/(Nζ) + Nζ/2) and factor 1/√(1 + (Nζ/4)²).
pub fn squeezed_rotation(n_spins: u64, zeta: f64) -> SqueezedReadout {
    let n = n_spins as f64;
    let x = n * zeta;
    let theta = if x == 0.0 { -std::f64::consts::FRAC_PI_2 } else { -(4.0 / x + 0.5 * x).atan() };
    SqueezedReadout {
        theta,
        shot_noise_factor: 1.0 / (1.0 + (0.25 * x).powi(2)).sqrt(),
        within_validity: x.abs() < n.sqrt(),
    }
}

/// Gaussian reference for one-axis twisting `exp(−iζJ_z²)` of N spins
/// polarized along x: propagates the (J_y, J_z) covariance through the
/// linearized shear and returns the ratio of optimal-readout to naive-J_y
/// phase uncertainty.
pub fn gaussian_twist_factor(n_spins: u64, zeta: f64) -> f64 {
    let n = n_spins as f64;
    let kappa = n * zeta;
    let s = [[1.0, kappa], [0.0, 1.0]];
    let c0 = 0.25 * n;
    // C = S C0 Sᵀ
    let c = [
        [c0 * (s[0][0] * s[0][0] + s[0][1] * s[0][1]), c0 * (s[0][0] * s[1][0] + s[0][1] * s[1][1])],
        [c0 * (s[1][0] * s[0][0] + s[1][1] * s[0][1]), c0 * (s[1][0] * s[1][0] + s[1][1] * s[1][1])],
    ];
    // phase φ shifts J_y by φN/2 before the twist
    let sig = [s[0][0] * 0.5 * n, s[1][0] * 0.5 * n];
    let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
    let fisher = (c[1][1] * sig[0] * sig[0] - 2.0 * c[0][1] * sig[0] * sig[1] + c[0][0] * sig[1] * sig[1]) / det;
    let optimal = 1.0 / fisher;
    let naive = c[0][0] / (sig[0] * sig[0]);
    (optimal / naive).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn cooling_factor_examples() {
        assert!((cooling_factor(2f64.ln(), 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!(cooling_factor(1e3, 1.0).unwrap() < 1e-300);
        let xi = cooling_factor(1e3, 1e-4).unwrap();
        assert!((xi - (-0.1f64).exp() / (1.0 - (-0.1f64).exp())).abs() < 1e-12);
        assert!((xi - 9.508).abs() < 1e-3);
        assert!(matches!(cooling_factor(0.0, 1.0), Err(Error::Divergence(_))));
        assert!(cooling_factor(2.0, 1.0).unwrap() < cooling_factor(1.0, 1.0).unwrap());
    }

    #[test]
    fn noise_to_signal_examples() {
        assert!((noise_to_signal(2.0, 0.0, 1.0, 3, 0.0).unwrap() - 1.0 / 48.0).abs() < 1e-15);
        assert!((noise_to_signal(1.0, 0.5, 2.0, 1, 0.0).unwrap() - (0.25 + 0.5)).abs() < 1e-15);
        assert!(noise_to_signal(0.0, 1.0, 1.0, 1, 0.0).is_err());
    }

    #[test]
    fn thermal_dephasing_examples() {
        assert_eq!(thermal_dephasing(0.3, 0.0, 1.0, 2.0), 0.0);
        let v = thermal_dephasing(0.3, 1.0, 1.0, 2.0 * PI);
        assert!((v - 0.5 * 0.09 * 12.0 * PI).abs() < 1e-12);
        let a = thermal_dephasing(0.3, 1e4, 1.0, 0.7);
        let b = thermal_dephasing(0.3, 1.0, 1.0, 0.7);
        assert!((a / b - 1e4).abs() < 1e-9);
    }

    #[test]
    fn sql_matches_tabulated_leading_order() {
        let (w, tau) = (1.0, 1e-3);
        for kind in SequenceKind::NAMED {
            let row = leading_order_row(kind, 1.0, w, tau).unwrap();
            let s = force_sql(kind, w, tau, 1.0).unwrap();
            assert!((s / row.force_sql_scale - 1.0).abs() < 1e-5, "{kind:?}");
        }
        assert!(force_sql(SequenceKind::Ramsey, 1.0, 0.1, 1.0).unwrap() > force_sql(SequenceKind::CarrPurcell2, 1.0, 0.1, 1.0).unwrap());
        assert_eq!(force_sql(SequenceKind::HahnEcho, 1.0, 0.1, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn sql_is_coupling_independent() {
        let seq = PulseSequence::carr_purcell2(0.3).unwrap();
        let base = force_sql_with_coupling(&seq, 1.0, 1.0, 9.5);
        for k in 0..=20 {
            let g = 10f64.powf(-1.0 + 0.1 * k as f64);
            assert!((force_sql_with_coupling(&seq, g, 1.0, 9.5) / base - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn optimal_coupling_balances_noise() {
        for kind in SequenceKind::NAMED {
            let (w, tau, xi, n) = (2.0 * PI * 100.0, 1e-4, 9.5, 7);
            let g = optimal_coupling(kind, w, tau, xi, n).unwrap();
            let dn = residual_displacement(&PulseSequence::named(kind, tau).unwrap(), g, w).delta_n;
            let proj = 0.25 / n as f64;
            let back = n as f64 * dn * dn * xi;
            assert!((proj / back - 1.0).abs() < 1e-9, "{kind:?}");
        }
        let a = optimal_coupling(SequenceKind::HahnEcho, 1.0, 0.2, 1.0, 1).unwrap();
        let b = optimal_coupling(SequenceKind::HahnEcho, 1.0, 0.2, 1.0, 2).unwrap();
        assert!((a / b - 2f64.sqrt()).abs() < 1e-12);
        assert!(optimal_coupling(SequenceKind::Ramsey, 1.0, 2.0 * PI, 1.0, 1).is_err());
        let x = 1e-3;
        let g = optimal_coupling(SequenceKind::Ramsey, 1.0, x, 0.25, 1).unwrap();
        assert!((g * x - 1.0).abs() < 1e-6);
    }

    #[test]
    fn projection_limit_scalings() {
        let a = projection_limit_eta(1e-12, 2.0 * PI * 1e6, 1e4, 1e-6, crate::core_model::GAMMA_E_DEFAULT, 1);
        let b = projection_limit_eta(1e-12, 2.0 * PI * 1e6, 2e4, 1e-6, crate::core_model::GAMMA_E_DEFAULT, 1);
        let c = projection_limit_eta(1e-12, 2.0 * PI * 1e6, 1e4, 1e-6, crate::core_model::GAMMA_E_DEFAULT, 100);
        assert!((a / b - 2.0).abs() < 1e-12 && (a / c - 10.0).abs() < 1e-12);
        assert_eq!(thermal_limit_eta(1e-14, 600.0, 1e6, 0.0), 0.0);
        let r = thermal_limit_eta(1e-14, 600.0, 1e6, 300.0) / thermal_limit_eta(1e-14, 600.0, 4e6, 300.0);
        assert!((r - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sql_gradient_scalings() {
        let g = crate::core_model::GAMMA_E_DEFAULT;
        let a = sql_gradient(1.8e-15, 3e-4, 3e-4, 1, g);
        let b = sql_gradient(1.8e-15, 1.2e-3, 3e-4, 1, g);
        assert!((b.delta_x_sql / a.delta_x_sql - 2.0).abs() < 1e-12);
        let c = sql_gradient(1.8e-15, 3e-4, 3e-4, 100, g);
        assert!((a.gradient / c.gradient - 10.0).abs() < 1e-12);
    }

    #[test]
    fn sensitivity_is_even_in_frequency_and_grows_with_bath() {
        let mut p = PhysicalParams::default();
        let seq = PulseSequence::carr_purcell2(1e-4).unwrap();
        let a = force_sensitivity(&p, &seq, 2e4).unwrap();
        let b = force_sensitivity(&p, &seq, -2e4).unwrap();
        assert!((a.eta / b.eta - 1.0).abs() < 1e-12);
        p.thermal = crate::core_model::Thermal::Nbar(1e6);
        let c = force_sensitivity(&p, &seq, 2e4).unwrap();
        assert!(c.eta > a.eta && c.budget.thermal_var > 0.0);
    }

    #[test]
    fn squeezed_rotation_examples() {
        let r = squeezed_rotation(100, 0.0);
        assert_eq!(r.shot_noise_factor, 1.0);
        assert_eq!(r.theta, -PI / 2.0);
        let r = squeezed_rotation(100, 0.04);
        assert!((r.shot_noise_factor - 0.5f64.sqrt()).abs() < 1e-15);
        for k in 1..100 {
            assert!(squeezed_rotation(1000, 1e-4 * k as f64).shot_noise_factor < 1.0);
        }
        assert!(!squeezed_rotation(100, 1.0).within_validity);
    }

    #[test]
    fn gaussian_twist_reference() {
        assert!((gaussian_twist_factor(100, 0.0) - 1.0).abs() < 1e-15);
        let k: f64 = 2.0;
        assert!((gaussian_twist_factor(100, k / 100.0) - 1.0 / (1.0 + k * k).sqrt()).abs() < 1e-12);
    }
}
