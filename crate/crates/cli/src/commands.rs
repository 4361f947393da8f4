use std::f64::consts::PI;

use anyhow::Result;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use spinlev::acceptance::{run_all, AcceptanceConfig};
use spinlev::core_model::{to_natural, Thermal};
use spinlev::magnus_dynamics::trajectory;
use spinlev::pulse_kernel::{
    dc_response, leading_order_row, residual_displacement, squeezing_parameter, PulseSequence, SequenceKind,
};
use spinlev::sensing::{cooling_factor, force_sensitivity, force_sql_with_coupling, optimal_coupling};
use spinlev::witness::{violation_scan, ScanConfig, SweepVariable};

use crate::config::{default_pulsed_time, Format, RunConfig, Scale, SweepSpec};
use crate::output::{json_bytes, Cell, Table};
use crate::UsageError;

/// Primary output, optional side files keyed by suffix, and the exit code.
pub struct Outcome {
    pub primary: Vec<u8>,
    pub side: Vec<(&'static str, Vec<u8>)>,
    pub exit: u8,
}

impl Outcome {
    fn table(t: &Table, format: Format) -> Result<Self> {
        let primary = match format {
            Format::Csv => t.to_csv()?,
            Format::Json => json_bytes(&t.to_json_value())?,
        };
        Ok(Self { primary, side: vec![], exit: 0 })
    }
}

fn usage<E: std::fmt::Display>(e: E) -> UsageError {
    UsageError(e.to_string())
}

pub fn sensitivity(cfg: &RunConfig, format: Format) -> Result<Outcome> {
    let params = cfg.physical()?;
    let kinds = cfg.sequences()?;
    let nat = to_natural(&params).map_err(usage)?;
    let xi = cooling_factor(params.cooling_rate, params.cooling_time).map_err(usage)?;
    let tau = RunConfig::positive("tau_s", cfg.tau_s.unwrap_or(1e-4))?;
    let nu_hz = cfg.nu_hz.unwrap_or(0.0);
    if !(nu_hz >= 0.0 && nu_hz.is_finite()) {
        return Err(UsageError(format!("nu_hz must be finite and >= 0, got {nu_hz}")).into());
    }
    let sweep = cfg.sweep.clone().unwrap_or_else(|| SweepSpec::new("nu", 10.0, 1e5, 200, Scale::Log));
    if !matches!(sweep.variable.as_str(), "g" | "tau" | "nu") {
        return Err(UsageError(format!("sensitivity sweep variable must be g, tau or nu, got '{}'", sweep.variable)).into());
    }
    let grid = sweep.grid()?;
    let ratios = match &cfg.nbar_over_q {
        Some(r) if r.is_empty() || r.iter().any(|x| !(*x >= 0.0)) => {
            return Err(UsageError("nbar_over_q must be a non-empty list of values >= 0".into()).into())
        }
        Some(r) => r.clone(),
        None => vec![nat.nbar_over_q()],
    };
    let omega = nat.omega;
    let mut t = Table::new(vec![
        "sweep_name",
        "sweep_value",
        "eta_n_per_sqrt_hz",
        "projection_var",
        "backaction_var",
        "thermal_var",
        "sequence",
        "nbar_over_q",
    ]);
    for &kind in &kinds {
        for &r in &ratios {
            let p = spinlev::core_model::PhysicalParams { thermal: Thermal::Nbar(r * params.quality_factor), ..params };
            let rows: Vec<[f64; 4]> = grid
                .par_iter()
                .map(|&x| {
                    let (tau_i, nu_i) = match sweep.variable.as_str() {
                        "tau" => (x, nu_hz),
                        "nu" => (tau, x),
                        _ => (tau, nu_hz),
                    };
                    let point = || -> spinlev::Result<[f64; 4]> {
                        let g = match (sweep.variable.as_str(), cfg.g_over_omega) {
                            ("g", _) => x * omega,
                            (_, Some(k)) => k * omega,
                            _ => optimal_coupling(kind, omega, tau_i, xi, p.n_spins)?,
                        };
                        let seq = PulseSequence::named(kind, tau_i)?;
                        let s = force_sensitivity(&p.with_coupling(g), &seq, 2.0 * PI * nu_i)?;
                        Ok([s.eta, s.budget.projection_var, s.budget.backaction_var, s.budget.thermal_var])
                    };
                    point().unwrap_or([f64::NAN; 4])
                })
                .collect();
            for (&x, v) in grid.iter().zip(rows) {
                t.push(vec![
                    Cell::S(sweep.variable.clone()),
                    Cell::F(x),
                    Cell::F(v[0]),
                    Cell::F(v[1]),
                    Cell::F(v[2]),
                    Cell::F(v[3]),
                    Cell::S(kind.name().into()),
                    Cell::F(r),
                ]);
            }
        }
    }
    Outcome::table(&t, format)
}

pub fn witness(cfg: &RunConfig, format: Format) -> Result<Outcome> {
    let spec = cfg.witness.clone().unwrap_or_default();
    let freq = RunConfig::positive("witness.freq_hz", spec.freq_hz)?;
    let omega = 2.0 * PI * freq;
    if !(spec.coupling >= 0.0 && spec.nbar >= 0.0 && spec.nbar_over_q >= 0.0) {
        return Err(UsageError("witness coupling, nbar and nbar_over_q must be >= 0".into()).into());
    }
    let sweep = cfg.sweep.clone().unwrap_or_else(|| SweepSpec::new("nbar", 0.0, 10.0, 201, Scale::Linear));
    let variable = match sweep.variable.as_str() {
        "t" => SweepVariable::T,
        "nbar" => SweepVariable::Nbar,
        other => return Err(UsageError(format!("witness sweep variable must be t or nbar, got '{other}'")).into()),
    };
    let t = RunConfig::positive("witness.t_s", spec.t_s.unwrap_or_else(|| default_pulsed_time(freq)))?;
    let sc = ScanConfig {
        mode: spec.mode,
        sweep: variable,
        grid: sweep.grid()?,
        coupling: spec.coupling,
        omega,
        omega_l: 2.0 * PI * spec.larmor_hz,
        t,
        nbar: spec.nbar,
        nbar_over_q: spec.nbar_over_q,
        initial: spec.initial,
        threshold: spec.threshold,
    };
    let res = violation_scan(&sc).map_err(usage)?;
    let mut tab = Table::new(vec!["sweep_name", "sweep_value", "w_b", "w_en", "w_ratio", "log10_w_ratio"]);
    for r in &res.rows {
        tab.push(vec![
            Cell::S(sweep.variable.clone()),
            Cell::F(r.sweep_value),
            Cell::F(r.w_b),
            Cell::F(r.w_en),
            Cell::F(r.w_ratio),
            Cell::F(r.log10_w_ratio),
        ]);
    }
    let landmarks = json_bytes(&res.landmarks)?;
    match format {
        Format::Csv => {
            let mut o = Outcome::table(&tab, format)?;
            o.side.push(("landmarks.json", landmarks));
            Ok(o)
        }
        Format::Json => {
            let v = serde_json::json!({ "rows": tab.to_json_value(), "landmarks": res.landmarks });
            Ok(Outcome { primary: json_bytes(&v)?, side: vec![], exit: 0 })
        }
    }
}

pub fn table(cfg: &RunConfig, format: Format) -> Result<Outcome> {
    let params = cfg.physical()?;
    let omega = params.trap_frequency;
    let wt = RunConfig::positive("omega_tau", cfg.omega_tau.unwrap_or(0.1))?;
    let tau = wt / omega;
    let kinds = cfg.sequences()?;
    let mut t = Table::new(vec![
        "sequence",
        "omega_tau",
        "phi_per_gf_leading",
        "phi_per_gf_exact",
        "phi_per_gf_ratio",
        "delta_n_per_g2_leading",
        "delta_n_per_g2_exact",
        "delta_n_per_g2_ratio",
        "force_sql_scale_leading",
        "force_sql_scale_exact",
        "force_sql_scale_ratio",
        "g_star_scale_leading",
        "g_star_scale_exact",
        "g_star_scale_ratio",
        "zeta_per_g2_leading",
        "zeta_per_g2_exact",
        "zeta_per_g2_ratio",
        "out_of_regime",
    ]);
    for kind in kinds {
        let seq = PulseSequence::named(kind, tau).map_err(usage)?;
        let lead = leading_order_row(kind, 1.0, omega, tau).map_err(usage)?;
        let dn = residual_displacement(&seq, 1.0, omega).delta_n;
        let exact = [
            dc_response(&seq, 1.0, omega).abs(),
            dn,
            force_sql_with_coupling(&seq, 1.0, omega, 1.0),
            // ξ = 1/4: g*√N = 1/√(2 (Δn/g²) √ξ) = 1/√(Δn/g²)
            1.0 / dn.sqrt(),
            squeezing_parameter(&seq, 1.0, omega).abs(),
        ];
        let leading = [lead.phi_per_gf, lead.delta_n_per_g2, lead.force_sql_scale, lead.g_star_scale, lead.zeta_per_g2];
        let mut row = vec![Cell::S(kind.name().into()), Cell::F(wt)];
        for (l, e) in leading.iter().zip(exact) {
            row.extend([Cell::F(*l), Cell::F(e), Cell::F(e / l)]);
        }
        row.push(Cell::B(lead.out_of_regime));
        t.push(row);
    }
    Outcome::table(&t, format)
}

pub fn trajectories(cfg: &RunConfig, format: Format) -> Result<Outcome> {
    let kinds = cfg.sequences.clone().unwrap_or_else(|| vec![SequenceKind::Ramsey]);
    let [kind] = kinds[..] else {
        return Err(UsageError("trajectory takes exactly one sequence".into()).into());
    };
    if kind == SequenceKind::Custom {
        return Err(UsageError("trajectory needs a named sequence".into()).into());
    }
    let params = cfg.physical()?;
    let omega = params.trap_frequency;
    let g = match cfg.g_over_omega {
        Some(k) => k * omega,
        None if cfg.params.is_some() => to_natural(&params).map_err(usage)?.g,
        None => omega,
    };
    let wt = RunConfig::positive("omega_tau", cfg.omega_tau.unwrap_or(0.2 * PI))?;
    let seq = PulseSequence::named(kind, wt / omega).map_err(usage)?;
    let [re, im] = cfg.alpha.unwrap_or([0.0, 0.0]);
    let n = cfg.samples.unwrap_or(201);
    let mut t = Table::new(vec!["t_s", "x_ho_units", "p_ho_units", "branch"]);
    for branch in [0u8, 1] {
        for pt in trajectory(&seq, g, omega, C64::new(re, im), branch, n).map_err(usage)? {
            t.push(vec![Cell::F(pt.t), Cell::F(pt.x), Cell::F(pt.p), Cell::U(branch as u64)]);
        }
    }
    Outcome::table(&t, format)
}

pub fn verify(cfg: &RunConfig, format: Format, seed: Option<u64>) -> Result<Outcome> {
    let mut acfg = AcceptanceConfig::default();
    if let Some(s) = seed.or(cfg.seed) {
        acfg.seed = s;
    }
    if let Some(t) = cfg.tolerance_scale {
        acfg.tolerance_scale = t;
    }
    let report = run_all(&acfg).map_err(usage)?;
    for c in report.failures() {
        eprintln!("FAILED {}: expected {}, observed {:e}", c.check_name, c.expected, c.observed);
    }
    let primary = match format {
        Format::Json => json_bytes(&report)?,
        Format::Csv => {
            let mut t = Table::new(vec!["check_name", "expected", "observed", "tolerance", "pass"]);
            for c in &report.checks {
                t.push(vec![
                    Cell::S(c.check_name.clone()),
                    Cell::S(c.expected.clone()),
                    Cell::F(c.observed),
                    Cell::F(c.tolerance),
                    Cell::B(c.pass),
                ]);
            }
            t.to_csv()?
        }
    };
    Ok(Outcome { primary, side: vec![], exit: if report.passed { 0 } else { 1 } })
}
