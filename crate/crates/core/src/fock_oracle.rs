//! Brute-force reference: the spin ⊗ truncated-Fock state evolved under
//! `H = gσ_z(a + a†) + ωa†a − f(t)(a + a†)` with instantaneous σ_x pulses,
//! plus Monte Carlo sampling of thermal initial states and Brownian forces.
//!
//! Each step applies the exact exponential of the truncated (real,
//! tridiagonal) Hamiltonian, so the only approximation is the Fock cutoff.
//! All randomness is keyed by `(seed, index)` through ChaCha streams, and
//! per-sample results are combined in index order, so output does not depend
//! on the thread count.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::core_model::NaturalParams;
use crate::magnus_dynamics::{drive_segments, trajectory, EntangledState, Force};
use crate::numerics::{ramp_exp, seg_exp, KahanSum};
use crate::pulse_kernel::PulseSequence;
use crate::witness::{optimize_coefficients, separable_bound, witness_value, Moments, WitnessResult};
use crate::{Error, Result};

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleConfig {
    pub n_max: usize,
    /// maximum time step
    pub dt: f64,
    pub seed: u64,
    pub n_trajectories: usize,
    /// bound on the population of the top four Fock levels
    pub tail_tolerance: f64,
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_max < 4 {
            return Err(Error::Domain(format!("n_max must be >= 4, got {}", self.n_max)));
        }
        if !(self.tail_tolerance > 0.0 && self.tail_tolerance <= 1e-6) {
            return Err(Error::Domain(format!(
                "tail_tolerance must lie in (0, 1e-6], got {}",
                self.tail_tolerance
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Domain(format!("dt must be > 0, got {}", self.dt)));
        }
        Ok(())
    }

    /// Settings adequate for `seq` at coupling g/ω and initial |α| ≤ `alpha_max`.
    pub fn for_sequence(seq: &PulseSequence, g: f64, omega: f64, alpha_max: f64, seed: u64) -> Self {
        let reach = branch_reach(seq, g, omega, alpha_max);
        let shortest = seq.segments().iter().map(|s| s.len()).fold(f64::INFINITY, f64::min);
        Self {
            n_max: default_n_max(reach),
            dt: (2.0 * PI / omega).min(shortest) / 64.0,
            seed,
            n_trajectories: 10_000,
            tail_tolerance: 1e-6,
        }
    }
}

/// ⌈|α|² + 10√(|α|² + 1) + 20⌉.
pub fn default_n_max(alpha_max: f64) -> usize {
    let a2 = alpha_max * alpha_max;
    (a2 + 10.0 * (a2 + 1.0).sqrt() + 20.0).ceil() as usize
}

/// Largest coherent amplitude either branch reaches during the sequence.
fn branch_reach(seq: &PulseSequence, g: f64, omega: f64, alpha_max: f64) -> f64 {
    let mut m = alpha_max;
    for b in [0u8, 1] {
        // a real start of size alpha_max bounds any start phase via |β_s| + |α|
        if let Ok(tr) = trajectory(seq, g, omega, C64::new(0.0, 0.0), b, 257) {
            for pt in tr {
                m = m.max(alpha_max + (pt.x * pt.x + pt.p * pt.p).sqrt() / SQRT2);
            }
        }
    }
    m
}

/// Spin ⊗ Fock amplitudes, index `spin·(n_max+1) + n`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub n_max: usize,
    pub amps: Vec<C64>,
}

impl JointState {
    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn sector(&self, spin: usize) -> &[C64] {
        let d = self.dim();
        &self.amps[spin * d..(spin + 1) * d]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `(c0|0⟩ + c1|1⟩) ⊗ |α⟩`, truncated.
    pub fn product(n_max: usize, c0: C64, c1: C64, alpha: C64) -> Self {
        let coh = coherent_vector(n_max, alpha);
        let mut amps = Vec::with_capacity(2 * (n_max + 1));
        amps.extend(coh.iter().map(|&x| x * c0));
        amps.extend(coh.iter().map(|&x| x * c1));
        Self { n_max, amps }
    }

    /// Closed-form two-branch state projected onto the truncated space.
    pub fn from_entangled(n_max: usize, s: &EntangledState) -> Self {
        let mut amps: Vec<C64> = coherent_vector(n_max, s.branch0.alpha).iter().map(|&x| x * s.branch0.amplitude).collect();
        amps.extend(coherent_vector(n_max, s.branch1.alpha).iter().map(|&x| x * s.branch1.amplitude));
        Self { n_max, amps }
    }

    /// Population of the four highest Fock levels.
    pub fn tail_population(&self) -> f64 {
        let d = self.dim();
        (0..2)
            .flat_map(|s| (d.saturating_sub(4)..d).map(move |n| s * d + n))
            .map(|i| self.amps[i].norm_sqr())
            .sum()
    }

    fn swap_sectors(&mut self) {
        let d = self.dim();
        let (a, b) = self.amps.split_at_mut(d);
        a.swap_with_slice(b);
    }
}

/// Truncated coherent state `e^{−|α|²/2} αⁿ/√n!`.
pub fn coherent_vector(n_max: usize, alpha: C64) -> Vec<C64> {
    let mut v = Vec::with_capacity(n_max + 1);
    let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    v.push(c);
    for n in 1..=n_max {
        c = c * alpha / (n as f64).sqrt();
        v.push(c);
    }
    v
}

/// `exp(−i(ωN + cX)h)` on the truncated space, X = a + a†.
pub fn propagator(n_max: usize, omega: f64, c: f64, h: f64) -> DMatrix<C64> {
    let d = n_max + 1;
    let mut m = DMatrix::<f64>::zeros(d, d);
    for n in 0..d {
        m[(n, n)] = omega * n as f64;
        if n + 1 < d {
            let e = c * ((n + 1) as f64).sqrt();
            m[(n, n + 1)] = e;
            m[(n + 1, n)] = e;
        }
    }
    let eig = SymmetricEigen::new(m);
    let v = eig.eigenvectors;
    let mut u = DMatrix::<C64>::zeros(d, d);
    for k in 0..d {
        let ph = C64::from_polar(1.0, -eig.eigenvalues[k] * h);
        for i in 0..d {
            let vik = v[(i, k)] * ph;
            for j in 0..d {
                u[(i, j)] += vik * v[(j, k)];
            }
        }
    }
    u
}

fn apply(u: &DMatrix<C64>, x: &[C64]) -> Vec<C64> {
    let d = x.len();
    let mut out = vec![C64::new(0.0, 0.0); d];
    for j in 0..d {
        let xj = x[j];
        if xj == C64::new(0.0, 0.0) {
            continue;
        }
        let col = u.column(j);
        for i in 0..d {
            out[i] += col[i] * xj;
        }
    }
    out
}

#[derive(Default)]
struct PropagatorCache {
    map: HashMap<(u64, u64), DMatrix<C64>>,
}

impl PropagatorCache {
    fn get(&mut self, n_max: usize, omega: f64, c: f64, h: f64) -> &DMatrix<C64> {
        self.map
            .entry((c.to_bits(), h.to_bits()))
            .or_insert_with(|| propagator(n_max, omega, c, h))
    }
}

/// Time steps (length, sign, force) covering the sequence, each ≤ `dt`.
fn schedule(seq: &PulseSequence, omega: f64, force: &Force, dt: f64) -> Result<Vec<(f64, f64, f64)>> {
    let segs = drive_segments(seq, omega, force, 0.0, seq.total_time)?;
    let mut out = Vec::new();
    for s in segs {
        let len = s.end - s.start;
        let n = (len / dt).ceil().max(1.0) as usize;
        let h = len / n as f64;
        out.extend(std::iter::repeat((h, s.sign, s.force)).take(n));
    }
    Ok(out)
}

/// Evolve a joint state through the sequence. The result is expressed in the
/// toggling frame: a final σ_x is applied when the pulse count is odd.
pub fn evolve(
    state: &JointState,
    natural: &NaturalParams,
    seq: &PulseSequence,
    force: &Force,
    cfg: &OracleConfig,
) -> Result<JointState> {
    cfg.validate()?;
    if state.n_max != cfg.n_max {
        return Err(Error::Domain(format!(
            "state cutoff {} differs from configured n_max {}",
            state.n_max, cfg.n_max
        )));
    }
    let (g, w) = (natural.g, natural.omega);
    let steps = schedule(seq, w, force, cfg.dt)?;
    let d = state.dim();
    let mut st = state.clone();
    let norm0 = st.norm();
    let mut cache = PropagatorCache::default();
    let mut prev_sign = 1.0;
    for (h, sign, f) in steps {
        if sign != prev_sign {
            st.swap_sectors();
            prev_sign = sign;
        }
        for (spin, sigma) in [(0usize, 1.0), (1usize, -1.0)] {
            let u = cache.get(cfg.n_max, w, g * sigma - f, h);
            let out = apply(u, &st.amps[spin * d..(spin + 1) * d]);
            st.amps[spin * d..(spin + 1) * d].copy_from_slice(&out);
        }
        let drift = (st.norm() - norm0).abs();
        if drift > 1e-10 {
            return Err(Error::Resolution(format!("norm drifted by {drift:e}")));
        }
        let tail = st.tail_population();
        if tail > cfg.tail_tolerance {
            return Err(Error::Cutoff { population: tail, tolerance: cfg.tail_tolerance, n_max: cfg.n_max });
        }
    }
    if seq.pulse_times.len() % 2 == 1 {
        st.swap_sectors();
    }
    Ok(st)
}

/// |⟨closed|oracle⟩|² over the truncated joint space.
pub fn branch_fidelity(closed: &EntangledState, oracle: &JointState) -> f64 {
    let c = JointState::from_entangled(oracle.n_max, closed);
    c.amps.iter().zip(&oracle.amps).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr()
}

/// Whole-sequence propagators for the two branches (toggling frame).
fn sequence_propagators(n_max: usize, natural: &NaturalParams, seq: &PulseSequence) -> [DMatrix<C64>; 2] {
    let d = n_max + 1;
    let mut out = [DMatrix::<C64>::identity(d, d), DMatrix::<C64>::identity(d, d)];
    for s in seq.segments() {
        for (k, sigma) in [(0usize, 1.0), (1usize, -1.0)] {
            let u = propagator(n_max, natural.omega, natural.g * sigma * s.sign, s.len());
            out[k] = &u * &out[k];
        }
    }
    out
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn apply_q(x: &[C64]) -> Vec<C64> {
    let d = x.len();
    (0..d)
        .map(|n| {
            let lo = if n > 0 { x[n - 1] * (n as f64).sqrt() } else { C64::new(0.0, 0.0) };
            let hi = if n + 1 < d { x[n + 1] * ((n + 1) as f64).sqrt() } else { C64::new(0.0, 0.0) };
            (lo + hi) / SQRT2
        })
        .collect()
}

fn apply_p(x: &[C64]) -> Vec<C64> {
    let d = x.len();
    (0..d)
        .map(|n| {
            let lo = if n > 0 { x[n - 1] * (n as f64).sqrt() } else { C64::new(0.0, 0.0) };
            let hi = if n + 1 < d { x[n + 1] * ((n + 1) as f64).sqrt() } else { C64::new(0.0, 0.0) };
            C64::i() * (lo - hi) / SQRT2
        })
        .collect()
}

/// Exact moments of a joint state vector.
pub fn state_moments(st: &JointState) -> Moments {
    let (s0, s1) = (st.sector(0), st.sector(1));
    let (q0, q1, p0, p1) = (apply_q(s0), apply_q(s1), apply_p(s0), apply_p(s1));
    let cross = dot(s0, s1);
    let sx = 2.0 * cross.re;
    let sy = 2.0 * cross.im;
    let sz = dot(s0, s0).re - dot(s1, s1).re;
    Moments {
        sx,
        sy,
        sz,
        var_sx: 1.0 - sx * sx,
        var_sy: 1.0 - sy * sy,
        var_sz: 1.0 - sz * sz,
        syq: 2.0 * dot(s0, &q1).im,
        syp: 2.0 * dot(s0, &p1).im,
        szq: dot(s0, &q0).re - dot(s1, &q1).re,
        szp: dot(s0, &p0).re - dot(s1, &p1).re,
        q: dot(s0, &q0).re + dot(s1, &q1).re,
        p: dot(s0, &p0).re + dot(s1, &p1).re,
        q2: dot(&q0, &q0).re + dot(&q1, &q1).re,
        p2: dot(&p0, &p0).re + dot(&p1, &p1).re,
        qp_sym: 2.0 * (dot(&q0, &p0).re + dot(&q1, &p1).re),
    }
}

/// Linear moments as a flat array (the ones averaged over an ensemble).
fn linear_parts(m: &Moments) -> [f64; 12] {
    [m.sx, m.sy, m.sz, m.syq, m.syp, m.szq, m.szp, m.q, m.p, m.q2, m.p2, m.qp_sym]
}

fn from_linear(v: &[f64; 12]) -> Moments {
    Moments {
        sx: v[0],
        sy: v[1],
        sz: v[2],
        var_sx: 1.0 - v[0] * v[0],
        var_sy: 1.0 - v[1] * v[1],
        var_sz: 1.0 - v[2] * v[2],
        syq: v[3],
        syp: v[4],
        szq: v[5],
        szp: v[6],
        q: v[7],
        p: v[8],
        q2: v[9],
        p2: v[10],
        qp_sym: v[11],
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ensemble {
    /// `(|0⟩ + |1⟩)/√2 ⊗ |α⟩`
    Pure(C64),
    /// thermal oscillator via Glauber-P sampling of α
    Thermal { nbar: f64, samples: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub moments: Moments,
    /// standard errors of the ensemble-averaged moments (zero for pure states)
    pub stderr: Moments,
    /// witness with coefficients optimized on `moments`
    pub witness: WitnessResult,
    pub w_en_stderr: f64,
    pub w_b_stderr: f64,
    pub samples: usize,
    pub n_max: usize,
}

fn witness_of(m: &Moments) -> Result<WitnessResult> {
    let c = optimize_coefficients(m)?;
    Ok(WitnessResult::new(separable_bound(&c), witness_value(m, &c)))
}

fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

/// Complex Gaussian with E|α|² = n̄.
fn sample_alpha(seed: u64, index: u64, nbar: f64) -> C64 {
    let mut r = rng_for(seed, index);
    let s = (0.5 * nbar).sqrt();
    let x: f64 = StandardNormal.sample(&mut r);
    let y: f64 = StandardNormal.sample(&mut r);
    C64::new(s * x, s * y)
}

/// Witness moments from the Fock evolution, for a pure start or a thermal
/// ensemble. Thermal errors: standard errors per moment, and delete-one-block
/// jackknife (50 blocks) for the optimized witness values.
pub fn witness_moments(
    ensemble: Ensemble,
    natural: &NaturalParams,
    seq: &PulseSequence,
    cfg: &OracleConfig,
) -> Result<MomentEstimate> {
    cfg.validate()?;
    match ensemble {
        Ensemble::Pure(alpha) => {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let init = JointState::product(cfg.n_max, C64::new(h, 0.0), C64::new(h, 0.0), alpha);
            let st = evolve(&init, natural, seq, &Force::None, cfg)?;
            let m = state_moments(&st);
            Ok(MomentEstimate {
                moments: m,
                stderr: Moments::default(),
                witness: witness_of(&m)?,
                w_en_stderr: 0.0,
                w_b_stderr: 0.0,
                samples: 1,
                n_max: cfg.n_max,
            })
        }
        Ensemble::Thermal { nbar, samples } => {
            if samples < 100 {
                return Err(Error::Domain(format!("need at least 100 samples, got {samples}")));
            }
            if !(nbar >= 0.0) {
                return Err(Error::Domain(format!("n̄ must be >= 0, got {nbar}")));
            }
            let alphas: Vec<C64> = (0..samples as u64).map(|i| sample_alpha(cfg.seed, i, nbar)).collect();
            let amax = alphas.iter().map(|a| a.norm()).fold(0.0, f64::max);
            let n_max = cfg.n_max.max(default_n_max(branch_reach(seq, natural.g, natural.omega, amax)));
            let [u0, u1] = sequence_propagators(n_max, natural, seq);
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let per: Vec<[f64; 12]> = alphas
                .par_iter()
                .map(|&a| {
                    let coh: Vec<C64> = coherent_vector(n_max, a).iter().map(|&x| x * h).collect();
                    let mut amps = apply(&u0, &coh);
                    amps.extend(apply(&u1, &coh));
                    let st = JointState { n_max, amps };
                    let tail = st.tail_population();
                    if tail > cfg.tail_tolerance {
                        return Err(Error::Cutoff { population: tail, tolerance: cfg.tail_tolerance, n_max });
                    }
                    Ok(linear_parts(&state_moments(&st)))
                })
                .collect::<Result<_>>()?;
            let (mean, se) = mean_and_stderr(&per);
            let moments = from_linear(&mean);
            let witness = witness_of(&moments)?;
            let (w_b_stderr, w_en_stderr) = jackknife(&per, 50)?;
            Ok(MomentEstimate {
                moments,
                stderr: from_linear_se(&se),
                witness,
                w_en_stderr,
                w_b_stderr,
                samples,
                n_max,
            })
        }
    }
}

fn from_linear_se(v: &[f64; 12]) -> Moments {
    let mut m = from_linear(v);
    m.var_sx = 0.0;
    m.var_sy = 0.0;
    m.var_sz = 0.0;
    m
}

fn mean_and_stderr<const K: usize>(rows: &[[f64; K]]) -> ([f64; K], [f64; K]) {
    let n = rows.len() as f64;
    let mut mean = [0.0; K];
    let mut se = [0.0; K];
    for k in 0..K {
        let mut s = KahanSum::default();
        rows.iter().for_each(|r| s.add(r[k]));
        mean[k] = s.value() / n;
        let mut v = KahanSum::default();
        rows.iter().for_each(|r| v.add((r[k] - mean[k]).powi(2)));
        se[k] = (v.value() / (n - 1.0) / n).sqrt();
    }
    (mean, se)
}

/// Delete-one-block jackknife errors of (W_b, W_en).
fn jackknife(rows: &[[f64; 12]], blocks: usize) -> Result<(f64, f64)> {
    let n = rows.len();
    let b = blocks.min(n);
    let size = n / b;
    let used = size * b;
    let mut totals = [KahanSum::default(); 12];
    for r in &rows[..used] {
        for k in 0..12 {
            totals[k].add(r[k]);
        }
    }
    let mut reps = Vec::with_capacity(b);
    for j in 0..b {
        let mut sub = [0.0; 12];
        for k in 0..12 {
            let mut s = KahanSum::default();
            rows[j * size..(j + 1) * size].iter().for_each(|r| s.add(r[k]));
            sub[k] = (totals[k].value() - s.value()) / (used - size) as f64;
        }
        let w = witness_of(&from_linear(&sub))?;
        reps.push((w.w_b, w.w_en));
    }
    let spread = |f: fn(&(f64, f64)) -> f64| {
        let m = reps.iter().map(f).sum::<f64>() / b as f64;
        ((b - 1) as f64 / b as f64 * reps.iter().map(|r| (f(r) - m).powi(2)).sum::<f64>()).sqrt()
    };
    Ok((spread(|r| r.0), spread(|r| r.1)))
}

/// Monte Carlo estimates of the bath-induced moment changes, in quadrature
/// units, with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermalStatistics {
    /// E[Φ²]/4 (variance of S̃_x = σ_x/2 to leading order)
    pub dvar_sx: f64,
    pub dq2: f64,
    pub dp2: f64,
    /// E[2 q p]
    pub dqp: f64,
    /// E[Φ q]
    pub dsyq: f64,
    /// E[Φ p]
    pub dsyp: f64,
    /// E[Φ²], the same variance for σ_x itself
    pub dvar_sigma_x: f64,
    /// (1 − E[cos Φ]²)/4 without linearization
    pub dvar_sx_exact: f64,
    /// Var ∫f dt
    pub force_integral_var: f64,
    pub stderr: [f64; 9],
    pub n_trajectories: usize,
    pub dt: f64,
}

impl ThermalStatistics {
    pub fn as_array(&self) -> [f64; 9] {
        [
            self.dvar_sx,
            self.dq2,
            self.dp2,
            self.dqp,
            self.dsyq,
            self.dsyp,
            self.dvar_sigma_x,
            self.dvar_sx_exact,
            self.force_integral_var,
        ]
    }
}

/// Sample piecewise-constant white forces with per-step variance 2γn̄/dt and
/// accumulate the force-driven displacement β_f and spin phase Φ = 4g∫sign·Re β_f.
pub fn thermal_trajectories(natural: &NaturalParams, seq: &PulseSequence, cfg: &OracleConfig) -> Result<ThermalStatistics> {
    cfg.validate()?;
    if cfg.n_trajectories < 100 {
        return Err(Error::Domain(format!("need at least 100 trajectories, got {}", cfg.n_trajectories)));
    }
    let tau = seq.total_time;
    let (g, w) = (natural.g, natural.omega);
    let heating = natural.gamma * natural.nbar;
    let n_steps = (tau / cfg.dt).ceil() as usize;
    let dt = tau / n_steps as f64;
    if heating * dt > 0.1 {
        return Err(Error::Resolution(format!("γn̄·dt = {:e} > 0.1; reduce dt", heating * dt)));
    }
    let sd = (2.0 * heating / dt).sqrt();
    let layout = drive_segments(seq, w, &Force::Samples { dt, values: vec![0.0; n_steps] }, 0.0, tau)?;
    // per piece: index of its force sample, length, sign and the closed-form integrals
    let pieces: Vec<(usize, f64, C64, C64)> = layout
        .iter()
        .map(|s| {
            let j = ((0.5 * (s.start + s.end) / dt).floor() as usize).min(n_steps - 1);
            let h = s.end - s.start;
            (j, s.sign, seg_exp(-w, 0.0, h), ramp_exp(-w, h))
        })
        .collect();
    let rots: Vec<C64> = layout.iter().map(|s| C64::from_polar(1.0, -w * (s.end - s.start))).collect();
    let rows: Vec<[f64; 9]> = (0..cfg.n_trajectories as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng_for(cfg.seed, i);
            let f: Vec<f64> = (0..n_steps)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut r);
                    sd * z
                })
                .collect();
            let mut beta = C64::new(0.0, 0.0);
            let mut phi = 0.0;
            for (k, &(j, sgn, gm, h2)) in pieces.iter().enumerate() {
                let fj = f[j];
                phi += 4.0 * g * sgn * ((beta * gm).re - fj * h2.im);
                beta = beta * rots[k] + C64::i() * fj * gm;
            }
            let (q, p) = (SQRT2 * beta.re, SQRT2 * beta.im);
            let fint: f64 = f.iter().sum::<f64>() * dt;
            [0.25 * phi * phi, q * q, p * p, 2.0 * q * p, phi * q, phi * p, phi * phi, phi.cos(), fint * fint]
        })
        .collect();
    let (mean, se) = mean_and_stderr(&rows);
    let ec = mean[7];
    let mut stderr = se;
    stderr[7] = 0.5 * ec.abs() * se[7];
    Ok(ThermalStatistics {
        dvar_sx: mean[0],
        dq2: mean[1],
        dp2: mean[2],
        dqp: mean[3],
        dsyq: mean[4],
        dsyp: mean[5],
        dvar_sigma_x: mean[6],
        dvar_sx_exact: 0.25 * (1.0 - ec * ec),
        force_integral_var: mean[8],
        stderr,
        n_trajectories: cfg.n_trajectories,
        dt,
    })
}
