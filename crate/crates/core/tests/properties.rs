use num_complex::Complex64 as C64;
use proptest::prelude::*;

use spinlev::core_model::NaturalParams;
use spinlev::fock_oracle::{branch_fidelity, evolve, JointState, OracleConfig};
use spinlev::magnus_dynamics::{entangled_state, evolve_window, initial_state, Force};
use spinlev::numerics::compensated_sum;
use spinlev::pulse_kernel::{
    delta_n_closed_form, phase_kernel, residual_displacement, squeezing_closed_form, squeezing_parameter,
    PulseSequence, SequenceKind,
};
use spinlev::sensing::squeezed_rotation;
use spinlev::witness::{
    bath_deltas, halfperiod_coefficients, optimize_coefficients, separable_bound, thermal_moments, thermal_wb,
    thermal_wen, witness_value, WitnessCoefficients,
};

const KINDS: [SequenceKind; 3] = [SequenceKind::Ramsey, SequenceKind::HahnEcho, SequenceKind::CarrPurcell2];

/// τ and strictly increasing interior pulse times.
fn sequence() -> impl Strategy<Value = PulseSequence> {
    (0.1..8.0_f64, prop::collection::vec(0.02..0.98_f64, 0..5)).prop_map(|(tau, mut fr)| {
        fr.sort_by(f64::total_cmp);
        fr.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        PulseSequence::custom(tau, fr.iter().map(|f| f * tau).collect()).unwrap()
    })
}

proptest! {
    #[test]
    fn kernel_is_hermitian(seq in sequence(), g in 0.01..3.0_f64, w in 0.1..5.0_f64, nu in 0.0..10.0_f64) {
        let a = phase_kernel(&seq, g, w, nu);
        let b = phase_kernel(&seq, g, w, -nu);
        prop_assert!((a - b.conj()).norm() <= 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn kernel_scales_linearly_with_coupling(seq in sequence(), g in 0.01..3.0_f64, w in 0.1..5.0_f64, nu in 0.0..10.0_f64) {
        let a = phase_kernel(&seq, g, w, nu);
        let b = phase_kernel(&seq, 2.0 * g, w, nu);
        prop_assert!((b - 2.0 * a).norm() <= 1e-12 * (1.0 + b.norm()));
    }

    #[test]
    fn generic_path_matches_closed_forms(k in 0usize..3, wt in 0.01..20.0_f64, g in 0.01..3.0_f64, w in 0.1..5.0_f64) {
        let kind = KINDS[k];
        let tau = wt / w;
        let named = PulseSequence::named(kind, tau).unwrap();
        let custom = PulseSequence::custom(tau, named.pulse_times.clone()).unwrap();
        let dn = residual_displacement(&custom, g, w).delta_n;
        let want = g * g * delta_n_closed_form(kind, w, tau).unwrap();
        prop_assert!((dn - want).abs() <= 1e-9 * want.max(1e-14 * g * g / (w * w)));
        let z = squeezing_parameter(&custom, g, w);
        let zw = squeezing_closed_form(kind, g, w, tau).unwrap();
        prop_assert!((z - zw).abs() <= 1e-9 * zw.abs().max(1e-12 * g * g / (w * w)));
    }

    #[test]
    fn evolution_composes_over_windows(seq in sequence(), g in 0.0..2.0_f64, re in -2.0..2.0_f64, im in -2.0..2.0_f64, split in 0.05..0.95_f64) {
        let a = C64::new(re, im);
        let full = entangled_state(&seq, a, g, 1.0, &Force::None).unwrap();
        let t = split * seq.total_time;
        let first = evolve_window(&initial_state(a), &seq, g, 1.0, &Force::None, 0.0, t).unwrap();
        let both = evolve_window(&first, &seq, g, 1.0, &Force::None, t, seq.total_time).unwrap();
        prop_assert!((full.branch0.alpha - both.branch0.alpha).norm() < 1e-11);
        prop_assert!((full.branch1.alpha - both.branch1.alpha).norm() < 1e-11);
        let dphi = (full.relative_phase - both.relative_phase).rem_euclid(2.0 * std::f64::consts::PI);
        prop_assert!(dphi.min(2.0 * std::f64::consts::PI - dphi) < 1e-10);
    }

    #[test]
    fn shot_noise_factor_never_exceeds_one(n in 1u64..1_000_000, zeta in 0.0..10.0_f64) {
        let r = squeezed_rotation(n, zeta);
        prop_assert!(r.shot_noise_factor <= 1.0 && r.shot_noise_factor > 0.0);
    }

    #[test]
    fn witness_grows_with_occupation(l in 0.0..2.0_f64, n in 0.0..10.0_f64, dn in 0.0..5.0_f64, wt in 0.01..6.3_f64) {
        prop_assert!(thermal_wen(l, n + dn, 1.0, wt) >= thermal_wen(l, n, 1.0, wt) - 1e-15);
    }

    #[test]
    fn halfperiod_bound_is_general_bound_at_half_period(l in 0.0..2.0_f64, n in 0.0..10.0_f64) {
        let a = separable_bound(&halfperiod_coefficients(l, n));
        prop_assert!((a - thermal_wb(l, n, 1.0, 0.0, std::f64::consts::PI)).abs() < 1e-12);
    }

    #[test]
    fn optimized_coefficients_minimize_witness(
        l in 0.05..2.0_f64, n in 0.0..5.0_f64, wt in 0.1..6.0_f64,
        d in prop::array::uniform4(-0.3..0.3_f64),
    ) {
        let m = thermal_moments(l, n, 1.0, 0.0, wt);
        let c = optimize_coefficients(&m).unwrap();
        let p = WitnessCoefficients { a_y: c.a_y + d[0], b_y: c.b_y + d[1], a_z: c.a_z + d[2], b_z: c.b_z + d[3] };
        prop_assert!(witness_value(&m, &p) >= witness_value(&m, &c) - 1e-12);
        prop_assert!((witness_value(&m, &c) - thermal_wen(l, n, 1.0, wt)).abs() < 1e-10);
    }

    #[test]
    fn bath_deltas_are_linear_in_heating(l in 0.0..2.0_f64, r in 0.0..2.0_f64, s in 0.0..10.0_f64, wt in 0.0..7.0_f64) {
        let a = bath_deltas(l, r, 1.0, wt).as_array();
        let b = bath_deltas(l, s * r, 1.0, wt).as_array();
        for k in 0..6 {
            prop_assert!((b[k] - s * a[k]).abs() <= 1e-12 * (1.0 + b[k].abs()));
        }
    }

    #[test]
    fn compensated_sum_ignores_order(mut xs in prop::collection::vec(-1e6..1e6_f64, 1..200)) {
        let a = compensated_sum(xs.iter().copied());
        xs.reverse();
        let b = compensated_sum(xs.iter().copied());
        prop_assert!((a - b).abs() <= 1e-15 * xs.iter().map(|x| x.abs()).sum::<f64>());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fock_evolution_preserves_norm_and_matches_branches(
        k in 0usize..3, g in 0.0..1.0_f64, wt in 0.1..6.3_f64, re in -1.0..1.0_f64, im in -1.0..1.0_f64,
    ) {
        let a = C64::new(re, im);
        let seq = PulseSequence::named(KINDS[k], wt).unwrap();
        let cfg = OracleConfig::for_sequence(&seq, g, 1.0, a.norm(), 0);
        let init = JointState::from_entangled(cfg.n_max, &initial_state(a));
        let st = evolve(&init, &NaturalParams::from_coupling(g, 1.0), &seq, &Force::None, &cfg).unwrap();
        prop_assert!((st.norm() - init.norm()).abs() < 1e-10);
        let closed = entangled_state(&seq, a, g, 1.0, &Force::None).unwrap();
        prop_assert!(branch_fidelity(&closed, &st) > 1.0 - 1e-8);
    }
}
