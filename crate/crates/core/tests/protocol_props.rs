use std::f64::consts::{E, FRAC_PI_2, PI, SQRT_2, TAU};

use proptest::prelude::*;
use rindler_core::protocols::{self, AccelerationChoice, BellScenario, LabResult, Sign, SwitchScenario, Timing};
use rindler_core::quantum::{Ket, Unitary, C64};

fn unitary() -> impl Strategy<Value = Unitary> {
    (0.0..FRAC_PI_2, 0.0..TAU, 0.0..TAU, 0.0..TAU).prop_map(|(theta, a, b, g)| {
        let e = |phi: f64| C64::from_polar(1.0, phi);
        Unitary::from_rows2([[e(a) * theta.cos(), e(b) * theta.sin()], [-e(-b) * theta.sin(), e(-a) * theta.cos()]])
            .unwrap()
            .with_global_phase(g)
    })
}

fn qubit() -> impl Strategy<Value = Ket> {
    (0.0..PI, 0.0..TAU).prop_map(|(t, p)| Ket::qubit(C64::new((t / 2.0).cos(), 0.0), C64::from_polar((t / 2.0).sin(), p)).unwrap())
}

fn probabilities(sc: &SwitchScenario) -> Vec<f64> {
    protocols::run_switch(sc).unwrap().outcomes.iter().map(|o| o.probability).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derived_timing_equalizes_proper_times(x0 in 0.1f64..10.0, x in 1.01f64..2.6) {
        let t = Timing::new(x0, x / x0, AccelerationChoice::DERIVE).unwrap();
        prop_assert!((t.crossing_taus[0] - t.crossing_taus[1]).abs() < 1e-9);
        prop_assert!(t.alpha2 > t.alpha1);
    }

    #[test]
    fn global_phases_do_not_change_outcomes(ua in unitary(), ub in unitary(), psi in qubit(), phi in 0.0..TAU) {
        let base = SwitchScenario::new(1.0, 1.5, ua.clone(), ub.clone(), psi.clone());
        let shifted = SwitchScenario::new(1.0, 1.5, ua.with_global_phase(phi), ub, psi.scaled(C64::from_polar(1.0, -phi)));
        for (p, q) in probabilities(&base).iter().zip(probabilities(&shifted)) {
            prop_assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn sign_sectors_carry_commutator_and_anticommutator(ua in unitary(), ub in unitary(), psi in qubit()) {
        let r = protocols::run_switch(&SwitchScenario::new(1.0, 1.5, ua.clone(), ub.clone(), psi.clone())).unwrap();
        let ab = ua.then_after(&ub).matrix().clone();
        let ba = ub.then_after(&ua).matrix().clone();
        let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
        let plus = ((&ba + &ab) * &v).norm_squared() / 4.0;
        let minus = ((&ba - &ab) * &v).norm_squared() / 4.0;
        let sector = |s: Sign| r.outcomes.iter().filter(|o| o.sign == s).map(|o| o.probability).sum::<f64>();
        prop_assert!((sector(Sign::Plus) - plus).abs() < 1e-12);
        prop_assert!((sector(Sign::Minus) - minus).abs() < 1e-12);
    }

    #[test]
    fn reduced_visibility_keeps_a_normalized_distribution(ua in unitary(), ub in unitary(), psi in qubit(), v in 0.0f64..=1.0) {
        let mut sc = SwitchScenario::new(1.0, 1.5, ua, ub, psi);
        sc.visibility = v;
        let r = protocols::run_switch(&sc).unwrap();
        let total: f64 = r.outcomes.iter().map(|o| o.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        for f in r.outcomes.iter().filter_map(|o| o.expected_fidelity) {
            prop_assert!(f <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn chsh_follows_visibility(v in 0.0f64..=1.0) {
        let mut sc = BellScenario::maximally_entangling(1.0, 1.5);
        sc.visibility = v;
        let best = protocols::run_bell(&sc).unwrap().best_chsh().unwrap();
        prop_assert!((best - 2.0 * (1.0 + v * v).sqrt()).abs() < 1e-6);
    }
}

#[test]
fn definite_control_reproduces_a_single_order() {
    let mut sc = SwitchScenario::new(1.0, 1.5, Unitary::hadamard(), Unitary::pauli_z(), Ket::plus());
    sc.control = [1.0, 0.0];
    let r = protocols::run_switch(&sc).unwrap();
    let plus: f64 = r.outcomes.iter().filter(|o| o.sign == Sign::Plus).map(|o| o.probability).sum();
    assert!((plus - 0.5).abs() < 1e-12);
}

#[test]
fn x_at_e_has_no_distinct_partner() {
    assert!(Timing::new(1.0, E, AccelerationChoice::DERIVE).is_err());
    // 2^(4/2) = 4
    let t = Timing::new(SQRT_2, SQRT_2, AccelerationChoice::DERIVE).unwrap();
    assert!((t.alpha2 - 2.0 * SQRT_2).abs() < 1e-9);
}

/// Contracting both lab registers at once gives the same outcome
/// probabilities as the factor-by-factor post-selection.
#[test]
fn joint_lab_measurement_matches_sequential() {
    let r = protocols::run_switch(&SwitchScenario::new(1.0, 1.5, Unitary::hadamard(), Unitary::pauli_y(), Ket::zero())).unwrap();
    let psi = r.final_state.amplitudes();
    assert_eq!(r.final_state.space().dims(), [2, 2, 2]);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let m = |res: LabResult| match res {
        LabResult::M => [h, h],
        LabResult::MPerp => [h, -h],
    };
    for o in &r.outcomes {
        let (a, b) = (m(o.labs[0]), m(o.labs[1]));
        let p: f64 = (0..2)
            .map(|ph| {
                let amp: C64 = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| psi[(i * 2 + j) * 2 + ph] * a[i] * b[j]).sum();
                amp.norm_sqr()
            })
            .sum();
        assert!((p - o.probability).abs() < 1e-14, "{:?}: {p} vs {}", o.labs, o.probability);
    }
}
