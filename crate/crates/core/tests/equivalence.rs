//! The mixed-binary model against exhaustive search on small instances.

mod common;

use common::close;
use isac_core::evaluator::verify;
use isac_core::oracle::exhaustive_solve;
use isac_core::{build_codebook, solve_joint, NormalizedScenario, Scenario, C64};
use milp::MilpSettings;
use proptest::prelude::*;

fn instance() -> impl Strategy<Value = NormalizedScenario> {
    (2usize..=3, 1u32..=2, 2usize..=3, 1usize..=2, 1usize..=2)
        .prop_flat_map(|(n, q, u, k, t)| {
            let k = k.min(u);
            (
                Just((n, q, u, k, t)),
                1..=k.min(t),
                prop::collection::vec(
                    prop::collection::vec((0.2f64..1.5, 0.0f64..std::f64::consts::TAU), n),
                    u,
                ),
                prop::collection::vec(20.0f64..160.0, t),
                prop::collection::vec(0.2f64..2.5, u),
                0.05f64..0.8,
            )
        })
        .prop_map(|((n, q, u, k, t), j, polar, angles, thresholds, level)| {
            Scenario {
                n_antennas: n,
                n_users: u,
                n_rf_chains: k,
                n_targets: t,
                n_sched_targets: j,
                channels: polar
                    .into_iter()
                    .map(|h| h.into_iter().map(|(r, p)| C64::from_polar(r, p)).collect())
                    .collect(),
                noise_power: 1.0,
                target_angles: angles,
                target_coeffs: vec![0.06; t],
                sinr_thresholds: thresholds,
                cross_interference_threshold: level * 0.06 * n as f64,
                tx_power: (k * n) as f64,
                phase_bits: q,
            }
            .normalize()
            .unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn model_optimum_equals_exhaustive_optimum(s in instance()) {
        let cb = build_codebook(s.phase_bits, s.tx_power, s.n_rf_chains, s.n_antennas).unwrap();
        let oracle = exhaustive_solve(&s, &cb).unwrap();
        let joint = solve_joint(&s, &cb, &MilpSettings::with_gap(1e-9)).unwrap();
        prop_assert!(joint.product_deviation <= 1e-6);
        match (&oracle.tau, &joint.allocation) {
            (None, None) => {}
            (Some(t), Some(a)) => {
                prop_assert!(close(*t, a.tau, 1e-6), "oracle {} milp {}", t, a.tau);
                let report = verify(&s, a);
                prop_assert!(report.passed());
                prop_assert!(report.tau_error <= 1e-6);
            }
            (o, m) => prop_assert!(false, "verdicts differ: oracle {:?} milp {:?}", o, m.as_ref().map(|a| a.tau)),
        }
    }

    #[test]
    fn per_user_channel_phase_does_not_change_the_optimum(s in instance(), turns in prop::collection::vec(0.0f64..std::f64::consts::TAU, 3)) {
        let cb = build_codebook(s.phase_bits, s.tx_power, s.n_rf_chains, s.n_antennas).unwrap();
        let base = exhaustive_solve(&s, &cb).unwrap().tau;
        let mut rotated = s.to_scenario();
        for (h, &phi) in rotated.channels.iter_mut().zip(&turns) {
            h.iter_mut().for_each(|x| *x *= C64::from_polar(1.0, phi));
        }
        let turned = exhaustive_solve(&rotated.normalize().unwrap(), &cb).unwrap().tau;
        match (base, turned) {
            (Some(a), Some(b)) => prop_assert!(close(a, b, 1e-9)),
            (a, b) => prop_assert_eq!(a.is_some(), b.is_some()),
        }
    }
}
