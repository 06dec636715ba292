mod common;

use common::fixed_instance;
use isac_core::baselines::{
    baseline_assignment, baseline_rng, correlation_matrix, least_correlated_users,
    max_weight_matching, CorrelationAggregate,
};
use isac_core::evaluator::verify;
use isac_core::oracle::{combinations, exhaustive_solve, injections};
use isac_core::{build_codebook, run_baseline, BaselineKind};
use milp::MilpSettings;
use proptest::prelude::*;

fn brute_force_matching(w: &[Vec<f64>], size: usize) -> f64 {
    let cols = w[0].len();
    combinations(w.len(), size)
        .into_iter()
        .flat_map(|rows| {
            injections(cols, size)
                .into_iter()
                .map(move |map| rows.iter().zip(&map).map(|(&r, &c)| w[r][c]).sum::<f64>())
                .collect::<Vec<_>>()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

proptest! {
    #[test]
    fn matching_is_optimal_and_injective(
        w in (1usize..=4, 1usize..=5).prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(0.0f64..1.0, c), r)),
        pick in 0usize..5,
    ) {
        let size = 1 + pick % w.len().min(w[0].len());
        let pairs = max_weight_matching(&w, size).unwrap();
        prop_assert_eq!(pairs.len(), size);
        let mut rows: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let mut cols: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        rows.dedup();
        cols.sort_unstable();
        cols.dedup();
        prop_assert_eq!(rows.len(), size);
        prop_assert_eq!(cols.len(), size);
        let total: f64 = pairs.iter().map(|&(r, c)| w[r][c]).sum();
        prop_assert!((total - brute_force_matching(&w, size)).abs() < 1e-9);
    }
}

#[test]
fn least_correlated_subset_minimizes_the_worst_pair() {
    let s = fixed_instance('B').normalize().unwrap();
    let corr = correlation_matrix(&s).unwrap();
    let chosen = least_correlated_users(&s, 2, CorrelationAggregate::Max).unwrap();
    let best = combinations(3, 2)
        .into_iter()
        .map(|p| corr[p[0]][p[1]])
        .fold(f64::INFINITY, f64::min);
    assert_eq!(corr[chosen[0]][chosen[1]], best);
}

#[test]
fn baselines_never_beat_the_exhaustive_optimum() {
    let settings = MilpSettings::with_gap(1e-9);
    for name in ['A', 'B', 'C', 'D'] {
        let s = fixed_instance(name).normalize().unwrap();
        let cb = build_codebook(s.phase_bits, s.tx_power, s.n_rf_chains, s.n_antennas).unwrap();
        let best = exhaustive_solve(&s, &cb).unwrap().tau;
        for kind in BaselineKind::ALL {
            for seed in 0..3 {
                let out =
                    run_baseline(kind, &s, &cb, &mut baseline_rng(seed, kind), &settings).unwrap();
                let Some(a) = out.solution.allocation else {
                    continue;
                };
                assert!(verify(&s, &a).passed(), "{name} {kind}");
                assert_eq!(a.scheduled_users, out.fixed.scheduled_users);
                if let Some(p) = &out.fixed.pairing {
                    assert_eq!(&a.pairing, p);
                }
                let opt = best.expect("a baseline found a point the oracle missed");
                assert!(
                    a.tau <= opt * (1.0 + 1e-9),
                    "{name} {kind}: {} > {opt}",
                    a.tau
                );
            }
        }
    }
}

#[test]
fn random_baselines_are_reproducible_and_well_formed() {
    let s = fixed_instance('B').normalize().unwrap();
    for kind in [BaselineKind::Bl3, BaselineKind::Bl4] {
        for seed in 0..20 {
            let a = baseline_assignment(
                kind,
                &s,
                &mut baseline_rng(seed, kind),
                CorrelationAggregate::Max,
            )
            .unwrap();
            let b = baseline_assignment(
                kind,
                &s,
                &mut baseline_rng(seed, kind),
                CorrelationAggregate::Max,
            )
            .unwrap();
            assert_eq!(a, b);
            assert_eq!(a.scheduled_users.len(), s.n_rf_chains);
            match (kind, &a.pairing) {
                (BaselineKind::Bl3, None) => {}
                (BaselineKind::Bl4, Some(p)) => {
                    assert_eq!(p.len(), s.n_sched_targets);
                    assert!(p.iter().all(|(_, u)| a.scheduled_users.contains(u)));
                }
                other => panic!("unexpected pairing {other:?}"),
            }
        }
    }
}
