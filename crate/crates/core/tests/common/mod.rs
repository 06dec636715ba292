#![allow(dead_code)]

use isac_core::evaluator::dpg;
use isac_core::oracle::{combinations, injections};
use isac_core::{Allocation, NormalizedScenario, PhaseCodebook, Scenario, C64};

/// Deterministic instances shared with the offline brute-force reference.
/// `D` is `A` with thresholds no beam pair can meet.
pub fn fixed_instance(name: char) -> Scenario {
    let (n, q, u, k, t, j) = match name {
        'A' | 'D' => (3, 2, 3, 2, 2, 2),
        'B' => (4, 1, 3, 2, 3, 2),
        'C' => (2, 2, 2, 1, 2, 1),
        _ => panic!("unknown instance {name}"),
    };
    let entry = |uu: usize, nn: usize| -> C64 {
        let (uf, nf) = (uu as f64, nn as f64);
        let (amp, phase) = match name {
            'A' | 'D' => (0.6 + 0.3 * uf, 0.9 * uf + 1.7 * nf * uf + 0.4 * nf),
            'B' => (0.5 + 0.25 * uf, 1.1 * uf * nf + 0.3 * nf + 0.2 * uf),
            _ => (0.8 + 0.4 * uf, 0.5 + uf + 0.9 * nf * (uf + 1.0)),
        };
        C64::from_polar(amp, phase)
    };
    let (angles, coeffs, thresholds, xi) = match name {
        'A' => (
            vec![50.0, 120.0],
            vec![0.05, 0.07],
            vec![1.0, 0.8, 1.2],
            0.5,
        ),
        'B' => (
            vec![30.0, 85.0, 140.0],
            vec![0.04, 0.06, 0.08],
            vec![0.7, 0.9, 0.5],
            0.4,
        ),
        'C' => (vec![60.0, 100.0], vec![0.05, 0.05], vec![1.5, 1.5], 0.2),
        _ => (vec![50.0, 120.0], vec![0.05, 0.07], vec![6.0; 3], 0.5),
    };
    Scenario {
        n_antennas: n,
        n_users: u,
        n_rf_chains: k,
        n_targets: t,
        n_sched_targets: j,
        channels: (0..u)
            .map(|uu| (0..n).map(|nn| entry(uu, nn)).collect())
            .collect(),
        noise_power: 2.0,
        target_angles: angles,
        target_coeffs: coeffs,
        sinr_thresholds: thresholds,
        cross_interference_threshold: xi,
        tx_power: 1.5 * (k * n) as f64,
        phase_bits: q,
    }
}

/// Every allocation with the right cardinalities and codebook beams,
/// feasible or not, with `tau` set to the smallest paired gain.
pub fn enumerate_allocations(s: &NormalizedScenario, cb: &PhaseCodebook) -> Vec<Allocation> {
    let (n, k) = (s.n_antennas, s.n_rf_chains);
    let digits = k * n;
    let per_digit = cb.size();
    let mut out = Vec::new();
    for users in combinations(s.n_users, k) {
        for code in 0..per_digit.pow(digits as u32) {
            let mut beams = vec![vec![C64::new(0.0, 0.0); n]; s.n_users];
            let mut c = code;
            for &u in &users {
                for entry in 0..n {
                    beams[u][entry] = cb.symbol(c % per_digit);
                    c /= per_digit;
                }
            }
            for targets in combinations(s.n_targets, s.n_sched_targets) {
                for map in injections(k, s.n_sched_targets) {
                    let mut pairing: Vec<(usize, usize)> = targets
                        .iter()
                        .zip(&map)
                        .map(|(&t, &m)| (t, users[m]))
                        .collect();
                    pairing.sort_unstable();
                    let mut a = Allocation {
                        scheduled_users: users.clone(),
                        scheduled_targets: targets.clone(),
                        pairing,
                        beams: beams.clone(),
                        tau: 0.0,
                    };
                    a.tau = targets
                        .iter()
                        .map(|&t| dpg(s, &a, t))
                        .fold(f64::INFINITY, f64::min);
                    out.push(a);
                }
            }
        }
    }
    out
}

/// Relative closeness with an absolute floor for values near zero.
pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

/// Random two-antenna, one-bit instance small enough to enumerate fully.
pub fn two_antenna_instance(seed: u64) -> NormalizedScenario {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let u = rng.random_range(2..=3);
    let k = rng.random_range(1..=2usize).min(u);
    let t = rng.random_range(1..=3);
    let j = rng.random_range(1..=k.min(t));
    let channels = (0..u)
        .map(|_| {
            let scale = rng.random_range(0.3..1.5);
            (0..2)
                .map(|_| {
                    C64::from_polar(
                        scale * rng.random_range(0.5..1.5),
                        rng.random_range(0.0..std::f64::consts::TAU),
                    )
                })
                .collect()
        })
        .collect();
    let tx_power = rng.random_range(0.5..8.0);
    Scenario {
        n_antennas: 2,
        n_users: u,
        n_rf_chains: k,
        n_targets: t,
        n_sched_targets: j,
        channels,
        noise_power: rng.random_range(0.2..2.0),
        target_angles: (0..t).map(|_| rng.random_range(15.0..165.0)).collect(),
        target_coeffs: (0..t).map(|_| rng.random_range(0.02..0.1)).collect(),
        sinr_thresholds: (0..u).map(|_| rng.random_range(0.05..2.0)).collect(),
        cross_interference_threshold: rng.random_range(0.05..0.6) * tx_power / k as f64,
        tx_power,
        phase_bits: 1,
    }
    .normalize()
    .expect("valid instance")
}

#[derive(Debug, Default, Clone, Copy)]
pub struct BigMAudit {
    pub allocations: usize,
    pub feasible: usize,
    /// Bound violations by any allocation, feasible or not.
    pub bound_violations: usize,
    /// Feasible allocations whose lifted point violates a model row.
    pub model_violations: usize,
}

/// Enumerates every allocation of `s` and checks the big-M constants
/// against it, including the lifted point of every feasible allocation.
pub fn audit_big_m(s: &NormalizedScenario) -> BigMAudit {
    use isac_core::evaluator::verify;
    use isac_core::linalg::inner;
    use isac_core::reformulation::{big_m_cross, big_m_dpg, big_m_sinr};
    use isac_core::{build_codebook, build_milp, encode_allocation};

    let cb = build_codebook(s.phase_bits, s.tx_power, s.n_rf_chains, s.n_antennas).unwrap();
    let (model, idx) = build_milp(s, &cb).unwrap();
    let scale = (0..s.n_users).map(|u| big_m_sinr(s, u)).fold(1.0, f64::max);
    let mut audit = BigMAudit::default();
    for a in enumerate_allocations(s, &cb) {
        audit.allocations += 1;
        let mut ok = true;
        for u in 0..s.n_users {
            let received: f64 = a
                .scheduled_users
                .iter()
                .map(|&i| inner(&s.channels[u], &a.beams[i]).norm_sqr())
                .sum();
            ok &= received <= big_m_sinr(s, u) - 1.0 + 1e-12 * scale;
        }
        for &i in &a.scheduled_users {
            for t in 0..s.n_targets {
                let gain = s.target_grams[t].quad_form(&a.beams[i]);
                ok &= gain <= big_m_dpg(s, t) * (1.0 + 1e-12);
                for q in (0..s.n_targets).filter(|&q| q != t) {
                    ok &= s.target_grams[q].quad_form(&a.beams[i])
                        <= big_m_cross(s, t, q) * (1.0 + 1e-12);
                }
            }
        }
        if !ok {
            audit.bound_violations += 1;
        }
        if verify(s, &a).passed() {
            audit.feasible += 1;
            let point = encode_allocation(&a, &idx, &cb).unwrap();
            if model.max_violation(&point) > 1e-8 * scale {
                audit.model_violations += 1;
            }
        }
    }
    audit
}

fn random_vector<R: rand::Rng>(rng: &mut R, n: usize) -> Vec<C64> {
    use rand_distr::{Distribution, StandardNormal};
    (0..n)
        .map(|_| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect()
}

fn random_psd<R: rand::Rng>(rng: &mut R, n: usize) -> isac_core::CMatrix {
    let rank = rng.random_range(1..=n);
    let mut m = isac_core::CMatrix::zeros(n);
    for _ in 0..rank {
        m.add_assign(&isac_core::CMatrix::outer(
            &random_vector(rng, n),
            rng.random_range(0.1..3.0),
        ));
    }
    m
}

/// Number of random Hermitian PSD pairs violating `Tr(AB) <= Tr(A) Tr(B)`.
pub fn trace_product_violations(pairs: usize, seed: u64) -> usize {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..pairs)
        .filter(|_| {
            let n = rng.random_range(1..=8);
            let (a, b) = (random_psd(&mut rng, n), random_psd(&mut rng, n));
            let lhs = a.trace_product(&b);
            let rhs = a.trace().re * b.trace().re;
            lhs.im.abs() > 1e-9 * rhs || lhs.re > rhs * (1.0 + 1e-12)
        })
        .count()
}

/// Largest relative gap between `|hᴴw|²` and `Tr(h hᴴ w wᴴ)`.
pub fn worst_trace_identity_error(samples: usize, seed: u64) -> f64 {
    use isac_core::linalg::inner;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            let n = rng.random_range(1..=12);
            let (h, w) = (random_vector(&mut rng, n), random_vector(&mut rng, n));
            let direct = inner(&h, &w).norm_sqr();
            let traced = isac_core::CMatrix::outer(&h, 1.0)
                .trace_product(&isac_core::CMatrix::outer(&w, 1.0));
            ((direct - traced.re).abs() + traced.im.abs()) / direct.max(1.0)
        })
        .fold(0.0, f64::max)
}

/// For each binary pair, the smallest and largest `c` an LP allows under
/// `c <= a`, `c <= b`, `c >= a + b - 1`, `0 <= c <= 1`.
pub fn binary_product_table() -> Vec<((u8, u8), (f64, f64))> {
    use milp::{solve_milp, MilpModel, MilpSettings, Sense};
    let mut out = Vec::new();
    for (a, b) in [(0u8, 0u8), (0, 1), (1, 0), (1, 1)] {
        let extreme = |direction: f64| {
            let mut m = MilpModel::new();
            let va = m.add_continuous("a", a as f64, a as f64);
            let vb = m.add_continuous("b", b as f64, b as f64);
            let c = m.add_continuous("c", 0.0, 1.0);
            m.add_constraint("k1", [(c, 1.0), (va, -1.0)], Sense::Le, 0.0);
            m.add_constraint("k2", [(c, 1.0), (vb, -1.0)], Sense::Le, 0.0);
            m.add_constraint("k3", [(c, 1.0), (va, -1.0), (vb, -1.0)], Sense::Ge, -1.0);
            m.set_objective([(c, direction)]);
            let report = solve_milp(&m, &MilpSettings::default()).unwrap();
            report.values.unwrap()[c.0] + 0.0
        };
        out.push(((a, b), (extreme(-1.0), extreme(1.0))));
    }
    out
}
