//! Random instances small enough for exhaustive search.

use isac_core::{NormalizedScenario, Scenario, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Size ranges of the generated instances.
#[derive(Debug, Clone)]
pub struct TinyShape {
    pub antennas: Vec<usize>,
    pub phase_bits: Vec<u32>,
    pub users: Vec<usize>,
    pub rf_chains: Vec<usize>,
    pub targets: Vec<usize>,
}

impl Default for TinyShape {
    fn default() -> Self {
        Self {
            antennas: vec![2, 3, 4],
            phase_bits: vec![1, 2],
            users: vec![2, 3],
            rf_chains: vec![1, 2],
            targets: vec![1, 2],
        }
    }
}

fn pick<T: Copy, R: Rng + ?Sized>(rng: &mut R, options: &[T]) -> T {
    options[rng.random_range(0..options.len())]
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, std: f64) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * (std / 2f64.sqrt())
}

/// Draws one tiny instance with unit noise and unit symbol magnitude.
/// Thresholds and the cross-interference level are spread so that a good
/// share of the instances is infeasible.
pub fn random_instance(seed: u64, shape: &TinyShape) -> NormalizedScenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = pick(&mut rng, &shape.antennas);
    let q = pick(&mut rng, &shape.phase_bits);
    let u = pick(&mut rng, &shape.users);
    let k = pick(&mut rng, &shape.rf_chains).min(u);
    let t = pick(&mut rng, &shape.targets);
    let j = rng.random_range(1..=k.min(t));
    let channels = (0..u)
        .map(|_| {
            let scale = rng.random_range(0.3..1.5);
            (0..n).map(|_| gaussian(&mut rng, scale)).collect()
        })
        .collect();
    let target_angles: Vec<f64> = (0..t).map(|_| rng.random_range(20.0..160.0)).collect();
    let target_coeffs: Vec<f64> = (0..t).map(|_| rng.random_range(0.04..0.08)).collect();
    let sinr_thresholds = (0..u).map(|_| rng.random_range(0.2..3.0)).collect();
    let level = rng.random_range(0.05..0.8) * 0.06 * n as f64;
    Scenario {
        n_antennas: n,
        n_users: u,
        n_rf_chains: k,
        n_targets: t,
        n_sched_targets: j,
        channels,
        noise_power: 1.0,
        target_angles,
        target_coeffs,
        sinr_thresholds,
        cross_interference_threshold: level,
        tx_power: (k * n) as f64,
        phase_bits: q,
    }
    .normalize()
    .expect("generated instance is valid")
}
