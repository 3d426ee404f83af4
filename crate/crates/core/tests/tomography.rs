use std::f64::consts::PI;
use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rydswitch::quantum_state::{fidelity, mle_reconstruct, simulate_counts, visibility_fit, Noise};
use rydswitch::DensityMatrix;

/// Runs `f(0..n)` across the available cores, keeping index order.
fn par_map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let workers = thread::available_parallelism()
        .map_or(4, |c| c.get())
        .min(n.max(1));
    let f = &f;
    let mut out: Vec<(usize, T)> = thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                s.spawn(move || {
                    (w..n)
                        .step_by(workers)
                        .map(|i| (i, f(i)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().unwrap())
            .collect()
    });
    out.sort_by_key(|(i, _)| *i);
    out.into_iter().map(|(_, v)| v).collect()
}

#[test]
fn noiseless_round_trip_of_random_states() {
    let worst = par_map(200, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + i as u64);
        let rank = 1 + i % 4;
        let rho = DensityMatrix::random(&mut rng, 4, rank);
        let rec = simulate_counts(&rho, 1e4, Noise::None).unwrap();
        let est = mle_reconstruct(&rec).unwrap_or_else(|e| panic!("state {i} (rank {rank}): {e}"));
        est.trace_distance(&rho).unwrap()
    })
    .into_iter()
    .fold(0.0f64, f64::max);
    assert!(worst < 1e-5, "worst trace distance {worst:.3e}");
}

#[test]
fn fidelity_is_one_exactly_for_equal_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for k in 0..200 {
        let a = DensityMatrix::random(&mut rng, 4, 1 + k % 4);
        let b = if k % 2 == 0 {
            a.clone()
        } else {
            DensityMatrix::random(&mut rng, 4, 1 + k % 4)
        };
        let f = fidelity(&a, &b).unwrap();
        let d = a.trace_distance(&b).unwrap();
        assert!((0.0..=1.0 + 1e-9).contains(&f));
        // F = 1 ⇔ D < 1e−6, in both directions
        let unit = (f - 1.0).abs() < 1e-9;
        assert_eq!(unit, d < 1e-6, "F = {f}, D = {d:e}");
        // Fuchs–van de Graaf: 1 − √F ≤ D ≤ √(1 − F)
        assert!(1.0 - f.sqrt() <= d + 1e-9 && d <= (1.0 - f).max(0.0).sqrt() + 1e-9);
    }
}

/// Counts `B + A·cos²(θ − θ0)` scaled to 10⁴ at the maximum, Poisson sampled.
fn fringe(v: f64, theta0: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    // V = A/(A + 2B) with A + B = 1e4
    let b = 1e4 * (1.0 - v) / (1.0 + v);
    let a = 1e4 - b;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let angles: Vec<f64> = (0..=36).map(|k| k as f64 * PI / 36.0).collect();
    let counts = angles
        .iter()
        .map(|t| {
            let mean = b + a * (t - theta0).cos().powi(2);
            Poisson::new(mean).unwrap().sample(&mut rng)
        })
        .collect();
    (angles, counts)
}

#[test]
fn visibility_estimator_is_unbiased() {
    for (j, &v) in [0.3, 0.6, 0.9].iter().enumerate() {
        let seed = 9000 + 1000 * j as u64;
        let est = par_map(100, |i| {
            let theta0 = ChaCha8Rng::seed_from_u64(seed + i as u64).random_range(-1.0..1.0);
            let (x, y) = fringe(v, theta0, seed + i as u64);
            visibility_fit(&x, &y).unwrap().visibility
        });
        let mean = est.iter().sum::<f64>() / est.len() as f64;
        assert!((mean - v).abs() < 0.01, "V = {v}: mean estimate {mean}");
    }
}
