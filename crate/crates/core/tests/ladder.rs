use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rydswitch::lindblad::{steady_state, weak_probe_coherence};
use rydswitch::optical_response::{chi_dimensionless, linear_grid, spectrum};
use rydswitch::{AngularFreq, LadderParams};

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

#[test]
fn steady_states_are_positive() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..500 {
        let p = LadderParams {
            omega_p: AngularFreq(log_uniform(&mut rng, 0.01, 50.0)),
            omega_c: AngularFreq(log_uniform(&mut rng, 0.01, 50.0)),
            delta_p: AngularFreq(rng.random_range(-50.0..50.0)),
            delta_c: AngularFreq(rng.random_range(-50.0..50.0)),
            gamma_e: AngularFreq(log_uniform(&mut rng, 0.01, 50.0)),
            gamma_r: AngularFreq(log_uniform(&mut rng, 0.01, 50.0)),
            gamma_de: AngularFreq(log_uniform(&mut rng, 0.01, 50.0)),
            gamma_dr: AngularFreq(log_uniform(&mut rng, 0.01, 50.0)),
            ..LadderParams::default()
        };
        let rho = steady_state(&p).unwrap_or_else(|e| panic!("draw {k}: {e}"));
        let min = rho
            .matrix()
            .eigenvalues_hermitian()
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-9, "draw {k}: min eigenvalue {min:e}");
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
    }
}

#[test]
fn autler_townes_dips_sit_at_half_coupling() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..40 {
        let gamma_e = rng.random_range(0.5..6.0);
        let gamma_de = rng.random_range(0.0..0.5);
        let geg: f64 = gamma_e + gamma_de;
        let p = LadderParams {
            omega_c: AngularFreq(rng.random_range(3.0..8.0) * geg),
            gamma_e: AngularFreq(gamma_e),
            gamma_de: AngularFreq(gamma_de),
            // the dips drift off ±Ωc/2 by about 0.45·γrg·γeg/Ωc, which stays
            // under one grid step only for γrg ≲ γeg/100 at Ωc = 3γeg
            gamma_dr: AngularFreq(rng.random_range(0.0..0.01) * geg),
            od: rng.random_range(1.0..30.0),
            ..LadderParams::default()
        };
        let oc = p.omega_c.0;
        let grid = linear_grid(-2.0 * oc, 2.0 * oc, 2001);
        let step = grid[1].0 - grid[0].0;
        let s = spectrum(&grid, &p).unwrap();
        let minima: Vec<f64> = s.local_minima().into_iter().map(|i| grid[i].0).collect();
        assert_eq!(minima.len(), 2, "{minima:?} for {p:?}");
        assert!(
            (minima[0] + oc / 2.0).abs() <= step,
            "{minima:?}, Ωc = {oc}"
        );
        assert!(
            (minima[1] - oc / 2.0).abs() <= step,
            "{minima:?}, Ωc = {oc}"
        );
    }
}

#[test]
fn master_equation_matches_susceptibility_shape() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..6 {
        let p = LadderParams {
            omega_p: AngularFreq(1e-3),
            omega_c: AngularFreq(rng.random_range(1.0..15.0)),
            gamma_e: AngularFreq(rng.random_range(1.0..6.0)),
            gamma_de: AngularFreq(rng.random_range(0.0..0.3)),
            gamma_dr: AngularFreq(rng.random_range(0.01..3.0)),
            od: 10.0,
            ..LadderParams::default()
        };
        let mut ratios = Vec::new();
        for dw in linear_grid(-25.0, 25.0, 51) {
            let lind = weak_probe_coherence(&p.probe_at(dw)).unwrap();
            let ana = chi_dimensionless(dw, &p).unwrap();
            ratios.push(lind / ana);
        }
        // one real factor, 1/(2γeg), for the whole grid
        let expected = 1.0 / (2.0 * p.gamma_eg());
        for r in &ratios {
            assert!(
                (r.re - expected).abs() < 1e-3 * expected,
                "{r} vs {expected}"
            );
            assert!(r.im.abs() < 1e-3 * expected, "{r}");
        }
    }
}
