use basin_scope_core::ode::{find_fixed_point, flow, IntegratorConfig, LinearField, NewtonConfig, VectorField};
use basin_scope_core::system::System;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn decay_error(tol: f64) -> f64 {
    let f = LinearField::new(vec![vec![-1.0]]);
    let cfg = IntegratorConfig { rtol: tol, atol: tol, ..Default::default() };
    let x = flow(&f, &[], &[1.0], 5.0, &cfg).unwrap();
    (x[0] - (-5.0_f64).exp()).abs()
}

// Loose tolerances take only a handful of steps and sit outside the
// asymptotic regime.
#[test]
fn tighter_tolerance_shrinks_error() {
    for tol in [1e-7, 1e-8, 1e-9, 1e-10] {
        let (coarse, fine) = (decay_error(tol), decay_error(tol / 10.0));
        assert!(coarse >= 8.0 * fine, "tol {tol}: {coarse} vs {fine}");
    }
}

#[test]
fn flow_composes() {
    for name in ["toggle2d", "nonmon3", "toxin_antitoxin"] {
        let s = System::builtin(name).unwrap();
        let cfg = &s.integrator;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x: Vec<f64> = s.box_min.iter().zip(&s.box_max).map(|(a, b)| a + rng.random::<f64>() * (b - a)).collect();
            let (t, u) = (rng.random::<f64>() * 2.0, rng.random::<f64>() * 2.0);
            let direct = flow(&*s.field, &s.params, &x, t + u, cfg).unwrap();
            let mid = flow(&*s.field, &s.params, &x, u, cfg).unwrap();
            let split = flow(&*s.field, &s.params, &mid, t, cfg).unwrap();
            let scale = direct.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let bound = 10.0 * (cfg.atol + cfg.rtol * scale);
            for (a, b) in direct.iter().zip(&split) {
                assert!((a - b).abs() <= bound, "{name} x = {x:?} t = {t} s = {u}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn fixed_points_meet_the_residual_test() {
    let cfg = NewtonConfig::default();
    for name in ["toggle2d", "nonmon3", "toxin_antitoxin"] {
        let s = System::builtin(name).unwrap();
        let seeds = s.seed_grid(3).into_iter().chain(s.seeds.clone()).collect::<Vec<_>>();
        for fp in s.fixed_points(&seeds, &cfg) {
            assert!(fp.residual <= cfg.tol, "{name}: {fp:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn linear_fixed_point_is_origin(a in -3.0f64..-0.5, b in 0.0f64..0.4, c in 0.0f64..0.4, d in -3.0f64..-0.5,
                                    x0 in prop::array::uniform2(-5.0f64..5.0)) {
        let f = LinearField::new(vec![vec![a, b], vec![c, d]]);
        let fp = find_fixed_point(&f, &[], &x0, &NewtonConfig::default()).unwrap();
        prop_assert!(fp.location.iter().all(|v| v.abs() < 1e-9));
        // residual is scaled per row by max(1, ||J_i||_inf)
        let r = f.eval_vec(&fp.location, &[]).unwrap();
        let rows = [a.abs() + b, c + d.abs()];
        prop_assert!(r.iter().zip(rows).all(|(v, s)| v.abs() <= 1e-10 * s.max(1.0)));
    }
}
