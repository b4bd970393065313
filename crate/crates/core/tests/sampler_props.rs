use basin_scope_core::order::{BasinApproximation, Interval, OrthantSignature};
use basin_scope_core::sampler::{audit, run_sampler, OracleOutcome, SamplerConfig, SamplerRun, Strategy};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn unit(sig: &OrthantSignature) -> Interval {
    let n = sig.len();
    Interval::from_box(&vec![0.0; n], &vec![1.0; n], sig).unwrap()
}

/// Increasing under `sig`: distance from the lower order corner in cone
/// coordinates exceeds `t`.
fn tilted(sig: &OrthantSignature, t: f64) -> impl Fn(&[f64]) -> OracleOutcome + Send + Sync + '_ {
    move |z: &[f64]| {
        let d: f64 = (0..z.len()).map(|i| if sig.sign(i) > 0.0 { z[i] } else { 1.0 - z[i] }).sum();
        OracleOutcome::certain(u8::from(d > t))
    }
}

fn replay_is_valid(run: &SamplerRun) -> bool {
    let mut a = BasinApproximation::new(run.approx.bounds.clone(), run.approx.sig.clone());
    run.approx.log.iter().skip(2).all(|r| a.record(r.iter, &r.point, r.value).is_ok() && a.is_valid())
}

fn smoothed_non_increasing(run: &SamplerRun) -> bool {
    let v: Vec<f64> = run.history.iter().map(|h| h.undecided).collect();
    let w = 10.min(v.len());
    let means: Vec<f64> = v.windows(w).map(|s| s.iter().sum::<f64>() / w as f64).collect();
    means.windows(2).all(|p| p[1] <= p[0] + 1e-12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn covers_bracket_the_truth(signs in prop::collection::vec(prop::bool::ANY, 2), t in 0.3f64..1.7, seed in 0u64..1000) {
        let sig = OrthantSignature::new(signs.into_iter().map(|s| if s { 1 } else { -1 }).collect()).unwrap();
        let oracle = tilted(&sig, t);
        let cfg = SamplerConfig { budget: 200, v_stop: 0.0, seed, ..Default::default() };
        let run = run_sampler(&oracle, unit(&sig), sig.clone(), &cfg).unwrap();
        prop_assert!(run.approx.is_valid());
        prop_assert!(replay_is_valid(&run));
        prop_assert!(smoothed_non_increasing(&run));
        prop_assert!(audit(&run.approx, &oracle, 1.0, seed).is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..2000 {
            let z = run.approx.bounds.sample(&mut rng);
            let truth = oracle(&z).value;
            if run.approx.in_inner(&z) {
                prop_assert_eq!(truth, 0);
            }
            if !run.approx.in_outer(&z) {
                prop_assert_eq!(truth, 1);
            }
        }
    }

    #[test]
    fn learning_rate_respects_its_call_cap(t in 0.05f64..0.95, floor in prop::sample::select(vec![1e-2, 5e-3, 1e-3])) {
        let sig = OrthantSignature::positive(1);
        let oracle = tilted(&sig, t);
        let cfg = SamplerConfig {
            budget: 100_000,
            v_stop: 0.0,
            strategy: Strategy::LearningRate,
            lr_min: Some(floor),
            lr_probes: 64,
            ..Default::default()
        };
        let run = run_sampler(&oracle, unit(&sig), sig.clone(), &cfg).unwrap();
        // each accepted point is at least `floor` from both covers, so the
        // gap shrinks by at least `floor` per call
        prop_assert!(run.evaluations as f64 <= 1.0 / floor, "{} calls", run.evaluations);
        prop_assert!(audit(&run.approx, &oracle, 1.0, 0).is_empty());
    }
}
