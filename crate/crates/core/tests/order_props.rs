use basin_scope_core::order::{Antichain, BasinApproximation, Class, Direction, Interval, OrthantSignature};
use proptest::prelude::*;

fn signature(n: usize) -> impl Strategy<Value = OrthantSignature> {
    prop::collection::vec(prop::bool::ANY, n)
        .prop_map(|b| OrthantSignature::new(b.into_iter().map(|s| if s { 1 } else { -1 }).collect()).unwrap())
}

// Coarse values so that ties and comparable pairs are common.
fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0u8..4).prop_map(f64::from), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn leq_is_a_partial_order(sig in signature(3), x in point(3), y in point(3), z in point(3)) {
        prop_assert!(sig.leq(&x, &x));
        if sig.leq(&x, &y) && sig.leq(&y, &x) {
            prop_assert_eq!(&x, &y);
        }
        if sig.leq(&x, &y) && sig.leq(&y, &z) {
            prop_assert!(sig.leq(&x, &z));
        }
    }

    #[test]
    fn antichain_is_order_insensitive(
        sig in signature(3),
        pts in prop::collection::vec(point(3), 1..20),
        maximal in prop::bool::ANY,
        perm in Just(()).prop_perturb(|_, mut rng| rng.random::<u64>()),
    ) {
        let dir = if maximal { Direction::TrackMaximal } else { Direction::TrackMinimal };
        let build = |order: &[Vec<f64>]| {
            let mut a = Antichain::new(dir, sig.clone());
            for p in order {
                a.insert(p);
                assert!(a.is_valid());
            }
            let mut v = a.points().to_vec();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v
        };
        let mut shuffled = pts.clone();
        let mut state = perm;
        for i in (1..shuffled.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (state >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(build(&pts), build(&shuffled));
    }

    #[test]
    fn classify_respects_the_order(
        sig in signature(2),
        samples in prop::collection::vec(point(2), 0..25),
        w in point(2),
        z in point(2),
    ) {
        // values from an increasing function keep the record consistent
        let bounds = Interval::from_box(&[0.0, 0.0], &[3.0, 3.0], &sig).unwrap();
        let lower = sig.to_cone(&bounds.lower);
        let level = |p: &[f64]| u8::from(sig.to_cone(p).iter().zip(&lower).map(|(a, b)| a - b).sum::<f64>() > 2.5);
        let mut approx = BasinApproximation::new(bounds.clone(), sig.clone());
        for (k, p) in samples.iter().enumerate() {
            approx.record(k + 1, p, level(p)).unwrap();
        }
        let (lo, hi) = if sig.leq(&w, &z) { (&w, &z) } else if sig.leq(&z, &w) { (&z, &w) } else { return Ok(()) };
        if approx.classify(hi).unwrap() == Class::Known0 {
            prop_assert_eq!(approx.classify(lo).unwrap(), Class::Known0);
        }
        if approx.classify(lo).unwrap() == Class::Known1 {
            prop_assert_eq!(approx.classify(hi).unwrap(), Class::Known1);
        }
    }
}

#[test]
fn sublevel_sets_of_increasing_maps_are_order_convex() {
    let g = |i: usize, j: usize| (i as f64 + 1.0).ln() + 0.3 * j as f64 + 0.05 * (i * j) as f64;
    let n = 12;
    for alpha in [0.5, 1.0, 2.0, 3.0] {
        let inside = |i: usize, j: usize| g(i, j) < alpha;
        for (a, b) in (0..n * n).flat_map(|u| (0..n * n).map(move |v| (u, v))) {
            let (x, y) = ((a / n, a % n), (b / n, b % n));
            if !(x.0 <= y.0 && x.1 <= y.1 && inside(x.0, x.1) && inside(y.0, y.1)) {
                continue;
            }
            for i in x.0..=y.0 {
                for j in x.1..=y.1 {
                    assert!(inside(i, j), "alpha {alpha}: ({i},{j}) between {x:?} and {y:?}");
                }
            }
        }
    }
}
