use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::order::Interval;
use crate::sampler::{Oracle, OracleOutcome};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContainmentViolation {
    pub point: Vec<f64>,
    /// Oracle values `(outer, mid, inner)`.
    pub values: [u8; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContainmentReport {
    /// Confidently classified samples on which the chain was checked.
    pub tested: usize,
    /// Samples where some oracle fell back to a default answer.
    pub excluded: usize,
    pub violations: Vec<ContainmentViolation>,
}

impl ContainmentReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn excluded_fraction(&self) -> f64 {
        let total = self.tested + self.excluded;
        if total == 0 {
            0.0
        } else {
            self.excluded as f64 / total as f64
        }
    }
}

/// Checks `inner(z) = 0 => mid(z) = 0 => outer(z) = 0` on uniform box samples
/// until `target` confidently classified points are collected or `max_draws`
/// points have been drawn.
pub fn containment_test(
    outer: &dyn Oracle,
    mid: &dyn Oracle,
    inner: &dyn Oracle,
    bounds: &Interval,
    target: usize,
    max_draws: usize,
    seed: u64,
) -> ContainmentReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = ContainmentReport { tested: 0, excluded: 0, violations: Vec::new() };
    let mut drawn = 0;
    while rep.tested < target && drawn < max_draws {
        let want = (target - rep.tested).min(max_draws - drawn);
        let pts: Vec<Vec<f64>> = (0..want).map(|_| bounds.sample(&mut rng)).collect();
        drawn += want;
        let outs: Vec<[OracleOutcome; 3]> =
            pts.par_iter().map(|z| [outer.eval(z), mid.eval(z), inner.eval(z)]).collect();
        for (z, o) in pts.into_iter().zip(outs) {
            if rep.tested >= target {
                break;
            }
            if o.iter().any(|x| !x.confident) {
                rep.excluded += 1;
                continue;
            }
            rep.tested += 1;
            let [a, b, c] = [o[0].value, o[1].value, o[2].value];
            if (c == 0 && b != 0) || (b == 0 && a != 0) {
                rep.violations.push(ContainmentViolation { point: z, values: [a, b, c] });
            }
        }
    }
    rep
}
