//! Shared fixtures for the kernel benchmarks.

use basin_scope_core::koopman::BasinTarget;
use basin_scope_core::ode::NewtonConfig;
use basin_scope_core::system::System;

/// A builtin system with the basin target of the stable point reached from
/// the lower order corner of its box.
pub fn fixture(name: &str) -> (System, BasinTarget) {
    let sys = System::builtin(name).expect("builtin");
    let cfg = NewtonConfig::default();
    let x_star = sys.attractor_from(&sys.interval().lower, &cfg).expect("attractor").location;
    let target = sys.basin_target(&x_star, &cfg);
    (sys, target)
}

/// `n` points spread over the box `[lo, hi]` by an additive recurrence.
pub fn scattered(n: usize, lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
    let step: Vec<f64> = (0..lo.len()).map(|i| ((i + 2) as f64).sqrt().fract()).collect();
    (1..=n)
        .map(|k| {
            (0..lo.len())
                .map(|i| lo[i] + (hi[i] - lo[i]) * (k as f64 * step[i]).fract())
                .collect()
        })
        .collect()
}
