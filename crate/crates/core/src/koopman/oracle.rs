use serde::{Deserialize, Serialize};

use super::{laplace_eigenfunction, LaplaceConfig, LaplaceStatus, Observable};
use crate::ode::{IntegratorConfig, OdeError, Stepper, VectorField};

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Attractor and stopping rules for the basin oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct BasinTarget {
    pub x_star: Vec<f64>,
    /// Absolute radius of the ball around `x_star` (and around each rival).
    pub prox: f64,
    /// Other attractors; entering one of their balls ends the run with 1.
    pub rivals: Vec<Vec<f64>>,
    pub horizon: f64,
    pub integrator: IntegratorConfig,
}

impl BasinTarget {
    /// Radius `prox_rel * (1 + ||x_star||_inf)`.
    pub fn new(x_star: Vec<f64>, prox_rel: f64, horizon: f64, integrator: IntegratorConfig) -> Self {
        let prox = prox_rel * (1.0 + inf_norm(&x_star));
        BasinTarget { x_star, prox, rivals: Vec::new(), horizon, integrator }
    }

    pub fn with_rivals(mut self, rivals: Vec<Vec<f64>>) -> Self {
        self.rivals = rivals;
        self
    }

    fn near(&self, centre: &[f64], x: &[f64]) -> bool {
        centre.iter().zip(x).all(|(a, b)| (a - b).abs() < self.prox)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleOutcome {
    pub value: u8,
    /// False when the answer came from a fallback (horizon reached, failed
    /// integration, inconclusive eigenfunction estimate).
    pub confident: bool,
    pub warning: Option<String>,
}

impl OracleOutcome {
    pub fn certain(value: u8) -> Self {
        OracleOutcome { value, confident: true, warning: None }
    }

    pub fn uncertain(value: u8, warning: String) -> Self {
        OracleOutcome { value, confident: false, warning: Some(warning) }
    }
}

/// How the isostable level is compared with `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum IsostableMode {
    /// `|s1(z)| < alpha`.
    #[default]
    Abs,
    /// `s1(z) < alpha`; increasing for every `alpha`, including `alpha <= 0`.
    Signed,
}

/// 0 when the trajectory from `z` enters the `prox` ball of `x_star`, 1 otherwise.
pub fn oracle_basin<F: VectorField + ?Sized>(vf: &F, p: &[f64], z: &[f64], target: &BasinTarget) -> OracleOutcome {
    if target.near(&target.x_star, z) {
        return OracleOutcome::certain(0);
    }
    let mut st = match Stepper::new(vf, p, z, &target.integrator) {
        Ok(s) => s,
        Err(e) => return OracleOutcome::uncertain(1, format!("integration failed at start: {e}")),
    };
    while st.time() < target.horizon {
        if let Err(e) = st.step(target.horizon) {
            return match e {
                // a non-finite field value means the state has escaped
                OdeError::Field(_) => OracleOutcome::certain(1),
                e => OracleOutcome::uncertain(1, format!("integration failed: {e}")),
            };
        }
        let x = st.state();
        if target.near(&target.x_star, x) {
            return OracleOutcome::certain(0);
        }
        if st.diverged() || target.rivals.iter().any(|r| target.near(r, x)) {
            return OracleOutcome::certain(1);
        }
        if st.at_rest() {
            return OracleOutcome::certain(1);
        }
    }
    OracleOutcome::uncertain(1, format!("no decision by t = {}", target.horizon))
}

/// 0 when `z` lies in the basin of `x_star` and its isostable level is below `alpha`.
#[allow(clippy::too_many_arguments)]
pub fn oracle_isostable<F: VectorField + ?Sized>(
    vf: &F,
    p: &[f64],
    z: &[f64],
    obs: &Observable,
    cfg: &LaplaceConfig,
    alpha: f64,
    mode: IsostableMode,
    target: &BasinTarget,
) -> OracleOutcome {
    let basin = oracle_basin(vf, p, z, target);
    if basin.value == 1 {
        return basin;
    }
    let est = match laplace_eigenfunction(vf, p, z, obs, cfg, &target.integrator) {
        Ok(v) => v,
        Err(e) => return OracleOutcome::uncertain(1, format!("eigenfunction estimate failed: {e}")),
    };
    match est.status {
        LaplaceStatus::Plateau => {}
        LaplaceStatus::HorizonHit => {
            return OracleOutcome::uncertain(1, format!("eigenfunction estimate inconclusive at t = {}", est.t_end))
        }
        LaplaceStatus::Diverged => return OracleOutcome::certain(1),
    }
    let inside = match mode {
        IsostableMode::Abs => est.value.abs() < alpha,
        IsostableMode::Signed => est.value < alpha,
    };
    OracleOutcome { value: u8::from(!inside), confident: basin.confident, warning: None }
}
