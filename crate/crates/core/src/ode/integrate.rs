//! Adaptive integration: Dormand–Prince 5(4) for non-stiff fields and the
//! stiffly accurate Rosenbrock method Rodas3 for stiff ones.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::field::VectorField;
use super::linalg::{jacobian, row_scales, Matrix, JAC_STEP};
use super::OdeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Dopri5,
    Rosenbrock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub method: Method,
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen automatically when absent.
    pub h_init: Option<f64>,
    pub h_min: f64,
    pub h_max: f64,
    /// Integration horizon used by [`integrate`] when no end time is given.
    pub t_max: f64,
    /// Trajectories leaving the ball `||x||_inf <= r_max` are reported diverged.
    pub r_max: f64,
    /// A state counts as at rest when its row-scaled speed
    /// `max_i |f_i| / max(1, ||J_i||_inf)` is below `fp_detect * (1 + ||x||_inf)`.
    pub fp_detect: f64,
    /// Number of consecutive resting steps before stopping.
    pub settle: usize,
    pub max_steps: usize,
    pub jac_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::Dopri5,
            rtol: 1e-8,
            atol: 1e-10,
            h_init: None,
            h_min: 1e-14,
            h_max: f64::INFINITY,
            t_max: 200.0,
            r_max: 1e6,
            fp_detect: 1e-9,
            settle: 5,
            max_steps: 1_000_000,
            jac_step: JAC_STEP,
        }
    }
}

impl IntegratorConfig {
    pub fn stiff() -> Self {
        IntegratorConfig { method: Method::Rosenbrock, ..Default::default() }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

// Rodas3 tableau (stiffly accurate, L-stable, order 3), stage form
// (I/(gamma h) - J) k_i = f(y + sum a_ij k_j) + sum c_ij k_j / h.
const R_GAMMA: f64 = 0.5;
const R_A: [[f64; 3]; 4] = [[0.0; 3], [0.0; 3], [2.0, 0.0, 0.0], [2.0, 0.0, 1.0]];
const R_C: [[f64; 3]; 4] =
    [[0.0; 3], [4.0, 0.0, 0.0], [1.0, -1.0, 0.0], [1.0, -1.0, -8.0 / 3.0]];
const R_M: [f64; 4] = [2.0, 0.0, 1.0, 1.0];
const R_E: [f64; 4] = [0.0, 0.0, 0.0, 1.0];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Single-trajectory integrator state. Steps never pass a requested time, so
/// sample times are hit exactly.
pub struct Stepper<'a, F: VectorField + ?Sized> {
    vf: &'a F,
    p: &'a [f64],
    cfg: IntegratorConfig,
    t: f64,
    x: Vec<f64>,
    fx: Vec<f64>,
    h: f64,
    err_prev: f64,
    rejected: bool,
    steps: usize,
    speed: f64,
    resting: usize,
}

impl<'a, F: VectorField + ?Sized> Stepper<'a, F> {
    pub fn new(vf: &'a F, p: &'a [f64], x0: &[f64], cfg: &IntegratorConfig) -> Result<Self, OdeError> {
        if x0.len() != vf.dim() {
            return Err(OdeError::Dimension { expected: vf.dim(), got: x0.len() });
        }
        let fx = vf.eval_vec(x0, p)?;
        let mut s = Stepper {
            vf,
            p,
            cfg: cfg.clone(),
            t: 0.0,
            x: x0.to_vec(),
            speed: inf_norm(&fx),
            fx,
            h: 0.0,
            err_prev: 1e-4,
            rejected: false,
            steps: 0,
            resting: 0,
        };
        s.h = match cfg.h_init {
            Some(h) => h,
            None => s.initial_step()?,
        }
        .min(cfg.h_max);
        Ok(s)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &[f64] {
        &self.x
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Row-scaled speed at the current state, see [`IntegratorConfig::fp_detect`].
    pub fn speed(&self) -> f64 {
        self.speed
    }

    /// True once the state has been at rest for `settle` consecutive steps.
    pub fn at_rest(&self) -> bool {
        self.resting >= self.cfg.settle.max(1)
    }

    pub fn diverged(&self) -> bool {
        inf_norm(&self.x) > self.cfg.r_max
    }

    fn scale(&self, i: usize, xnew: f64) -> f64 {
        self.cfg.atol + self.cfg.rtol * self.x[i].abs().max(xnew.abs())
    }

    fn initial_step(&self) -> Result<f64, OdeError> {
        let n = self.x.len();
        let sc: Vec<f64> = (0..n).map(|i| self.cfg.atol + self.cfg.rtol * self.x[i].abs()).collect();
        let d0 = (0..n).map(|i| (self.x[i] / sc[i]).abs()).fold(0.0, f64::max);
        let d1 = (0..n).map(|i| (self.fx[i] / sc[i]).abs()).fold(0.0, f64::max);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let x1: Vec<f64> = (0..n).map(|i| self.x[i] + h0 * self.fx[i]).collect();
        let d2 = match self.vf.eval_vec(&x1, self.p) {
            Ok(f1) => (0..n).map(|i| ((f1[i] - self.fx[i]) / sc[i]).abs()).fold(0.0, f64::max) / h0,
            Err(_) => return Ok(h0 * 1e-3),
        };
        let order = match self.cfg.method {
            Method::Dopri5 => 5.0,
            Method::Rosenbrock => 3.0,
        };
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / order)
        };
        Ok((100.0 * h0).min(h1))
    }

    /// Takes one accepted step, not going past `t_limit`.
    pub fn step(&mut self, t_limit: f64) -> Result<(), OdeError> {
        if self.steps >= self.cfg.max_steps {
            return Err(OdeError::MaxSteps { t: self.t });
        }
        let jac = match self.cfg.method {
            Method::Rosenbrock => Some(jacobian(self.vf, &self.x, self.p, self.cfg.jac_step)?),
            Method::Dopri5 => None,
        };
        loop {
            let remaining = t_limit - self.t;
            if remaining <= 0.0 {
                return Ok(());
            }
            let h_min = self.cfg.h_min.max(4.0 * f64::EPSILON * self.t.abs());
            if self.h < h_min {
                return Err(OdeError::StepUnderflow { t: self.t, h: self.h });
            }
            let h = self.h.min(remaining);
            let last = h == remaining;
            let trial = match self.cfg.method {
                Method::Dopri5 => self.try_dopri(h),
                Method::Rosenbrock => self.try_rosenbrock(h, jac.as_ref().expect("computed above")),
            };
            let Some((xnew, fnew, err)) = trial else {
                self.h = h * FAC_MIN;
                self.rejected = true;
                continue;
            };
            if err <= 1.0 {
                let fac = match self.cfg.method {
                    Method::Dopri5 => {
                        SAFETY * err.max(1e-10).powf(-0.7 / 5.0) * self.err_prev.powf(0.4 / 5.0)
                    }
                    Method::Rosenbrock => SAFETY * err.max(1e-10).powf(-1.0 / 3.0),
                };
                let mut fac = fac.clamp(FAC_MIN, FAC_MAX);
                if self.rejected {
                    fac = fac.min(1.0);
                }
                self.err_prev = err.max(1e-4);
                self.rejected = false;
                let fnorm = inf_norm(&fnew);
                let xnorm = inf_norm(&xnew);
                // Integration noise keeps |f| well above zero on rows with
                // large coefficients, so rest is judged on the scaled residual.
                let scales = match &jac {
                    Some(j) => Some(row_scales(j)),
                    None if fnorm < 1e-3 * (1.0 + xnorm) => {
                        Some(row_scales(&jacobian(self.vf, &xnew, self.p, self.cfg.jac_step)?))
                    }
                    None => None,
                };
                self.speed = match scales {
                    Some(sc) => fnew.iter().zip(&sc).fold(0.0, |m, (f, s)| m.max(f.abs() / s)),
                    None => fnorm,
                };
                self.t = if last { t_limit } else { self.t + h };
                self.x = xnew;
                self.fx = fnew;
                self.steps += 1;
                // A truncated final step says nothing about the natural step size.
                if !last || fac < 1.0 {
                    self.h = (h * fac).min(self.cfg.h_max);
                }
                if self.speed < self.cfg.fp_detect * (1.0 + inf_norm(&self.x)) {
                    self.resting += 1;
                } else {
                    self.resting = 0;
                }
                return Ok(());
            }
            let exponent = match self.cfg.method {
                Method::Dopri5 => -0.2,
                Method::Rosenbrock => -1.0 / 3.0,
            };
            self.h = h * (SAFETY * err.powf(exponent)).clamp(FAC_MIN, 1.0);
            self.rejected = true;
        }
    }

    fn try_dopri(&self, h: f64) -> Option<(Vec<f64>, Vec<f64>, f64)> {
        let n = self.x.len();
        let mut k: [Vec<f64>; 7] = Default::default();
        k[0] = self.fx.clone();
        let mut y = vec![0.0; n];
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                y[i] = self.x[i] + h * acc;
            }
            debug_assert!(C[s] >= 0.0);
            k[s] = self.vf.eval_vec(&y, self.p).ok()?;
        }
        // Stage 7 is evaluated at the 5th-order solution.
        let xnew = y;
        let mut err: f64 = 0.0;
        for i in 0..n {
            let e: f64 = (0..7).map(|s| E[s] * k[s][i]).sum::<f64>() * h;
            err = err.max((e / self.scale(i, xnew[i])).abs());
        }
        if !err.is_finite() {
            return None;
        }
        let fnew = std::mem::take(&mut k[6]);
        Some((xnew, fnew, err))
    }

    fn try_rosenbrock(&self, h: f64, j: &Matrix) -> Option<(Vec<f64>, Vec<f64>, f64)> {
        let n = self.x.len();
        let m = Matrix::identity(n, n) / (R_GAMMA * h) - j;
        let lu = m.lu();
        let y0 = DVector::from_column_slice(&self.x);
        let f0 = DVector::from_column_slice(&self.fx);
        let mut ks: Vec<DVector<f64>> = Vec::with_capacity(4);
        for s in 0..4 {
            let mut rhs = if R_A[s].iter().all(|a| *a == 0.0) {
                f0.clone()
            } else {
                let mut y = y0.clone();
                for (j, k) in ks.iter().enumerate() {
                    y += k * R_A[s][j];
                }
                DVector::from_vec(self.vf.eval_vec(y.as_slice(), self.p).ok()?)
            };
            for (j, k) in ks.iter().enumerate() {
                rhs += k * (R_C[s][j] / h);
            }
            ks.push(lu.solve(&rhs)?);
        }
        let mut xnew = y0;
        let mut e = DVector::zeros(n);
        for s in 0..4 {
            xnew += &ks[s] * R_M[s];
            e += &ks[s] * R_E[s];
        }
        let xnew: Vec<f64> = xnew.iter().cloned().collect();
        let mut err: f64 = 0.0;
        for i in 0..n {
            err = err.max((e[i] / self.scale(i, xnew[i])).abs());
        }
        if !err.is_finite() || xnew.iter().any(|v| !v.is_finite()) {
            return None;
        }
        if err > 1.0 {
            return Some((xnew, Vec::new(), err));
        }
        let fnew = self.vf.eval_vec(&xnew, self.p).ok()?;
        Some((xnew, fnew, err))
    }

    /// Steps until `t_target` is reached exactly.
    pub fn advance_to(&mut self, t_target: f64) -> Result<(), OdeError> {
        while self.t < t_target {
            self.step(t_target)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryStatus {
    Completed,
    ConvergedToPoint,
    Diverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub status: TrajectoryStatus,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory holds the initial state")
    }
}

/// Integrates from `x0` up to `t_end`, recording every accepted step.
/// Stops early once the state is at rest or has left the `r_max` ball.
pub fn integrate<F: VectorField + ?Sized>(
    vf: &F,
    p: &[f64],
    x0: &[f64],
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, OdeError> {
    let mut st = Stepper::new(vf, p, x0, cfg)?;
    let mut times = vec![0.0];
    let mut states = vec![x0.to_vec()];
    let mut status = TrajectoryStatus::Completed;
    while st.time() < t_end {
        st.step(t_end)?;
        times.push(st.time());
        states.push(st.state().to_vec());
        if st.diverged() {
            status = TrajectoryStatus::Diverged;
            break;
        }
        if st.at_rest() {
            status = TrajectoryStatus::ConvergedToPoint;
            break;
        }
    }
    Ok(Trajectory { times, states, status })
}

/// Flow map `phi(t, x0)` with no early stopping.
pub fn flow<F: VectorField + ?Sized>(
    vf: &F,
    p: &[f64],
    x0: &[f64],
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>, OdeError> {
    let mut st = Stepper::new(vf, p, x0, cfg)?;
    st.advance_to(t)?;
    Ok(st.state().to_vec())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "verdict")]
pub enum ConvergenceVerdict {
    Converged,
    ConvergedElsewhere { point: Vec<f64> },
    Diverged,
    Undecided,
}

/// Integrates for `cfg.t_max` and reports whether the trajectory settles
/// within `tol * (1 + ||target||_inf)` of `target`.
pub fn converges_to<F: VectorField + ?Sized>(
    vf: &F,
    p: &[f64],
    x0: &[f64],
    target: &[f64],
    tol: f64,
    cfg: &IntegratorConfig,
) -> Result<ConvergenceVerdict, OdeError> {
    let radius = tol * (1.0 + inf_norm(target));
    let near = |x: &[f64]| x.iter().zip(target).all(|(a, b)| (a - b).abs() <= radius);
    let mut st = Stepper::new(vf, p, x0, cfg)?;
    while st.time() < cfg.t_max {
        st.step(cfg.t_max)?;
        if st.diverged() {
            return Ok(ConvergenceVerdict::Diverged);
        }
        if near(st.state()) {
            return Ok(ConvergenceVerdict::Converged);
        }
        if st.at_rest() {
            return Ok(ConvergenceVerdict::ConvergedElsewhere { point: st.state().to_vec() });
        }
    }
    Ok(ConvergenceVerdict::Undecided)
}
