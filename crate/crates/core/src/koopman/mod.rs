//! Dominant Koopman eigenfunction `s1` and the membership oracles built on it.
//!
//! `s1` is estimated from `h(t) = g(phi(t, x)) e^{-lambda1 t}` with the linear
//! observable `g(x) = w1 . (x - x*)`. The flow is integrated in coordinates
//! centred on `x*` with a tightened absolute tolerance, so the error in `g`
//! stays relative to `g` as the trajectory closes in on `x*`.
//!
//! For a simple, real `lambda1` the value of `h` settles to `s1(x)` once the slower modes have died out; the time average
//! of `h` has the same limit and is kept as an alternative estimator.

mod oracle;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ode::{FixedPoint, IntegratorConfig, OdeError, ShiftedField, Stepper, VectorField};

pub use oracle::{
    oracle_basin, oracle_isostable, BasinTarget, IsostableMode, OracleOutcome,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KoopmanError {
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("fixed point is not a stable hyperbolic point")]
    NotStable,
    #[error("no real dominant eigen-triple at the fixed point")]
    NoSpectralData,
    #[error("invalid argument: {0}")]
    Argument(String),
}

/// `g(x) = w1 . (x - x*)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observable {
    pub x_star: Vec<f64>,
    pub w1: Vec<f64>,
    pub lambda1: f64,
    /// False when the leading eigenvalue is not separated from the next one;
    /// level sets of the estimate are then one choice among many.
    pub simple: bool,
}

impl Observable {
    /// Builds the observable from a stable point, orienting `v1` up the cone
    /// of `sigma` so that the resulting `s1` is increasing.
    pub fn from_fixed_point(fp: &FixedPoint, sigma: Option<&[f64]>) -> Result<Self, KoopmanError> {
        if !fp.is_stable() {
            return Err(KoopmanError::NotStable);
        }
        let mut sd = fp.spectral.clone().ok_or(KoopmanError::NoSpectralData)?;
        if let Some(s) = sigma {
            sd.orient(s);
        }
        Ok(Observable { x_star: fp.location.clone(), w1: sd.w1, lambda1: sd.lambda1, simple: sd.simple })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.w1.iter().zip(x.iter().zip(&self.x_star)).map(|(w, (a, b))| w * (a - b)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LaplaceMode {
    /// Plateau of `h(t)`.
    #[default]
    Plateau,
    /// Plateau of the running time average of `h`.
    RunningAverage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LaplaceConfig {
    pub t_max: f64,
    /// Sample spacing; `0.1 / |lambda1|` when absent.
    pub dt_sample: Option<f64>,
    pub plateau_rtol: f64,
    pub plateau_count: usize,
    /// `|h|` beyond this marks the point as outside the basin.
    pub cap: f64,
    /// Absolute floor in the plateau test.
    pub eps0: f64,
    /// Once `|g|` falls below this the state is treated as linearised and the
    /// current `h` is returned. Defaults to `10 ||w1||_1 atol' / plateau_rtol`
    /// where `atol'` is the tightened absolute tolerance.
    pub noise_floor: Option<f64>,
    /// Factor applied to the integrator's absolute tolerance.
    pub atol_factor: f64,
    pub mode: LaplaceMode,
}

impl Default for LaplaceConfig {
    fn default() -> Self {
        LaplaceConfig {
            t_max: 100.0,
            dt_sample: None,
            plateau_rtol: 1e-6,
            plateau_count: 3,
            cap: 1e9,
            eps0: 1e-12,
            noise_floor: None,
            atol_factor: 1e-3,
            mode: LaplaceMode::Plateau,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplaceStatus {
    Plateau,
    HorizonHit,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenfunctionValue {
    /// `+inf` when the point is outside the basin.
    pub value: f64,
    pub converged: bool,
    pub status: LaplaceStatus,
    /// Integration time used.
    pub t_end: f64,
}

impl EigenfunctionValue {
    fn diverged(t_end: f64) -> Self {
        EigenfunctionValue { value: f64::INFINITY, converged: false, status: LaplaceStatus::Diverged, t_end }
    }

    /// Finite value when the estimate converged.
    pub fn finite(&self) -> Option<f64> {
        self.converged.then_some(self.value)
    }
}

/// Estimates `s1(x)`.
pub fn laplace_eigenfunction<F: VectorField + ?Sized>(
    vf: &F,
    p: &[f64],
    x: &[f64],
    obs: &Observable,
    cfg: &LaplaceConfig,
    icfg: &IntegratorConfig,
) -> Result<EigenfunctionValue, KoopmanError> {
    let lambda = obs.lambda1;
    if !(lambda < 0.0) {
        return Err(KoopmanError::Argument(format!("lambda1 = {lambda} is not negative")));
    }
    if cfg.plateau_count < 2 {
        return Err(KoopmanError::Argument("plateau_count must be at least 2".into()));
    }
    let dt = cfg.dt_sample.unwrap_or(0.1 / lambda.abs());
    if !(dt > 0.0) {
        return Err(KoopmanError::Argument("dt_sample must be positive".into()));
    }
    let icfg = IntegratorConfig { atol: icfg.atol * cfg.atol_factor, ..icfg.clone() };
    let floor = cfg.noise_floor.unwrap_or_else(|| {
        let wnorm: f64 = obs.w1.iter().map(|w| w.abs()).sum();
        10.0 * wnorm * icfg.atol / cfg.plateau_rtol
    });
    let shifted = ShiftedField::new(vf, obs.x_star.clone());
    let y0: Vec<f64> = x.iter().zip(&obs.x_star).map(|(a, b)| a - b).collect();
    let g_of = |y: &[f64]| obs.w1.iter().zip(y).map(|(w, v)| w * v).sum::<f64>();

    let g0 = obs.eval(x);
    let mut prev = g0;
    let mut integral = 0.0;
    let mut h_prev = g0;
    let mut streak = 0;
    if g0 == 0.0 {
        return Ok(EigenfunctionValue { value: 0.0, converged: true, status: LaplaceStatus::Plateau, t_end: 0.0 });
    }
    let mut st = match Stepper::new(&shifted, p, &y0, &icfg) {
        Ok(s) => s,
        Err(OdeError::Field(_)) => return Ok(EigenfunctionValue::diverged(0.0)),
        Err(e) => return Err(e.into()),
    };
    let mut k = 0usize;
    loop {
        k += 1;
        let t = k as f64 * dt;
        if t > cfg.t_max * (1.0 + 1e-12) {
            return Ok(EigenfunctionValue {
                value: prev,
                converged: false,
                status: LaplaceStatus::HorizonHit,
                t_end: st.time(),
            });
        }
        while st.time() < t {
            match st.step(t) {
                Ok(()) => {}
                Err(OdeError::Field(_)) => return Ok(EigenfunctionValue::diverged(st.time())),
                Err(e) => return Err(e.into()),
            }
            if st.diverged() {
                return Ok(EigenfunctionValue::diverged(st.time()));
            }
        }
        let g = g_of(st.state());
        let h = g * (-lambda * t).exp();
        if !h.is_finite() || h.abs() > cfg.cap {
            return Ok(EigenfunctionValue::diverged(t));
        }
        let estimate = match cfg.mode {
            LaplaceMode::Plateau => h,
            LaplaceMode::RunningAverage => {
                integral += 0.5 * (h + h_prev) * dt;
                integral / t
            }
        };
        h_prev = h;
        if matches!(cfg.mode, LaplaceMode::Plateau) && g.abs() < floor {
            return Ok(EigenfunctionValue { value: h, converged: true, status: LaplaceStatus::Plateau, t_end: t });
        }
        if (estimate - prev).abs() <= cfg.plateau_rtol * (estimate.abs() + cfg.eps0) {
            streak += 1;
            if streak >= cfg.plateau_count {
                return Ok(EigenfunctionValue {
                    value: estimate,
                    converged: true,
                    status: LaplaceStatus::Plateau,
                    t_end: t,
                });
            }
        } else {
            streak = 0;
        }
        prev = estimate;
    }
}

/// Time to travel from isostable `alpha1` to `alpha2`: `ln(alpha1 / alpha2) / |lambda1|`.
pub fn isostable_transit_time(alpha1: f64, alpha2: f64, lambda1: f64) -> Result<f64, KoopmanError> {
    if !(alpha1 > 0.0 && alpha2 > 0.0) {
        return Err(KoopmanError::Argument("isostable levels must be positive".into()));
    }
    if !(lambda1 < 0.0) {
        return Err(KoopmanError::Argument(format!("lambda1 = {lambda1} is not negative")));
    }
    Ok((alpha1 / alpha2).ln() / lambda1.abs())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub max_residual: f64,
    pub residuals: Vec<f64>,
    /// Indices of probes where some stencil value was not finite.
    pub rejected: Vec<usize>,
}

/// Checks `f(x) . grad s1(x) = lambda1 s1(x)` with central differences,
/// steps `fd_step * (1 + |x_i|)`. Residuals are relative:
/// `|f . grad s1 - lambda1 s1| / (|lambda1 s1| + eps0)`.
pub fn validate_eigenfunction<F, S>(
    vf: &F,
    p: &[f64],
    lambda1: f64,
    mut s1: S,
    probes: &[Vec<f64>],
    fd_step: f64,
    eps0: f64,
) -> Result<ValidationReport, KoopmanError>
where
    F: VectorField + ?Sized,
    S: FnMut(&[f64]) -> Option<f64>,
{
    let mut residuals = Vec::new();
    let mut rejected = Vec::new();
    'probe: for (idx, x) in probes.iter().enumerate() {
        let Some(centre) = s1(x) else {
            rejected.push(idx);
            continue;
        };
        let fx = vf.eval_vec(x, p).map_err(OdeError::from)?;
        let mut directional = 0.0;
        let mut probe = x.clone();
        for i in 0..x.len() {
            let h = fd_step * (1.0 + x[i].abs());
            probe[i] = x[i] + h;
            let plus = s1(&probe);
            probe[i] = x[i] - h;
            let minus = s1(&probe);
            probe[i] = x[i];
            let (Some(a), Some(b)) = (plus, minus) else {
                rejected.push(idx);
                continue 'probe;
            };
            directional += fx[i] * (a - b) / (2.0 * h);
        }
        let target = lambda1 * centre;
        residuals.push((directional - target).abs() / (target.abs() + eps0));
    }
    let max_residual = residuals.iter().cloned().fold(0.0, f64::max);
    Ok(ValidationReport { max_residual, residuals, rejected })
}
