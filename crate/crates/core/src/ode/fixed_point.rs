use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::field::VectorField;
use super::linalg::{
    dominant_eigen, eigenvalues, equilibrated_condition, jacobian, row_scales, Matrix, SpectralData,
    JAC_STEP, SPECTRAL_GAP_TOL,
};
use super::OdeError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonConfig {
    /// Convergence threshold on the row-scaled residual
    /// `max_i |f_i| / max(1, ||J_i||_inf)`.
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    pub jac_step: f64,
    /// Row-equilibrated condition number above which the Jacobian is
    /// treated as singular.
    pub cond_max: f64,
    /// Real parts within this margin of zero are non-hyperbolic.
    pub hyperbolicity_margin: f64,
    pub gap_tol: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            tol: 1e-10,
            max_iter: 100,
            max_halvings: 25,
            jac_step: JAC_STEP,
            cond_max: 1e12,
            hyperbolicity_margin: 1e-8,
            gap_tol: SPECTRAL_GAP_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    NonHyperbolic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPoint {
    pub location: Vec<f64>,
    /// Row-scaled residual at `location`.
    pub residual: f64,
    pub jacobian: Vec<Vec<f64>>,
    pub stability: Stability,
    /// Full spectrum as `(re, im)`, sorted by decreasing real part.
    pub eigenvalues: Vec<(f64, f64)>,
    /// Dominant eigen-triple; absent when the leading eigenvalue is complex.
    pub spectral: Option<SpectralData>,
}

impl FixedPoint {
    pub fn is_stable(&self) -> bool {
        self.stability == Stability::Stable
    }
}

fn scaled_residual(f: &[f64], scales: &[f64]) -> f64 {
    f.iter().zip(scales).fold(0.0, |m, (v, s)| m.max(v.abs() / s))
}

/// Damped Newton iteration for `f(x, p) = 0` started at `x0`.
pub fn newton<F: VectorField + ?Sized>(
    vf: &F,
    p: &[f64],
    x0: &[f64],
    cfg: &NewtonConfig,
) -> Result<Vec<f64>, OdeError> {
    let n = vf.dim();
    if x0.len() != n {
        return Err(OdeError::Dimension { expected: n, got: x0.len() });
    }
    let mut x = x0.to_vec();
    let mut fx = vf.eval_vec(&x, p)?;
    for iter in 0..cfg.max_iter {
        let j = jacobian(vf, &x, p, cfg.jac_step)?;
        let scales = row_scales(&j);
        let res = scaled_residual(&fx, &scales);
        if res < cfg.tol {
            return Ok(x);
        }
        let rhs = -DVector::from_column_slice(&fx);
        let dx = j.lu().solve(&rhs).ok_or(OdeError::SingularSystem)?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=cfg.max_halvings {
            let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + lambda * d).collect();
            if let Ok(ft) = vf.eval_vec(&trial, p) {
                if scaled_residual(&ft, &scales) < res {
                    x = trial;
                    fx = ft;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(OdeError::NewtonStalled { iterations: iter, residual: res });
        }
    }
    let j = jacobian(vf, &x, p, cfg.jac_step)?;
    let res = scaled_residual(&fx, &row_scales(&j));
    if res < cfg.tol {
        Ok(x)
    } else {
        Err(OdeError::NewtonStalled { iterations: cfg.max_iter, residual: res })
    }
}

/// Linearises at `x` and classifies the point. Does not check that `x` is an
/// equilibrium beyond reporting the residual.
pub fn classify_point<F: VectorField + ?Sized>(
    vf: &F,
    p: &[f64],
    x: &[f64],
    cfg: &NewtonConfig,
) -> Result<FixedPoint, OdeError> {
    let j: Matrix = jacobian(vf, x, p, cfg.jac_step)?;
    let cond = equilibrated_condition(&j);
    if !(cond <= cfg.cond_max) {
        return Err(OdeError::SingularJacobian { cond });
    }
    let fx = vf.eval_vec(x, p)?;
    let residual = scaled_residual(&fx, &row_scales(&j));
    let mut eig = eigenvalues(&j)?;
    eig.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
    let lead = eig[0].0;
    let stability = if lead < -cfg.hyperbolicity_margin {
        Stability::Stable
    } else if eig.iter().all(|e| e.0.abs() > cfg.hyperbolicity_margin) {
        Stability::Unstable
    } else {
        Stability::NonHyperbolic
    };
    let spectral = dominant_eigen(&j, cfg.gap_tol).ok();
    let jacobian = (0..j.nrows()).map(|r| j.row(r).iter().cloned().collect()).collect();
    Ok(FixedPoint { location: x.to_vec(), residual, jacobian, stability, eigenvalues: eig, spectral })
}

/// Newton from `x0` followed by [`classify_point`].
pub fn find_fixed_point<F: VectorField + ?Sized>(
    vf: &F,
    p: &[f64],
    x0: &[f64],
    cfg: &NewtonConfig,
) -> Result<FixedPoint, OdeError> {
    let x = newton(vf, p, x0, cfg)?;
    classify_point(vf, p, &x, cfg)
}

/// Drops points within `rel_tol * (1 + ||x||_inf)` of an earlier one.
pub fn dedup_points(points: Vec<FixedPoint>, rel_tol: f64) -> Vec<FixedPoint> {
    let mut out: Vec<FixedPoint> = Vec::new();
    for fp in points {
        let dup = out.iter().any(|q| {
            let scale = 1.0 + q.location.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            q.location.iter().zip(&fp.location).all(|(a, b)| (a - b).abs() <= rel_tol * scale)
        });
        if !dup {
            out.push(fp);
        }
    }
    out
}
