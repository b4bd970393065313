//! Dense helpers on top of nalgebra: finite-difference Jacobians, balancing,
//! and the dominant eigen-triple.

use nalgebra::{DMatrix, DVector};

use super::field::{FieldError, VectorField};
use super::OdeError;

pub type Matrix = DMatrix<f64>;

/// Default relative finite-difference step.
pub const JAC_STEP: f64 = 1e-6;

/// Central-difference Jacobian; column `i` uses `h_i = step * (1 + |x_i|)`.
pub fn jacobian<F: VectorField + ?Sized>(
    vf: &F,
    x: &[f64],
    p: &[f64],
    step: f64,
) -> Result<Matrix, FieldError> {
    let n = x.len();
    let mut jac = Matrix::zeros(n, n);
    let mut probe = x.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    for i in 0..n {
        let h = step * (1.0 + x[i].abs());
        probe[i] = x[i] + h;
        vf.eval(&probe, p, &mut fp)?;
        probe[i] = x[i] - h;
        vf.eval(&probe, p, &mut fm)?;
        probe[i] = x[i];
        for r in 0..n {
            jac[(r, i)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Central-difference derivative of `f` with respect to the parameters.
pub fn param_jacobian<F: VectorField + ?Sized>(
    vf: &F,
    x: &[f64],
    p: &[f64],
    step: f64,
) -> Result<Matrix, FieldError> {
    let n = x.len();
    let m = p.len();
    let mut jac = Matrix::zeros(n, m);
    let mut probe = p.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    for k in 0..m {
        let h = step * (1.0 + p[k].abs());
        probe[k] = p[k] + h;
        vf.eval(x, &probe, &mut fp)?;
        probe[k] = p[k] - h;
        vf.eval(x, &probe, &mut fm)?;
        probe[k] = p[k];
        for r in 0..n {
            jac[(r, k)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    Ok(jac)
}

pub fn inf_norm(m: &Matrix) -> f64 {
    (0..m.nrows()).map(|r| m.row(r).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Row scale factors `max(1, ||row_i||_inf)`; rows of a stiff field that carry
/// a large time-scale factor get divided down to order one.
pub fn row_scales(m: &Matrix) -> Vec<f64> {
    (0..m.nrows()).map(|r| m.row(r).iter().fold(1.0_f64, |acc, v| acc.max(v.abs()))).collect()
}

/// 2-norm condition number of the row-equilibrated matrix.
pub fn equilibrated_condition(m: &Matrix) -> f64 {
    let scales = row_scales(m);
    let mut scaled = m.clone();
    for (r, s) in scales.iter().enumerate() {
        scaled.row_mut(r).scale_mut(1.0 / s);
    }
    let sv = scaled.singular_values();
    // rows are divided by max(1, ||row||), so the largest singular value is
    // floored at one to keep an all-tiny row from looking well conditioned
    let max = sv.iter().cloned().fold(1.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Diagonal similarity `B = D^-1 A D` with power-of-two entries that evens
/// out row and column norms. Returns `(B, d)`.
pub fn balance(a: &Matrix) -> (Matrix, Vec<f64>) {
    let n = a.nrows();
    let mut b = a.clone();
    let mut d = vec![1.0; n];
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += b[(j, i)].abs();
                    r += b[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / 2.0;
            while c < g {
                f *= 2.0;
                c *= 4.0;
            }
            g = r * 2.0;
            while c > g {
                f /= 2.0;
                c /= 4.0;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                d[i] *= f;
                for j in 0..n {
                    b[(i, j)] /= f;
                    b[(j, i)] *= f;
                }
            }
        }
        if done {
            return (b, d);
        }
    }
}

/// All eigenvalues as `(re, im)` pairs, computed on the balanced matrix.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<(f64, f64)>, OdeError> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(OdeError::NonFiniteMatrix);
    }
    let (b, _) = balance(a);
    let schur = nalgebra::linalg::Schur::try_new(b, f64::EPSILON, 10_000)
        .ok_or(OdeError::EigenNoConvergence)?;
    Ok(schur.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect())
}

/// Dominant eigenvalue with right and left eigenvectors.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SpectralData {
    /// Eigenvalue of largest real part (real by construction).
    pub lambda1: f64,
    /// Right eigenvector, unit 2-norm.
    pub v1: Vec<f64>,
    /// Left eigenvector scaled so that `w1 . v1 = 1`.
    pub w1: Vec<f64>,
    /// False when the gap to the next real part is within the tolerance.
    pub simple: bool,
    /// Full spectrum as `(re, im)`, sorted by decreasing real part.
    pub eigenvalues: Vec<(f64, f64)>,
    pub right_residual: f64,
    pub left_residual: f64,
}

impl SpectralData {
    /// Flips the sign of `v1` and `w1` so that `v1` points up the cone
    /// `diag(sigma) R^n_+`, which makes the derived eigenfunction increasing.
    pub fn orient(&mut self, sigma: &[f64]) {
        let s: f64 = self.v1.iter().zip(sigma).map(|(v, s)| v * s).sum();
        if s < 0.0 {
            self.v1.iter_mut().for_each(|v| *v = -*v);
            self.w1.iter_mut().for_each(|v| *v = -*v);
        }
    }
}

pub const SPECTRAL_GAP_TOL: f64 = 1e-8;

/// Dominant eigen-triple of `j`. Fails with [`OdeError::ComplexDominant`]
/// when the eigenvalue of largest real part is not real.
pub fn dominant_eigen(j: &Matrix, gap_tol: f64) -> Result<SpectralData, OdeError> {
    let n = j.nrows();
    let mut eig = eigenvalues(j)?;
    eig.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
    let (re1, im1) = eig[0];
    if im1.abs() > 1e-10 * (1.0 + re1.abs()) {
        return Err(OdeError::ComplexDominant { re: re1, im: im1 });
    }
    let simple = eig.get(1).is_none_or(|e| (re1 - e.0).abs() > gap_tol);

    let (b, d) = balance(j);
    let (vb, wb) = inverse_iteration(&b, re1)?;
    let mut v: Vec<f64> = vb.iter().zip(&d).map(|(v, d)| v * d).collect();
    let mut w: Vec<f64> = wb.iter().zip(&d).map(|(w, d)| w / d).collect();
    let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= vn);
    let wv: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
    if wv.abs() < 1e-300 {
        return Err(OdeError::EigenNoConvergence);
    }
    w.iter_mut().for_each(|x| *x /= wv);
    let sum: f64 = v.iter().sum();
    if sum < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
        w.iter_mut().for_each(|x| *x = -*x);
    }

    let vv = DVector::from_column_slice(&v);
    let ww = DVector::from_column_slice(&w);
    let right_residual = (j * &vv - &vv * re1).amax();
    let left_residual = (j.transpose() * &ww - &ww * re1).amax() / ww.amax().max(1e-300);
    debug_assert_eq!(v.len(), n);
    Ok(SpectralData {
        lambda1: re1,
        v1: v,
        w1: w,
        simple,
        eigenvalues: eig,
        right_residual,
        left_residual,
    })
}

fn inverse_iteration(b: &Matrix, lambda: f64) -> Result<(Vec<f64>, Vec<f64>), OdeError> {
    let n = b.nrows();
    let scale = inf_norm(b).max(1e-300);
    let mut shift = 1e-12 * (lambda.abs() + 1e-8 * scale);
    for _ in 0..8 {
        let mu = lambda + shift;
        let shifted = b - Matrix::identity(n, n) * mu;
        let lu = shifted.clone().lu();
        let lut = shifted.transpose().lu();
        let start = DVector::from_fn(n, |i, _| 1.0 + 0.1 * (i as f64 + 1.0).sqrt());
        let solve = |lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>| {
            let mut v = start.clone();
            for _ in 0..6 {
                let next = lu.solve(&v)?;
                let norm = next.norm();
                if !norm.is_finite() || norm == 0.0 {
                    return None;
                }
                v = next / norm;
            }
            Some(v)
        };
        if let (Some(v), Some(w)) = (solve(&lu), solve(&lut)) {
            return Ok((v.iter().cloned().collect(), w.iter().cloned().collect()));
        }
        shift *= 100.0;
    }
    Err(OdeError::EigenNoConvergence)
}
