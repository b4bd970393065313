use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::AnalysisError;
use crate::ode::linalg::{inf_norm, JAC_STEP};
use crate::ode::{jacobian, param_jacobian, FieldError, IntegratorConfig, Stepper, VectorField};
use crate::order::OrthantSignature;

fn uniform<R: Rng>(lo: &[f64], hi: &[f64], rng: &mut R) -> Vec<f64> {
    lo.iter().zip(hi).map(|(a, b)| a + rng.random::<f64>() * (b - a)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Violated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianKind {
    State,
    Param,
}

/// Off-sign Jacobian entry: `sign * d f_row / d (x|p)_col < -tol`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignWitness {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub kind: JacobianKind,
    /// 0-based.
    pub row: usize,
    pub col: usize,
    /// The signed entry `sigma_row sigma_col J_row,col`.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub verdict: Verdict,
    pub tested: usize,
    pub skipped: usize,
    /// Most negative signed entry seen (0 when none is negative).
    pub worst: f64,
    pub witness: Option<SignWitness>,
}

/// Samples of the state and parameter boxes for the sign check.
#[derive(Debug, Clone, PartialEq)]
pub struct SignCheck<'a> {
    pub state_min: &'a [f64],
    pub state_max: &'a [f64],
    pub param_min: &'a [f64],
    pub param_max: &'a [f64],
    pub sig_x: &'a OrthantSignature,
    /// Parameter columns are checked only when given; columns where the
    /// parameter box has zero width are skipped.
    pub sig_p: Option<&'a OrthantSignature>,
    pub samples: usize,
    /// Entries count as off-sign below `-tol_rel * (1 + ||J||_inf)`.
    pub tol_rel: f64,
    pub seed: u64,
}

/// Sign-pattern check of the state (and optionally parameter) Jacobian at
/// random points. A consistent verdict is sampling evidence, not a proof.
pub fn kamke_muller_check<F: VectorField + ?Sized>(vf: &F, chk: &SignCheck<'_>) -> Result<MonotonicityReport, AnalysisError> {
    let n = vf.dim();
    let m = vf.n_params();
    if chk.state_min.len() != n || chk.state_max.len() != n || chk.sig_x.len() != n {
        return Err(AnalysisError::Dimension(format!("state box or signature does not have dimension {n}")));
    }
    if chk.param_min.len() != m || chk.param_max.len() != m || chk.sig_p.is_some_and(|s| s.len() != m) {
        return Err(AnalysisError::Dimension(format!("parameter box or signature does not have dimension {m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(chk.seed);
    let points: Vec<(Vec<f64>, Vec<f64>)> = (0..chk.samples)
        .map(|_| (uniform(chk.state_min, chk.state_max, &mut rng), uniform(chk.param_min, chk.param_max, &mut rng)))
        .collect();
    let per_point: Vec<Option<(f64, Option<SignWitness>)>> = points
        .par_iter()
        .map(|(x, p)| check_point(vf, x, p, chk).ok())
        .collect();
    let mut report =
        MonotonicityReport { verdict: Verdict::Consistent, tested: 0, skipped: 0, worst: 0.0, witness: None };
    for r in per_point {
        match r {
            None => report.skipped += 1,
            Some((worst, witness)) => {
                report.tested += 1;
                report.worst = report.worst.min(worst);
                if report.witness.is_none() {
                    report.witness = witness;
                }
            }
        }
    }
    if report.skipped * 2 > chk.samples {
        return Err(AnalysisError::Inconclusive(format!(
            "{} of {} probes could not be evaluated",
            report.skipped, chk.samples
        )));
    }
    if report.witness.is_some() {
        report.verdict = Verdict::Violated;
    }
    Ok(report)
}

fn check_point<F: VectorField + ?Sized>(
    vf: &F,
    x: &[f64],
    p: &[f64],
    chk: &SignCheck<'_>,
) -> Result<(f64, Option<SignWitness>), crate::ode::OdeError> {
    let n = x.len();
    let mut worst = 0.0_f64;
    let mut witness = None;
    let j = jacobian(vf, x, p, JAC_STEP)?;
    let tol = chk.tol_rel * (1.0 + inf_norm(&j));
    for r in 0..n {
        for c in (0..n).filter(|c| *c != r) {
            let v = chk.sig_x.sign(r) * chk.sig_x.sign(c) * j[(r, c)];
            worst = worst.min(v);
            if v < -tol && witness.is_none() {
                witness = Some(SignWitness { x: x.to_vec(), p: p.to_vec(), kind: JacobianKind::State, row: r, col: c, value: v });
            }
        }
    }
    if let Some(sig_p) = chk.sig_p {
        let jp = param_jacobian(vf, x, p, JAC_STEP)?;
        let tol = chk.tol_rel * (1.0 + inf_norm(&jp));
        for r in 0..n {
            for c in (0..p.len()).filter(|c| chk.param_max[*c] > chk.param_min[*c]) {
                let v = chk.sig_x.sign(r) * sig_p.sign(c) * jp[(r, c)];
                worst = worst.min(v);
                if v < -tol && witness.is_none() {
                    witness =
                        Some(SignWitness { x: x.to_vec(), p: p.to_vec(), kind: JacobianKind::Param, row: r, col: c, value: v });
                }
            }
        }
    }
    Ok((worst, witness))
}

/// A field with its parameter vector.
#[derive(Clone, Copy)]
pub struct Instance<'a> {
    pub field: &'a dyn VectorField,
    pub params: &'a [f64],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `g <= f` failed.
    Lower,
    /// `f <= h` failed.
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonWitness {
    pub x: Vec<f64>,
    pub side: Side,
    pub component: usize,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub holds: bool,
    pub tested: usize,
    pub skipped: usize,
    /// Smallest cone-coordinate gap seen over both inequalities.
    pub worst_margin: f64,
    pub witness: Option<ComparisonWitness>,
}

/// Samples `g(x) <= f(x) <= h(x)` in the cone order on a box. Gaps above
/// `-1e-12 (1 + |f_i|)` count as rounding.
#[allow(clippy::too_many_arguments)]
pub fn comparison_check(
    g: Instance<'_>,
    f: Instance<'_>,
    h: Instance<'_>,
    box_min: &[f64],
    box_max: &[f64],
    sig: &OrthantSignature,
    samples: usize,
    seed: u64,
) -> Result<ComparisonReport, AnalysisError> {
    let n = f.field.dim();
    if g.field.dim() != n || h.field.dim() != n || sig.len() != n || box_min.len() != n || box_max.len() != n {
        return Err(AnalysisError::Dimension("comparison systems must share one dimension".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = ComparisonReport { holds: true, tested: 0, skipped: 0, worst_margin: f64::INFINITY, witness: None };
    for _ in 0..samples {
        let x = uniform(box_min, box_max, &mut rng);
        let eval = |i: Instance<'_>| i.field.eval_vec(&x, i.params);
        let (Ok(gx), Ok(fx), Ok(hx)) = (eval(g), eval(f), eval(h)) else {
            rep.skipped += 1;
            continue;
        };
        rep.tested += 1;
        for i in 0..n {
            let s = sig.sign(i);
            for (side, margin) in [(Side::Lower, s * (fx[i] - gx[i])), (Side::Upper, s * (hx[i] - fx[i]))] {
                rep.worst_margin = rep.worst_margin.min(margin);
                if margin < -1e-12 * (1.0 + fx[i].abs()) && rep.witness.is_none() {
                    rep.holds = false;
                    rep.witness = Some(ComparisonWitness { x: x.clone(), side, component: i, margin });
                }
            }
        }
    }
    if rep.tested == 0 {
        return Err(AnalysisError::Inconclusive("no comparison probe could be evaluated".into()));
    }
    Ok(rep)
}

/// `(f(x), f(y))` on the stacked state `(x, y)`.
struct Doubled<'a, F: ?Sized> {
    inner: &'a F,
}

impl<F: VectorField + ?Sized> VectorField for Doubled<'_, F> {
    fn dim(&self) -> usize {
        2 * self.inner.dim()
    }

    fn n_params(&self) -> usize {
        self.inner.n_params()
    }

    fn eval(&self, z: &[f64], p: &[f64], out: &mut [f64]) -> Result<(), FieldError> {
        let n = self.inner.dim();
        let (a, b) = out.split_at_mut(n);
        self.inner.eval(&z[..n], p, a)?;
        self.inner.eval(&z[n..], p, b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowOrderWitness {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
    pub component: usize,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowOrderReport {
    pub holds: bool,
    pub pairs: usize,
    /// Pairs whose integration failed; they are not counted as violations.
    pub failed: usize,
    /// Most negative `sigma_i (phi_i(t, y) - phi_i(t, x))` seen.
    pub worst: f64,
    pub witness: Option<FlowOrderWitness>,
}

/// Parameters of [`flow_order_test`].
#[derive(Debug, Clone, PartialEq)]
pub struct FlowOrderConfig {
    pub pairs: usize,
    pub horizon: f64,
    pub tol: f64,
    /// Upward offsets are drawn up to this fraction of each box width; each
    /// coordinate is left equal with probability one half.
    pub spread: f64,
    pub seed: u64,
    pub integrator: IntegratorConfig,
}

impl Default for FlowOrderConfig {
    fn default() -> Self {
        FlowOrderConfig {
            pairs: 100,
            horizon: 20.0,
            tol: 1e-9,
            spread: 0.1,
            seed: 0,
            integrator: IntegratorConfig::default(),
        }
    }
}

/// Integrates ordered pairs `x <= y` side by side and checks that the order
/// survives at every accepted step.
pub fn flow_order_test<F: VectorField + ?Sized>(
    vf: &F,
    p: &[f64],
    sig: &OrthantSignature,
    box_min: &[f64],
    box_max: &[f64],
    cfg: &FlowOrderConfig,
) -> Result<FlowOrderReport, AnalysisError> {
    let n = vf.dim();
    if sig.len() != n || box_min.len() != n || box_max.len() != n {
        return Err(AnalysisError::Dimension(format!("box or signature does not have dimension {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.pairs)
        .map(|_| {
            let x = uniform(box_min, box_max, &mut rng);
            let y = (0..n)
                .map(|i| {
                    let moved = rng.random::<bool>();
                    let d = rng.random::<f64>() * cfg.spread * (box_max[i] - box_min[i]);
                    if moved {
                        (x[i] + sig.sign(i) * d).clamp(box_min[i], box_max[i])
                    } else {
                        x[i]
                    }
                })
                .collect();
            (x, y)
        })
        .collect();
    let doubled = Doubled { inner: vf };
    let results: Vec<Option<(f64, Option<FlowOrderWitness>)>> = pairs
        .par_iter()
        .map(|(x, y)| {
            let z0: Vec<f64> = x.iter().chain(y).cloned().collect();
            let mut st = Stepper::new(&doubled, p, &z0, &cfg.integrator).ok()?;
            let mut worst = 0.0_f64;
            let mut witness = None;
            let mut inspect = |t: f64, z: &[f64]| {
                for i in 0..n {
                    let gap = sig.sign(i) * (z[n + i] - z[i]);
                    worst = worst.min(gap);
                    if gap < -cfg.tol && witness.is_none() {
                        witness = Some(FlowOrderWitness { x: x.clone(), y: y.clone(), t, component: i, gap });
                    }
                }
            };
            inspect(0.0, &z0);
            while st.time() < cfg.horizon {
                st.step(cfg.horizon).ok()?;
                inspect(st.time(), st.state());
                if st.diverged() {
                    break;
                }
            }
            Some((worst, witness))
        })
        .collect();
    let mut rep = FlowOrderReport { holds: true, pairs: cfg.pairs, failed: 0, worst: 0.0, witness: None };
    for r in results {
        match r {
            None => rep.failed += 1,
            Some((w, wit)) => {
                rep.worst = rep.worst.min(w);
                if rep.witness.is_none() && wit.is_some() {
                    rep.witness = wit;
                    rep.holds = false;
                }
            }
        }
    }
    Ok(rep)
}
