use serde::Serialize;

use super::AnalysisError;
use crate::ode::{converges_to, ConvergenceVerdict, FixedPoint, IntegratorConfig, NewtonConfig};
use crate::order::OrthantSignature;
use crate::system::System;

/// The two stable points of a bistable system: `x_star` reached from the
/// lower box corner, `x_bullet` from the upper one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BistablePair {
    pub x_star: FixedPoint,
    pub x_bullet: FixedPoint,
}

/// Finds the stable points reached from the two order-extreme box corners.
pub fn locate_bistable_pair(sys: &System, cfg: &NewtonConfig) -> Result<BistablePair, AnalysisError> {
    let b = sys.interval();
    let find = |corner: &[f64], which: &'static str| {
        sys.attractor_from(corner, cfg).map_err(|e| AnalysisError::MissingFixedPoint {
            system: sys.name.clone(),
            which,
            reason: e.to_string(),
        })
    };
    let x_star = find(&b.lower, "x*")?;
    let x_bullet = find(&b.upper, "x•")?;
    for (fp, which) in [(&x_star, "x*"), (&x_bullet, "x•")] {
        if !fp.is_stable() {
            return Err(AnalysisError::MissingFixedPoint {
                system: sys.name.clone(),
                which,
                reason: format!("point {:?} is {:?}", fp.location, fp.stability),
            });
        }
    }
    let scale = 1.0 + x_star.location.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if x_star.location.iter().zip(&x_bullet.location).all(|(a, b)| (a - b).abs() <= 1e-6 * scale) {
        return Err(AnalysisError::MissingFixedPoint {
            system: sys.name.clone(),
            which: "x•",
            reason: "both corners reach the same point".into(),
        });
    }
    Ok(BistablePair { x_star, x_bullet })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PremiseItem {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PremiseReport {
    pub items: Vec<PremiseItem>,
    /// Stable pairs of the systems involved, in argument order.
    pub pairs: Vec<BistablePair>,
}

impl PremiseReport {
    pub fn holds(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }

    pub fn failures(&self) -> Vec<&PremiseItem> {
        self.items.iter().filter(|i| !i.passed).collect()
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.items.push(PremiseItem { name: name.into(), passed, detail: detail.into() });
    }
}

/// `x` is not in the order interval `[lo, hi]`.
pub fn outside_interval(sig: &OrthantSignature, lo: &[f64], x: &[f64], hi: &[f64]) -> bool {
    !(sig.leq(lo, x) && sig.leq(x, hi))
}

fn long_run(sys: &System) -> IntegratorConfig {
    IntegratorConfig { t_max: sys.oracle.horizon.max(sys.integrator.t_max), ..sys.integrator.clone() }
}

fn reaches(sys: &System, from: &[f64], target: &[f64]) -> Result<(bool, String), AnalysisError> {
    let v = converges_to(&*sys.field, &sys.params, from, target, sys.oracle.prox_rel, &long_run(sys))?;
    let detail = match &v {
        ConvergenceVerdict::Converged => "converged".to_string(),
        ConvergenceVerdict::ConvergedElsewhere { point } => format!("settled at {point:?}"),
        ConvergenceVerdict::Diverged => "diverged".into(),
        ConvergenceVerdict::Undecided => "undecided at horizon".into(),
    };
    Ok((v == ConvergenceVerdict::Converged, detail))
}

fn ordered_pair_items(rep: &mut PremiseReport, label: &str, sys: &System, pair: &BistablePair) {
    rep.push(
        format!("{label}: two stable points"),
        true,
        format!("x* = {:?}, x• = {:?}", pair.x_star.location, pair.x_bullet.location),
    );
    let ok = sys.sigma_x.leq(&pair.x_star.location, &pair.x_bullet.location);
    rep.push(format!("{label}: x* <= x•"), ok, String::new());
}

/// Hypotheses of the bounding result for `g <= f <= h`: each system has an
/// ordered stable pair; `x*_g`, `x*_f`, `x*_h` lie in the basins of both
/// `x*_g` (under `g`) and `x*_h` (under `h`); `x•_f` is outside `[x*_g, x*_h]`.
/// Basin membership is decided by direct integration.
pub fn theorem_conditions(g: &System, f: &System, h: &System, cfg: &NewtonConfig) -> Result<PremiseReport, AnalysisError> {
    let pg = locate_bistable_pair(g, cfg)?;
    let pf = locate_bistable_pair(f, cfg)?;
    let ph = locate_bistable_pair(h, cfg)?;
    let mut rep = PremiseReport { items: Vec::new(), pairs: Vec::new() };
    for (label, sys, pair) in [("g", g, &pg), ("f", f, &pf), ("h", h, &ph)] {
        ordered_pair_items(&mut rep, label, sys, pair);
    }
    let stars = [("x*_g", &pg.x_star.location), ("x*_f", &pf.x_star.location), ("x*_h", &ph.x_star.location)];
    for (bound_label, sys, target) in [("g", g, &pg.x_star.location), ("h", h, &ph.x_star.location)] {
        for (label, start) in stars {
            let (ok, detail) = reaches(sys, start, target)?;
            rep.push(format!("{label} in basin of x*_{bound_label}"), ok, detail);
        }
    }
    let out = outside_interval(&f.sigma_x, &pg.x_star.location, &pf.x_bullet.location, &ph.x_star.location);
    rep.push("x•_f outside [x*_g, x*_h]", out, format!("x•_f = {:?}", pf.x_bullet.location));
    rep.pairs = vec![pg, pf, ph];
    Ok(rep)
}

/// Hypotheses of the parametric bounding result on `[p_min, p_max]`.
pub fn corollary_conditions(
    sys: &System,
    p_min: &[f64],
    p_max: &[f64],
    cfg: &NewtonConfig,
) -> Result<PremiseReport, AnalysisError> {
    let sig_p = sys
        .sigma_p
        .as_ref()
        .ok_or_else(|| AnalysisError::Precondition(format!("system `{}` has no parameter signature", sys.name)))?;
    if !sig_p.leq(p_min, p_max) {
        return Err(AnalysisError::Precondition("p_min and p_max are not ordered under sigma_p".into()));
    }
    let lo = sys.with_params(p_min.to_vec())?;
    let hi = sys.with_params(p_max.to_vec())?;
    let plo = locate_bistable_pair(&lo, cfg)?;
    let phi = locate_bistable_pair(&hi, cfg)?;
    let mut rep = PremiseReport { items: Vec::new(), pairs: Vec::new() };
    ordered_pair_items(&mut rep, "p_min", &lo, &plo);
    ordered_pair_items(&mut rep, "p_max", &hi, &phi);
    let (ok, detail) = reaches(&hi, &plo.x_star.location, &phi.x_star.location)?;
    rep.push("x*(p_min) in basin of x*(p_max)", ok, detail);
    let (ok, detail) = reaches(&lo, &phi.x_star.location, &plo.x_star.location)?;
    rep.push("x*(p_max) in basin of x*(p_min)", ok, detail);
    let xb = &plo.x_bullet.location;
    let out = outside_interval(&sys.sigma_x, &plo.x_star.location, xb, &phi.x_star.location);
    rep.push("x•(p_min) outside [x*(p_min), x*(p_max)]", out, format!("x•(p_min) = {xb:?}"));
    rep.pairs = vec![plo, phi];
    Ok(rep)
}
