use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use super::AnalysisError;
use crate::ode::{dedup_points, find_fixed_point, FixedPoint, NewtonConfig};
use crate::system::System;

pub const DEDUP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    /// Newton seeds per axis over the seed box (corners and midpoint included
    /// whenever `grid >= 3` is odd).
    pub grid: usize,
    /// Box for generated seeds; the state box when absent.
    pub seed_box: Option<(Vec<f64>, Vec<f64>)>,
    /// Also integrate from the order-extreme seed-box corners and polish
    /// the endpoint.
    pub flow: bool,
    /// Second pass seeded with the fixed points of neighbouring cells.
    pub continuation: bool,
    pub newton: NewtonConfig,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { grid: 5, seed_box: None, flow: true, continuation: true, newton: NewtonConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanCell {
    pub d1: f64,
    pub d2: f64,
    /// Distinct stable points found.
    pub stable: Vec<Vec<f64>>,
    /// Distinct fixed points of any stability found.
    pub all: Vec<Vec<f64>>,
    /// No stable point was found.
    pub undetermined: bool,
}

impl ScanCell {
    pub fn stable_count(&self) -> usize {
        self.stable.len()
    }

    pub fn multistable(&self) -> bool {
        self.stable.len() >= 2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BistabilityMap {
    /// 0-based parameter indices swept along each axis.
    pub index: (usize, usize),
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    /// Row-major with `d1` varying fastest.
    pub cells: Vec<ScanCell>,
}

impl BistabilityMap {
    pub fn cell(&self, i: usize, j: usize) -> &ScanCell {
        &self.cells[j * self.d1.len() + i]
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "d1,d2,stable_count,undetermined")?;
        for c in &self.cells {
            writeln!(w, "{},{},{},{}", c.d1, c.d2, c.stable_count(), u8::from(c.undetermined))?;
        }
        Ok(())
    }
}

/// Evenly spaced axis `lo, lo + step, ..., hi` (inclusive, up to rounding).
pub fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| lo + step * k as f64).collect()
}

fn grid_seeds(lo: &[f64], hi: &[f64], k: usize) -> Vec<Vec<f64>> {
    let k = k.max(2);
    let n = lo.len();
    (0..k.pow(n as u32))
        .map(|mut idx| {
            (0..n)
                .map(|i| {
                    let j = idx % k;
                    idx /= k;
                    lo[i] + (hi[i] - lo[i]) * j as f64 / (k - 1) as f64
                })
                .collect()
        })
        .collect()
}

fn solve(sys: &System, seeds: &[Vec<f64>], cfg: &NewtonConfig) -> Vec<FixedPoint> {
    seeds
        .iter()
        .filter_map(|s| find_fixed_point(&*sys.field, &sys.params, s, cfg).ok())
        .filter(|fp| fp.location.iter().all(|v| v.is_finite()))
        .collect()
}

fn base_points(sys: &System, lo: &[f64], hi: &[f64], cfg: &ScanConfig) -> Vec<FixedPoint> {
    let mut seeds = grid_seeds(lo, hi, cfg.grid);
    seeds.push(lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect());
    seeds.extend(sys.seeds.iter().cloned());
    let mut pts = solve(sys, &seeds, &cfg.newton);
    if cfg.flow {
        let sig = &sys.sigma_x;
        let lower: Vec<f64> = (0..lo.len()).map(|i| if sig.sign(i) > 0.0 { lo[i] } else { hi[i] }).collect();
        let upper: Vec<f64> = (0..lo.len()).map(|i| if sig.sign(i) > 0.0 { hi[i] } else { lo[i] }).collect();
        pts.extend([lower, upper].iter().filter_map(|c| sys.attractor_from(c, &cfg.newton).ok()));
    }
    dedup_points(pts, DEDUP_TOL)
}

fn to_cell(d1: f64, d2: f64, pts: &[FixedPoint]) -> ScanCell {
    let stable: Vec<Vec<f64>> = pts.iter().filter(|p| p.is_stable()).map(|p| p.location.clone()).collect();
    ScanCell {
        d1,
        d2,
        undetermined: stable.is_empty(),
        stable,
        all: pts.iter().map(|p| p.location.clone()).collect(),
    }
}

/// Counts stable fixed points of `sys` with parameters `idx.0` and `idx.1`
/// set to each pair `(d1[i], d2[j])`.
pub fn bistability_scan(
    sys: &System,
    idx: (usize, usize),
    d1: &[f64],
    d2: &[f64],
    cfg: &ScanConfig,
) -> Result<BistabilityMap, AnalysisError> {
    let m = sys.n_params();
    if idx.0 >= m || idx.1 >= m || idx.0 == idx.1 {
        return Err(AnalysisError::Dimension(format!("parameter indices {idx:?} invalid for {m} parameters")));
    }
    if d1.is_empty() || d2.is_empty() || d1.iter().chain(d2).any(|v| !v.is_finite()) {
        return Err(AnalysisError::Precondition("scan axes must be finite and nonempty".into()));
    }
    let (lo, hi) = match &cfg.seed_box {
        Some((a, b)) if a.len() == sys.dim() && b.len() == sys.dim() => (a.clone(), b.clone()),
        Some(_) => return Err(AnalysisError::Dimension("seed box does not match the state dimension".into())),
        None => (sys.box_min.clone(), sys.box_max.clone()),
    };
    let (n1, n2) = (d1.len(), d2.len());
    let systems: Vec<System> = (0..n1 * n2)
        .map(|k| {
            let mut p = sys.params.clone();
            p[idx.0] = d1[k % n1];
            p[idx.1] = d2[k / n1];
            sys.with_params(p)
        })
        .collect::<Result<_, _>>()?;
    let first: Vec<Vec<FixedPoint>> = systems.par_iter().map(|s| base_points(s, &lo, &hi, cfg)).collect();
    let found: Vec<Vec<FixedPoint>> = if cfg.continuation {
        (0..n1 * n2)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k % n1, k / n1);
                let mut seeds = Vec::new();
                let mut near = |ii: usize, jj: usize| {
                    seeds.extend(first[jj * n1 + ii].iter().map(|p| p.location.clone()));
                };
                if i > 0 {
                    near(i - 1, j);
                }
                if i + 1 < n1 {
                    near(i + 1, j);
                }
                if j > 0 {
                    near(i, j - 1);
                }
                if j + 1 < n2 {
                    near(i, j + 1);
                }
                let mut pts = first[k].clone();
                pts.extend(solve(&systems[k], &seeds, &cfg.newton));
                dedup_points(pts, DEDUP_TOL)
            })
            .collect()
    } else {
        first
    };
    let cells = found.iter().enumerate().map(|(k, pts)| to_cell(d1[k % n1], d2[k / n1], pts)).collect();
    Ok(BistabilityMap { index: idx, d1: d1.to_vec(), d2: d2.to_vec(), cells })
}
