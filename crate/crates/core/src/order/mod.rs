//! Orthant partial orders `x <= y iff sigma_i x_i <= sigma_i y_i`, intervals,
//! antichains and the bookkeeping of a two-sided basin approximation.
//!
//! Comparisons are exact: no tolerance band is applied, so the relation is a
//! genuine partial order.

mod antichain;
mod approx;

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use antichain::{Antichain, Direction, InsertOutcome};
pub use approx::{BasinApproximation, Class, CoverReport, Role, SampleRecord};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrderError {
    #[error("signature entries must be +1 or -1, got {0}")]
    BadSign(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("interval bounds are not ordered at coordinate {index}")]
    Unordered { index: usize },
    #[error(
        "non-monotone oracle: {point:?} lies below inside point {inside:?} and above outside point {outside:?}"
    )]
    Contradiction { point: Vec<f64>, inside: Vec<f64>, outside: Vec<f64> },
}

/// A `+-1` vector selecting the cone `diag(sigma) R^n_+`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct OrthantSignature(Vec<i8>);

impl OrthantSignature {
    pub fn new(signs: Vec<i8>) -> Result<Self, OrderError> {
        if let Some(s) = signs.iter().find(|s| **s != 1 && **s != -1) {
            return Err(OrderError::BadSign(s.to_string()));
        }
        Ok(OrthantSignature(signs))
    }

    /// The standard order on `R^n`.
    pub fn positive(n: usize) -> Self {
        OrthantSignature(vec![1; n])
    }

    /// Every signature of length `n`, starting from all `+`.
    pub fn all(n: usize) -> Vec<Self> {
        (0..1usize << n)
            .map(|mask| {
                OrthantSignature((0..n).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect())
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    pub fn sign(&self, i: usize) -> f64 {
        f64::from(self.0[i])
    }

    pub fn negated(&self) -> Self {
        OrthantSignature(self.0.iter().map(|s| -s).collect())
    }

    /// Signature on the listed coordinates only.
    pub fn restrict(&self, indices: &[usize]) -> Self {
        OrthantSignature(indices.iter().map(|&i| self.0[i]).collect())
    }

    pub fn leq(&self, x: &[f64], y: &[f64]) -> bool {
        debug_assert_eq!(x.len(), self.0.len());
        self.0.iter().zip(x.iter().zip(y)).all(|(s, (a, b))| match s {
            1 => a <= b,
            _ => a >= b,
        })
    }

    /// `x <= y` and `x != y`.
    pub fn strict(&self, x: &[f64], y: &[f64]) -> bool {
        self.leq(x, y) && x != y
    }

    /// Strict inequality in every coordinate.
    pub fn strong(&self, x: &[f64], y: &[f64]) -> bool {
        self.0.iter().zip(x.iter().zip(y)).all(|(s, (a, b))| match s {
            1 => a < b,
            _ => a > b,
        })
    }

    pub fn comparable(&self, x: &[f64], y: &[f64]) -> bool {
        self.leq(x, y) || self.leq(y, x)
    }

    /// Cone coordinates `sigma_i x_i`, in which the order is the standard one.
    pub fn to_cone(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.0).map(|(v, s)| v * f64::from(*s)).collect()
    }

    /// Moves `x` by `step` units up the order in every coordinate.
    pub fn shift(&self, x: &[f64], step: f64) -> Vec<f64> {
        x.iter().zip(&self.0).map(|(v, s)| v + step * f64::from(*s)).collect()
    }
}

impl TryFrom<Vec<i8>> for OrthantSignature {
    type Error = OrderError;
    fn try_from(v: Vec<i8>) -> Result<Self, OrderError> {
        OrthantSignature::new(v)
    }
}

impl From<OrthantSignature> for Vec<i8> {
    fn from(s: OrthantSignature) -> Vec<i8> {
        s.0
    }
}

impl FromStr for OrthantSignature {
    type Err = OrderError;

    /// Accepts `+-+`, `+,-,+` or `1,-1,1`.
    fn from_str(s: &str) -> Result<Self, OrderError> {
        let s = s.trim();
        let parts: Vec<String> = if s.contains(',') {
            s.split(',').map(|p| p.trim().to_string()).collect()
        } else {
            s.chars().filter(|c| !c.is_whitespace()).map(String::from).collect()
        };
        let signs = parts
            .iter()
            .map(|p| match p.as_str() {
                "+" | "1" | "+1" => Ok(1),
                "-" | "-1" => Ok(-1),
                other => Err(OrderError::BadSign(other.to_string())),
            })
            .collect::<Result<Vec<i8>, _>>()?;
        OrthantSignature::new(signs)
    }
}

impl fmt::Display for OrthantSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            f.write_str(if *s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

pub fn leq(x: &[f64], y: &[f64], sig: &OrthantSignature) -> bool {
    sig.leq(x, y)
}

/// Order interval `[lower, upper] = { z | lower <= z <= upper }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Interval {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, sig: &OrthantSignature) -> Result<Self, OrderError> {
        if lower.len() != sig.len() || upper.len() != sig.len() {
            return Err(OrderError::Dimension {
                expected: sig.len(),
                got: lower.len().min(upper.len()),
            });
        }
        for i in 0..sig.len() {
            if sig.sign(i) * lower[i] > sig.sign(i) * upper[i] {
                return Err(OrderError::Unordered { index: i });
            }
        }
        Ok(Interval { lower, upper })
    }

    /// Builds the interval spanned by an axis-aligned box given by its
    /// coordinate-wise minima and maxima.
    pub fn from_box(min: &[f64], max: &[f64], sig: &OrthantSignature) -> Result<Self, OrderError> {
        if min.len() != sig.len() || max.len() != sig.len() {
            return Err(OrderError::Dimension { expected: sig.len(), got: min.len().min(max.len()) });
        }
        if let Some(index) = (0..min.len()).find(|&i| !(min[i] <= max[i])) {
            return Err(OrderError::Unordered { index });
        }
        let pick = |up: bool| {
            (0..sig.len())
                .map(|i| if (sig.sign(i) > 0.0) == up { max[i] } else { min[i] })
                .collect::<Vec<_>>()
        };
        Ok(Interval { lower: pick(false), upper: pick(true) })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn box_min(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(a, b)| a.min(*b)).collect()
    }

    pub fn box_max(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(a, b)| a.max(*b)).collect()
    }

    pub fn width(&self, i: usize) -> f64 {
        (self.upper[i] - self.lower[i]).abs()
    }

    pub fn min_width(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i)).fold(f64::INFINITY, f64::min)
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i)).product()
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        z.iter().enumerate().all(|(i, v)| {
            let (a, b) = (self.lower[i].min(self.upper[i]), self.lower[i].max(self.upper[i]));
            a <= *v && *v <= b
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                let u: f64 = rng.random();
                self.lower[i] + u * (self.upper[i] - self.lower[i])
            })
            .collect()
    }

    /// Clamps `z` into the box.
    pub fn clamp(&self, z: &[f64]) -> Vec<f64> {
        let (lo, hi) = (self.box_min(), self.box_max());
        z.iter().enumerate().map(|(i, v)| v.clamp(lo[i], hi[i])).collect()
    }
}

/// Writes intervals as CSV, one row per interval, in coordinate-wise
/// min/max form: `lower_1..lower_n,upper_1..upper_n`.
pub fn write_intervals_csv<W: Write>(mut w: W, dim: usize, intervals: &[Interval]) -> io::Result<()> {
    let header: Vec<String> = (1..=dim)
        .map(|i| format!("lower_{i}"))
        .chain((1..=dim).map(|i| format!("upper_{i}")))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for iv in intervals {
        let row: Vec<String> =
            iv.box_min().iter().chain(iv.box_max().iter()).map(|v| v.to_string()).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}
