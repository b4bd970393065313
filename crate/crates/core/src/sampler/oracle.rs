use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::koopman::{oracle_basin, oracle_isostable, BasinTarget, IsostableMode, LaplaceConfig, Observable};
use crate::ode::VectorField;

pub use crate::koopman::OracleOutcome;

/// Increasing 0/1 membership test consumed by the sampler.
pub trait Oracle: Send + Sync {
    fn eval(&self, z: &[f64]) -> OracleOutcome;
}

impl<F> Oracle for F
where
    F: Fn(&[f64]) -> OracleOutcome + Send + Sync,
{
    fn eval(&self, z: &[f64]) -> OracleOutcome {
        self(z)
    }
}

/// Basin of attraction of a stable point.
pub struct BasinOracle {
    pub field: Arc<dyn VectorField>,
    pub params: Vec<f64>,
    pub target: BasinTarget,
}

impl Oracle for BasinOracle {
    fn eval(&self, z: &[f64]) -> OracleOutcome {
        oracle_basin(&*self.field, &self.params, z, &self.target)
    }
}

/// Part of the basin below the isostable level `alpha`.
pub struct IsostableOracle {
    pub field: Arc<dyn VectorField>,
    pub params: Vec<f64>,
    pub target: BasinTarget,
    pub observable: Observable,
    pub laplace: LaplaceConfig,
    pub alpha: f64,
    pub mode: IsostableMode,
}

impl Oracle for IsostableOracle {
    fn eval(&self, z: &[f64]) -> OracleOutcome {
        oracle_isostable(
            &*self.field,
            &self.params,
            z,
            &self.observable,
            &self.laplace,
            self.alpha,
            self.mode,
            &self.target,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CrossSectionError {
    #[error("fixed index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("fixed index {0} given twice")]
    DuplicateIndex(usize),
    #[error("at least one coordinate must stay free")]
    NothingFree,
    #[error("fixed value for index {0} is not finite")]
    NonFinite(usize),
}

/// Coordinates held constant (0-based indices) while the rest are sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSectionSpec {
    pub dim: usize,
    pub fixed: Vec<(usize, f64)>,
}

impl CrossSectionSpec {
    pub fn new(dim: usize, fixed: Vec<(usize, f64)>) -> Result<Self, CrossSectionError> {
        let mut seen = vec![false; dim];
        for &(i, v) in &fixed {
            if i >= dim {
                return Err(CrossSectionError::IndexOutOfRange(i));
            }
            if seen[i] {
                return Err(CrossSectionError::DuplicateIndex(i));
            }
            if !v.is_finite() {
                return Err(CrossSectionError::NonFinite(i));
            }
            seen[i] = true;
        }
        if fixed.len() >= dim {
            return Err(CrossSectionError::NothingFree);
        }
        Ok(CrossSectionSpec { dim, fixed })
    }

    /// Free indices in increasing order.
    pub fn free(&self) -> Vec<usize> {
        (0..self.dim).filter(|i| !self.fixed.iter().any(|(j, _)| j == i)).collect()
    }

    /// Full state from the free coordinates.
    pub fn embed(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        for (&i, v) in self.free().iter().zip(y) {
            x[i] = *v;
        }
        for &(i, v) in &self.fixed {
            x[i] = v;
        }
        x
    }
}

/// Restriction of an oracle to a cross-section.
pub struct CrossSection<O> {
    pub base: O,
    pub spec: CrossSectionSpec,
    free: Vec<usize>,
}

impl<O: Oracle> CrossSection<O> {
    pub fn new(base: O, spec: CrossSectionSpec) -> Self {
        let free = spec.free();
        CrossSection { base, spec, free }
    }

    pub fn free(&self) -> &[usize] {
        &self.free
    }
}

impl<O: Oracle> Oracle for CrossSection<O> {
    fn eval(&self, y: &[f64]) -> OracleOutcome {
        self.base.eval(&self.spec.embed(y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embed_places_fixed_values() {
        let s = CrossSectionSpec::new(4, vec![(2, 58.4429), (3, 0.0877)]).unwrap();
        assert_eq!(s.free(), vec![0, 1]);
        assert_eq!(s.embed(&[1.0, 2.0]), vec![1.0, 2.0, 58.4429, 0.0877]);
    }

    #[test]
    fn empty_section_is_identity() {
        let s = CrossSectionSpec::new(3, vec![]).unwrap();
        let o = CrossSection::new(|z: &[f64]| OracleOutcome::certain(u8::from(z[2] > 0.5)), s);
        assert_eq!(o.eval(&[0.0, 0.0, 0.7]).value, 1);
        assert_eq!(o.eval(&[0.0, 0.0, 0.2]).value, 0);
    }

    #[test]
    fn bad_specs_rejected() {
        assert_eq!(CrossSectionSpec::new(2, vec![(2, 0.0)]), Err(CrossSectionError::IndexOutOfRange(2)));
        assert_eq!(CrossSectionSpec::new(2, vec![(0, 0.0), (0, 1.0)]), Err(CrossSectionError::DuplicateIndex(0)));
        assert_eq!(CrossSectionSpec::new(2, vec![(0, 0.0), (1, 1.0)]), Err(CrossSectionError::NothingFree));
        assert_eq!(CrossSectionSpec::new(2, vec![(1, f64::NAN)]), Err(CrossSectionError::NonFinite(1)));
    }
}
