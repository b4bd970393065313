//! Monotonicity certificates, bounding-result hypotheses, basin containment
//! and bistability scans.
//!
//! Sign checks on sampled Jacobians are evidence, not proof: a `Consistent`
//! verdict only means no off-sign entry was seen at the probes.

use thiserror::Error;

use crate::ode::OdeError;
use crate::system::SystemError;

mod bistability;
mod containment;
mod monotone;
mod premises;

pub use bistability::{axis, bistability_scan, BistabilityMap, ScanCell, ScanConfig, DEDUP_TOL};
pub use containment::{containment_test, ContainmentReport, ContainmentViolation};
pub use monotone::{
    comparison_check, flow_order_test, kamke_muller_check, ComparisonReport, ComparisonWitness, FlowOrderConfig,
    FlowOrderReport, FlowOrderWitness, Instance, JacobianKind, MonotonicityReport, Side, SignCheck, SignWitness,
    Verdict,
};
pub use premises::{
    corollary_conditions, locate_bistable_pair, outside_interval, theorem_conditions, BistablePair, PremiseItem,
    PremiseReport,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("system `{system}`: no stable {which}: {reason}")]
    MissingFixedPoint { system: String, which: &'static str, reason: String },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    System(#[from] SystemError),
}
