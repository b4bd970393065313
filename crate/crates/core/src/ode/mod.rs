//! Vector fields, integrators, fixed points and local spectral data.

pub mod field;
pub mod fixed_point;
pub mod integrate;
pub mod linalg;

use thiserror::Error;

pub use field::{ExprField, FieldError, LinearField, NativeField, ShiftedField, VectorField};
pub use fixed_point::{
    classify_point, dedup_points, find_fixed_point, newton, FixedPoint, NewtonConfig, Stability,
};
pub use integrate::{
    converges_to, flow, integrate, ConvergenceVerdict, IntegratorConfig, Method, Stepper, Trajectory,
    TrajectoryStatus,
};
pub use linalg::{dominant_eigen, eigenvalues, jacobian, param_jacobian, Matrix, SpectralData};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("matrix has non-finite entries")]
    NonFiniteMatrix,
    #[error("eigenvalue iteration did not converge")]
    EigenNoConvergence,
    #[error("dominant eigenvalue is complex ({re} {im:+}i)")]
    ComplexDominant { re: f64, im: f64 },
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step limit reached at t = {t}")]
    MaxSteps { t: f64 },
    #[error("linear system is singular")]
    SingularSystem,
    #[error("Jacobian is numerically singular (condition {cond:e})")]
    SingularJacobian { cond: f64 },
    #[error("trajectory did not come to rest by t = {t}")]
    NotSettled { t: f64 },
    #[error("Newton iteration stalled after {iterations} iterations (residual {residual:e})")]
    NewtonStalled { iterations: usize, residual: f64 },
}
