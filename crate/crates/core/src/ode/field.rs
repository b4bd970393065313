use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::expr::{EvalError, Expr, ExprError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("component {component}: {source}")]
    Expr { component: usize, source: EvalError },
    #[error("component {component} is not finite at the probe point")]
    NonFinite { component: usize },
}

/// Right-hand side `f(x, p)` of an autonomous ODE.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;
    fn n_params(&self) -> usize;
    fn eval(&self, x: &[f64], p: &[f64], out: &mut [f64]) -> Result<(), FieldError>;

    fn eval_vec(&self, x: &[f64], p: &[f64]) -> Result<Vec<f64>, FieldError> {
        let mut out = vec![0.0; self.dim()];
        self.eval(x, p, &mut out)?;
        Ok(out)
    }
}

impl<T: VectorField + ?Sized> VectorField for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn n_params(&self) -> usize {
        (**self).n_params()
    }
    fn eval(&self, x: &[f64], p: &[f64], out: &mut [f64]) -> Result<(), FieldError> {
        (**self).eval(x, p, out)
    }
}

impl<T: VectorField + ?Sized> VectorField for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn n_params(&self) -> usize {
        (**self).n_params()
    }
    fn eval(&self, x: &[f64], p: &[f64], out: &mut [f64]) -> Result<(), FieldError> {
        (**self).eval(x, p, out)
    }
}

/// A field whose components are DSL expressions.
#[derive(Debug, Clone)]
pub struct ExprField {
    components: Vec<Expr>,
    n_params: usize,
}

impl ExprField {
    pub fn parse<S: AsRef<str>>(sources: &[S], n_params: usize) -> Result<Self, ExprError> {
        let n = sources.len();
        let components = sources
            .iter()
            .map(|s| Expr::parse(s.as_ref(), n, n_params))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ExprField { components, n_params })
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }
}

impl VectorField for ExprField {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn n_params(&self) -> usize {
        self.n_params
    }

    fn eval(&self, x: &[f64], p: &[f64], out: &mut [f64]) -> Result<(), FieldError> {
        for (i, (c, o)) in self.components.iter().zip(out.iter_mut()).enumerate() {
            *o = c.eval(x, p).map_err(|source| FieldError::Expr { component: i, source })?;
        }
        Ok(())
    }
}

type NativeFn = dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync;

/// A hand-coded field. Non-finite outputs become `FieldError::NonFinite`.
pub struct NativeField {
    dim: usize,
    n_params: usize,
    f: Box<NativeFn>,
}

impl NativeField {
    pub fn new<F>(dim: usize, n_params: usize, f: F) -> Self
    where
        F: Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        NativeField { dim, n_params, f: Box::new(f) }
    }
}

impl fmt::Debug for NativeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NativeField").field("dim", &self.dim).field("n_params", &self.n_params).finish()
    }
}

impl VectorField for NativeField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn n_params(&self) -> usize {
        self.n_params
    }

    fn eval(&self, x: &[f64], p: &[f64], out: &mut [f64]) -> Result<(), FieldError> {
        (self.f)(x, p, out);
        match out.iter().position(|v| !v.is_finite()) {
            Some(component) => Err(FieldError::NonFinite { component }),
            None => Ok(()),
        }
    }
}

/// Linear field `A x + b`.
#[derive(Debug, Clone)]
pub struct LinearField {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
}

impl LinearField {
    pub fn new(a: Vec<Vec<f64>>) -> Self {
        let n = a.len();
        LinearField { a, b: vec![0.0; n] }
    }

    pub fn affine(a: Vec<Vec<f64>>, b: Vec<f64>) -> Self {
        LinearField { a, b }
    }
}

impl VectorField for LinearField {
    fn dim(&self) -> usize {
        self.a.len()
    }

    fn n_params(&self) -> usize {
        0
    }

    fn eval(&self, x: &[f64], _p: &[f64], out: &mut [f64]) -> Result<(), FieldError> {
        for (i, row) in self.a.iter().enumerate() {
            out[i] = self.b[i] + row.iter().zip(x).map(|(a, x)| a * x).sum::<f64>();
        }
        Ok(())
    }
}

/// `f(y + c, p)`: the field in coordinates centred on `c`. Integrating in
/// these coordinates lets relative tolerances follow the deviation from `c`.
#[derive(Debug, Clone)]
pub struct ShiftedField<F> {
    inner: F,
    centre: Vec<f64>,
}

impl<F: VectorField> ShiftedField<F> {
    pub fn new(inner: F, centre: Vec<f64>) -> Self {
        ShiftedField { inner, centre }
    }
}

impl<F: VectorField> VectorField for ShiftedField<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn n_params(&self) -> usize {
        self.inner.n_params()
    }

    fn eval(&self, y: &[f64], p: &[f64], out: &mut [f64]) -> Result<(), FieldError> {
        let x: Vec<f64> = y.iter().zip(&self.centre).map(|(a, b)| a + b).collect();
        self.inner.eval(&x, p, out)
    }
}
