#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod expr;
pub mod koopman;
pub mod ode;
pub mod order;
pub mod sampler;
pub mod system;
