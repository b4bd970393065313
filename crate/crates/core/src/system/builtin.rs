//! Hand-coded fields for the shipped systems. Each mirrors the operation
//! order of its DSL description so both paths agree to rounding.

use std::sync::Arc;

use crate::expr::pow;
use crate::ode::{NativeField, VectorField};

pub const NAMES: [&str; 3] = ["toggle2d", "nonmon3", "toxin_antitoxin"];

pub(crate) fn config_source(name: &str) -> Option<&'static str> {
    match name {
        "toggle2d" => Some(include_str!("../../systems/toggle2d.toml")),
        "nonmon3" => Some(include_str!("../../systems/nonmon3.toml")),
        "toxin_antitoxin" => Some(include_str!("../../systems/toxin_antitoxin.toml")),
        _ => None,
    }
}

pub fn native_field(name: &str) -> Option<Arc<dyn VectorField>> {
    let field: NativeField = match name {
        "toggle2d" => NativeField::new(2, 8, |x, p, o| {
            o[0] = p[0] + p[1] / (1.0 + pow(x[1], p[2])) - p[3] * x[0];
            o[1] = p[4] + p[5] / (1.0 + pow(x[0], p[6])) - p[7] * x[1];
        }),
        "nonmon3" => NativeField::new(3, 3, |x, p, o| {
            o[0] = 1000.0 / (1.0 + pow(x[2], 2.0)) - 0.4 * x[0];
            o[1] = 1000.0 / (1.0 + pow(x[0], 4.0)) - 4.0 * x[1] + p[2];
            o[2] = p[0] + p[1] * x[0] / (x[0] + 1.0) + 5.0 * x[1] - 0.3 * x[2];
        }),
        "toxin_antitoxin" => NativeField::new(4, 9, |x, p, o| {
            let (t, a, af, tf) = (x[0], x[1], x[2], x[3]);
            let den = (1.0 + af * tf / p[1]) * (1.0 + p[2] * tf);
            o[0] = p[0] / den - t / (1.0 + p[3] * tf);
            o[1] = p[4] / den - p[5] * a;
            o[2] = (a - (af + af * tf / p[6] + af * pow(tf, 2.0) / (p[6] * p[7]))) / p[8];
            o[3] = (t - (tf + af * tf / p[6] + 2.0 * af * pow(tf, 2.0) / (p[6] * p[7]))) / p[8];
        }),
        _ => return None,
    };
    Some(Arc::new(field))
}
