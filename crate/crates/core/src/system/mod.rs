//! System descriptions: TOML configs, the builtin registry and the resolved
//! [`System`] used by the algorithms.

pub mod builtin;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::ExprError;
use crate::koopman::BasinTarget;
use crate::ode::{
    dedup_points, find_fixed_point, integrate, ExprField, FixedPoint, IntegratorConfig, Method, NewtonConfig,
    OdeError, TrajectoryStatus, VectorField,
};
use crate::order::{Interval, OrthantSignature};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("component {component}: {source}")]
    Expr { component: usize, source: ExprError },
    #[error("unknown system `{0}` (builtins: toggle2d, nonmon3, toxin_antitoxin)")]
    UnknownBuiltin(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Optional per-system integrator settings; unset fields keep defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorOverrides {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub h_init: Option<f64>,
    pub h_min: Option<f64>,
    pub h_max: Option<f64>,
    pub t_max: Option<f64>,
    pub r_max: Option<f64>,
    pub fp_detect: Option<f64>,
    pub settle: Option<usize>,
    pub max_steps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSettings {
    /// Integration horizon `T` of the membership oracle.
    pub horizon: f64,
    /// Proximity radius relative to `1 + ||x*||_inf`.
    pub prox_rel: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        OracleSettings { horizon: 100.0, prox_rel: 1e-4 }
    }
}

/// On-disk system description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub name: String,
    pub n: usize,
    pub m: usize,
    /// DSL expressions, one per state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<String>>,
    /// Name of a native builtin field, used instead of `components`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    pub params: Vec<f64>,
    /// Coordinate-wise minima of the state box.
    pub box_lower: Vec<f64>,
    /// Coordinate-wise maxima of the state box.
    pub box_upper: Vec<f64>,
    pub sigma_x: OrthantSignature,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_p: Option<OrthantSignature>,
    #[serde(default)]
    pub stiff: bool,
    #[serde(default)]
    pub seeds: Vec<Vec<f64>>,
    #[serde(default)]
    pub integrator: IntegratorOverrides,
    #[serde(default)]
    pub oracle: OracleSettings,
    /// Named parameter vectors.
    #[serde(default)]
    pub variants: BTreeMap<String, Vec<f64>>,
}

impl SystemConfig {
    pub fn from_toml(text: &str) -> Result<Self, SystemError> {
        toml::from_str(text).map_err(|e| SystemError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), SystemError> {
        let bad = |msg: String| Err(SystemError::Invalid(msg));
        match (&self.components, &self.builtin) {
            (Some(c), None) if c.len() != self.n => {
                return bad(format!("{} components for n = {}", c.len(), self.n))
            }
            (Some(_), Some(_)) => return bad("set either `components` or `builtin`, not both".into()),
            (None, None) => return bad("missing `components`".into()),
            _ => {}
        }
        if self.params.len() != self.m {
            return bad(format!("{} params for m = {}", self.params.len(), self.m));
        }
        if self.box_lower.len() != self.n || self.box_upper.len() != self.n {
            return bad("box bounds must have n entries".into());
        }
        if let Some(i) = (0..self.n).find(|&i| !(self.box_lower[i] <= self.box_upper[i])) {
            return bad(format!("box_lower[{}] > box_upper[{}]", i + 1, i + 1));
        }
        if self.sigma_x.len() != self.n {
            return bad("sigma_x must have n entries".into());
        }
        if let Some(sp) = &self.sigma_p {
            if sp.len() != self.m {
                return bad("sigma_p must have m entries".into());
            }
        }
        if self.seeds.iter().any(|s| s.len() != self.n) {
            return bad("seeds must have n entries".into());
        }
        if let Some((k, _)) = self.variants.iter().find(|(_, v)| v.len() != self.m) {
            return bad(format!("variant `{k}` must have m entries"));
        }
        if !(self.oracle.horizon > 0.0) || !(self.oracle.prox_rel > 0.0) {
            return bad("oracle horizon and prox_rel must be positive".into());
        }
        let ic = self.integrator_config();
        if !(ic.rtol > 0.0 && ic.atol > 0.0 && ic.t_max > 0.0 && ic.r_max > 0.0) {
            return bad("integrator tolerances, t_max and r_max must be positive".into());
        }
        if !(ic.h_min > 0.0 && ic.h_min <= ic.h_max && ic.h_init.is_none_or(|h| ic.h_min <= h && h <= ic.h_max)) {
            return bad("integrator steps must satisfy 0 < h_min <= h_init <= h_max".into());
        }
        Ok(())
    }

    pub fn integrator_config(&self) -> IntegratorConfig {
        let mut c = if self.stiff { IntegratorConfig::stiff() } else { IntegratorConfig::default() };
        let o = &self.integrator;
        c.rtol = o.rtol.unwrap_or(c.rtol);
        c.atol = o.atol.unwrap_or(c.atol);
        c.h_init = o.h_init.or(c.h_init);
        c.h_min = o.h_min.unwrap_or(c.h_min);
        c.h_max = o.h_max.unwrap_or(c.h_max);
        c.t_max = o.t_max.unwrap_or(c.t_max);
        c.r_max = o.r_max.unwrap_or(c.r_max);
        c.fp_detect = o.fp_detect.unwrap_or(c.fp_detect);
        c.settle = o.settle.unwrap_or(c.settle);
        c.max_steps = o.max_steps.unwrap_or(c.max_steps);
        c
    }
}

/// A resolved system: field plus metadata.
#[derive(Clone)]
pub struct System {
    pub name: String,
    pub field: Arc<dyn VectorField>,
    pub params: Vec<f64>,
    pub sigma_x: OrthantSignature,
    pub sigma_p: Option<OrthantSignature>,
    pub box_min: Vec<f64>,
    pub box_max: Vec<f64>,
    pub integrator: IntegratorConfig,
    pub oracle: OracleSettings,
    pub seeds: Vec<Vec<f64>>,
    pub config: SystemConfig,
}

impl fmt::Debug for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("System")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("sigma_x", &self.sigma_x)
            .finish_non_exhaustive()
    }
}

impl System {
    pub fn from_config(config: SystemConfig) -> Result<Self, SystemError> {
        config.validate()?;
        let field: Arc<dyn VectorField> = match (&config.components, &config.builtin) {
            (Some(src), _) => Arc::new(ExprField::parse(src, config.m).map_err(|e| {
                let component = src
                    .iter()
                    .position(|s| crate::expr::Expr::parse(s, config.n, config.m).is_err())
                    .unwrap_or(0);
                SystemError::Expr { component: component + 1, source: e }
            })?),
            (None, Some(key)) => {
                let f = builtin::native_field(key).ok_or_else(|| SystemError::UnknownBuiltin(key.clone()))?;
                if f.dim() != config.n || f.n_params() != config.m {
                    return Err(SystemError::Invalid(format!(
                        "builtin `{key}` has n = {}, m = {}",
                        f.dim(),
                        f.n_params()
                    )));
                }
                f
            }
            (None, None) => unreachable!("validated"),
        };
        Ok(System {
            name: config.name.clone(),
            field,
            params: config.params.clone(),
            sigma_x: config.sigma_x.clone(),
            sigma_p: config.sigma_p.clone(),
            box_min: config.box_lower.clone(),
            box_max: config.box_upper.clone(),
            integrator: config.integrator_config(),
            oracle: config.oracle.clone(),
            seeds: config.seeds.clone(),
            config,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self, SystemError> {
        System::from_config(SystemConfig::from_toml(text)?)
    }

    /// Builtin system backed by its native field.
    pub fn builtin(name: &str) -> Result<Self, SystemError> {
        let mut cfg = builtin_config(name)?;
        cfg.components = None;
        cfg.builtin = Some(name.to_string());
        System::from_config(cfg)
    }

    /// Builtin system backed by the DSL description it ships with.
    pub fn builtin_dsl(name: &str) -> Result<Self, SystemError> {
        System::from_config(builtin_config(name)?)
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn n_params(&self) -> usize {
        self.field.n_params()
    }

    pub fn is_stiff(&self) -> bool {
        self.integrator.method == Method::Rosenbrock
    }

    /// The state box as an order interval under `sigma_x`.
    pub fn interval(&self) -> Interval {
        Interval::from_box(&self.box_min, &self.box_max, &self.sigma_x).expect("validated box")
    }

    pub fn with_params(&self, params: Vec<f64>) -> Result<Self, SystemError> {
        if params.len() != self.n_params() {
            return Err(SystemError::Invalid(format!(
                "expected {} params, got {}",
                self.n_params(),
                params.len()
            )));
        }
        let mut s = self.clone();
        s.config.params = params.clone();
        s.params = params;
        Ok(s)
    }

    pub fn variant(&self, key: &str) -> Result<Vec<f64>, SystemError> {
        self.config
            .variants
            .get(key)
            .cloned()
            .ok_or_else(|| SystemError::Invalid(format!("system `{}` has no variant `{key}`", self.name)))
    }
}

impl System {
    /// Fixed points reached by Newton from each seed, duplicates removed.
    /// Seeds where Newton fails are skipped.
    pub fn fixed_points(&self, seeds: &[Vec<f64>], cfg: &NewtonConfig) -> Vec<FixedPoint> {
        let found = seeds
            .iter()
            .filter_map(|s| find_fixed_point(&*self.field, &self.params, s, cfg).ok())
            .collect();
        dedup_points(found, 1e-6)
    }

    /// `k` points per axis over the state box.
    pub fn seed_grid(&self, k: usize) -> Vec<Vec<f64>> {
        let n = self.dim();
        let axis = |i: usize, j: usize| {
            if k <= 1 {
                0.5 * (self.box_min[i] + self.box_max[i])
            } else {
                self.box_min[i] + (self.box_max[i] - self.box_min[i]) * j as f64 / (k - 1) as f64
            }
        };
        let total = k.max(1).pow(n as u32);
        (0..total)
            .map(|mut idx| {
                (0..n)
                    .map(|i| {
                        let j = idx % k.max(1);
                        idx /= k.max(1);
                        axis(i, j)
                    })
                    .collect()
            })
            .collect()
    }

    /// The stable point the flow from `x0` settles on, polished by Newton.
    pub fn attractor_from(&self, x0: &[f64], cfg: &NewtonConfig) -> Result<FixedPoint, OdeError> {
        let horizon = self.oracle.horizon.max(self.integrator.t_max);
        let tr = integrate(&*self.field, &self.params, x0, horizon, &self.integrator)?;
        if tr.status != TrajectoryStatus::ConvergedToPoint {
            return Err(OdeError::NotSettled { t: *tr.times.last().unwrap_or(&0.0) });
        }
        find_fixed_point(&*self.field, &self.params, tr.last(), cfg)
    }

    /// Basin oracle target for `x_star`; the other stable points among the
    /// configured seeds become rivals.
    pub fn basin_target(&self, x_star: &[f64], cfg: &NewtonConfig) -> BasinTarget {
        let scale = 1.0 + x_star.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let rivals = self
            .fixed_points(&self.seeds, cfg)
            .into_iter()
            .filter(|fp| fp.is_stable())
            .filter(|fp| fp.location.iter().zip(x_star).any(|(a, b)| (a - b).abs() > 1e-6 * scale))
            .map(|fp| fp.location)
            .collect();
        BasinTarget::new(x_star.to_vec(), self.oracle.prox_rel, self.oracle.horizon, self.integrator.clone())
            .with_rivals(rivals)
    }

    /// `sigma_x` as `+-1.0` entries.
    pub fn sigma_f64(&self) -> Vec<f64> {
        (0..self.sigma_x.len()).map(|i| self.sigma_x.sign(i)).collect()
    }
}

pub fn builtin_config(name: &str) -> Result<SystemConfig, SystemError> {
    let src = builtin::config_source(name).ok_or_else(|| SystemError::UnknownBuiltin(name.into()))?;
    SystemConfig::from_toml(src)
}
