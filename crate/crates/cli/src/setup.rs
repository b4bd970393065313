use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use basin_scope_core::analysis::AnalysisError;
use basin_scope_core::ode::OdeError;
use basin_scope_core::order::OrderError;
use basin_scope_core::sampler::{CrossSectionError, SamplerError};
use basin_scope_core::system::{System, SystemConfig, SystemError};
use serde::Serialize;
use thiserror::Error;

use crate::Common;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("oracle precondition failed: {0}")]
    Precondition(String),
    #[error("premise failure: {0}")]
    Premise(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Premise(_) => 4,
            CliError::Numerical(_) => 5,
            CliError::Io(_) => 1,
        }
    }
}

impl From<SystemError> for CliError {
    fn from(e: SystemError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<OrderError> for CliError {
    fn from(e: OrderError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<CrossSectionError> for CliError {
    fn from(e: CrossSectionError) -> Self {
        CliError::Usage(format!("cross-section: {e}"))
    }
}

impl From<OdeError> for CliError {
    fn from(e: OdeError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<SamplerError> for CliError {
    fn from(e: SamplerError) -> Self {
        match e {
            SamplerError::Config(m) => CliError::Usage(m),
            other => CliError::Precondition(other.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Dimension(_) | AnalysisError::System(_) => CliError::Usage(e.to_string()),
            AnalysisError::MissingFixedPoint { .. } | AnalysisError::Precondition(_) => CliError::Premise(e.to_string()),
            AnalysisError::Inconclusive(_) | AnalysisError::Ode(_) => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.into())
    }
}

/// Comma separated numbers.
pub fn parse_vec(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("`{t}` is not a number in `{s}`"))))
        .collect()
}

/// `lo:hi,lo:hi,...` into the two corner vectors.
pub fn parse_box(s: &str) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for part in s.split(',') {
        let (a, b) = part
            .split_once(':')
            .ok_or_else(|| CliError::Usage(format!("box entry `{part}` is not `lo:hi`")))?;
        lo.push(parse_vec(a)?[0]);
        hi.push(parse_vec(b)?[0]);
    }
    Ok((lo, hi))
}

/// `lo:hi:step` into an inclusive axis description.
pub fn parse_axis(s: &str) -> Result<(f64, f64, f64), CliError> {
    let v: Vec<&str> = s.split(':').collect();
    let bad = || CliError::Usage(format!("axis `{s}` is not `lo:hi:step` with lo <= hi and step > 0"));
    if v.len() != 3 {
        return Err(bad());
    }
    let n = v.iter().map(|t| parse_vec(t).map(|x| x[0])).collect::<Result<Vec<_>, _>>()?;
    if !(n[0] <= n[1] && n[2] > 0.0) {
        return Err(bad());
    }
    Ok((n[0], n[1], n[2]))
}

/// A parameter vector given literally or as a variant name.
pub fn resolve_params(cfg: &SystemConfig, s: &str) -> Result<Vec<f64>, CliError> {
    if let Ok(v) = parse_vec(s) {
        return Ok(v);
    }
    cfg.variants.get(s.trim()).cloned().ok_or_else(|| {
        let known: Vec<&str> = cfg.variants.keys().map(String::as_str).collect();
        CliError::Usage(format!("`{s}` is neither a parameter vector nor a variant (known: {})", known.join(", ")))
    })
}

/// The system selected by `--system`/`--config` with the overrides applied.
pub fn load_system(c: &Common) -> Result<System, CliError> {
    let base = match (&c.system, &c.config) {
        (Some(name), None) => System::builtin(name)?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            System::from_toml(&text)?
        }
        _ => return Err(CliError::Usage("one of --system or --config is required".into())),
    };
    let mut cfg = base.config.clone();
    if let Some(p) = &c.params {
        cfg.params = resolve_params(&cfg, p)?;
    }
    if let Some(b) = &c.bbox {
        let (lo, hi) = parse_box(b)?;
        cfg.box_lower = lo;
        cfg.box_upper = hi;
    }
    if let Some(s) = &c.sigma_x {
        cfg.sigma_x = s.clone();
    }
    if let Some(s) = &c.sigma_p {
        cfg.sigma_p = Some(s.clone());
    }
    Ok(System::from_config(cfg)?)
}

pub fn init_threads(c: &Common) -> Result<(), CliError> {
    if let Some(n) = c.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    args: Vec<String>,
    config: &'a SystemConfig,
    seed: u64,
    threads: Option<usize>,
    version: &'static str,
    wall_time_s: f64,
    outputs: &'a [String],
}

/// Files written by a command, recorded for the manifest.
pub struct Outputs {
    pub dir: PathBuf,
    files: Vec<String>,
    start: Instant,
}

impl Outputs {
    pub fn new(c: &Common) -> Result<Self, CliError> {
        fs::create_dir_all(&c.out_dir)?;
        Ok(Outputs { dir: c.out_dir.clone(), files: Vec::new(), start: Instant::now() })
    }

    pub fn create(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        self.files.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    pub fn record(&mut self, names: &[&str]) {
        self.files.extend(names.iter().map(|s| s.to_string()));
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    pub fn finish(self, command: &str, config: &SystemConfig, c: &Common) -> Result<(), CliError> {
        let m = Manifest {
            command,
            args: std::env::args().collect(),
            config,
            seed: c.seed,
            threads: c.threads,
            version: env!("CARGO_PKG_VERSION"),
            wall_time_s: self.start.elapsed().as_secs_f64(),
            outputs: &self.files,
        };
        let mut w = BufWriter::new(File::create(self.dir.join("manifest.json"))?);
        serde_json::to_writer_pretty(&mut w, &m)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}
