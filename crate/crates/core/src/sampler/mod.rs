//! Adaptive sampling of an increasing 0/1 oracle on a box.
//!
//! Known-inside points are kept as the maximal antichain `m_min`, known-outside
//! points as the minimal antichain `m_max`. New samples are drawn from the
//! region neither antichain decides, in rounds of [`BATCH`] evaluations that
//! run in parallel against antichains frozen at the start of the round. Every
//! random draw happens on the calling thread, so the sample sequence does not
//! depend on the thread count.

mod oracle;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::order::{write_intervals_csv, BasinApproximation, Interval, OrderError, OrthantSignature};

pub use oracle::{
    BasinOracle, CrossSection, CrossSectionError, CrossSectionSpec, IsostableOracle, Oracle, OracleOutcome,
};

/// Oracle evaluations per merge round.
pub const BATCH: usize = 8;

// stream offset for the volume estimator so it never shares draws with sampling
const VOLUME_STREAM: u64 = 0x005e_ed0f_b0c5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error("corner check failed: oracle(lower) = {lower}, oracle(upper) = {upper} (expected 0 and 1)")]
    Corners { lower: u8, upper: u8 },
    #[error("oracle is not increasing: {0}")]
    NonMonotone(#[from] OrderError),
    #[error("invalid sampler configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Random draws for the first `random_fraction` of the budget, greedy after.
    #[default]
    Hybrid,
    /// Only the shrinking-margin search.
    LearningRate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub budget: usize,
    pub strategy: Strategy,
    pub random_fraction: f64,
    pub candidates: usize,
    /// Stop once the undecided fraction of the box is at most this.
    pub v_stop: f64,
    /// Monte Carlo points per undecided-volume estimate.
    pub volume_budget: usize,
    pub rejection_cap: usize,
    /// Initial margin of the learning-rate search; `0.05 * min width` when absent.
    pub lr_init: Option<f64>,
    pub lr_shrink: f64,
    /// Margin floor; `1e-4 * min width` when absent.
    pub lr_min: Option<f64>,
    /// Probes tried per margin before shrinking it.
    pub lr_probes: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            budget: 1000,
            strategy: Strategy::Hybrid,
            random_fraction: 0.5,
            candidates: 64,
            v_stop: 0.02,
            volume_budget: 4096,
            rejection_cap: 256,
            lr_init: None,
            lr_shrink: 0.5,
            lr_min: None,
            lr_probes: 2048,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), SamplerError> {
        let bad = |m: &str| Err(SamplerError::Config(m.into()));
        if self.budget == 0 {
            return bad("budget must be at least 1");
        }
        if self.candidates == 0 {
            return bad("candidates must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.random_fraction) {
            return bad("random_fraction must lie in [0, 1]");
        }
        if !(self.lr_shrink > 0.0 && self.lr_shrink < 1.0) {
            return bad("lr_shrink must lie in (0, 1)");
        }
        if matches!(self.lr_min, Some(e) if !(e > 0.0)) {
            return bad("lr_min must be positive");
        }
        if matches!(self.lr_init, Some(e) if !(e > 0.0)) {
            return bad("lr_init must be positive");
        }
        if self.rejection_cap == 0 || self.lr_probes == 0 || self.volume_budget == 0 {
            return bad("rejection_cap, lr_probes and volume_budget must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    VolumeTarget,
    Budget,
    /// No undecided point could be found at the margin floor.
    Exhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumePoint {
    pub iter: usize,
    pub undecided: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplerRun {
    pub approx: BasinApproximation,
    /// Undecided fraction after each round, starting with the corners only.
    pub history: Vec<VolumePoint>,
    pub evaluations: usize,
    /// Evaluations whose outcome came from a fallback rule.
    pub uncertain: usize,
    pub stop: StopReason,
}

impl SamplerRun {
    pub fn final_volume(&self) -> f64 {
        self.history.last().map_or(1.0, |v| v.undecided)
    }

    /// `samples.csv`, `volume_history.csv`, `inner.csv` and `outer.csv`.
    pub fn write_csvs(&self, dir: &Path) -> io::Result<()> {
        let n = self.approx.dim();
        let open = |name: &str| File::create(dir.join(name)).map(BufWriter::new);
        self.approx.write_samples_csv(open("samples.csv")?)?;
        write_volume_history_csv(open("volume_history.csv")?, &self.history)?;
        let cover = self.approx.cover_report();
        write_intervals_csv(open("inner.csv")?, n, &cover.inner)?;
        write_intervals_csv(open("outer.csv")?, n, &cover.outer_excluded)?;
        Ok(())
    }
}

pub fn write_volume_history_csv<W: Write>(mut w: W, history: &[VolumePoint]) -> io::Result<()> {
    writeln!(w, "iter,undecided_fraction")?;
    for v in history {
        writeln!(w, "{},{}", v.iter, v.undecided)?;
    }
    w.flush()
}

/// Antichains in cone coordinates, where the order is the componentwise one.
struct Frozen {
    lo: Vec<f64>,
    hi: Vec<f64>,
    inside: Vec<Vec<f64>>,
    outside: Vec<Vec<f64>>,
}

impl Frozen {
    fn new(approx: &BasinApproximation) -> Self {
        let sig = &approx.sig;
        Frozen {
            lo: sig.to_cone(&approx.bounds.lower),
            hi: sig.to_cone(&approx.bounds.upper),
            inside: approx.m_min.points().iter().map(|p| sig.to_cone(p)).collect(),
            outside: approx.m_max.points().iter().map(|p| sig.to_cone(p)).collect(),
        }
    }

    /// Not within `eps` of either cover (`eps = 0` is plain classification).
    fn undecided(&self, c: &[f64], eps: f64) -> bool {
        let below = |m: &Vec<f64>| c.iter().zip(m).all(|(a, b)| *a <= b + eps);
        let above = |m: &Vec<f64>| c.iter().zip(m).all(|(a, b)| *a >= b - eps);
        !self.inside.iter().any(below) && !self.outside.iter().any(above)
    }

    /// Volume of `[l, u]` where `u` is the componentwise minimum of the box
    /// top and the outside members above `c`, and `l` the maximum of the box
    /// bottom and the inside members below `c`.
    fn score(&self, c: &[f64]) -> f64 {
        let mut u = self.hi.clone();
        for m in self.outside.iter().filter(|m| m.iter().zip(c).all(|(a, b)| a >= b)) {
            u.iter_mut().zip(m).for_each(|(x, y)| *x = x.min(*y));
        }
        let mut l = self.lo.clone();
        for m in self.inside.iter().filter(|m| m.iter().zip(c).all(|(a, b)| a <= b)) {
            l.iter_mut().zip(m).for_each(|(x, y)| *x = x.max(*y));
        }
        u.iter().zip(&l).map(|(a, b)| (a - b).max(0.0)).product()
    }

    // cone coordinates map back with the same sign flip
    fn uniform<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| a + rng.random::<f64>() * (b - a)).collect()
    }
}

/// Uniform box draws until one is undecided; `None` after `cap` rejections.
pub fn sample_random<R: Rng>(approx: &BasinApproximation, cap: usize, rng: &mut R) -> Option<Vec<f64>> {
    draw_random(&Frozen::new(approx), &approx.sig, cap, rng)
}

fn draw_random<R: Rng>(fz: &Frozen, sig: &OrthantSignature, cap: usize, rng: &mut R) -> Option<Vec<f64>> {
    (0..cap).find_map(|_| {
        let c = fz.uniform(rng);
        fz.undecided(&c, 0.0).then(|| sig.to_cone(&c))
    })
}

/// Best of `candidates` undecided draws by [`Frozen::score`]; ties keep the
/// first candidate.
pub fn sample_greedy<R: Rng>(
    approx: &BasinApproximation,
    candidates: usize,
    cap: usize,
    rng: &mut R,
) -> Option<Vec<f64>> {
    draw_greedy(&Frozen::new(approx), &approx.sig, candidates, cap, rng)
}

fn draw_greedy<R: Rng>(
    fz: &Frozen,
    sig: &OrthantSignature,
    candidates: usize,
    cap: usize,
    rng: &mut R,
) -> Option<Vec<f64>> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..candidates {
        let Some(z) = draw_random(fz, sig, cap, rng) else { break };
        let s = fz.score(&sig.to_cone(&z));
        if best.as_ref().is_none_or(|(b, _)| s > *b) {
            best = Some((s, z));
        }
    }
    best.map(|(_, z)| z)
}

/// Margin state of the learning-rate search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningRate {
    pub eps: f64,
    pub shrink: f64,
    pub floor: f64,
    pub probes: usize,
}

impl LearningRate {
    pub fn from_config(cfg: &SamplerConfig, bounds: &Interval) -> Self {
        let w = bounds.min_width();
        LearningRate {
            eps: cfg.lr_init.unwrap_or(0.05 * w),
            shrink: cfg.lr_shrink,
            floor: cfg.lr_min.unwrap_or(1e-4 * w),
            probes: cfg.lr_probes,
        }
    }
}

/// A point at least `eps` (in every coordinate) away from both covers, found
/// by random probing. The margin shrinks after each failed round of probes;
/// `None` once it drops below the floor.
pub fn sample_learning_rate<R: Rng>(
    approx: &BasinApproximation,
    lr: &mut LearningRate,
    rng: &mut R,
) -> Option<Vec<f64>> {
    draw_learning_rate(&Frozen::new(approx), &approx.sig, lr, rng)
}

fn draw_learning_rate<R: Rng>(
    fz: &Frozen,
    sig: &OrthantSignature,
    lr: &mut LearningRate,
    rng: &mut R,
) -> Option<Vec<f64>> {
    while lr.eps >= lr.floor {
        for k in 0..lr.probes {
            let c = if k % 2 == 0 || fz.inside.is_empty() || fz.outside.is_empty() {
                fz.uniform(rng)
            } else {
                // between a random inside member and a random outside member
                let a = &fz.inside[rng.random_range(0..fz.inside.len())];
                let b = &fz.outside[rng.random_range(0..fz.outside.len())];
                a.iter()
                    .zip(b)
                    .enumerate()
                    .map(|(i, (x, y))| {
                        let (l, h) = (x.min(*y).max(fz.lo[i]), x.max(*y).min(fz.hi[i]));
                        l + rng.random::<f64>() * (h - l).max(0.0)
                    })
                    .collect()
            };
            if fz.undecided(&c, lr.eps) {
                return Some(sig.to_cone(&c));
            }
        }
        lr.eps *= lr.shrink;
    }
    None
}

/// Runs the sampler until the undecided fraction reaches `v_stop`, the
/// budget is spent, or no undecided point can be found.
pub fn run_sampler<O: Oracle + ?Sized>(
    oracle: &O,
    bounds: Interval,
    sig: OrthantSignature,
    cfg: &SamplerConfig,
) -> Result<SamplerRun, SamplerError> {
    cfg.validate()?;
    if bounds.dim() != sig.len() {
        return Err(SamplerError::Config(format!(
            "box has dimension {} but the signature has {}",
            bounds.dim(),
            sig.len()
        )));
    }
    let (lower, upper) = rayon::join(|| oracle.eval(&bounds.lower), || oracle.eval(&bounds.upper));
    if lower.value != 0 || upper.value != 1 {
        return Err(SamplerError::Corners { lower: lower.value, upper: upper.value });
    }
    let mut uncertain = usize::from(!lower.confident) + usize::from(!upper.confident);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let vol_seed = cfg.seed ^ VOLUME_STREAM;
    let mut lr = LearningRate::from_config(cfg, &bounds);
    let mut approx = BasinApproximation::new(bounds, sig);
    let mut history = vec![VolumePoint { iter: 0, undecided: approx.undecided_volume(cfg.volume_budget, vol_seed) }];
    let random_quota = (cfg.random_fraction * cfg.budget as f64).round() as usize;
    let mut done = 0usize;

    let stop = loop {
        if history.last().is_some_and(|v| v.undecided <= cfg.v_stop) {
            break StopReason::VolumeTarget;
        }
        if done >= cfg.budget {
            break StopReason::Budget;
        }
        let fz = Frozen::new(&approx);
        let want = BATCH.min(cfg.budget - done);
        let mut batch = Vec::with_capacity(want);
        for k in 0..want {
            let idx = done + k;
            let drawn = match cfg.strategy {
                Strategy::LearningRate => None,
                Strategy::Hybrid if idx < random_quota => draw_random(&fz, &approx.sig, cfg.rejection_cap, &mut rng),
                Strategy::Hybrid => draw_greedy(&fz, &approx.sig, cfg.candidates, cfg.rejection_cap, &mut rng),
            };
            match drawn.or_else(|| draw_learning_rate(&fz, &approx.sig, &mut lr, &mut rng)) {
                Some(z) => batch.push(z),
                None => break,
            }
        }
        if batch.is_empty() {
            break StopReason::Exhausted;
        }
        let outcomes: Vec<OracleOutcome> = batch.par_iter().map(|z| oracle.eval(z)).collect();
        for (z, out) in batch.iter().zip(&outcomes) {
            done += 1;
            uncertain += usize::from(!out.confident);
            approx.record(done, z, out.value)?;
        }
        history.push(VolumePoint { iter: done, undecided: approx.undecided_volume(cfg.volume_budget, vol_seed) });
    };
    Ok(SamplerRun { approx, history, evaluations: done, uncertain, stop })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditViolation {
    pub point: Vec<f64>,
    pub recorded: u8,
    pub now: u8,
}

/// Re-evaluates a random `fraction` of the antichain members and reports any
/// whose oracle value differs from the recorded one.
pub fn audit<O: Oracle + ?Sized>(
    approx: &BasinApproximation,
    oracle: &O,
    fraction: f64,
    seed: u64,
) -> Vec<AuditViolation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let members: Vec<(Vec<f64>, u8)> = approx
        .m_min
        .points()
        .iter()
        .map(|p| (p.clone(), 0))
        .chain(approx.m_max.points().iter().map(|p| (p.clone(), 1)))
        .filter(|_| rng.random::<f64>() < fraction)
        .collect();
    members
        .par_iter()
        .filter_map(|(p, v)| {
            let now = oracle.eval(p).value;
            (now != *v).then(|| AuditViolation { point: p.clone(), recorded: *v, now })
        })
        .collect()
}

/// Fraction of `samples` uniform box points on which the inner covers (or,
/// with `outer`, the outer covers) of two runs disagree.
pub fn symmetric_difference(a: &BasinApproximation, b: &BasinApproximation, samples: usize, seed: u64, outer: bool) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let member = |x: &BasinApproximation, z: &[f64]| if outer { x.in_outer(z) } else { x.in_inner(z) };
    let n = samples.max(1);
    let diff = (0..n)
        .filter(|_| {
            let z = a.bounds.sample(&mut rng);
            member(a, &z) != member(b, &z)
        })
        .count();
    diff as f64 / n as f64
}
