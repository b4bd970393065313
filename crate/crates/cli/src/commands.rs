use std::fs;

use basin_scope_core::analysis::{
    axis, bistability_scan, containment_test, corollary_conditions, flow_order_test, kamke_muller_check,
    locate_bistable_pair, theorem_conditions, ContainmentReport, FlowOrderConfig, FlowOrderReport, MonotonicityReport,
    PremiseReport, ScanConfig, SignCheck,
};
use basin_scope_core::expr::{tokenize, Expr};
use basin_scope_core::koopman::{IsostableMode, KoopmanError, LaplaceConfig, Observable};
use basin_scope_core::ode::linalg::{JAC_STEP, SPECTRAL_GAP_TOL};
use basin_scope_core::ode::{
    dedup_points, dominant_eigen, eigenvalues, find_fixed_point, jacobian, FixedPoint, NewtonConfig, SpectralData,
};
use basin_scope_core::order::{Interval, OrthantSignature};
use basin_scope_core::sampler::{
    run_sampler, BasinOracle, CrossSection, CrossSectionSpec, IsostableOracle, SamplerConfig, SamplerRun,
};
use basin_scope_core::system::builtin::native_field;
use basin_scope_core::system::{builtin_config, System, SystemConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::setup::{init_threads, load_system, parse_axis, parse_box, parse_vec, resolve_params, CliError, Outputs};
use crate::{Common, SamplerArgs, Side};

const SAMPLER_FILES: [&str; 4] = ["samples.csv", "volume_history.csv", "inner.csv", "outer.csv"];

impl From<KoopmanError> for CliError {
    fn from(e: KoopmanError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("({})", parts.join(", "))
}

fn point(s: &str, n: usize) -> Result<Vec<f64>, CliError> {
    let v = parse_vec(s)?;
    if v.len() != n {
        return Err(CliError::Usage(format!("point `{s}` has {} entries, system has {n}", v.len())));
    }
    Ok(v)
}

fn oriented(mut fp: FixedPoint, sig: &OrthantSignature) -> FixedPoint {
    let s: Vec<f64> = (0..sig.len()).map(|i| sig.sign(i)).collect();
    if let Some(sd) = fp.spectral.as_mut() {
        sd.orient(&s);
    }
    fp
}

fn print_point(k: usize, fp: &FixedPoint) {
    println!("[{k}] x = {}  {:?}  residual {:.2e}", fmt_vec(&fp.location), fp.stability, fp.residual);
    if let Some(sd) = &fp.spectral {
        println!("    lambda1 = {:.6}  v1 = {}  w1 = {}", sd.lambda1, fmt_vec(&sd.v1), fmt_vec(&sd.w1));
    }
}

#[derive(Serialize)]
struct FixedPointsFile<'a> {
    system: &'a str,
    params: &'a [f64],
    points: &'a [FixedPoint],
    failures: Vec<GuessFailure>,
}

#[derive(Serialize)]
struct GuessFailure {
    guess: Vec<f64>,
    error: String,
}

pub fn fixed_points(c: &Common, guesses: &[String], grid: usize) -> Result<(), CliError> {
    init_threads(c)?;
    let sys = load_system(c)?;
    let extra = guesses.iter().map(|g| point(g, sys.dim())).collect::<Result<Vec<_>, _>>()?;
    let mut seeds = sys.seed_grid(grid);
    seeds.extend(sys.seeds.iter().cloned());
    let n_auto = seeds.len();
    seeds.extend(extra.iter().cloned());
    let cfg = NewtonConfig::default();
    let results: Vec<_> = seeds.par_iter().map(|s| find_fixed_point(&*sys.field, &sys.params, s, &cfg)).collect();
    let mut failures = Vec::new();
    let mut found = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(fp) => found.push(fp),
            Err(e) if k >= n_auto => {
                eprintln!("guess {}: {e}", fmt_vec(&seeds[k]));
                failures.push(GuessFailure { guess: seeds[k].clone(), error: e.to_string() });
            }
            Err(_) => {}
        }
    }
    let points: Vec<FixedPoint> = dedup_points(found, 1e-6).into_iter().map(|fp| oriented(fp, &sys.sigma_x)).collect();
    if points.is_empty() {
        return Err(CliError::Numerical(format!("no fixed point found from {} seeds", seeds.len())));
    }
    println!("{}: {} fixed points", sys.name, points.len());
    for (k, fp) in points.iter().enumerate() {
        print_point(k, fp);
    }
    let mut out = Outputs::new(c)?;
    out.json("fixed_points.json", &FixedPointsFile { system: &sys.name, params: &sys.params, points: &points, failures })?;
    out.finish("fixed-points", &sys.config, c)
}

#[derive(Serialize)]
struct SpectralEntry {
    point: Vec<f64>,
    jacobian: Vec<Vec<f64>>,
    eigenvalues: Vec<(f64, f64)>,
    dominant: Option<SpectralData>,
}

pub fn spectral(c: &Common, at: &[String]) -> Result<(), CliError> {
    init_threads(c)?;
    let sys = load_system(c)?;
    let points: Vec<Vec<f64>> = if at.is_empty() {
        let mut seeds = sys.seed_grid(3);
        seeds.extend(sys.seeds.iter().cloned());
        sys.fixed_points(&seeds, &NewtonConfig::default()).into_iter().map(|fp| fp.location).collect()
    } else {
        at.iter().map(|s| point(s, sys.dim())).collect::<Result<_, _>>()?
    };
    let sig = sys.sigma_f64();
    let mut entries = Vec::new();
    for x in points {
        let j = jacobian(&*sys.field, &x, &sys.params, JAC_STEP).map_err(|e| CliError::Numerical(e.to_string()))?;
        let eig = eigenvalues(&j)?;
        let dominant = dominant_eigen(&j, SPECTRAL_GAP_TOL).ok().map(|mut sd| {
            sd.orient(&sig);
            sd
        });
        println!("x = {}", fmt_vec(&x));
        let spec: Vec<String> = eig.iter().map(|(re, im)| format!("{re:.6}{im:+.6}i")).collect();
        println!("    eigenvalues: {}", spec.join(", "));
        match &dominant {
            Some(sd) => println!(
                "    lambda1 = {:.6}{}  v1 = {}  w1 = {}",
                sd.lambda1,
                if sd.simple { "" } else { " (not simple)" },
                fmt_vec(&sd.v1),
                fmt_vec(&sd.w1)
            ),
            None => println!("    leading eigenvalue is complex"),
        }
        let rows = (0..j.nrows()).map(|r| (0..j.ncols()).map(|k| j[(r, k)]).collect()).collect();
        entries.push(SpectralEntry { point: x, jacobian: rows, eigenvalues: eig, dominant });
    }
    let mut out = Outputs::new(c)?;
    out.json("spectral.json", &entries)?;
    out.finish("spectral", &sys.config, c)
}

fn sampler_config(c: &Common, sa: &SamplerArgs) -> SamplerConfig {
    SamplerConfig {
        budget: c.budget.unwrap_or(1000),
        strategy: sa.strategy.into(),
        v_stop: sa.v_stop,
        seed: c.seed,
        ..SamplerConfig::default()
    }
}

/// Order used for sampling: the system's for `star`, reversed for `bullet`.
fn side_signature(sig: &OrthantSignature, side: Side) -> OrthantSignature {
    match side {
        Side::Star => sig.clone(),
        Side::Bullet => sig.negated(),
    }
}

fn summarize(run: &SamplerRun) {
    let cover = run.approx.cover_report();
    println!(
        "{} oracle calls ({} uncertain), stop: {:?}, undecided fraction {:.4}",
        run.evaluations,
        run.uncertain,
        run.stop,
        run.final_volume()
    );
    println!("inner cover: {} boxes, outer complement: {} boxes", cover.inner.len(), cover.outer_excluded.len());
}

#[derive(Serialize)]
struct TargetFile<'a> {
    fixed_point: &'a FixedPoint,
    signature: String,
    alpha: Option<f64>,
    mode: Option<IsostableMode>,
}

pub fn basin(c: &Common, sa: &SamplerArgs, iso: Option<(f64, IsostableMode)>) -> Result<(), CliError> {
    init_threads(c)?;
    let sys = load_system(c)?;
    let sig = side_signature(&sys.sigma_x, sa.fixed_point);
    let bounds = Interval::from_box(&sys.box_min, &sys.box_max, &sig)?;
    let newton = NewtonConfig::default();
    let fp = sys.attractor_from(&bounds.lower, &newton)?;
    println!("target {}", fmt_vec(&fp.location));
    let target = sys.basin_target(&fp.location, &newton);
    let cfg = sampler_config(c, sa);
    let basin = BasinOracle { field: sys.field.clone(), params: sys.params.clone(), target };
    let run = match iso {
        None => run_sampler(&basin, bounds, sig.clone(), &cfg)?,
        Some((alpha, mode)) => {
            let s: Vec<f64> = (0..sig.len()).map(|i| sig.sign(i)).collect();
            let oracle = IsostableOracle {
                observable: Observable::from_fixed_point(&fp, Some(&s))?,
                field: basin.field,
                params: basin.params,
                target: basin.target,
                laplace: LaplaceConfig::default(),
                alpha,
                mode,
            };
            run_sampler(&oracle, bounds, sig.clone(), &cfg)?
        }
    };
    summarize(&run);
    let mut out = Outputs::new(c)?;
    run.write_csvs(&out.dir)?;
    out.record(&SAMPLER_FILES);
    out.json(
        "target.json",
        &TargetFile { fixed_point: &fp, signature: sig.to_string(), alpha: iso.map(|i| i.0), mode: iso.map(|i| i.1) },
    )?;
    out.finish(if iso.is_some() { "isostable" } else { "basin" }, &sys.config, c)
}

#[derive(Serialize)]
struct SectionFile<'a> {
    /// 1-based indices and values of the fixed coordinates.
    fixed: Vec<(usize, f64)>,
    /// 1-based indices of the sampled coordinates, in CSV column order.
    free: Vec<usize>,
    fixed_point: &'a FixedPoint,
    signature: String,
}

pub fn cross_section(c: &Common, sa: &SamplerArgs, indices: &[usize], values: &[f64]) -> Result<(), CliError> {
    init_threads(c)?;
    let sys = load_system(c)?;
    let n = sys.dim();
    if indices.len() != values.len() {
        return Err(CliError::Usage(format!("{} indices but {} values", indices.len(), values.len())));
    }
    if let Some(i) = indices.iter().find(|&&i| i == 0 || i > n) {
        return Err(CliError::Usage(format!("index {i} outside 1..={n}")));
    }
    let spec = CrossSectionSpec::new(n, indices.iter().map(|i| i - 1).zip(values.iter().copied()).collect())?;
    let free = spec.free();
    let sig = side_signature(&sys.sigma_x, sa.fixed_point).restrict(&free);
    let lo: Vec<f64> = free.iter().map(|&i| sys.box_min[i]).collect();
    let hi: Vec<f64> = free.iter().map(|&i| sys.box_max[i]).collect();
    let bounds = Interval::from_box(&lo, &hi, &sig)?;
    let newton = NewtonConfig::default();
    let fp = sys.attractor_from(&spec.embed(&bounds.lower), &newton)?;
    println!("target {}", fmt_vec(&fp.location));
    let base = BasinOracle {
        field: sys.field.clone(),
        params: sys.params.clone(),
        target: sys.basin_target(&fp.location, &newton),
    };
    let oracle = CrossSection::new(base, spec.clone());
    let run = run_sampler(&oracle, bounds, sig.clone(), &sampler_config(c, sa))?;
    summarize(&run);
    let mut out = Outputs::new(c)?;
    run.write_csvs(&out.dir)?;
    out.record(&SAMPLER_FILES);
    let file = SectionFile {
        fixed: spec.fixed.iter().map(|&(i, v)| (i + 1, v)).collect(),
        free: free.iter().map(|i| i + 1).collect(),
        fixed_point: &fp,
        signature: sig.to_string(),
    };
    out.json("section.json", &file)?;
    out.finish("cross-section", &sys.config, c)
}

pub struct ScanArgs {
    pub indices: Vec<usize>,
    pub d1: String,
    pub d2: String,
    pub seed_box: Option<String>,
    pub grid: usize,
    pub continuation: bool,
}

pub fn bistability_map(c: &Common, a: &ScanArgs) -> Result<(), CliError> {
    init_threads(c)?;
    let sys = load_system(c)?;
    let m = sys.n_params();
    let (i, j) = match a.indices[..] {
        [i, j] if i != j && (1..=m).contains(&i) && (1..=m).contains(&j) => (i - 1, j - 1),
        _ => return Err(CliError::Usage(format!("--indices needs two distinct values in 1..={m}"))),
    };
    let (l1, h1, s1) = parse_axis(&a.d1)?;
    let (l2, h2, s2) = parse_axis(&a.d2)?;
    let seed_box = a.seed_box.as_deref().map(parse_box).transpose()?;
    if let Some((lo, _)) = &seed_box {
        if lo.len() != sys.dim() {
            return Err(CliError::Usage(format!("--seed-box needs {} entries", sys.dim())));
        }
    }
    let cfg = ScanConfig { grid: a.grid, seed_box, continuation: a.continuation, ..ScanConfig::default() };
    let map = bistability_scan(&sys, (i, j), &axis(l1, h1, s1), &axis(l2, h2, s2), &cfg)?;
    let multi = map.cells.iter().filter(|c| c.multistable()).count();
    let undetermined = map.cells.iter().filter(|c| c.undetermined).count();
    println!(
        "{} x {} cells: {multi} multistable, {undetermined} undetermined",
        map.d1.len(),
        map.d2.len()
    );
    let mut out = Outputs::new(c)?;
    let mut w = out.create("bistability.csv")?;
    map.write_csv(&mut w)?;
    drop(w);
    out.finish("bistability-map", &sys.config, c)
}

pub enum Bounds {
    Triple { g: String, f: String, h: String },
    Interval { lo: String, hi: String },
}

#[derive(Serialize)]
struct BoundsFile<'a> {
    mode: &'a str,
    premises: &'a PremiseReport,
    containment: Option<&'a ContainmentReport>,
}

fn print_premises(rep: &PremiseReport) {
    for item in &rep.items {
        let mark = if item.passed { "ok  " } else { "FAIL" };
        if item.detail.is_empty() {
            println!("{mark} {}", item.name);
        } else {
            println!("{mark} {}: {}", item.name, item.detail);
        }
    }
}

pub fn compare_bounds(c: &Common, b: &Bounds, max_draws: usize) -> Result<(), CliError> {
    init_threads(c)?;
    let sys = load_system(c)?;
    let newton = NewtonConfig::default();
    let with = |s: &str| -> Result<System, CliError> { Ok(sys.with_params(resolve_params(&sys.config, s)?)?) };
    let (mode, premises, chain) = match b {
        Bounds::Triple { g, f, h } => {
            let [g, f, h] = [with(g)?, with(f)?, with(h)?];
            let rep = theorem_conditions(&g, &f, &h, &newton)?;
            let stars: Vec<Vec<f64>> = rep.pairs.iter().map(|p| p.x_star.location.clone()).collect();
            ("theorem", rep, [(g, stars[0].clone()), (f, stars[1].clone()), (h, stars[2].clone())])
        }
        Bounds::Interval { lo, hi } => {
            let (p_lo, p_hi) = (resolve_params(&sys.config, lo)?, resolve_params(&sys.config, hi)?);
            let rep = corollary_conditions(&sys, &p_lo, &p_hi, &newton)?;
            let mid_star = locate_bistable_pair(&sys, &newton)?.x_star.location;
            let (s_lo, s_hi) = (sys.with_params(p_lo)?, sys.with_params(p_hi)?);
            let stars: Vec<Vec<f64>> = rep.pairs.iter().map(|p| p.x_star.location.clone()).collect();
            ("corollary", rep, [(s_lo, stars[0].clone()), (sys.clone(), mid_star), (s_hi, stars[1].clone())])
        }
    };
    print_premises(&premises);
    let mut out = Outputs::new(c)?;
    if !premises.holds() {
        out.json("compare_bounds.json", &BoundsFile { mode, premises: &premises, containment: None })?;
        out.finish("compare-bounds", &sys.config, c)?;
        let names: Vec<&str> = premises.failures().iter().map(|i| i.name.as_str()).collect();
        return Err(CliError::Premise(names.join("; ")));
    }
    let [outer, mid, inner] = chain.map(|(s, star)| BasinOracle {
        target: s.basin_target(&star, &newton),
        field: s.field.clone(),
        params: s.params.clone(),
    });
    let target = c.budget.unwrap_or(200);
    let rep = containment_test(&outer, &mid, &inner, &sys.interval(), target, max_draws, c.seed);
    println!(
        "containment: {} samples, {} excluded ({:.1}%), {} violations",
        rep.tested,
        rep.excluded,
        100.0 * rep.excluded_fraction(),
        rep.violations.len()
    );
    out.json("compare_bounds.json", &BoundsFile { mode, premises: &premises, containment: Some(&rep) })?;
    out.finish("compare-bounds", &sys.config, c)?;
    if !rep.holds() {
        return Err(CliError::Premise(format!("containment chain violated at {} points", rep.violations.len())));
    }
    Ok(())
}

#[derive(Serialize)]
struct MonotoneEntry {
    signature: String,
    kamke_muller: MonotonicityReport,
    flow: Option<FlowOrderReport>,
}

pub fn check_monotone(
    c: &Common,
    signatures: &[OrthantSignature],
    all: bool,
    range: Option<(String, String)>,
    flow: bool,
) -> Result<(), CliError> {
    init_threads(c)?;
    let sys = load_system(c)?;
    let sigs = if all {
        OrthantSignature::all(sys.dim())
    } else if signatures.is_empty() {
        vec![sys.sigma_x.clone()]
    } else {
        signatures.to_vec()
    };
    if let Some(s) = sigs.iter().find(|s| s.len() != sys.dim()) {
        return Err(CliError::Usage(format!("signature {s} does not have {} entries", sys.dim())));
    }
    let (p_lo, p_hi, sig_p) = match &range {
        Some((lo, hi)) => {
            let (a, b) = (resolve_params(&sys.config, lo)?, resolve_params(&sys.config, hi)?);
            let sig_p = sys
                .sigma_p
                .clone()
                .ok_or_else(|| CliError::Usage("a parameter range needs a parameter signature".into()))?;
            let lo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect();
            let hi: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
            (lo, hi, Some(sig_p))
        }
        None => (sys.params.clone(), sys.params.clone(), None),
    };
    let mut entries = Vec::new();
    for sig in &sigs {
        let chk = SignCheck {
            state_min: &sys.box_min,
            state_max: &sys.box_max,
            param_min: &p_lo,
            param_max: &p_hi,
            sig_x: sig,
            sig_p: sig_p.as_ref(),
            samples: c.budget.unwrap_or(200),
            tol_rel: 1e-7,
            seed: c.seed,
        };
        let km = kamke_muller_check(&*sys.field, &chk)?;
        print!("{sig}: {:?} over {} samples", km.verdict, km.tested);
        if let Some(w) = &km.witness {
            print!(", off-sign entry ({}, {}) = {:.3e} at {}", w.row + 1, w.col + 1, w.value, fmt_vec(&w.x));
        }
        println!();
        let fo = if flow {
            let cfg = FlowOrderConfig { seed: c.seed, integrator: sys.integrator.clone(), ..FlowOrderConfig::default() };
            let r = flow_order_test(&*sys.field, &sys.params, sig, &sys.box_min, &sys.box_max, &cfg)?;
            println!(
                "    flow order: {} over {} pairs ({} failed), worst gap {:.3e}",
                if r.holds { "preserved" } else { "violated" },
                r.pairs,
                r.failed,
                r.worst
            );
            Some(r)
        } else {
            None
        };
        entries.push(MonotoneEntry { signature: sig.to_string(), kamke_muller: km, flow: fo });
    }
    let mut out = Outputs::new(c)?;
    out.json("check_monotone.json", &entries)?;
    out.finish("check-monotone", &sys.config, c)
}

pub fn parse_check(c: &Common, grid: usize) -> Result<(), CliError> {
    let mut cfg: SystemConfig = match (&c.system, &c.config) {
        (Some(name), None) => builtin_config(name)?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            SystemConfig::from_toml(&text)?
        }
        _ => return Err(CliError::Usage("one of --system or --config is required".into())),
    };
    if let Some(p) = &c.params {
        cfg.params = resolve_params(&cfg, p)?;
    }
    let sources = cfg
        .components
        .clone()
        .ok_or_else(|| CliError::Usage(format!("system `{}` has no DSL components", cfg.name)))?;
    for (k, src) in sources.iter().enumerate() {
        let tokens = tokenize(src).map_err(|e| CliError::Usage(format!("component {}: {e}", k + 1)))?;
        let expr = Expr::parse(src, cfg.n, cfg.m).map_err(|e| CliError::Usage(format!("component {}: {e}", k + 1)))?;
        println!("x{}' = {expr}    ({} tokens)", k + 1, tokens.len());
    }
    let dsl = System::from_config(cfg.clone())?;
    let native = match native_field(&cfg.name) {
        Some(f) if f.dim() == cfg.n && f.n_params() == cfg.m => f,
        _ => {
            println!("no native field named `{}`; cross-check skipped", cfg.name);
            return Ok(());
        }
    };
    let mut worst = 0.0_f64;
    let pts = dsl.seed_grid(grid.max(1));
    for x in &pts {
        let a = dsl.field.eval_vec(x, &dsl.params).map_err(|e| CliError::Numerical(e.to_string()))?;
        let b = native.eval_vec(x, &dsl.params).map_err(|e| CliError::Numerical(e.to_string()))?;
        for (u, v) in a.iter().zip(&b) {
            worst = worst.max((u - v).abs() / (1.0 + v.abs()));
        }
    }
    println!("DSL vs native on {} grid points: max relative difference {worst:.3e}", pts.len());
    if worst > 1e-12 {
        return Err(CliError::Numerical(format!("DSL and native fields differ by {worst:.3e}")));
    }
    Ok(())
}
