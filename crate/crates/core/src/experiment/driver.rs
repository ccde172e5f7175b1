use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::{Builtin, DomainConfig};
use crate::assembly::Problem;
use crate::geometry::MultiPatchDomain;
use crate::ieti::{solve, SolveOptions, SolveReport};
use crate::refsolver::measure_error;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum DomainSource {
    Builtin(Builtin),
    Config(DomainConfig),
}

impl DomainSource {
    pub fn build(&self, p: usize, r: usize) -> Result<MultiPatchDomain> {
        match self {
            DomainSource::Builtin(b) => b.build(p, r),
            DomainSource::Config(c) => c.build(p, r),
        }
    }

    pub fn jump_patches(&self) -> Vec<usize> {
        match self {
            DomainSource::Builtin(b) => b.jump_patches(),
            DomainSource::Config(c) => c.jump_patches.clone(),
        }
    }
}

impl fmt::Display for DomainSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainSource::Builtin(b) => write!(f, "{b}"),
            DomainSource::Config(c) => write!(f, "{}", c.name.as_deref().unwrap_or("config")),
        }
    }
}

/// What to run over the `(p, r)` grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Study {
    /// One solve per `(p, r)`.
    Solve,
    /// Coefficient `10^j` on the jump patches, one solve per `(p, r, j)`.
    Jumps(Vec<i32>),
    /// Slider offsets, one solve per `(p, r, s)`.
    Slides(Vec<f64>),
    /// Condition number growth against `p Λ²` per degree.
    Growth,
    /// Discretization error for `u = sin(πx) sin(πy)` with `α ≡ 1`.
    Manufactured,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub source: DomainSource,
    pub degrees: Vec<usize>,
    pub refinements: Vec<usize>,
    pub delta: f64,
    pub study: Study,
    pub tol: f64,
    pub max_iter: usize,
    pub check_oracle: bool,
    pub single_worker: bool,
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn new(source: DomainSource) -> Self {
        Self {
            source,
            degrees: vec![2],
            refinements: vec![2],
            delta: 12.0,
            study: Study::Solve,
            tol: 1e-6,
            max_iter: 1000,
            check_oracle: false,
            single_worker: false,
            csv: None,
            json: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.degrees.is_empty() || self.refinements.is_empty() {
            return bad("degree and refinement lists must not be empty".into());
        }
        if self.degrees.contains(&0) {
            return bad("degrees must be at least 1".into());
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return bad(format!("penalty {} must be positive", self.delta));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad(format!("tolerance {} outside (0, 1)", self.tol));
        }
        if self.max_iter == 0 {
            return bad("max-iter must be positive".into());
        }
        match &self.study {
            Study::Jumps(js) if js.is_empty() => bad("empty jump list".into()),
            Study::Jumps(_) if self.source.jump_patches().is_empty() => {
                bad(format!("domain {} has no jump patches", self.source))
            }
            Study::Slides(ss) if ss.is_empty() => bad("empty slide list".into()),
            Study::Slides(ss) => match self.source {
                DomainSource::Builtin(Builtin::Slider(m, _)) => {
                    ss.iter().try_for_each(|&s| Builtin::Slider(m, s).build(1, 0).map(drop))
                }
                _ => bad("slide sweeps need the slider domain".into()),
            },
            Study::Growth if distinct(&self.refinements) < 4 => {
                bad("growth study needs at least 4 refinement levels".into())
            }
            _ => Ok(()),
        }
    }

    fn options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            check_oracle: self.check_oracle,
            ..SolveOptions::default()
        }
    }

    /// Runs `f` on a one-thread pool in single-worker mode.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        if self.single_worker {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(1)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        } else {
            Ok(f())
        }
    }
}

fn distinct(v: &[usize]) -> usize {
    let mut v = v.to_vec();
    v.sort_unstable();
    v.dedup();
    v.len()
}

/// Reports of the cases that completed, in case order, and the first failure.
#[derive(Debug)]
pub struct Batch {
    pub reports: Vec<SolveReport>,
    pub failure: Option<Error>,
}

impl Batch {
    pub fn into_result(self) -> Result<Vec<SolveReport>> {
        match self.failure {
            Some(e) => Err(e),
            None => Ok(self.reports),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Case {
    p: usize,
    r: usize,
    jump: Option<i32>,
    slide: Option<f64>,
}

fn run_case(spec: &ExperimentSpec, case: Case) -> Result<SolveReport> {
    let mut name = spec.source.to_string();
    let source = match (case.slide, &spec.source) {
        (Some(s), DomainSource::Builtin(Builtin::Slider(m, _))) => {
            let b = Builtin::Slider(*m, s);
            name = b.to_string();
            DomainSource::Builtin(b)
        }
        _ => spec.source.clone(),
    };
    let mut domain = source.build(case.p, case.r)?;
    if let Some(j) = case.jump {
        let mut alphas = domain.alphas();
        for k in source.jump_patches() {
            alphas[k] = 10f64.powi(j);
        }
        domain = domain.with_alphas(&alphas)?;
        name = format!("{name}_j{j}");
    }
    log::info!("solving {name} p={} r={}", case.p, case.r);
    solve(&domain, &Problem::constant_source(spec.delta, 1.0), &name, case.r, &spec.options())
}

fn run_cases(spec: &ExperimentSpec, cases: Vec<Case>) -> Result<Batch> {
    spec.validate()?;
    let results: Vec<Result<SolveReport>> = spec.install(|| cases.par_iter().map(|&c| run_case(spec, c)).collect())?;
    let mut reports = Vec::new();
    let mut failure = None;
    for r in results {
        match r {
            Ok(rep) => reports.push(rep),
            Err(e) => {
                log::error!("{e}");
                failure.get_or_insert(e);
            }
        }
    }
    Ok(Batch { reports, failure })
}

fn grid(spec: &ExperimentSpec) -> impl Iterator<Item = (usize, usize)> + '_ {
    spec.degrees.iter().flat_map(move |&p| spec.refinements.iter().map(move |&r| (p, r)))
}

/// One solve per `(p, r)`.
pub fn run_solve(spec: &ExperimentSpec) -> Result<Batch> {
    let cases = grid(spec).map(|(p, r)| Case { p, r, jump: None, slide: None }).collect();
    run_cases(spec, cases)
}

/// One solve per `(p, r, j)` with coefficient `10^j` on the jump patches.
pub fn run_jump_sweep(spec: &ExperimentSpec, exponents: &[i32]) -> Result<Batch> {
    let cases = grid(spec)
        .flat_map(|(p, r)| exponents.iter().map(move |&j| Case { p, r, jump: Some(j), slide: None }))
        .collect();
    run_cases(spec, cases)
}

/// One solve per `(p, r, s)` on the slider family.
pub fn run_slide_sweep(spec: &ExperimentSpec, offsets: &[f64]) -> Result<Batch> {
    let cases = grid(spec)
        .flat_map(|(p, r)| offsets.iter().map(move |&s| Case { p, r, jump: None, slide: Some(s) }))
        .collect();
    run_cases(spec, cases)
}

/// `max κ̂ / min κ̂` over reports with a condition estimate.
pub fn kappa_spread(reports: &[SolveReport]) -> Option<f64> {
    let ks: Vec<f64> = reports.iter().filter_map(|r| r.kappa).collect();
    let max = ks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ks.iter().copied().fold(f64::INFINITY, f64::min);
    (!ks.is_empty()).then(|| max / min)
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthLevel {
    pub r: usize,
    pub lambda: f64,
    pub kappa: f64,
    /// `κ̂ / (p Λ²)`.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthStudy {
    pub domain: String,
    pub p: usize,
    pub levels: Vec<GrowthLevel>,
    /// `max ratio / min ratio`.
    pub spread: f64,
    /// Least-squares `c` in `κ̂ ≈ c p Λ²`.
    pub fit_c: f64,
    /// κ̂ strictly increasing over the levels with `r > 2`.
    pub monotone_beyond_2: bool,
}

impl GrowthStudy {
    pub fn from_reports(reports: &[SolveReport]) -> Result<Self> {
        let first = reports.first().ok_or_else(|| Error::Config("growth study without levels".into()))?;
        let mut levels = Vec::new();
        for rep in reports {
            let kappa = rep.kappa.ok_or_else(|| {
                Error::Config(format!("{} p={} r={}: no condition estimate (not converged)", rep.domain, rep.p, rep.r))
            })?;
            levels.push(GrowthLevel {
                r: rep.r,
                lambda: rep.lambda,
                kappa,
                ratio: kappa / rep.lambda_bound,
            });
        }
        levels.sort_by_key(|l| l.r);
        let ratios: Vec<f64> = levels.iter().map(|l| l.ratio).collect();
        let spread = ratios.iter().copied().fold(0.0, f64::max) / ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let p = first.p as f64;
        let (num, den) = levels.iter().fold((0.0, 0.0), |(n, d), l| {
            let x = p * l.lambda * l.lambda;
            (n + l.kappa * x, d + x * x)
        });
        let tail: Vec<f64> = levels.iter().filter(|l| l.r >= 2).map(|l| l.kappa).collect();
        Ok(Self {
            domain: first.domain.clone(),
            p: first.p,
            monotone_beyond_2: tail.windows(2).all(|w| w[1] > w[0]),
            levels,
            spread,
            fit_c: num / den,
        })
    }
}

/// Condition number growth for every degree of the spec.
pub fn run_growth_study(spec: &ExperimentSpec) -> Result<(Batch, Vec<GrowthStudy>)> {
    let batch = run_solve(spec)?;
    if batch.failure.is_some() {
        return Ok((batch, Vec::new()));
    }
    let studies = spec
        .degrees
        .iter()
        .map(|&p| {
            let reps: Vec<SolveReport> = batch.reports.iter().filter(|r| r.p == p).cloned().collect();
            GrowthStudy::from_reports(&reps)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((batch, studies))
}

pub fn sine_solution([x, y]: [f64; 2]) -> f64 {
    (PI * x).sin() * (PI * y).sin()
}

pub fn sine_gradient([x, y]: [f64; 2]) -> [f64; 2] {
    [PI * (PI * x).cos() * (PI * y).sin(), PI * (PI * x).sin() * (PI * y).cos()]
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceLevel {
    pub r: usize,
    /// Largest physical mesh size.
    pub h: f64,
    pub l2: f64,
    pub h1: f64,
    pub max_jump: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    pub domain: String,
    pub p: usize,
    pub levels: Vec<ConvergenceLevel>,
    /// Least-squares slope of `log l2` against `log h`.
    pub l2_rate: f64,
}

impl ConvergenceStudy {
    pub const CSV_HEADER: &'static str = "domain,p,r,h,l2,h1,max_jump,it";

    pub fn csv_rows(&self) -> Vec<String> {
        self.levels
            .iter()
            .map(|l| {
                format!(
                    "{},{},{},{:.6e},{:.6e},{:.6e},{:.3e},{}",
                    self.domain, self.p, l.r, l.h, l.l2, l.h1, l.max_jump, l.iterations
                )
            })
            .collect()
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fitted_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Solves the manufactured problem on every `(p, r)` and fits the L2 rate.
pub fn run_convergence(spec: &ExperimentSpec) -> Result<Vec<ConvergenceStudy>> {
    spec.validate()?;
    let problem = Problem::manufactured_sine(spec.delta);
    let opts = SolveOptions {
        keep_solution: true,
        ..spec.options()
    };
    let name = spec.source.to_string();
    let pairs: Vec<(usize, usize)> = grid(spec).collect();
    let levels: Vec<Result<(usize, ConvergenceLevel)>> = spec.install(|| {
        pairs
            .par_iter()
            .map(|&(p, r)| {
                let base = spec.source.build(p, r)?;
                let domain = base.with_alphas(&vec![1.0; base.num_patches()])?;
                let rep = solve(&domain, &problem, &name, r, &opts)?;
                if !rep.converged {
                    return Err(Error::Config(format!("{name} p={p} r={r}: PCG did not converge")));
                }
                let err = measure_error(&domain, &rep.solution, sine_solution, sine_gradient)?;
                let h = domain.metrics().iter().map(|m| m.h).fold(0.0, f64::max);
                Ok((
                    p,
                    ConvergenceLevel {
                        r,
                        h,
                        l2: err.l2,
                        h1: err.h1_broken,
                        max_jump: err.max_jump,
                        iterations: rep.iterations,
                    },
                ))
            })
            .collect()
    })?;
    let levels = levels.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(spec
        .degrees
        .iter()
        .map(|&p| {
            let mut ls: Vec<ConvergenceLevel> = levels.iter().filter(|(q, _)| *q == p).map(|(_, l)| l.clone()).collect();
            ls.sort_by_key(|l| l.r);
            let x: Vec<f64> = ls.iter().map(|l| l.h.ln()).collect();
            let y: Vec<f64> = ls.iter().map(|l| l.l2.ln()).collect();
            ConvergenceStudy {
                domain: name.clone(),
                p,
                l2_rate: if ls.len() >= 2 { fitted_slope(&x, &y) } else { f64::NAN },
                levels: ls,
            }
        })
        .collect())
}

/// Writes `header` and `rows` to `path`.
pub fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{header}")?;
    for r in rows {
        writeln!(f, "{r}")?;
    }
    f.flush()?;
    Ok(())
}
