use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser};
use ietidp::experiment::{
    kappa_spread, run_convergence, run_growth_study, run_jump_sweep, run_slide_sweep, run_solve, write_csv, Batch,
    Builtin, ConvergenceStudy, DomainConfig, DomainSource, ExperimentSpec, Study,
};
use ietidp::ieti::SolveReport;
use ietidp::{Error, Result};

/// IETI-DP solver for SIPG multi-patch discretizations.
///
/// Builtin domains: `grid N`, `tdomain`, `slider M S`, `twopatch`.
#[derive(Debug, Parser)]
#[command(name = "ietidp", version, group(ArgGroup::new("domain").required(true).args(["config", "builtin"])))]
#[command(group(ArgGroup::new("mode").args(["jumps", "slides", "growth", "manufactured"])))]
struct Cli {
    /// JSON domain file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Builtin domain generator and its arguments.
    #[arg(long, num_args = 1.., value_name = "NAME ARGS")]
    builtin: Option<Vec<String>>,

    /// Spline degrees.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    degree: Vec<usize>,

    /// Uniform refinement levels.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    refine: Vec<usize>,

    /// Penalty parameter.
    #[arg(long, default_value_t = 12.0)]
    delta: f64,

    /// Relative residual reduction of PCG.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,

    #[arg(long, default_value_t = 1000)]
    max_iter: usize,

    /// Compare every solution with a direct solve of the global system.
    #[arg(long)]
    check_oracle: bool,

    /// Run everything on one thread.
    #[arg(long)]
    single_worker: bool,

    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,

    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,

    /// Jump sweep: coefficient 10^j on the domain's jump patches.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_name = "LIST")]
    jumps: Option<Vec<i32>>,

    /// Slide sweep over slider offsets.
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    slides: Option<Vec<f64>>,

    /// Fit the condition number growth against p Λ².
    #[arg(long)]
    growth: bool,

    /// Manufactured solution sin(πx) sin(πy) with unit coefficients.
    #[arg(long)]
    manufactured: bool,
}

impl Cli {
    fn spec(&self) -> Result<ExperimentSpec> {
        let source = match (&self.config, &self.builtin) {
            (Some(path), _) => {
                let mut cfg = DomainConfig::load(path)?;
                if cfg.name.is_none() {
                    cfg.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
                }
                DomainSource::Config(cfg)
            }
            (None, Some(words)) => {
                let (name, args) = words.split_first().ok_or_else(|| Error::Config("--builtin needs a name".into()))?;
                DomainSource::Builtin(Builtin::parse(name, args)?)
            }
            (None, None) => return Err(Error::Config("no domain given".into())),
        };
        let study = if let Some(j) = &self.jumps {
            Study::Jumps(j.clone())
        } else if let Some(s) = &self.slides {
            Study::Slides(s.clone())
        } else if self.growth {
            Study::Growth
        } else if self.manufactured {
            Study::Manufactured
        } else {
            Study::Solve
        };
        let spec = ExperimentSpec {
            source,
            degrees: self.degree.clone(),
            refinements: self.refine.clone(),
            delta: self.delta,
            study,
            tol: self.tol,
            max_iter: self.max_iter,
            check_oracle: self.check_oracle,
            single_worker: self.single_worker,
            csv: self.csv.clone(),
            json: self.json.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn write_json<T: serde::Serialize>(spec: &ExperimentSpec, value: &T) -> Result<()> {
    if let Some(path) = &spec.json {
        std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    }
    Ok(())
}

/// Prints and stores the completed rows, then surfaces the first failure.
fn emit_batch(spec: &ExperimentSpec, batch: Batch) -> Result<Vec<SolveReport>> {
    let rows: Vec<String> = batch.reports.iter().map(SolveReport::csv_row).collect();
    println!("{}", SolveReport::CSV_HEADER);
    for r in &rows {
        println!("{r}");
    }
    for rep in &batch.reports {
        for note in &rep.notes {
            log::warn!("{} p={} r={}: {note}", rep.domain, rep.p, rep.r);
        }
        if let Some(e) = rep.oracle_error {
            println!("# {} p={} r={} oracle discrepancy {e:.3e}", rep.domain, rep.p, rep.r);
        }
    }
    if let Some(path) = &spec.csv {
        write_csv(path, SolveReport::CSV_HEADER, &rows)?;
    }
    write_json(spec, &batch.reports)?;
    batch.into_result()
}

fn run(spec: &ExperimentSpec) -> Result<()> {
    match &spec.study {
        Study::Solve => {
            emit_batch(spec, run_solve(spec)?)?;
        }
        Study::Jumps(js) => {
            let reps = emit_batch(spec, run_jump_sweep(spec, js)?)?;
            for &p in &spec.degrees {
                for &r in &spec.refinements {
                    let sel: Vec<SolveReport> = reps.iter().filter(|x| x.p == p && x.r == r).cloned().collect();
                    if let Some(s) = kappa_spread(&sel) {
                        println!("# p={p} r={r} kappa max/min {s:.4}");
                    }
                }
            }
        }
        Study::Slides(ss) => {
            emit_batch(spec, run_slide_sweep(spec, ss)?)?;
        }
        Study::Growth => {
            let (batch, studies) = run_growth_study(spec)?;
            let rows: Vec<String> = batch.reports.iter().map(SolveReport::csv_row).collect();
            println!("{}", SolveReport::CSV_HEADER);
            rows.iter().for_each(|r| println!("{r}"));
            if let Some(path) = &spec.csv {
                write_csv(path, SolveReport::CSV_HEADER, &rows)?;
            }
            for g in &studies {
                println!(
                    "# {} p={}: kappa/(p Lambda^2) spread {:.4}, fitted c {:.4e}, monotone beyond r=2: {}",
                    g.domain, g.p, g.spread, g.fit_c, g.monotone_beyond_2
                );
            }
            write_json(spec, &serde_json::json!({ "reports": batch.reports, "studies": studies }))?;
            if let Some(e) = batch.failure {
                return Err(e);
            }
        }
        Study::Manufactured => {
            let studies = run_convergence(spec)?;
            let rows: Vec<String> = studies.iter().flat_map(ConvergenceStudy::csv_rows).collect();
            println!("{}", ConvergenceStudy::CSV_HEADER);
            rows.iter().for_each(|r| println!("{r}"));
            for s in &studies {
                println!("# {} p={}: L2 rate {:.3}", s.domain, s.p, s.l2_rate);
            }
            if let Some(path) = &spec.csv {
                write_csv(path, ConvergenceStudy::CSV_HEADER, &rows)?;
            }
            write_json(spec, &studies)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = cli.spec().and_then(|spec| run(&spec));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
