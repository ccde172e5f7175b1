use std::time::Instant;

use serde::Serialize;

use super::IetiOperator;
use crate::assembly::Problem;
use crate::geometry::MultiPatchDomain;
use crate::linalg::{norm_inf, pcg};
use crate::refsolver::{assemble_global, coercivity_margin, direct_solve};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Compare with the direct solve of the global system.
    pub check_oracle: bool,
    /// Compute the dense coercivity margin (small systems only).
    pub coercivity: bool,
    /// Keep the recovered patch coefficients in the report.
    pub keep_solution: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 1000,
            check_oracle: false,
            coercivity: false,
            keep_solution: false,
        }
    }
}

/// `Λ = 1 + log p + max_k log(H_k / h_k)`.
pub fn bound_factor(domain: &MultiPatchDomain) -> f64 {
    1.0 + (domain.degree() as f64).ln() + domain.max_log_h_ratio()
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub domain: String,
    pub p: usize,
    pub r: usize,
    pub patches: usize,
    pub dofs: usize,
    pub multipliers: usize,
    pub primal: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Lanczos estimate, present only after convergence.
    pub kappa: Option<f64>,
    pub lambda: f64,
    /// `p Λ²`.
    pub lambda_bound: f64,
    pub kappa_over_bound: Option<f64>,
    pub residuals: Vec<f64>,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
    pub max_valence: usize,
    pub coercivity_margin: Option<f64>,
    /// Relative ∞-norm difference to the direct solve.
    pub oracle_error: Option<f64>,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub solution: Vec<f64>,
}

impl SolveReport {
    pub const CSV_HEADER: &'static str = "domain,p,r,K,dofs,multipliers,it,kappa,lambda_bound,kappa_over_bound";

    pub fn csv_row(&self) -> String {
        let opt = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{:.6},{}",
            self.domain,
            self.p,
            self.r,
            self.patches,
            self.dofs,
            self.multipliers,
            self.iterations,
            opt(self.kappa),
            self.lambda_bound,
            opt(self.kappa_over_bound)
        )
    }
}

/// Sets up the operator, solves `F λ = d` by PCG and recovers the solution.
pub fn solve(domain: &MultiPatchDomain, problem: &Problem, name: &str, r: usize, opts: &SolveOptions) -> Result<SolveReport> {
    if !(opts.tol > 0.0 && opts.tol < 1.0) {
        return Err(Error::Config(format!("tolerance {} outside (0, 1)", opts.tol)));
    }
    let t0 = Instant::now();
    let op = IetiOperator::new(domain, problem)?;
    let d = op.compute_d();
    let setup_seconds = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let out = pcg(|x| op.apply_F(x), |x| op.apply_MsD(x), &d, opts.tol, opts.max_iter)?;
    let rec = op.recover_solution(&out.x);
    let solve_seconds = t1.elapsed().as_secs_f64();

    let mut notes = Vec::new();
    if !out.converged {
        notes.push(format!("PCG stopped after {} iterations without reaching tolerance", out.iterations));
    }
    for v in domain.c0_t_junctions() {
        let x = domain.vertices()[v].point;
        notes.push(format!(
            "T-junction at ({:.6}, {:.6}) lies on a C0 knot line of the long side",
            x[0], x[1]
        ));
    }
    let kappa = if out.converged { out.condition_estimate() } else { None };
    let p = domain.degree();
    let lambda = bound_factor(domain);
    let lambda_bound = p as f64 * lambda * lambda;

    let oracle_error = if opts.check_oracle {
        let direct = direct_solve(&assemble_global(domain, problem)?)?;
        let scale = norm_inf(&direct);
        let diff: Vec<f64> = direct.iter().zip(&rec.patch_solution).map(|(a, b)| a - b).collect();
        Some(if scale > 0.0 { norm_inf(&diff) / scale } else { norm_inf(&diff) })
    } else {
        None
    };
    let coercivity_margin = if opts.coercivity {
        coercivity_margin(domain, problem)?
    } else {
        None
    };

    Ok(SolveReport {
        domain: name.to_string(),
        p,
        r,
        patches: domain.num_patches(),
        dofs: domain.num_dofs(),
        multipliers: op.n_multipliers(),
        primal: op.n_primal(),
        iterations: out.iterations,
        converged: out.converged,
        kappa,
        lambda,
        lambda_bound,
        kappa_over_bound: kappa.map(|k| k / lambda_bound),
        residuals: out.residuals,
        setup_seconds,
        solve_seconds,
        max_valence: domain.max_valence(),
        coercivity_margin,
        oracle_error,
        notes,
        solution: if opts.keep_solution { rec.patch_solution } else { Vec::new() },
    })
}
