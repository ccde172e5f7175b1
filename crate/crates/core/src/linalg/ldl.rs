use super::{reverse_cuthill_mckee, CsrMatrix};
use crate::{Error, Result};

/// Relative pivot threshold: `|d_i| <= PIVOT_TOL * max|a_ij|` is singular.
const PIVOT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

/// `P S A S Pᵀ = L D Lᵀ` in envelope (profile) storage under a reverse
/// Cuthill–McKee permutation, with `S = diag(|a_ii|^{-1/2})` equilibrating
/// the diagonal so that the pivot threshold is independent of row scaling.
///
/// Row `i` of `L` is stored densely from its first structural nonzero
/// `first[i]` up to the diagonal (exclusive); fill stays inside the envelope.
#[derive(Debug, Clone)]
pub struct LdlFactor {
    n: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    /// Diagonal of `S`, by original index.
    equil: Vec<f64>,
    first: Vec<usize>,
    offsets: Vec<usize>,
    lower: Vec<f64>,
    diag: Vec<f64>,
    inertia: Inertia,
}

impl LdlFactor {
    /// Factorizes a symmetric matrix. Only the lower triangle (after
    /// permutation) is read.
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Domain(format!("factorize: {}x{} is not square", a.nrows(), a.ncols())));
        }
        let n = a.nrows();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut equil = vec![1.0; n];
        for (i, e) in equil.iter_mut().enumerate() {
            let d = a.get(i, i).abs();
            if d > 0.0 && d.is_finite() {
                *e = 1.0 / d.sqrt();
            }
        }
        let scale = a.iter().map(|(i, j, v)| (v * equil[i] * equil[j]).abs()).fold(f64::MIN_POSITIVE, f64::max);

        // envelope of the permuted lower triangle
        let mut first: Vec<usize> = (0..n).collect();
        for (i, j, _) in a.iter() {
            let (pi, pj) = (inv[i], inv[j]);
            if pj < pi {
                first[pi] = first[pi].min(pj);
            }
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + (i - first[i]);
        }
        let mut lower = vec![0.0; offsets[n]];
        let mut diag = vec![0.0; n];

        for pi in 0..n {
            let old = perm[pi];
            let (cols, vals) = a.row(old);
            for (&j, &v) in cols.iter().zip(vals) {
                let v = v * equil[old] * equil[j];
                let pj = inv[j];
                if pj < pi {
                    lower[offsets[pi] + pj - first[pi]] = v;
                } else if pj == pi {
                    diag[pi] = v;
                }
            }
        }

        let mut inertia = Inertia {
            positive: 0,
            negative: 0,
            zero: 0,
        };
        let mut u = Vec::new();
        for i in 0..n {
            let fi = first[i];
            let len = i - fi;
            // u_ij = a_ij - sum_k u_ik l_jk, with u_ik = l_ik d_k
            u.clear();
            u.extend_from_slice(&lower[offsets[i]..offsets[i] + len]);
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let lj = &lower[offsets[j] + (k0 - fj)..offsets[j] + (j - fj)];
                let ui = &u[k0 - fi..j - fi];
                let s: f64 = ui.iter().zip(lj).map(|(x, y)| x * y).sum();
                u[j - fi] -= s;
            }
            let mut d = diag[i];
            for (k, uk) in u.iter().enumerate() {
                let l = uk / diag[fi + k];
                d -= uk * l;
                lower[offsets[i] + k] = l;
            }
            if !(d.abs() > PIVOT_TOL * scale) {
                return Err(Error::Singular {
                    index: perm[i],
                    pivot: d.abs(),
                });
            }
            if d > 0.0 {
                inertia.positive += 1;
            } else {
                inertia.negative += 1;
            }
            diag[i] = d;
        }
        Ok(Self {
            n,
            perm,
            equil,
            first,
            offsets,
            lower,
            diag,
            inertia,
        })
    }

    /// Factorizes and rejects anything that is not positive definite.
    pub fn new_spd(a: &CsrMatrix, context: &str) -> Result<Self> {
        let f = Self::new(a).map_err(|e| match e {
            Error::Singular { index, pivot } => {
                log::debug!("{context}: singular pivot {index} ({pivot:.3e})");
                Error::Singular { index, pivot }
            }
            other => other,
        })?;
        if f.inertia.negative > 0 {
            return Err(Error::NotPositiveDefinite {
                negative: f.inertia.negative,
                context: Some(context.to_string()),
            });
        }
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn inertia(&self) -> Inertia {
        self.inertia
    }

    /// Number of stored off-diagonal factor entries.
    pub fn envelope_size(&self) -> usize {
        self.lower.len()
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n);
        let mut y: Vec<f64> = self.perm.iter().map(|&o| rhs[o] * self.equil[o]).collect();
        // L y = b
        for i in 0..self.n {
            let fi = self.first[i];
            let li = &self.lower[self.offsets[i]..self.offsets[i + 1]];
            let s: f64 = li.iter().zip(&y[fi..i]).map(|(l, x)| l * x).sum();
            y[i] -= s;
        }
        for (yi, d) in y.iter_mut().zip(&self.diag) {
            *yi /= d;
        }
        // Lᵀ x = y
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let xi = y[i];
            if xi != 0.0 {
                let li = &self.lower[self.offsets[i]..self.offsets[i + 1]];
                for (k, l) in li.iter().enumerate() {
                    y[fi + k] -= l * xi;
                }
            }
        }
        let mut x = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new] * self.equil[old];
        }
        x
    }
}
