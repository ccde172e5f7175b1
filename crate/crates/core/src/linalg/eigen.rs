use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Error, Result};

const MAX_SWEEPS_PER_DIM: usize = 200;

/// Eigenvalues of a dense symmetric matrix in ascending order
/// (Householder tridiagonalisation followed by implicit QR).
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Domain(format!("eigenvalues of non-square {}x{}", n, a.ncols())));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, MAX_SWEEPS_PER_DIM * n.max(1))
        .ok_or(Error::EigenNoConvergence(n))?;
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Extreme eigenvalues of `M A` for symmetric `A` and SPD `M`, computed as
/// the spectrum of `Lᵀ A L` with `M = L Lᵀ`. Returns `(λ_min, λ_max)`.
pub fn generalized_condition(a: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<(f64, f64)> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { negative: 0, context: Some("preconditioner".into()) })?;
    let l = chol.l();
    let t = l.transpose() * a * &l;
    let ev = symmetric_eigenvalues(&t)?;
    Ok((ev[0], ev[ev.len() - 1]))
}

/// Extreme eigenvalues of the pencil `A x = λ B x` for symmetric `A` and
/// SPD `B`, from the spectrum of `L⁻¹ A L⁻ᵀ` with `B = L Lᵀ`.
pub fn pencil_extremes(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(f64, f64)> {
    let chol = b
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { negative: 0, context: Some("pencil".into()) })?;
    let l = chol.l();
    let x = l.solve_lower_triangular(a).expect("non-singular factor");
    let t = l
        .solve_lower_triangular(&x.transpose())
        .expect("non-singular factor");
    let ev = symmetric_eigenvalues(&t)?;
    Ok((ev[0], ev[ev.len() - 1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0, 2.0]));
        assert_eq!(symmetric_eigenvalues(&a).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn swap_matrix() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let ev = symmetric_eigenvalues(&a).unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn toeplitz_closed_form() {
        let n = 10;
        let a = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => 2.0,
            1 => -1.0,
            _ => 0.0,
        });
        let ev = symmetric_eigenvalues(&a).unwrap();
        for (k, e) in ev.iter().enumerate() {
            let exact = 2.0 - 2.0 * (((k + 1) as f64) * std::f64::consts::PI / 11.0).cos();
            assert!((e - exact).abs() < 1e-12, "{e} vs {exact}");
        }
    }

    #[test]
    fn eigenpair_residuals() {
        let n = 30;
        let a = DMatrix::from_fn(n, n, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let eig = SymmetricEigen::new(a.clone());
        let norm = a.norm();
        for k in [0, n / 2, n - 1] {
            let v = eig.eigenvectors.column(k);
            let r = &a * v - v * eig.eigenvalues[k];
            assert!(r.norm() <= 1e-8 * norm);
        }
        let ev = symmetric_eigenvalues(&a).unwrap();
        let mut expected: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        expected.sort_by(f64::total_cmp);
        for (x, y) in ev.iter().zip(&expected) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn pencil_matches_closed_form() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 6.0]);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let (lo, hi) = pencil_extremes(&a, &b).unwrap();
        assert!((lo - 2.0).abs() < 1e-14 && (hi - 3.0).abs() < 1e-14);
        let (lo, hi) = generalized_condition(&a, &b).unwrap();
        assert!((lo - 2.0).abs() < 1e-14 && (hi - 12.0).abs() < 1e-14);
    }
}
