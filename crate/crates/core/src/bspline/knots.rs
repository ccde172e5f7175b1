use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Overlap below which two parameter intervals are considered to touch only.
const OVERLAP_EPS: f64 = 1e-12;

/// A p-open knot vector on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KnotVectorRepr", into = "KnotVectorRepr")]
pub struct KnotVector {
    degree: usize,
    knots: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct KnotVectorRepr {
    degree: usize,
    knots: Vec<f64>,
}

impl TryFrom<KnotVectorRepr> for KnotVector {
    type Error = Error;

    fn try_from(r: KnotVectorRepr) -> Result<Self> {
        KnotVector::new(r.degree, r.knots)
    }
}

impl From<KnotVector> for KnotVectorRepr {
    fn from(k: KnotVector) -> Self {
        Self {
            degree: k.degree,
            knots: k.knots,
        }
    }
}

/// Values and derivatives of the `p+1` functions active at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisEval {
    /// Index of the first active basis function.
    pub first: usize,
    /// `ders[k][j]`: k-th derivative of basis function `first + j`.
    pub ders: Vec<Vec<f64>>,
}

impl BasisEval {
    pub fn values(&self) -> &[f64] {
        &self.ders[0]
    }
}

impl KnotVector {
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self> {
        if degree == 0 {
            return Err(Error::Config("degree must be positive".into()));
        }
        let p = degree;
        if knots.len() < 2 * (p + 1) {
            return Err(Error::Config(format!(
                "knot vector of degree {p} needs at least {} knots, got {}",
                2 * (p + 1),
                knots.len()
            )));
        }
        if knots.iter().any(|k| !k.is_finite()) || knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Config("knots must be finite and non-decreasing".into()));
        }
        let m = knots.len();
        if knots[..=p].iter().any(|&k| k != 0.0) || knots[m - p - 1..].iter().any(|&k| k != 1.0) {
            return Err(Error::Config(format!("knot vector is not {p}-open on [0,1]")));
        }
        let interior = &knots[p + 1..m - p - 1];
        if interior.iter().any(|&k| k <= 0.0 || k >= 1.0) {
            return Err(Error::Config("interior knots must lie in (0,1)".into()));
        }
        let mut run = 1;
        for w in interior.windows(2) {
            run = if w[0] == w[1] { run + 1 } else { 1 };
            if run > p {
                return Err(Error::Config(format!("interior knot {} repeated more than {p} times", w[0])));
            }
        }
        Ok(Self { degree, knots })
    }

    /// Open knot vector with the given distinct interior breakpoints, each of
    /// multiplicity one.
    pub fn with_breakpoints(degree: usize, interior: &[f64]) -> Result<Self> {
        let mut knots = vec![0.0; degree + 1];
        knots.extend_from_slice(interior);
        knots.extend(std::iter::repeat_n(1.0, degree + 1));
        Self::new(degree, knots)
    }

    /// Open knot vector with `spans` equal spans.
    pub fn uniform(degree: usize, spans: usize) -> Result<Self> {
        let interior: Vec<f64> = (1..spans).map(|i| i as f64 / spans as f64).collect();
        Self::with_breakpoints(degree, &interior)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Dimension of the spline space.
    pub fn len(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Distinct knot values, `0` and `1` included.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.knots.clone();
        b.dedup();
        b
    }

    /// Nonzero knot spans `(ξ_i, ξ_{i+1})`.
    pub fn spans(&self) -> Vec<(f64, f64)> {
        self.breakpoints().windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// Largest knot span ĥ.
    pub fn max_span(&self) -> f64 {
        self.spans().iter().map(|(a, b)| b - a).fold(0.0, f64::max)
    }

    /// Smallest nonzero knot span ĥ_min.
    pub fn min_span(&self) -> f64 {
        self.spans().iter().map(|(a, b)| b - a).fold(f64::INFINITY, f64::min)
    }

    /// Support interval of basis function `i`.
    pub fn support(&self, i: usize) -> (f64, f64) {
        (self.knots[i], self.knots[i + self.degree + 1])
    }

    /// Index `s` with `ξ_s ≤ x < ξ_{s+1}`; `x = 1` maps into the last nonzero span.
    pub fn find_span(&self, x: f64) -> usize {
        let p = self.degree;
        let n = self.len();
        if x >= self.knots[n] {
            return n - 1;
        }
        // first index with knot > x, within [p+1, n]
        let upper = self.knots[p + 1..=n].partition_point(|&k| k <= x) + p + 1;
        upper - 1
    }

    /// Cox–de Boor evaluation of the active functions and their derivatives up
    /// to order `max_deriv` (NURBS-book style triangular scheme).
    pub fn eval_basis(&self, x: f64, max_deriv: usize) -> Result<BasisEval> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("parameter {x} outside [0,1]")));
        }
        let p = self.degree;
        if max_deriv > p {
            return Err(Error::Domain(format!("derivative order {max_deriv} exceeds degree {p}")));
        }
        let span = self.find_span(x);
        let u = &self.knots;
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = x - u[span + 1 - j];
            right[j] = u[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        let mut ders = vec![vec![0.0; p + 1]; max_deriv + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let mut a = vec![vec![0.0; p + 1]; 2];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for k in 1..=max_deriv {
                let mut d = 0.0;
                let rk = r as isize - k as isize;
                let pk = p - k;
                if r >= k {
                    let rk = rk as usize;
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                    d = a[s2][0] * ndu[rk][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if (r as isize - 1) <= pk as isize { k - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    d += a[s2][k] * ndu[r][pk];
                }
                ders[k][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut fac = p as f64;
        for (k, row) in ders.iter_mut().enumerate().skip(1) {
            row.iter_mut().for_each(|v| *v *= fac);
            fac *= (p - k) as f64;
        }
        Ok(BasisEval { first: span - p, ders })
    }

    /// Value of basis function `i` at `x` (zero outside the active set).
    pub fn eval_single(&self, i: usize, x: f64) -> Result<f64> {
        let e = self.eval_basis(x, 0)?;
        Ok(if i >= e.first && i <= e.first + self.degree {
            e.ders[0][i - e.first]
        } else {
            0.0
        })
    }

    /// Greville abscissae: averages of `p` consecutive knots.
    pub fn greville(&self) -> Vec<f64> {
        let p = self.degree as f64;
        (0..self.len())
            .map(|i| self.knots[i + 1..=i + self.degree].iter().sum::<f64>() / p)
            .collect()
    }

    /// Bisects every nonzero span `levels` times.
    pub fn refine_uniform(&self, levels: usize) -> KnotVector {
        let mut kv = self.clone();
        for _ in 0..levels {
            let mut knots = Vec::with_capacity(2 * kv.knots.len());
            for w in kv.knots.windows(2) {
                knots.push(w[0]);
                if w[1] > w[0] {
                    knots.push(0.5 * (w[0] + w[1]));
                }
            }
            knots.push(*kv.knots.last().unwrap());
            kv = KnotVector {
                degree: kv.degree,
                knots,
            };
        }
        kv
    }

    /// Functions whose support meets `(a, b)` in a set of positive length.
    pub fn active_on_interval(&self, a: f64, b: f64) -> Result<Vec<usize>> {
        if !(a < b) {
            return Err(Error::Domain(format!("empty interval ({a}, {b})")));
        }
        Ok((0..self.len())
            .filter(|&i| {
                let (s, e) = self.support(i);
                e.min(b) - s.max(a) > OVERLAP_EPS
            })
            .collect())
    }

    /// Functions with `B_i(x) > 0`, decided by evaluation.
    pub fn nonzero_at_point(&self, x: f64) -> Result<Vec<usize>> {
        let e = self.eval_basis(x, 0)?;
        Ok(e.ders[0]
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(j, _)| e.first + j)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kv(p: usize, k: &[f64]) -> KnotVector {
        KnotVector::new(p, k.to_vec()).unwrap()
    }

    #[test]
    fn bernstein_midpoint() {
        let e = kv(2, &[0., 0., 0., 1., 1., 1.]).eval_basis(0.5, 0).unwrap();
        assert_eq!(e.first, 0);
        for (v, x) in e.values().iter().zip([0.25, 0.5, 0.25]) {
            assert!((v - x).abs() < 1e-15);
        }
    }

    #[test]
    fn endpoint_interpolation() {
        for k in [kv(2, &[0., 0., 0., 0.5, 1., 1., 1.]), kv(3, &[0., 0., 0., 0., 0.3, 0.3, 0.6, 1., 1., 1., 1.])] {
            let e = k.eval_basis(0.0, 0).unwrap();
            assert_eq!(e.first, 0);
            assert_eq!(e.values()[0], 1.0);
            assert!(e.values()[1..].iter().all(|&v| v == 0.0));
            let e = k.eval_basis(1.0, 0).unwrap();
            assert_eq!(e.first + k.degree(), k.len() - 1);
            assert_eq!(*e.values().last().unwrap(), 1.0);
        }
    }

    #[test]
    fn partition_of_unity_and_derivative() {
        let e = kv(2, &[0., 0., 0., 0.5, 1., 1., 1.]).eval_basis(0.25, 1).unwrap();
        assert!((e.ders[0].iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(e.ders[1].iter().sum::<f64>().abs() < 1e-13);
    }

    #[test]
    fn out_of_range_is_domain_error() {
        let k = kv(1, &[0., 0., 1., 1.]);
        assert!(matches!(k.eval_basis(1.5, 0), Err(Error::Domain(_))));
        assert!(matches!(k.eval_basis(-0.1, 0), Err(Error::Domain(_))));
        assert!(matches!(k.eval_basis(0.5, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn greville_examples() {
        assert_eq!(kv(2, &[0., 0., 0., 1., 1., 1.]).greville(), vec![0.0, 0.5, 1.0]);
        assert_eq!(kv(2, &[0., 0., 0., 0.5, 1., 1., 1.]).greville(), vec![0.0, 0.25, 0.75, 1.0]);
        assert_eq!(kv(1, &[0., 0., 1., 1.]).greville(), vec![0.0, 1.0]);
    }

    #[test]
    fn refinement_examples() {
        let k = kv(2, &[0., 0., 0., 1., 1., 1.]);
        assert_eq!(k.refine_uniform(1).knots(), &[0., 0., 0., 0.5, 1., 1., 1.]);
        assert_eq!(k.refine_uniform(0), k);
        let k = kv(1, &[0., 0., 1., 1.]).refine_uniform(2);
        assert_eq!(k.knots(), &[0., 0., 0.25, 0.5, 0.75, 1., 1.]);
        // multiplicities preserved
        let k = kv(2, &[0., 0., 0., 0.5, 0.5, 1., 1., 1.]).refine_uniform(1);
        assert_eq!(k.knots(), &[0., 0., 0., 0.25, 0.5, 0.5, 0.75, 1., 1., 1.]);
    }

    #[test]
    fn active_on_interval_examples() {
        let k = kv(2, &[0., 0., 0., 0.5, 1., 1., 1.]);
        assert_eq!(k.active_on_interval(0.0, 0.5).unwrap(), vec![0, 1, 2]);
        assert_eq!(k.active_on_interval(0.0, 1.0).unwrap(), vec![0, 1, 2, 3]);
        let k1 = kv(1, &[0., 0., 0.5, 1., 1.]);
        assert_eq!(k1.active_on_interval(0.5, 1.0).unwrap(), vec![1, 2]);
        assert!(matches!(k.active_on_interval(0.5, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn nonzero_at_point_examples() {
        let k = kv(2, &[0., 0., 0., 0.5, 1., 1., 1.]);
        // oracle: brute-force evaluation of every function
        let oracle: Vec<usize> = (0..k.len()).filter(|&i| k.eval_single(i, 0.5).unwrap() > 0.0).collect();
        assert_eq!(oracle, vec![1, 2]);
        assert_eq!(k.nonzero_at_point(0.5).unwrap(), oracle);
        assert_eq!(k.nonzero_at_point(0.0).unwrap(), vec![0]);
        assert_eq!(k.nonzero_at_point(1.0).unwrap(), vec![k.len() - 1]);
        // C0 knot: a single function survives
        let k = kv(2, &[0., 0., 0., 0.5, 0.5, 1., 1., 1.]);
        assert_eq!(k.nonzero_at_point(0.5).unwrap(), vec![2]);
    }

    #[test]
    fn invalid_knot_vectors() {
        assert!(KnotVector::new(2, vec![0., 0., 1., 1.]).is_err());
        assert!(KnotVector::new(1, vec![0., 0., 0.7, 0.3, 1., 1.]).is_err());
        assert!(KnotVector::new(1, vec![0., 0., 0.5, 0.5, 1., 1.]).is_err());
        assert!(KnotVector::new(2, vec![0., 0., 0.1, 1., 1., 1.]).is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let k = kv(3, &[0., 0., 0., 0., 0.1, 1.0 / 3.0, 0.7, 1., 1., 1., 1.]);
        let s = serde_json::to_string(&k).unwrap();
        assert_eq!(serde_json::from_str::<KnotVector>(&s).unwrap(), k);
        assert!(serde_json::from_str::<KnotVector>(r#"{"degree":2,"knots":[0,0,1,1]}"#).is_err());
    }

    #[test]
    fn span_metrics() {
        let k = kv(1, &[0., 0., 0.1, 0.5, 1., 1.]);
        assert!((k.min_span() - 0.1).abs() < 1e-15);
        assert!((k.max_span() - 0.5).abs() < 1e-15);
    }

    prop_compose! {
        fn arb_kv()(p in 1usize..=4, raw in prop::collection::vec(0.01f64..0.99, 0..8), refine in 0usize..2) -> KnotVector {
            let mut interior = raw;
            interior.sort_by(f64::total_cmp);
            interior.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
            KnotVector::with_breakpoints(p, &interior).unwrap().refine_uniform(refine)
        }
    }

    proptest! {
        #[test]
        fn partition_of_unity(k in arb_kv(), xs in prop::collection::vec(0.0f64..=1.0, 50)) {
            for x in xs {
                let e = k.eval_basis(x, 0).unwrap();
                prop_assert_eq!(e.values().len(), k.degree() + 1);
                prop_assert!(e.values().iter().all(|&v| v >= 0.0));
                prop_assert!((e.values().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
        }

        #[test]
        fn derivative_matches_central_differences(k in arb_kv(), x in 0.05f64..0.95) {
            let h = 1e-6;
            // stay inside one span so the finite difference sees a polynomial
            let s = k.find_span(x);
            let (a, b) = (k.knots()[s], k.knots()[s + 1]);
            prop_assume!(x - h > a && x + h < b);
            let e = k.eval_basis(x, 1).unwrap();
            for j in 0..=k.degree() {
                let i = e.first + j;
                let fd = (k.eval_single(i, x + h).unwrap() - k.eval_single(i, x - h).unwrap()) / (2.0 * h);
                let d = e.ders[1][j];
                prop_assert!((fd - d).abs() <= 1e-6 * d.abs().max(1.0), "fd {} vs {}", fd, d);
            }
        }

        #[test]
        fn greville_monotone_with_endpoints(k in arb_kv()) {
            let g = k.greville();
            prop_assert_eq!(g.len(), k.len());
            prop_assert_eq!(g[0], 0.0);
            prop_assert!((g[g.len() - 1] - 1.0).abs() < 1e-15);
            prop_assert!(g.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn refinement_nests_spaces(k in arb_kv(), seed in 0u64..1000) {
            use nalgebra::{DMatrix, DVector};
            let fine = k.refine_uniform(1);
            let n = k.len();
            let coef: Vec<f64> = (0..n).map(|i| ((i as f64 + 1.0) * (seed as f64 + 0.5)).sin()).collect();
            let coarse_val = |x: f64| -> f64 {
                let e = k.eval_basis(x, 0).unwrap();
                e.values().iter().enumerate().map(|(j, v)| v * coef[e.first + j]).sum()
            };
            // least squares on points spread over every fine span
            let q = 2 * (k.degree() + 1);
            let xs: Vec<f64> = fine
                .spans()
                .into_iter()
                .flat_map(|(a, b)| (0..q).map(move |i| a + (b - a) * (i as f64 + 0.5) / q as f64))
                .collect();
            let m = xs.len();
            let mut a = DMatrix::zeros(m, fine.len());
            for (r, &x) in xs.iter().enumerate() {
                let e = fine.eval_basis(x, 0).unwrap();
                for (j, v) in e.values().iter().enumerate() {
                    a[(r, e.first + j)] = *v;
                }
            }
            let b = DVector::from_iterator(m, xs.iter().map(|&x| coarse_val(x)));
            let sol = a.clone().svd(true, true).solve(&b, 1e-14).unwrap();
            let test_pts = [0.0, 0.123, 0.377, 0.5, 0.81, 1.0];
            for x in test_pts {
                let e = fine.eval_basis(x, 0).unwrap();
                let v: f64 = e.values().iter().enumerate().map(|(j, v)| v * sol[e.first + j]).sum();
                prop_assert!((v - coarse_val(x)).abs() <= 1e-10);
            }
        }
    }
}
