use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{build_jump_matrices, select_primal, DofClass, DofPartition, JumpMatrices, PrimalGroup};
use crate::assembly::{build_local_system, ExtendedLocalSystem, Problem};
use crate::geometry::MultiPatchDomain;
use crate::linalg::{CsrMatrix, LdlFactor};
use crate::Result;

struct Block {
    sys: ExtendedLocalSystem,
    /// `R = I ∪ Δ`.
    r_idx: Vec<usize>,
    /// `Γ = Δ ∪ Π`.
    gamma_idx: Vec<usize>,
    n_interior: usize,
    pi_group: Vec<usize>,
    a_rr: LdlFactor,
    /// `Ψ^(k)` over all extended dofs, one column per local primal dof.
    psi: DMatrix<f64>,
    /// `Ψᵀ A Ψ`.
    coarse_local: DMatrix<f64>,
    a_ii: LdlFactor,
    a_i_gamma: CsrMatrix,
    a_gamma_i: CsrMatrix,
    a_gamma_gamma: CsrMatrix,
    b: CsrMatrix,
    bt: CsrMatrix,
    scaling: Vec<f64>,
}

fn gather(x: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| x[i]).collect()
}

fn scatter(n: usize, idx: &[usize], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (&i, &x) in idx.iter().zip(v) {
        out[i] = x;
    }
    out
}

impl Block {
    fn new(sys: ExtendedLocalSystem, part: &super::BlockPartition, b: CsrMatrix, scaling: Vec<f64>) -> Result<Self> {
        let k = sys.patch;
        let a = &sys.matrix;
        let r_idx = part.remaining();
        let gamma_idx = part.gamma();
        let a_rr = LdlFactor::new_spd(&a.submatrix(&r_idx, &r_idx), &format!("Ã of patch {k}"))?;
        let a_r_pi = a.submatrix(&r_idx, &part.primal);

        let n = sys.dim();
        let np = part.primal.len();
        let mut psi = DMatrix::zeros(n, np);
        for c in 0..np {
            let col: Vec<f64> = (0..r_idx.len()).map(|r| -a_r_pi.get(r, c)).collect();
            let x = a_rr.solve(&col);
            for (r, &i) in r_idx.iter().enumerate() {
                psi[(i, c)] = x[r];
            }
            psi[(part.primal[c], c)] = 1.0;
        }
        let mut a_psi = DMatrix::zeros(n, np);
        for c in 0..np {
            let y = a.mul_vec(psi.column(c).as_slice());
            a_psi.set_column(c, &DVector::from_vec(y));
        }
        let coarse_local = psi.transpose() * &a_psi;

        let a_ii = LdlFactor::new_spd(&a.submatrix(&part.interior, &part.interior), &format!("A_II of patch {k}"))?;
        let bt = b.transpose();
        Ok(Self {
            a_i_gamma: a.submatrix(&part.interior, &gamma_idx),
            a_gamma_i: a.submatrix(&gamma_idx, &part.interior),
            a_gamma_gamma: a.submatrix(&gamma_idx, &gamma_idx),
            n_interior: part.interior.len(),
            r_idx,
            gamma_idx,
            pi_group: part.primal_group.clone(),
            a_rr,
            psi,
            coarse_local,
            a_ii,
            b,
            bt,
            scaling,
            sys,
        })
    }

    fn dim(&self) -> usize {
        self.sys.dim()
    }

    /// `Ã⁻¹ g_R` embedded into the extended space.
    fn solve_r(&self, g: &[f64]) -> Vec<f64> {
        scatter(self.dim(), &self.r_idx, &self.a_rr.solve(&gather(g, &self.r_idx)))
    }

    fn psi_t(&self, g: &[f64]) -> Vec<f64> {
        (self.psi.transpose() * DVector::from_column_slice(g)).as_slice().to_vec()
    }

    fn psi_apply(&self, u_pi_global: &[f64]) -> Vec<f64> {
        let loc = DVector::from_iterator(self.pi_group.len(), self.pi_group.iter().map(|&g| u_pi_global[g]));
        (&self.psi * loc).as_slice().to_vec()
    }

    /// `S^(k) x` for `x` over `Γ`.
    fn schur(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.a_gamma_gamma.mul_vec(x);
        if self.n_interior > 0 {
            let t = self.a_ii.solve(&self.a_i_gamma.mul_vec(x));
            for (yi, zi) in y.iter_mut().zip(self.a_gamma_i.mul_vec(&t)) {
                *yi -= zi;
            }
        }
        y
    }
}

/// Per-block coefficient vectors over the extended spaces.
#[derive(Debug, Clone)]
pub struct Recovered {
    pub blocks: Vec<Vec<f64>>,
    /// Patch coefficients concatenated in patch order.
    pub patch_solution: Vec<f64>,
}

/// Factorized IETI-DP operator. Read-only after setup.
pub struct IetiOperator {
    blocks: Vec<Block>,
    groups: Vec<PrimalGroup>,
    partition: DofPartition,
    jumps: JumpMatrices,
    coarse: LdlFactor,
    coarse_matrix: DMatrix<f64>,
    alphas: Vec<f64>,
}

fn add_into(acc: &mut [f64], x: &[f64]) {
    for (a, b) in acc.iter_mut().zip(x) {
        *a += b;
    }
}

impl IetiOperator {
    pub fn new(domain: &MultiPatchDomain, problem: &Problem) -> Result<Self> {
        let locals = (0..domain.num_patches())
            .into_par_iter()
            .map(|k| build_local_system(domain, k, problem))
            .collect::<Result<Vec<_>>>()?;
        Self::from_local_systems(domain, locals)
    }

    pub fn from_local_systems(domain: &MultiPatchDomain, locals: Vec<ExtendedLocalSystem>) -> Result<Self> {
        let groups = select_primal(domain, &locals)?;
        let partition = DofPartition::new(&locals, &groups)?;
        let jumps = build_jump_matrices(domain, &locals, &partition)?;
        let blocks = locals
            .into_par_iter()
            .enumerate()
            .map(|(k, sys)| Block::new(sys, &partition.blocks[k], jumps.blocks[k].clone(), jumps.scaling[k].clone()))
            .collect::<Result<Vec<_>>>()?;

        let np = partition.n_primal;
        let mut coarse_matrix = DMatrix::zeros(np, np);
        for b in &blocks {
            for (i, &gi) in b.pi_group.iter().enumerate() {
                for (j, &gj) in b.pi_group.iter().enumerate() {
                    coarse_matrix[(gi, gj)] += b.coarse_local[(i, j)];
                }
            }
        }
        let coarse_matrix = (&coarse_matrix + coarse_matrix.transpose()) * 0.5;
        let coarse = LdlFactor::new_spd(&CsrMatrix::from_dense(&coarse_matrix), "coarse matrix")?;
        Ok(Self {
            blocks,
            groups,
            partition,
            jumps,
            coarse,
            coarse_matrix,
            alphas: domain.alphas(),
        })
    }

    pub fn n_multipliers(&self) -> usize {
        self.jumps.n_rows()
    }

    pub fn n_primal(&self) -> usize {
        self.partition.n_primal
    }

    pub fn primal_groups(&self) -> &[PrimalGroup] {
        &self.groups
    }

    pub fn partition(&self) -> &DofPartition {
        &self.partition
    }

    pub fn jumps(&self) -> &JumpMatrices {
        &self.jumps
    }

    pub fn local_system(&self, k: usize) -> &ExtendedLocalSystem {
        &self.blocks[k].sys
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn coarse_matrix(&self) -> &DMatrix<f64> {
        &self.coarse_matrix
    }

    /// `Ψ^(k)` over the extended dofs of block `k`.
    pub fn psi(&self, k: usize) -> &DMatrix<f64> {
        &self.blocks[k].psi
    }

    /// Sums per-block multiplier-space vectors in block order.
    fn reduce(&self, parts: Vec<Vec<f64>>) -> Vec<f64> {
        let mut out = vec![0.0; self.n_multipliers()];
        for p in parts {
            add_into(&mut out, &p);
        }
        out
    }

    /// `S_Π⁻¹ Σ_k R^(k)ᵀ c_k`.
    fn coarse_solve(&self, local: &[Vec<f64>]) -> Vec<f64> {
        let mut rhs = vec![0.0; self.n_primal()];
        for (b, c) in self.blocks.iter().zip(local) {
            for (&g, &v) in b.pi_group.iter().zip(c) {
                rhs[g] += v;
            }
        }
        self.coarse.solve(&rhs)
    }

    /// `B̃ Ã⁻¹ g + B Ψ S_Π⁻¹ Ψᵀ g` for per-block extended vectors `g`.
    fn dual_map(&self, g: &[Vec<f64>]) -> Vec<f64> {
        let first: Vec<(Vec<f64>, Vec<f64>)> = self
            .blocks
            .par_iter()
            .zip(g)
            .map(|(b, g)| (b.b.mul_vec(&b.solve_r(g)), b.psi_t(g)))
            .collect();
        let (t1, c): (Vec<_>, Vec<_>) = first.into_iter().unzip();
        let u_pi = self.coarse_solve(&c);
        let t2: Vec<Vec<f64>> = self.blocks.par_iter().map(|b| b.b.mul_vec(&b.psi_apply(&u_pi))).collect();
        let mut out = self.reduce(t1);
        add_into(&mut out, &self.reduce(t2));
        out
    }

    fn bt(&self, lambda: &[f64]) -> Vec<Vec<f64>> {
        self.blocks.par_iter().map(|b| b.bt.mul_vec(lambda)).collect()
    }

    #[allow(non_snake_case)]
    pub fn apply_F(&self, lambda: &[f64]) -> Vec<f64> {
        self.dual_map(&self.bt(lambda))
    }

    pub fn compute_d(&self) -> Vec<f64> {
        let f: Vec<Vec<f64>> = self.blocks.iter().map(|b| b.sys.load.clone()).collect();
        self.dual_map(&f)
    }

    /// `B_Γ D⁻¹ S D⁻¹ B_Γᵀ μ`.
    #[allow(non_snake_case)]
    pub fn apply_MsD(&self, mu: &[f64]) -> Vec<f64> {
        let parts: Vec<Vec<f64>> = self
            .blocks
            .par_iter()
            .map(|b| {
                let g = b.bt.mul_vec(mu);
                let x: Vec<f64> = b.gamma_idx.iter().map(|&i| g[i] / b.scaling[i]).collect();
                let y = b.schur(&x);
                let z: Vec<f64> = b.gamma_idx.iter().zip(y).map(|(&i, v)| v / b.scaling[i]).collect();
                b.b.mul_vec(&scatter(b.dim(), &b.gamma_idx, &z))
            })
            .collect();
        self.reduce(parts)
    }

    /// Dense block Schur complement `S^(k)` over `Γ` (dual then primal).
    pub fn dense_schur(&self, k: usize) -> DMatrix<f64> {
        let b = &self.blocks[k];
        let n = b.gamma_idx.len();
        let mut s = DMatrix::zeros(n, n);
        for c in 0..n {
            let mut e = vec![0.0; n];
            e[c] = 1.0;
            s.set_column(c, &DVector::from_vec(b.schur(&e)));
        }
        s
    }

    /// Extended indices of `Γ` in block `k`, matching [`Self::dense_schur`].
    pub fn gamma_indices(&self, k: usize) -> &[usize] {
        &self.blocks[k].gamma_idx
    }

    /// ũ = Ã⁻¹(f̃ − B̃ᵀλ), u_Π = S_Π⁻¹ Ψᵀ(f − Bᵀλ), u = ũ + Ψ u_Π.
    pub fn recover_solution(&self, lambda: &[f64]) -> Recovered {
        let g: Vec<Vec<f64>> = self
            .blocks
            .par_iter()
            .map(|b| {
                let btl = b.bt.mul_vec(lambda);
                b.sys.load.iter().zip(btl).map(|(f, x)| f - x).collect()
            })
            .collect();
        let first: Vec<(Vec<f64>, Vec<f64>)> =
            self.blocks.par_iter().zip(&g).map(|(b, g)| (b.solve_r(g), b.psi_t(g))).collect();
        let (ut, c): (Vec<_>, Vec<_>) = first.into_iter().unzip();
        let u_pi = self.coarse_solve(&c);
        let blocks: Vec<Vec<f64>> = self
            .blocks
            .par_iter()
            .zip(ut)
            .map(|(b, mut u)| {
                add_into(&mut u, &b.psi_apply(&u_pi));
                u
            })
            .collect();
        let patch_solution = self
            .blocks
            .iter()
            .zip(&blocks)
            .flat_map(|(b, u)| u[..b.sys.n_patch].to_vec())
            .collect();
        Recovered { blocks, patch_solution }
    }

    /// `Σ_k B^(k) u^(k)`.
    pub fn apply_b(&self, u: &[Vec<f64>]) -> Vec<f64> {
        self.reduce(self.blocks.iter().zip(u).map(|(b, u)| b.b.mul_vec(u)).collect())
    }

    /// Largest `‖(A^(k) Ψ^(k))_R‖_max / ‖A^(k)‖_max` over all blocks.
    pub fn psi_residual(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let scale = b.sys.matrix.max_abs();
                let mut worst: f64 = 0.0;
                for c in 0..b.psi.ncols() {
                    let y = b.sys.matrix.mul_vec(b.psi.column(c).as_slice());
                    for &i in &b.r_idx {
                        worst = worst.max(y[i].abs());
                    }
                }
                worst / scale
            })
            .fold(0.0, f64::max)
    }

    /// Replaces the coefficients of each primal group by the group average.
    pub fn project_to_w_tilde(&self, u: &mut [Vec<f64>]) {
        for g in &self.groups {
            let avg = g.members.iter().map(|&(b, i)| u[b][i]).sum::<f64>() / g.members.len() as f64;
            for &(b, i) in &g.members {
                u[b][i] = avg;
            }
        }
    }

    /// Forms `w = D⁻¹ B_Γᵀ B_Γ u` and compares it coefficientwise with the
    /// scaled jumps `α_ℓ/(α_k+α_ℓ) (u_i − u_j)` of every matched pair, the
    /// pairs being read off the copy maps. Returns the largest deviation.
    pub fn check_lemma_bbt(&self, u: &[Vec<f64>]) -> f64 {
        let bu = self.apply_b(u);
        let w: Vec<Vec<f64>> = self
            .blocks
            .iter()
            .map(|b| {
                let x = b.bt.mul_vec(&bu);
                x.iter()
                    .enumerate()
                    .map(|(i, v)| if b.scaling[i] == 0.0 { *v } else { v / b.scaling[i] })
                    .collect()
            })
            .collect();

        let mut expected: Vec<Vec<f64>> = self.blocks.iter().map(|b| vec![0.0; b.dim()]).collect();
        for (kb, b) in self.blocks.iter().enumerate() {
            let part = &self.partition.blocks[kb];
            for (j, l, s) in b.sys.copy_map() {
                if part.class[j] == DofClass::Primal {
                    continue;
                }
                let (ak, al) = (self.alphas[kb], self.alphas[l]);
                // copy j in block k of function s of patch l
                expected[kb][j] = al / (ak + al) * (u[kb][j] - u[l][s]);
                expected[l][s] = ak / (ak + al) * (u[l][s] - u[kb][j]);
            }
        }
        w.iter()
            .flatten()
            .zip(expected.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Dense `F`, assembled column by column.
    pub fn dense_f(&self) -> DMatrix<f64> {
        self.dense_of(|x| self.apply_F(x))
    }

    pub fn dense_msd(&self) -> DMatrix<f64> {
        self.dense_of(|x| self.apply_MsD(x))
    }

    fn dense_of(&self, op: impl Fn(&[f64]) -> Vec<f64>) -> DMatrix<f64> {
        let m = self.n_multipliers();
        let mut out = DMatrix::zeros(m, m);
        for c in 0..m {
            let mut e = vec![0.0; m];
            e[c] = 1.0;
            out.set_column(c, &DVector::from_vec(op(&e)));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bspline::{KnotVector, Side, TensorSplineSpace};
    use crate::experiment::Builtin;
    use crate::geometry::{GeometryMap, Interface, Patch};
    use crate::linalg::{dot, norm_inf, pcg};
    use crate::refsolver::{assemble_global, direct_solve};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Two unit squares with Dirichlet data on the outer west and east sides.
    fn two_squares(p: usize, spans: [usize; 2], alphas: [f64; 2]) -> MultiPatchDomain {
        let patch = |x0: f64, spans: usize, side: Side, alpha: f64| {
            let kv = KnotVector::uniform(p, spans).unwrap();
            Patch {
                geometry: GeometryMap::rectangle(x0, 0., x0 + 1., 1.),
                alpha,
                space: TensorSplineSpace::new(kv.clone(), kv, &[side]).unwrap(),
            }
        };
        MultiPatchDomain::new(
            vec![patch(0., spans[0], Side::West, alphas[0]), patch(1., spans[1], Side::East, alphas[1])],
            vec![Interface {
                k: 0,
                side_k: Side::East,
                range_k: [0., 1.],
                l: 1,
                side_l: Side::West,
                range_l: [0., 1.],
                reversed: false,
            }],
        )
        .unwrap()
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    /// F and d by dense elimination of the partially assembled saddle
    /// system: primal members share one unknown, everything else stays torn.
    fn dense_reference(op: &IetiOperator) -> (DMatrix<f64>, DVector<f64>) {
        let part = op.partition();
        let mut n = part.n_primal;
        let mut index: Vec<Vec<usize>> = Vec::new();
        for bp in &part.blocks {
            let mut idx = vec![usize::MAX; bp.class.len()];
            for (&i, &g) in bp.primal.iter().zip(&bp.primal_group) {
                idx[i] = g;
            }
            for slot in idx.iter_mut().filter(|s| **s == usize::MAX) {
                *slot = n;
                n += 1;
            }
            index.push(idx);
        }
        let m = op.n_multipliers();
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut f = DVector::<f64>::zeros(n);
        let mut b = DMatrix::<f64>::zeros(m, n);
        for (k, idx) in index.iter().enumerate() {
            let sys = op.local_system(k);
            for (r, c, v) in sys.matrix.iter() {
                a[(idx[r], idx[c])] += v;
            }
            for (i, v) in sys.load.iter().enumerate() {
                f[idx[i]] += v;
            }
            for (r, c, v) in op.jumps().blocks[k].iter() {
                b[(r, idx[c])] += v;
            }
        }
        let chol = a.cholesky().expect("partially assembled matrix is SPD");
        let ainv_bt = chol.solve(&b.transpose());
        (&b * ainv_bt, &b * chol.solve(&f))
    }

    #[test]
    fn jump_rows_of_two_squares() {
        let d = two_squares(1, [1, 1], [1., 1.]);
        let op = IetiOperator::new(&d, &Problem::default()).unwrap();
        assert_eq!(op.n_primal(), 4);
        assert_eq!(op.n_multipliers(), 0);

        // closing the top and bottom leaves one free trace dof per side
        let mut patches = d.patches().to_vec();
        for (patch, side) in patches.iter_mut().zip([Side::West, Side::East]) {
            let kv = KnotVector::uniform(1, 2).unwrap();
            patch.space = TensorSplineSpace::new(kv.clone(), kv, &[side, Side::South, Side::North]).unwrap();
        }
        let d = MultiPatchDomain::new(patches, d.interfaces().to_vec()).unwrap();
        let op = IetiOperator::new(&d, &Problem::default()).unwrap();
        assert_eq!(op.n_primal(), 0);
        assert_eq!(op.n_multipliers(), 2);
        for (r, row) in op.jumps().rows.iter().enumerate() {
            assert_eq!(op.jumps().blocks[row.plus.0].get(r, row.plus.1), 1.0);
            assert_eq!(op.jumps().blocks[row.minus.0].get(r, row.minus.1), -1.0);
            assert!(op.local_system(row.minus.0).is_artificial(row.minus.1));
            assert!(!op.local_system(row.plus.0).is_artificial(row.plus.1));
        }
        assert_eq!((op.jumps().rows[0].plus.0, op.jumps().rows[1].plus.0), (0, 1));
    }

    #[test]
    fn fully_primal_grid_has_no_multipliers() {
        let d = Builtin::Grid(2).build(1, 0).unwrap();
        let op = IetiOperator::new(&d, &Problem::default()).unwrap();
        assert_eq!(op.n_primal(), 4);
        assert_eq!(op.n_multipliers(), 0);
        let u = op.recover_solution(&[]).patch_solution;
        let direct = direct_solve(&assemble_global(&d, &Problem::default()).unwrap()).unwrap();
        let diff: Vec<f64> = u.iter().zip(&direct).map(|(a, b)| a - b).collect();
        assert!(norm_inf(&diff) <= 1e-12 * norm_inf(&direct));
    }

    #[test]
    fn coefficient_scaling_entries() {
        let d = two_squares(1, [1, 1], [1., 1e4]);
        let op = IetiOperator::new(&d, &Problem::default()).unwrap();
        let j = op.jumps();
        assert!(op.n_multipliers() > 0 || op.n_primal() > 0);
        for bp in 0..2 {
            for &i in op.partition().blocks[bp].dual.iter().chain(&op.partition().blocks[bp].primal) {
                let expected = if bp == 0 { (1. + 1e4) / 1e4 } else { 1e4 + 1. };
                assert_eq!(j.scaling[bp][i], expected);
            }
        }
    }

    #[test]
    fn f_matches_dense_elimination() {
        for (d, tol) in [
            (two_squares(1, [2, 3], [1., 1.]), 1e-10),
            (two_squares(2, [2, 2], [1., 100.]), 1e-10),
            (Builtin::TDomain.build(1, 1).unwrap(), 1e-9),
        ] {
            let op = IetiOperator::new(&d, &Problem::default()).unwrap();
            let (f_ref, d_ref) = dense_reference(&op);
            let f = op.dense_f();
            let scale = f_ref.amax();
            assert!((&f - &f_ref).amax() <= tol * scale.max(1.0), "{}", (&f - &f_ref).amax());
            let dd = DVector::from_vec(op.compute_d());
            assert!((&dd - &d_ref).amax() <= tol * d_ref.amax().max(1.0));
        }
    }

    #[test]
    fn operators_are_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for b in [Builtin::TDomain, Builtin::Slider(3, 0.3)] {
            let d = b.build(2, 1).unwrap();
            let alphas: Vec<f64> = (0..d.num_patches()).map(|k| 10f64.powi(k as i32 % 4)).collect();
            let d = d.with_alphas(&alphas).unwrap();
            let op = IetiOperator::new(&d, &Problem::default()).unwrap();
            let m = op.n_multipliers();
            for _ in 0..20 {
                let x = random_vec(&mut rng, m);
                let y = random_vec(&mut rng, m);
                let ops: [&dyn Fn(&[f64]) -> Vec<f64>; 2] = [&|v| op.apply_F(v), &|v| op.apply_MsD(v)];
                for apply in ops {
                    let (fx, fy) = (apply(&x), apply(&y));
                    let (a, c) = (dot(&fx, &y), dot(&x, &fy));
                    assert!((a - c).abs() <= 1e-9 * a.abs().max(c.abs()).max(1e-300));
                    assert!(dot(&fx, &x) >= -1e-12 * norm_inf(&fx));
                }
            }
        }
    }

    #[test]
    fn zero_inputs_give_zero() {
        let d = Builtin::TDomain.build(2, 1).unwrap();
        let op = IetiOperator::new(&d, &Problem::zero(12.)).unwrap();
        let zero = vec![0.0; op.n_multipliers()];
        assert!(op.apply_F(&zero).iter().all(|&v| v == 0.0));
        assert!(op.apply_MsD(&zero).iter().all(|&v| v == 0.0));
        assert!(op.compute_d().iter().all(|&v| v == 0.0));
        assert!(op.recover_solution(&zero).patch_solution.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn schur_application_matches_dense_elimination() {
        let d = two_squares(1, [2, 3], [1., 1.]);
        let op = IetiOperator::new(&d, &Problem::default()).unwrap();
        for k in 0..2 {
            let a = op.local_system(k).matrix.to_dense();
            let gamma = op.gamma_indices(k).to_vec();
            let interior: Vec<usize> = (0..a.nrows()).filter(|i| !gamma.contains(i)).collect();
            let sel = |rows: &[usize], cols: &[usize]| DMatrix::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])]);
            let a_ii = sel(&interior, &interior);
            let s = sel(&gamma, &gamma) - sel(&gamma, &interior) * a_ii.cholesky().unwrap().solve(&sel(&interior, &gamma));
            assert!((op.dense_schur(k) - s).amax() <= 1e-10 * a.amax());
        }
    }

    #[test]
    fn equal_coefficients_give_quarter_scaling() {
        let d = Builtin::TDomain.build(1, 1).unwrap();
        let op = IetiOperator::new(&d, &Problem::default()).unwrap();
        let m = op.n_multipliers();
        let mut expected = DMatrix::zeros(m, m);
        for k in 0..op.num_blocks() {
            let gamma = op.gamma_indices(k);
            assert!(gamma.iter().all(|&i| op.jumps().scaling[k][i] == 2.0));
            let bk = op.jumps().blocks[k].to_dense();
            let bg = DMatrix::from_fn(m, gamma.len(), |r, c| bk[(r, gamma[c])]);
            expected += &bg * op.dense_schur(k) * bg.transpose() * 0.25;
        }
        assert!((op.dense_msd() - expected).amax() <= 1e-12 * op.dense_msd().amax());
    }

    #[test]
    fn psi_has_identity_rows_and_minimal_energy() {
        let d = Builtin::TDomain.build(2, 1).unwrap();
        let op = IetiOperator::new(&d, &Problem::default()).unwrap();
        for k in 0..op.num_blocks() {
            let psi = op.psi(k);
            let bp = &op.partition().blocks[k];
            for (c, &i) in bp.primal.iter().enumerate() {
                for c2 in 0..psi.ncols() {
                    assert_eq!(psi[(i, c2)], if c == c2 { 1.0 } else { 0.0 });
                }
            }
        }
        assert!(op.psi_residual() <= 1e-9);
    }

    #[test]
    fn recovered_solution_is_continuous_and_matches_direct() {
        for b in [Builtin::TDomain, Builtin::TwoPatch] {
            let d = b.build(2, 1).unwrap();
            let op = IetiOperator::new(&d, &Problem::default()).unwrap();
            let rhs = op.compute_d();
            let out = pcg(|x| op.apply_F(x), |x| op.apply_MsD(x), &rhs, 1e-10, 500).unwrap();
            let rec = op.recover_solution(&out.x);
            assert!(norm_inf(&op.apply_b(&rec.blocks)) <= 1e-8);
            for g in op.primal_groups() {
                let v0 = rec.blocks[g.members[0].0][g.members[0].1];
                assert!(g.members.iter().all(|&(b, i)| (rec.blocks[b][i] - v0).abs() <= 1e-12 * v0.abs().max(1.0)));
            }
            let direct = direct_solve(&assemble_global(&d, &Problem::default()).unwrap()).unwrap();
            let diff: Vec<f64> = rec.patch_solution.iter().zip(&direct).map(|(a, b)| a - b).collect();
            assert!(norm_inf(&diff) <= 1e-8 * norm_inf(&direct));
        }
    }

    #[test]
    fn lemma_identity_on_projected_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let base = Builtin::TDomain.build(2, 1).unwrap();
        for alphas in [[1.; 5], [1., 10., 100., 1e3, 1e4]] {
            let d = base.with_alphas(&alphas).unwrap();
            let op = IetiOperator::new(&d, &Problem::default()).unwrap();
            for _ in 0..10 {
                let mut u: Vec<Vec<f64>> =
                    (0..op.num_blocks()).map(|k| random_vec(&mut rng, op.local_system(k).dim())).collect();
                op.project_to_w_tilde(&mut u);
                assert!(op.check_lemma_bbt(&u) <= 1e-12);
            }
        }
    }

    #[test]
    fn lemma_trivial_cases() {
        let d = Builtin::TDomain.build(2, 1).unwrap();
        let op = IetiOperator::new(&d, &Problem::default()).unwrap();
        // matched copies: every artificial dof equals its source
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let src: Vec<Vec<f64>> = (0..op.num_blocks()).map(|k| random_vec(&mut rng, op.local_system(k).n_patch)).collect();
        let matched: Vec<Vec<f64>> = (0..op.num_blocks())
            .map(|k| {
                let sys = op.local_system(k);
                let mut u = src[k].clone();
                u.resize(sys.dim(), 0.0);
                for (j, l, s) in sys.copy_map() {
                    u[j] = src[l][s];
                }
                u
            })
            .collect();
        assert!(norm_inf(&op.apply_b(&matched)) == 0.0);
        assert!(op.check_lemma_bbt(&matched) <= 1e-15);

        // equal coefficients: w = ½ jump, read directly off B_Dᵀ B u
        let mut u = matched.clone();
        for (k, uk) in u.iter_mut().enumerate() {
            for (j, _, _) in op.local_system(k).copy_map() {
                if op.partition().blocks[k].class[j] == DofClass::Dual {
                    uk[j] += 1.0;
                }
            }
        }
        let bu = op.apply_b(&u);
        for k in 0..op.num_blocks() {
            let w = op.jumps().blocks[k].transpose().mul_vec(&bu);
            for (j, _, _) in op.local_system(k).copy_map() {
                if op.partition().blocks[k].class[j] == DofClass::Dual {
                    assert!((w[j] / op.jumps().scaling[k][j] - 0.5).abs() <= 1e-15);
                }
            }
        }
        assert!(op.check_lemma_bbt(&u) <= 1e-15);
    }

    #[test]
    fn primal_scaling_is_inert() {
        let d = Builtin::TDomain.build(2, 1).unwrap().with_alphas(&[1., 10., 100., 1e3, 1e4]).unwrap();
        let op = IetiOperator::new(&d, &Problem::default()).unwrap();
        for k in 0..op.num_blocks() {
            let bk = &op.jumps().blocks[k];
            for &i in &op.partition().blocks[k].primal {
                assert!(bk.iter().all(|(_, c, _)| c != i));
                assert!(op.jumps().scaling[k][i] > 0.0);
            }
        }
    }

    #[test]
    fn global_coefficient_scale_leaves_preconditioned_system_unchanged() {
        let d = Builtin::TDomain.build(2, 1).unwrap().with_alphas(&[1., 10., 100., 1e3, 1e4]).unwrap();
        let scaled = d.with_alphas(&d.alphas().iter().map(|a| a * 37.0).collect::<Vec<_>>()).unwrap();
        let run = |d: &MultiPatchDomain| {
            let op = IetiOperator::new(d, &Problem::default()).unwrap();
            pcg(|x| op.apply_F(x), |x| op.apply_MsD(x), &op.compute_d(), 1e-6, 500).unwrap()
        };
        let (a, b) = (run(&d), run(&scaled));
        assert_eq!(a.iterations, b.iterations);
        let (ka, kb) = (a.condition_estimate().unwrap(), b.condition_estimate().unwrap());
        assert!((ka - kb).abs() <= 1e-9 * ka);
    }

    #[test]
    fn unconstrained_floating_patch_is_reported() {
        let kv = KnotVector::uniform(1, 2).unwrap();
        let patch = |x0: f64| Patch {
            geometry: GeometryMap::rectangle(x0, 0., x0 + 1., 1.),
            alpha: 1.,
            space: TensorSplineSpace::new(kv.clone(), kv.clone(), &[]).unwrap(),
        };
        let d = MultiPatchDomain::new(
            vec![patch(0.), patch(1.)],
            vec![Interface {
                k: 0,
                side_k: Side::East,
                range_k: [0., 1.],
                l: 1,
                side_l: Side::West,
                range_l: [0., 1.],
                reversed: false,
            }],
        )
        .unwrap();
        assert!(IetiOperator::new(&d, &Problem::default()).is_err());
    }
}
