use ietidp::assembly::Problem;
use ietidp::experiment::Builtin;
use ietidp::ieti::{DofClass, IetiOperator};
use ietidp::linalg::{dot, norm_inf, pcg, CsrMatrix, LdlFactor};
use ietidp::refsolver::{assemble_global, direct_solve};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn builtin() -> impl Strategy<Value = Builtin> {
    prop_oneof![
        Just(Builtin::Grid(2)),
        Just(Builtin::TDomain),
        Just(Builtin::TwoPatch),
        (2usize..=3, 0.1f64..0.9).prop_map(|(m, s)| Builtin::Slider(m, s)),
    ]
}

fn alphas(n: usize, exps: &[i32]) -> Vec<f64> {
    (0..n).map(|k| 10f64.powi(exps[k % exps.len()])).collect()
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lemma_holds_on_projected_vectors(
        b in builtin(), p in 1usize..=3, exps in prop::collection::vec(-3i32..=4, 1..6), seed in any::<u64>()
    ) {
        let d = b.build(p, 1).unwrap();
        let d = d.with_alphas(&alphas(d.num_patches(), &exps)).unwrap();
        let op = IetiOperator::new(&d, &Problem::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u: Vec<Vec<f64>> = (0..op.num_blocks()).map(|k| random_vec(&mut rng, op.local_system(k).dim())).collect();
        op.project_to_w_tilde(&mut u);
        prop_assert!(op.check_lemma_bbt(&u) <= 1e-12);
    }

    #[test]
    fn dual_operators_are_symmetric_and_semidefinite(
        b in builtin(), p in 1usize..=3, exps in prop::collection::vec(0i32..=3, 1..4), seed in any::<u64>()
    ) {
        let d = b.build(p, 1).unwrap();
        let d = d.with_alphas(&alphas(d.num_patches(), &exps)).unwrap();
        let op = IetiOperator::new(&d, &Problem::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = op.n_multipliers();
        let (x, y) = (random_vec(&mut rng, m), random_vec(&mut rng, m));
        for (fx, fy) in [(op.apply_F(&x), op.apply_F(&y)), (op.apply_MsD(&x), op.apply_MsD(&y))] {
            let (a, c) = (dot(&fx, &y), dot(&x, &fy));
            prop_assert!((a - c).abs() <= 1e-9 * a.abs().max(c.abs()).max(1e-300));
            prop_assert!(dot(&fx, &x) >= -1e-12 * norm_inf(&fx) * norm_inf(&x) * m as f64);
        }
    }

    #[test]
    fn jump_structure(b in builtin(), p in 1usize..=3) {
        let d = b.build(p, 1).unwrap();
        let op = IetiOperator::new(&d, &Problem::default()).unwrap();
        let mut per_row = vec![Vec::new(); op.n_multipliers()];
        for k in 0..op.num_blocks() {
            let mut per_col = vec![0; op.local_system(k).dim()];
            for (r, c, v) in op.jumps().blocks[k].iter() {
                per_row[r].push(v);
                per_col[c] += 1;
            }
            for (i, class) in op.partition().blocks[k].class.iter().enumerate() {
                prop_assert_eq!(per_col[i], usize::from(*class == DofClass::Dual));
            }
        }
        for mut row in per_row {
            row.sort_by(f64::total_cmp);
            prop_assert_eq!(row, vec![-1.0, 1.0]);
        }
    }

    #[test]
    fn global_coefficient_scale_is_invisible_to_pcg(
        b in builtin(), exps in prop::collection::vec(0i32..=3, 1..4), c in 1e-3f64..1e3
    ) {
        let d = b.build(2, 1).unwrap();
        let base = alphas(d.num_patches(), &exps);
        let run = |a: &[f64]| {
            let d = d.with_alphas(a).unwrap();
            let op = IetiOperator::new(&d, &Problem::default()).unwrap();
            pcg(|x| op.apply_F(x), |x| op.apply_MsD(x), &op.compute_d(), 1e-6, 500).unwrap()
        };
        let one = run(&base);
        let scaled = run(&base.iter().map(|a| a * c).collect::<Vec<_>>());
        prop_assert_eq!(one.iterations, scaled.iterations);
        if let (Some(k1), Some(k2)) = (one.condition_estimate(), scaled.condition_estimate()) {
            prop_assert!((k1 - k2).abs() <= 1e-9 * k1);
        }
    }

    #[test]
    fn tearing_reproduces_direct_solution(
        b in builtin(), p in 1usize..=2, exps in prop::collection::vec(-2i32..=2, 1..4)
    ) {
        let d = b.build(p, 1).unwrap();
        let d = d.with_alphas(&alphas(d.num_patches(), &exps)).unwrap();
        let problem = Problem::default();
        let op = IetiOperator::new(&d, &problem).unwrap();
        let out = pcg(|x| op.apply_F(x), |x| op.apply_MsD(x), &op.compute_d(), 1e-11, 1000).unwrap();
        prop_assert!(out.converged);
        prop_assert!(out.residuals.last().unwrap() <= &(1e-11 * out.residuals[0]));
        let u = op.recover_solution(&out.x).patch_solution;
        let direct = direct_solve(&assemble_global(&d, &problem).unwrap()).unwrap();
        let diff: Vec<f64> = u.iter().zip(&direct).map(|(a, b)| a - b).collect();
        prop_assert!(norm_inf(&diff) <= 1e-6 * norm_inf(&direct));
    }

    #[test]
    fn ldl_round_trip_on_random_spd(n in 1usize..80, density in 0.05f64..0.5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..i {
                if rng.gen_bool(density) {
                    let v = rng.gen_range(-1.0..1.0);
                    a[(i, j)] = v;
                    a[(j, i)] = v;
                }
            }
        }
        for i in 0..n {
            let row: f64 = a.row(i).iter().map(|v| v.abs()).sum();
            a[(i, i)] = row + rng.gen_range(0.1..2.0);
        }
        let f = LdlFactor::new(&CsrMatrix::from_dense(&a)).unwrap();
        prop_assert_eq!((f.inertia().positive, f.inertia().negative, f.inertia().zero), (n, 0, 0));
        let b = random_vec(&mut rng, n);
        let x = f.solve(&b);
        let r: Vec<f64> = (&a * nalgebra::DVector::from_vec(x)).iter().zip(&b).map(|(ax, b)| ax - b).collect();
        prop_assert!(norm_inf(&r) <= 1e-10 * norm_inf(&b).max(1e-300));
    }
}
