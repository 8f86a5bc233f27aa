use apkr::kernel::{build_kernel_factor, psd_minor_check, tensor_sketch_lim_rand, KernelConfig, LimRandSketch};
use apkr::linalg::{norm, sub, symmetric_eigenvalues};
use apkr::oracle::{apply_power, dense_power_matrix, gaussian_vec, gen_capped_rows, gen_matrix, svd_lstsq, Parity};
use apkr::power::{even_powers, reduce_attention_to_odd};
use apkr::sketch::{fwht, Sketch, SrhtSketch};
use apkr::solvers::{fast_linear_regression, fast_psd_regression, PrecisionBudget, SolveOptions};
use apkr::DenseMatrix;
use nalgebra::DVector;
use proptest::prelude::*;

fn mat_vec(m: &DenseMatrix, x: &[f64]) -> Vec<f64> {
    (m * DVector::from_column_slice(x)).as_slice().to_vec()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fwht_twice_scales_by_length(log_len in 0u32..11, seed in any::<u64>()) {
        let len = 1usize << log_len;
        let v = gaussian_vec(len, seed);
        let back = fwht(&fwht(&v).unwrap()).unwrap();
        for (x, y) in back.iter().zip(&v) {
            prop_assert!((x / len as f64 - y).abs() <= 1e-12 * norm(&v).max(1.0));
        }
    }

    #[test]
    fn full_srht_preserves_norms(n in 1usize..300, seed in any::<u64>()) {
        let s = SrhtSketch::full(n, seed).unwrap();
        let x = gaussian_vec(n, seed ^ 1);
        let y = s.apply_vec(&x).unwrap();
        prop_assert!((norm(&y) - norm(&x)).abs() <= 1e-12 * norm(&x).max(1.0));
    }

    #[test]
    fn srht_transpose_is_adjoint(n in 2usize..200, m in 1usize..64, seed in any::<u64>()) {
        let s = SrhtSketch::new(n, m, seed).unwrap();
        let x = gaussian_vec(n, seed ^ 2);
        let y = gaussian_vec(s.output_dim(), seed ^ 3);
        let lhs: f64 = s.apply_vec(&x).unwrap().iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = s.apply_transpose_vec(&y).unwrap().iter().zip(&x).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (norm(&x) * norm(&y)).max(1.0));
    }

    #[test]
    fn schedule_halves_and_ends_at_target(eps in 1e-12f64..0.09, delta in 1e-6f64..0.09, j in 1usize..16) {
        let stages = PrecisionBudget::new(eps, delta).unwrap().even_schedule(j);
        prop_assert_eq!(stages.len(), j);
        prop_assert!((stages[j - 1].eps - eps).abs() <= 1e-15 * eps);
        for w in stages.windows(2) {
            prop_assert!((w[0].eps * 2.0 - w[1].eps).abs() <= 1e-12 * w[1].eps);
        }
        let total: f64 = stages.iter().map(|s| s.delta).sum();
        prop_assert!(total <= delta * (1.0 + (j as f64).ln()) + 1e-15);
    }

    #[test]
    fn least_squares_is_near_optimal(seed in any::<u64>(), kappa in 1.0f64..200.0) {
        let a = gen_matrix(96, 5, kappa, seed).unwrap();
        let b = gaussian_vec(96, seed ^ 4);
        let eps = 1e-6;
        let rep = fast_linear_regression(&a, &b, eps, 0.05, &SolveOptions::seeded(seed)).unwrap();
        let opt = svd_lstsq(&a, &b, None).unwrap().exact_cost;
        let cost = norm(&sub(&mat_vec(&a, &rep.solution), &b));
        prop_assert!(cost <= (1.0 + eps) * opt + 1e-12 * norm(&b));
    }

    #[test]
    fn psd_residual_is_reported_honestly(seed in any::<u64>(), kappa in 1.0f64..100.0) {
        let a = gen_matrix(64, 4, kappa, seed).unwrap();
        let b = gaussian_vec(4, seed ^ 5);
        let rep = fast_psd_regression(&a, &b, 1e-8, 0.05, &SolveOptions::seeded(seed)).unwrap();
        let gram = a.transpose() * &a;
        let r = norm(&sub(&mat_vec(&gram, &rep.solution), &b));
        prop_assert!((r - rep.residual).abs() <= 1e-10 * norm(&b));
        prop_assert!(rep.relative_residual <= 1e-8);
    }

    #[test]
    fn even_power_meets_target(seed in any::<u64>(), j in 1usize..4) {
        let a = gen_matrix(128, 6, 8.0, seed).unwrap();
        let b = apply_power(&a, &gaussian_vec(6, seed ^ 6), j, Parity::Even);
        let rep = even_powers(&a, &b, j, 1e-6, 0.05, &SolveOptions::seeded(seed)).unwrap();
        let m = dense_power_matrix(&a, j, Parity::Even).unwrap();
        prop_assert!(norm(&sub(&mat_vec(&m, &rep.solution), &b)) <= 1e-6 * norm(&b));
    }

    #[test]
    fn attention_reduction_preserves_residual(seed in any::<u64>()) {
        let x = gen_matrix(20, 4, 5.0, seed).unwrap();
        let g = gen_matrix(4, 4, 3.0, seed ^ 7).unwrap();
        let w = &g * g.transpose();
        let y = gaussian_vec(20, seed ^ 8);
        let vt = gaussian_vec(4, seed ^ 9);
        let red = reduce_attention_to_odd(&x, &w).unwrap();
        let direct = norm(&sub(&mat_vec(&(&x * &w * x.transpose() * &x), &red.recover(&vt)), &y));
        let reduced = norm(&sub(&apply_power(&red.x_tilde, &vt, 1, Parity::Odd), &y));
        prop_assert!((direct - reduced).abs() <= 1e-9 * direct.max(1.0));
    }

    #[test]
    fn lim_rand_degree_one_is_the_row_sketch(seed in any::<u64>(), d in 1usize..10, m in 1usize..20) {
        let sk = LimRandSketch::new(d, m, seed, seed ^ 10).unwrap();
        let x = gaussian_vec(d, seed ^ 11);
        let out = tensor_sketch_lim_rand(&x, 1, &sk.s, &sk.t).unwrap();
        let direct = sk.t.apply_vec(&x).unwrap();
        prop_assert_eq!(out.len(), direct.len());
        for (u, v) in out.iter().zip(&direct) {
            prop_assert!((u - v).abs() <= 1e-12 * norm(&x).max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn kernel_factor_gram_is_psd(seed in any::<u64>(), n in 2usize..12) {
        let a = gen_capped_rows(n, 3, 1.0, seed);
        let cfg = KernelConfig { max_block_rows: 256, ..KernelConfig::default() };
        let f = build_kernel_factor(&a, 0.5, 0.1, seed, &cfg).unwrap();
        let g = f.gram();
        let eig = symmetric_eigenvalues(&g);
        prop_assert!(eig[0] >= -1e-10 * eig[eig.len() - 1]);
        prop_assert!(psd_minor_check(&g).passed);
    }
}
