mod common;

use antilop::linalg::{self, DenseMatrix, Vector};
use antilop::nnls::{self, rescale, unscale};
use antilop::nqp::{self, NqpProblem, SolverConfig};
use proptest::prelude::*;
use rand::Rng;

fn tight(n: usize) -> SolverConfig {
    SolverConfig::for_dimension(n)
        .with_epsilon(1e-24)
        .with_max_iters(1_000_000)
        .with_stall_window(5_000)
}

fn instance() -> impl Strategy<Value = (DenseMatrix, Vector)> {
    (1usize..7, any::<u64>()).prop_flat_map(|(n, seed)| {
        (n..(n + 6)).prop_map(move |d| {
            let mut rng = common::rng(seed);
            let a = common::random_matrix(&mut rng, d, n, -1.0, 1.0);
            let b = Vector::new((0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
            (a, b)
        })
    })
}

proptest! {
    #![proptest_config(common::proptest_config(128))]

    #[test]
    fn matches_brute_force((a, b) in instance()) {
        let (_, f_ref) = common::brute_force_nnls(&a, b.as_slice());
        let r = nnls::solve_nnls(&a, &b, &tight(a.cols())).unwrap();
        prop_assert!(r.x.is_nonnegative());
        prop_assert!((r.objective() - f_ref).abs() <= 1e-9 * (1.0 + f_ref), "{} vs {}", r.objective(), f_ref);
    }

    /// The scaled objective at `y` equals the original objective at `x = y/D`.
    #[test]
    fn transform_preserves_objective((a, b) in instance(), seed in any::<u64>()) {
        let (h, h_lin) = nnls::normal_system(&a, &b).unwrap();
        let sys = rescale(&h, &h_lin).unwrap();
        let p = sys.problem.as_ref().unwrap();
        let mut rng = common::rng(seed);
        let y = Vector::new((0..p.dim()).map(|_| rng.random_range(0.0..3.0)).collect()).unwrap();
        let x = unscale(&y, &sys, a.cols()).unwrap();
        let orig = NqpProblem::new(h.clone(), h_lin.clone()).unwrap();
        let fy = nqp::objective(p, &y).unwrap();
        let fx = nqp::objective(&orig, &x).unwrap();
        prop_assert!((fx - fy).abs() <= 1e-10 * (1.0 + fx.abs()), "{fx} vs {fy}");
        let back = sys.scale_point(x.as_slice()).unwrap();
        for (u, v) in back.iter().zip(y.iter()) {
            prop_assert!((u - v).abs() <= 1e-14 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn cosine_structure((a, b) in instance()) {
        let (h, h_lin) = nnls::normal_system(&a, &b).unwrap();
        let q = rescale(&h, &h_lin).unwrap().problem.unwrap().matrix().clone();
        let n = q.cols();
        prop_assert!(q.is_exactly_symmetric());
        for i in 0..n {
            prop_assert_eq!(q.get(i, i), 1.0);
            for j in 0..n {
                prop_assert!(q.get(i, j).abs() <= 1.0 + 1e-12);
            }
        }
        let fro = linalg::frobenius_norm(&q);
        prop_assert!(fro >= (n as f64).sqrt() * (1.0 - 1e-12) && fro <= n as f64 * (1.0 + 1e-12));
    }

    /// Scaling a column by a power of two leaves the scaled problem bit-identical.
    #[test]
    fn power_of_two_column_scaling_is_exact((a, b) in instance(), exps in prop::collection::vec(-6i32..6, 6)) {
        let factors: Vec<f64> = (0..a.cols()).map(|j| 2f64.powi(exps[j])).collect();
        let scaled = a.scale_columns(&factors).unwrap();
        let config = SolverConfig::for_dimension(a.cols());
        let r0 = nnls::solve_nnls(&a, &b, &config).unwrap();
        let r1 = nnls::solve_nnls(&scaled, &b, &config).unwrap();
        prop_assert_eq!(r0.iterations(), r1.iterations());
        for ((x0, x1), c) in r0.x.iter().zip(r1.x.iter()).zip(&factors) {
            prop_assert_eq!(x0.to_bits(), (x1 * c).to_bits());
        }
    }

    #[test]
    fn arbitrary_column_scaling_keeps_support((a, b) in instance(), factors in prop::collection::vec(0.01..100.0f64, 6)) {
        let scaled = a.scale_columns(&factors[..a.cols()]).unwrap();
        let r0 = nnls::solve_nnls(&a, &b, &tight(a.cols())).unwrap();
        let r1 = nnls::solve_nnls(&scaled, &b, &tight(a.cols())).unwrap();
        prop_assert!((r0.objective() - r1.objective()).abs() <= 1e-9 * (1.0 + r0.objective()));
        let (x_ref, _) = common::brute_force_nnls(&a, b.as_slice());
        let support = |x: &[f64]| x.iter().map(|&v| v > 1e-6).collect::<Vec<_>>();
        // Entries close to the boundary are ambiguous at any tolerance.
        prop_assume!(x_ref.iter().all(|&v| v == 0.0 || v > 1e-4));
        prop_assert_eq!(support(r0.x.as_slice()), support(&x_ref));
        let unscaled: Vec<f64> = r1.x.iter().zip(&factors).map(|(x, c)| x * c).collect();
        prop_assert_eq!(support(&unscaled), support(&x_ref));
    }
}

#[test]
fn brute_force_hand_example() {
    let a = DenseMatrix::from_rows(&[[1.0, 1.0], [0.0, 1.0]]).unwrap();
    let (x, f) = common::brute_force_nnls(&a, &[2.0, -1.0]);
    assert_eq!(x, vec![2.0, 0.0]);
    assert_eq!(f, 0.5);
    let r = nnls::solve_nnls(&a, &Vector::new(vec![2.0, -1.0]).unwrap(), &tight(2)).unwrap();
    assert!((r.x[0] - 2.0).abs() <= 1e-9 && r.x[1] == 0.0);
    assert!((r.objective() - 0.5).abs() <= 1e-12);
}

#[test]
fn frobenius_bounds_are_attained() {
    for n in [1usize, 4, 17] {
        let id = DenseMatrix::identity(n).unwrap();
        let q = rescale(&id, &Vector::zeros(n)).unwrap().problem.unwrap();
        assert!((linalg::frobenius_norm(q.matrix()) - (n as f64).sqrt()).abs() <= 1e-12);

        let parallel = DenseMatrix::from_fn(3, n, |i, j| (i + 1) as f64 * (j + 1) as f64).unwrap();
        let q = rescale(&linalg::gram(&parallel), &Vector::zeros(n)).unwrap().problem.unwrap();
        assert!((linalg::frobenius_norm(q.matrix()) - n as f64).abs() <= 1e-12 * n as f64);
    }
}

#[test]
fn zero_columns_are_dropped() {
    let a = DenseMatrix::from_rows(&[[1.0, 0.0, 2.0], [0.0, 0.0, 1.0]]).unwrap();
    let b = Vector::new(vec![1.0, 1.0]).unwrap();
    let r = nnls::solve_nnls(&a, &b, &tight(3)).unwrap();
    assert_eq!(r.dropped, vec![1]);
    assert_eq!(r.x[1], 0.0);
    let (_, f) = common::brute_force_nnls(&a, b.as_slice());
    assert!((r.objective() - f).abs() <= 1e-12);
}

#[test]
fn dimension_mismatch_is_reported() {
    let a = DenseMatrix::identity(3).unwrap();
    let b = Vector::zeros(2);
    assert!(matches!(
        nnls::solve_nnls(&a, &b, &SolverConfig::for_dimension(3)),
        Err(antilop::error::Error::Dimension(_))
    ));
}
