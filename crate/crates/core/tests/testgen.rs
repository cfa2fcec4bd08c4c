mod common;

use antilop::linalg;
use antilop::nnls;
use antilop::nqp::SolverConfig;
use antilop::testgen::{self, TestCaseSpec, TestKind, TestInstance};
use proptest::prelude::*;

fn column_norms(inst: &TestInstance) -> Vec<f64> {
    (0..inst.a.cols()).map(|j| inst.a.col(j).iter().map(|v| v * v).sum::<f64>().sqrt()).collect()
}

fn kind() -> impl Strategy<Value = TestKind> {
    prop::sample::select(TestKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(common::proptest_config(48))]

    #[test]
    fn sparsity_is_close_to_target(kind in kind(), n in 100usize..160, sparsity in 0.0..=0.4f64, seed in any::<u64>()) {
        let d = n * 3 / 2;
        let inst = testgen::generate(&TestCaseSpec::new(kind, n, d, sparsity, seed).unwrap()).unwrap();
        let zeros = inst.a.col_major().iter().filter(|&&v| v == 0.0).count();
        let frac = zeros as f64 / (n * d) as f64;
        prop_assert!((frac - sparsity).abs() <= 0.02, "{frac} vs {sparsity}");
        let xz = inst.x_star.iter().filter(|&&v| v == 0.0).count() as f64 / n as f64;
        prop_assert!((xz - sparsity).abs() <= 0.02, "x*: {xz} vs {sparsity}");
    }

    #[test]
    fn sign_and_shape(kind in kind(), n in 2usize..40, extra in 0usize..20, sparsity in 0.0..=0.4f64, seed in any::<u64>()) {
        let inst = testgen::generate(&TestCaseSpec::new(kind, n, n + extra, sparsity, seed).unwrap()).unwrap();
        prop_assert_eq!((inst.a.rows(), inst.a.cols()), (n + extra, n));
        prop_assert!(column_norms(&inst).iter().all(|&c| c > 0.0));
        let b = linalg::matvec(&inst.a, inst.x_star.as_slice()).unwrap();
        prop_assert_eq!(&b, &inst.b);
        if kind.is_nonnegative() {
            prop_assert!(inst.a.col_major().iter().all(|&v| v >= 0.0));
            prop_assert!(inst.x_star.is_nonnegative());
            prop_assert_eq!(inst.f_star_known, Some(0.0));
        } else {
            prop_assert_eq!(inst.f_star_known, None);
        }
    }

    #[test]
    fn generation_is_deterministic(kind in kind(), n in 2usize..30, sparsity in 0.0..=0.4f64, seed in any::<u64>()) {
        let spec = TestCaseSpec::new(kind, n, 2 * n, sparsity, seed).unwrap();
        prop_assert_eq!(testgen::generate(&spec).unwrap(), testgen::generate(&spec).unwrap());
    }
}

#[test]
fn same_length_columns_are_unit() {
    for kind in [TestKind::T1, TestKind::T4] {
        for seed in 0..5 {
            let inst = testgen::generate(&TestCaseSpec::new(kind, 80, 120, 0.3, seed).unwrap()).unwrap();
            for c in column_norms(&inst) {
                assert!((c - 1.0).abs() <= 1e-12, "{kind} seed {seed}: {c}");
            }
        }
    }
}

#[test]
fn random_lengths_stay_in_range() {
    for kind in [TestKind::T2, TestKind::T5] {
        let inst = testgen::generate(&TestCaseSpec::new(kind, 200, 300, 0.1, 3).unwrap()).unwrap();
        for c in column_norms(&inst) {
            assert!((0.5 - 1e-12..2.0 + 1e-12).contains(&c), "{c}");
        }
    }
}

#[test]
fn various_lengths_are_lopsided() {
    for kind in [TestKind::T3, TestKind::T6] {
        let mut spreads = Vec::new();
        for seed in 0..10 {
            let inst = testgen::generate(&TestCaseSpec::new(kind, 50, 75, 0.2, seed).unwrap()).unwrap();
            let norms = column_norms(&inst);
            let max = norms.iter().copied().fold(0.0, f64::max);
            let min = norms.iter().copied().fold(f64::INFINITY, f64::min);
            assert!(max / min >= 10.0, "{kind} seed {seed}: ratio {}", max / min);
            spreads.push(linalg::frobenius_norm(&linalg::gram(&inst.a)));
        }
        let lo = spreads.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = spreads.iter().copied().fold(0.0, f64::max);
        println!("{kind}: ‖H‖_F over 10 seeds in [{lo:.3e}, {hi:.3e}]");
    }
}

#[test]
fn columns_are_independent_of_n() {
    let small = testgen::generate(&TestCaseSpec::new(TestKind::T2, 10, 40, 0.1, 9).unwrap()).unwrap();
    let large = testgen::generate(&TestCaseSpec::new(TestKind::T2, 30, 40, 0.1, 9).unwrap()).unwrap();
    for j in 0..10 {
        assert_eq!(small.a.col(j), large.a.col(j));
    }
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(TestCaseSpec::new(TestKind::T1, 10, 15, 0.41, 0).is_err());
    assert!(TestCaseSpec::new(TestKind::T1, 10, 15, -0.1, 0).is_err());
    assert!(TestCaseSpec::new(TestKind::T1, 10, 9, 0.1, 0).is_err());
    assert!(TestCaseSpec::new(TestKind::T1, 1, 9, 0.1, 0).is_err());
    assert!("T7".parse::<TestKind>().is_err());
    assert_eq!("t3".parse::<TestKind>().unwrap(), TestKind::T3);
}

#[test]
fn save_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for kind in TestKind::ALL {
        let inst = testgen::generate(&TestCaseSpec::new(kind, 12, 20, 0.25, 42).unwrap()).unwrap();
        let path = dir.path().join(kind.as_str());
        inst.save(&path).unwrap();
        for file in [testgen::A_FILE, testgen::B_FILE, testgen::XSTAR_FILE, testgen::META_FILE] {
            assert!(path.join(file).is_file());
        }
        assert_eq!(TestInstance::load(&path).unwrap(), inst);
    }
}

#[test]
fn nonnegative_kinds_are_consistent() {
    for kind in TestKind::ALL.into_iter().filter(|k| k.is_nonnegative()) {
        for seed in 0..3 {
            let inst = testgen::generate(&TestCaseSpec::new(kind, 60, 90, 0.2, seed).unwrap()).unwrap();
            let config = SolverConfig::for_dimension(60).with_max_iters(100_000).with_stall_window(1_000);
            let r = nnls::solve_nnls(&inst.a, &inst.b, &config).unwrap();
            let bb = inst.b.iter().map(|v| v * v).sum::<f64>();
            assert!(r.residual_sq <= 1e-8 * bb, "{kind} seed {seed}: {} vs ‖b‖² {bb}", r.residual_sq);
            let xs = linalg::residual_sq(&inst.a, inst.x_star.as_slice(), inst.b.as_slice()).unwrap();
            assert!(xs <= 1e-24 * bb.max(1.0));
        }
    }
}

#[test]
fn reference_optimum() {
    assert_eq!(testgen::reference_fstar(TestKind::T1, &[]).unwrap(), 0.0);
    assert_eq!(testgen::reference_fstar(TestKind::T5, &[3.0]).unwrap(), 0.0);
    assert_eq!(testgen::reference_fstar(TestKind::T2, &[3.0, 1.5, f64::NAN, 2.0]).unwrap(), 1.5);
    assert!(testgen::reference_fstar(TestKind::T4, &[]).is_err());
    assert!(testgen::reference_fstar(TestKind::T6, &[f64::INFINITY]).is_err());
}
