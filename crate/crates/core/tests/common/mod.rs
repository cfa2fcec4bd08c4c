#![allow(dead_code)]

use antilop::linalg::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Least squares on the columns `cols` of `a` by Householder QR.
/// Returns `None` when the selected columns are rank deficient.
pub fn least_squares(a: &DenseMatrix, b: &[f64], cols: &[usize]) -> Option<Vec<f64>> {
    let m = a.rows();
    let k = cols.len();
    let mut r: Vec<Vec<f64>> = cols.iter().map(|&j| a.col(j).to_vec()).collect();
    let mut y = b.to_vec();
    let scale = r.iter().flatten().fold(0.0_f64, |s, v| s.max(v.abs()));
    for c in 0..k {
        let norm = r[c][c..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-12 * scale * (m as f64).sqrt() {
            return None;
        }
        let alpha = if r[c][c] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = r[c][c..].to_vec();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv == 0.0 {
            continue;
        }
        for col in r.iter_mut().skip(c) {
            let s: f64 = v.iter().zip(&col[c..]).map(|(a, b)| a * b).sum::<f64>() * 2.0 / vv;
            for (x, vi) in col[c..].iter_mut().zip(&v) {
                *x -= s * vi;
            }
        }
        let s: f64 = v.iter().zip(&y[c..]).map(|(a, b)| a * b).sum::<f64>() * 2.0 / vv;
        for (x, vi) in y[c..].iter_mut().zip(&v) {
            *x -= s * vi;
        }
    }
    let mut z = vec![0.0; k];
    for c in (0..k).rev() {
        let mut acc = y[c];
        for j in (c + 1)..k {
            acc -= r[j][c] * z[j];
        }
        z[c] = acc / r[c][c];
    }
    Some(z)
}

pub fn half_residual_sq(a: &DenseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let mut r: Vec<f64> = b.iter().map(|v| -v).collect();
    for (j, &xj) in x.iter().enumerate() {
        if xj != 0.0 {
            for (ri, aij) in r.iter_mut().zip(a.col(j)) {
                *ri += aij * xj;
            }
        }
    }
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

/// Exhaustive NNLS: every support set, unconstrained least squares on it,
/// keep the best non-negative candidate. Exact for full column rank `A`.
pub fn brute_force_nnls(a: &DenseMatrix, b: &[f64]) -> (Vec<f64>, f64) {
    let n = a.cols();
    assert!(n <= 16, "brute force is exponential");
    let mut best = (vec![0.0; n], half_residual_sq(a, &vec![0.0; n], b));
    for set in 1u32..(1 << n) {
        let cols: Vec<usize> = (0..n).filter(|&j| set & (1 << j) != 0).collect();
        let Some(z) = least_squares(a, b, &cols) else { continue };
        if z.iter().any(|&v| v < 0.0) {
            continue;
        }
        let mut x = vec![0.0; n];
        for (&j, v) in cols.iter().zip(z) {
            x[j] = v;
        }
        let f = half_residual_sq(a, &x, b);
        if f < best.1 {
            best = (x, f);
        }
    }
    best
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi)).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn proptest_config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        failure_persistence: None,
        ..Default::default()
    }
}
