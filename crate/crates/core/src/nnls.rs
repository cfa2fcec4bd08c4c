//! Anti-lopsided front-end for `min ½‖Ax − b‖²  s.t. x ⪰ 0`.
//!
//! The Gram system `H = AᵀA, h = −Aᵀb` is rescaled with `D = √diag(H)` so that
//! the quadratic term becomes the cosine matrix `Q_ij = H_ij / (D_i D_j)` with
//! a unit diagonal. The rescaled problem is solved in `y = D x` and mapped back.
//! Columns with `H_ii = 0` carry no information; they are dropped and pinned
//! to zero.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix, Vector};
use crate::nqp::{self, NqpProblem, SolveResult, SolverConfig, Termination};

/// Cosine-scaled Gram system together with the map back to original columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledSystem {
    /// `None` when every column was dropped.
    pub problem: Option<NqpProblem>,
    /// `D_j = √H_jj` for each retained column.
    pub scale: Vector,
    /// Original column index of each reduced variable.
    pub retained: Vec<usize>,
    /// Original columns with `H_ii = 0`.
    pub dropped: Vec<usize>,
}

impl ScaledSystem {
    pub fn q(&self) -> Option<&DenseMatrix> {
        self.problem.as_ref().map(NqpProblem::matrix)
    }

    pub fn linear(&self) -> Option<&Vector> {
        self.problem.as_ref().map(NqpProblem::linear)
    }

    pub fn original_dim(&self) -> usize {
        self.retained.len() + self.dropped.len()
    }

    /// Maps an original-space point into the scaled space (`y_j = D_j x_i`).
    pub fn scale_point(&self, x: &[f64]) -> Result<Vector> {
        if x.len() != self.original_dim() {
            return Err(Error::dim(format!(
                "point has length {}, system has {} columns",
                x.len(),
                self.original_dim()
            )));
        }
        Vector::new(self.retained.iter().zip(self.scale.iter()).map(|(&i, d)| x[i] * d).collect())
    }
}

/// Rescales `(H, h)` into a cosine-matrix NQP.
pub fn rescale(h_mat: &DenseMatrix, h_lin: &Vector) -> Result<ScaledSystem> {
    if !h_mat.is_square() {
        return Err(Error::dim(format!("H must be square, got {}x{}", h_mat.rows(), h_mat.cols())));
    }
    let n = h_mat.cols();
    if h_lin.len() != n {
        return Err(Error::dim(format!("H is {n}x{n} but h has length {}", h_lin.len())));
    }
    let mut retained = Vec::with_capacity(n);
    let mut dropped = Vec::new();
    let mut scale = Vec::with_capacity(n);
    for i in 0..n {
        let hii = h_mat.get(i, i);
        if hii < 0.0 {
            return Err(Error::NegativeDiagonal { index: i, value: hii });
        }
        if hii == 0.0 {
            dropped.push(i);
        } else {
            retained.push(i);
            scale.push(hii.sqrt());
        }
    }

    let m = retained.len();
    let mut q = vec![0.0; m * m];
    for b in 0..m {
        let jb = retained[b];
        for a in 0..b {
            q[b * m + a] = h_mat.get(retained[a], jb) / (scale[a] * scale[b]);
        }
        q[b * m + b] = 1.0;
    }
    for b in 0..m {
        for a in (b + 1)..m {
            q[b * m + a] = q[a * m + b];
        }
    }
    let q_lin: Vec<f64> = retained.iter().zip(&scale).map(|(&i, d)| h_lin[i] / d).collect();

    let problem = if m == 0 {
        None
    } else {
        Some(NqpProblem::new(DenseMatrix::from_col_major(m, m, q)?, Vector::new(q_lin)?)?)
    };
    Ok(ScaledSystem {
        problem,
        scale: Vector::new(scale)?,
        retained,
        dropped,
    })
}

/// Maps a scaled-space solution back to the original `n` columns.
pub fn unscale(y: &Vector, system: &ScaledSystem, n: usize) -> Result<Vector> {
    if y.len() != system.retained.len() {
        return Err(Error::dim(format!(
            "y has length {}, system retains {} columns",
            y.len(),
            system.retained.len()
        )));
    }
    if n != system.original_dim() {
        return Err(Error::dim(format!("n = {n}, system covers {} columns", system.original_dim())));
    }
    let mut x = vec![0.0; n];
    for ((&i, yj), d) in system.retained.iter().zip(y.iter()).zip(system.scale.iter()) {
        x[i] = yj / d;
    }
    Vector::new(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsResult {
    pub x: Vector,
    pub residual_sq: f64,
    pub inner: SolveResult,
    pub dropped: Vec<usize>,
}

impl NnlsResult {
    /// `½‖Ax − b‖²`.
    pub fn objective(&self) -> f64 {
        0.5 * self.residual_sq
    }

    pub fn iterations(&self) -> usize {
        self.inner.iterations()
    }

    pub fn termination(&self) -> Termination {
        self.inner.termination
    }

    pub fn summary(&self) -> NnlsSummary {
        NnlsSummary {
            residual_sq: self.residual_sq,
            iterations: self.iterations(),
            termination: self.termination(),
            dropped_columns: self.dropped.clone(),
        }
    }
}

/// JSON summary of a solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NnlsSummary {
    pub residual_sq: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub dropped_columns: Vec<usize>,
}

pub(crate) fn check_dims(a: &DenseMatrix, b: &Vector) -> Result<()> {
    if a.rows() != b.len() {
        return Err(Error::dim(format!("A has {} rows but b has length {}", a.rows(), b.len())));
    }
    Ok(())
}

/// `(AᵀA, −Aᵀb)`.
pub fn normal_system(a: &DenseMatrix, b: &Vector) -> Result<(DenseMatrix, Vector)> {
    check_dims(a, b)?;
    let h = linalg::gram(a);
    let atb = linalg::tr_matvec(a, b)?;
    let neg = Vector::new(atb.iter().map(|v| -v).collect())?;
    Ok((h, neg))
}

/// Rescales, runs `inner` on the cosine system, and maps the answer back.
pub(crate) fn solve_rescaled<F>(a: &DenseMatrix, b: &Vector, config: &SolverConfig, inner: F) -> Result<NnlsResult>
where
    F: FnOnce(&NqpProblem, &SolverConfig) -> Result<SolveResult>,
{
    config.validate()?;
    let (h, h_lin) = normal_system(a, b)?;
    let system = rescale(&h, &h_lin)?;
    let n = a.cols();
    let inner = match &system.problem {
        Some(p) => inner(p, config)?,
        None => trivial_result(0),
    };
    let x = unscale(&inner.x, &system, n)?;
    let residual_sq = linalg::residual_sq(a, &x, b)?;
    Ok(NnlsResult {
        x,
        residual_sq,
        inner,
        dropped: system.dropped,
    })
}

/// Result for a problem with no free variables: the origin, already optimal.
pub(crate) fn trivial_result(n: usize) -> SolveResult {
    SolveResult {
        x: Vector::zeros(n),
        grad: Vector::zeros(n),
        trace: vec![nqp::IterRecord {
            k: 0,
            f: 0.0,
            grad_bar_sq: 0.0,
            passive_count: 0,
            elapsed: Default::default(),
            alpha: None,
            mults: 0,
        }],
        termination: Termination::EmptyPassiveSet,
    }
}

/// Anti-lopsided NNLS: rescale the Gram system, run the exact-line-search
/// projected gradient method, unscale.
pub fn solve_nnls(a: &DenseMatrix, b: &Vector, config: &SolverConfig) -> Result<NnlsResult> {
    solve_rescaled(a, b, config, nqp::solve_nqp)
}

/// Gradient of `½xᵀHx + hᵀx` in the cosine-scaled space: `∇_y = ∇_x / D`.
///
/// Dropped columns are omitted. Used to certify KKT conditions for any
/// solver's output on the same footing.
pub fn scaled_gradient(system: &ScaledSystem, h_mat: &DenseMatrix, h_lin: &Vector, x: &[f64]) -> Result<Vector> {
    let gx = linalg::matvec(h_mat, x)?;
    Vector::new(
        system
            .retained
            .iter()
            .zip(system.scale.iter())
            .map(|(&i, d)| (gx[i] + h_lin[i]) / d)
            .collect(),
    )
}
