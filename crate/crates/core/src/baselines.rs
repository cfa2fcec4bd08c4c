//! Reference solvers used for comparison: a Lawson–Hanson style active-set
//! method on the normal equations ("Fast"), projected Nesterov acceleration
//! ("Accer"), and the same accelerated method run on the cosine-rescaled
//! system ("Anti+Acc").

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, masked_matvec_into, DenseMatrix, Mask, Vector};
use crate::nnls::{self, NnlsResult};
use crate::nqp::{self, IterRecord, NqpProblem, SolveResult, SolverConfig, Stopper, Termination};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaselineKind {
    FastActiveSet,
    Accelerated,
    AntiAccelerated,
}

impl BaselineKind {
    pub fn solve(self, a: &DenseMatrix, b: &Vector, config: &SolverConfig) -> Result<NnlsResult> {
        match self {
            BaselineKind::FastActiveSet => solve_fast_activeset(a, b, config),
            BaselineKind::Accelerated => solve_accelerated_nnls(a, b, config),
            BaselineKind::AntiAccelerated => solve_anti_accelerated(a, b, config),
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::FastActiveSet => "fast",
            BaselineKind::Accelerated => "accer",
            BaselineKind::AntiAccelerated => "anti-accer",
        })
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(BaselineKind::FastActiveSet),
            "accer" => Ok(BaselineKind::Accelerated),
            "anti-accer" => Ok(BaselineKind::AntiAccelerated),
            _ => Err(Error::InvalidArgument(format!("unknown baseline {s:?}"))),
        }
    }
}

// ---------------------------------------------------------------------------
// Active set

/// Relative pivot size below which the passive block counts as singular.
const PIVOT_TOL: f64 = 1e-13;

/// Solves `M z = r` in place by Gaussian elimination with partial pivoting.
/// `m` is row-major `k x k`. Returns `false` on a negligible pivot.
fn gauss_solve(m: &mut [f64], r: &mut [f64], k: usize) -> bool {
    let scale = m.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        return false;
    }
    for col in 0..k {
        let (piv, piv_abs) = (col..k)
            .map(|row| (row, m[row * k + col].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if piv_abs <= PIVOT_TOL * scale {
            return false;
        }
        if piv != col {
            for j in 0..k {
                m.swap(col * k + j, piv * k + j);
            }
            r.swap(col, piv);
        }
        let p = m[col * k + col];
        for row in (col + 1)..k {
            let factor = m[row * k + col] / p;
            if factor == 0.0 {
                continue;
            }
            for j in col..k {
                m[row * k + j] -= factor * m[col * k + j];
            }
            r[row] -= factor * r[col];
        }
    }
    for col in (0..k).rev() {
        let mut acc = r[col];
        for j in (col + 1)..k {
            acc -= m[col * k + j] * r[j];
        }
        r[col] = acc / m[col * k + col];
    }
    true
}

/// Unconstrained solve of `H_PP s_P = (Aᵀb)_P`, with one diagonal-perturbation
/// retry when the block is numerically singular.
fn solve_passive(h: &DenseMatrix, atb: &[f64], passive: &[usize], out: &mut [f64]) -> Result<()> {
    let k = passive.len();
    let build = |shift: f64| {
        let mut m = vec![0.0; k * k];
        for (r, &i) in passive.iter().enumerate() {
            for (c, &j) in passive.iter().enumerate() {
                m[r * k + c] = h.get(i, j);
            }
            m[r * k + r] += shift;
        }
        let rhs: Vec<f64> = passive.iter().map(|&i| atb[i]).collect();
        (m, rhs)
    };
    out.fill(0.0);
    let (mut m, mut rhs) = build(0.0);
    if !gauss_solve(&mut m, &mut rhs, k) {
        let trace: f64 = passive.iter().map(|&i| h.get(i, i)).sum();
        let (mut m, mut r2) = build(1e-12 * trace / k as f64);
        if !gauss_solve(&mut m, &mut r2, k) {
            return Err(Error::Singular { size: k });
        }
        rhs = r2;
    }
    for (&i, v) in passive.iter().zip(rhs) {
        out[i] = v;
    }
    Ok(())
}

/// Active-set NNLS on the precomputed normal equations.
///
/// Terminates when every variable outside the passive set has gradient
/// `≥ −tol` with `tol = 10·ε_mach·‖H‖₁·n`, which is far below
/// `1e-10·(1 + ‖Aᵀb‖∞)` on any instance of reasonable scale. One trace record
/// per outer iteration.
pub fn solve_fast_activeset(a: &DenseMatrix, b: &Vector, config: &SolverConfig) -> Result<NnlsResult> {
    config.validate()?;
    nnls::check_dims(a, b)?;
    let start = Instant::now();
    let h = linalg::gram(a);
    let atb = linalg::tr_matvec(a, b)?;
    let inner = fast_activeset_gram(&h, &atb, config, start)?;
    let residual_sq = linalg::residual_sq(a, &inner.x, b)?;
    Ok(NnlsResult {
        x: inner.x.clone(),
        residual_sq,
        inner,
        dropped: Vec::new(),
    })
}

fn fast_activeset_gram(h: &DenseMatrix, atb: &Vector, config: &SolverConfig, start: Instant) -> Result<SolveResult> {
    let n = atb.len();
    let h_norm1 = (0..n).map(|j| h.col(j).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let tol = 10.0 * f64::EPSILON * h_norm1 * n as f64;
    let stopper = Stopper::new(config, start);

    let mut x = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut w = atb.to_vec(); // negative gradient Aᵀb − Hx
    let mut in_p = vec![false; n];
    let mut blocked = vec![false; n];
    let mut trace = Vec::new();
    let mut k = 0usize;

    let record = |k: usize, x: &[f64], w: &[f64], in_p: &[bool], alpha: Option<f64>| {
        let f = 0.5 * x.iter().zip(w).zip(atb.iter()).map(|((x, w), b)| x * (-w - b)).sum::<f64>() + 0.0;
        let gsq = x
            .iter()
            .zip(w)
            .filter(|(&x, &w)| x > 0.0 || -w < 0.0)
            .map(|(_, w)| w * w)
            .sum();
        IterRecord {
            k,
            f,
            grad_bar_sq: gsq,
            passive_count: in_p.iter().filter(|&&p| p).count(),
            elapsed: start.elapsed(),
            alpha,
            mults: 0,
        }
    };

    let termination = loop {
        let candidate = (0..n)
            .filter(|&i| !in_p[i] && !blocked[i] && w[i] > tol)
            .fold(None, |best: Option<usize>, i| match best {
                Some(j) if w[j] >= w[i] => Some(j),
                _ => Some(i),
            });
        let Some(t) = candidate else {
            trace.push(record(k, &x, &w, &in_p, None));
            break Termination::GradientBelowEpsilon;
        };
        if let Some(stop) = stopper.check_caps(k) {
            trace.push(record(k, &x, &w, &in_p, None));
            break stop;
        }

        in_p[t] = true;
        let passive: Vec<usize> = (0..n).filter(|&i| in_p[i]).collect();
        solve_passive(h, atb, &passive, &mut s)?;
        if s[t] <= 0.0 {
            // Entering variable would not move off the bound; skip it this round.
            in_p[t] = false;
            blocked[t] = true;
            continue;
        }

        let mut alpha_used = 1.0;
        let mut inner_iters = 0;
        loop {
            // Step toward s until the first passive variable hits zero.
            let blocking = (0..n)
                .filter(|&i| in_p[i] && s[i] <= 0.0)
                .map(|i| (i, x[i] / (x[i] - s[i])))
                .fold(None, |best: Option<(usize, f64)>, cur| match best {
                    Some(b) if b.1 <= cur.1 => Some(b),
                    _ => Some(cur),
                });
            let Some((hit, alpha)) = blocking else { break };
            inner_iters += 1;
            if inner_iters > n {
                return Err(Error::NumericFailure {
                    iteration: k,
                    reason: "active-set inner loop failed to settle".into(),
                    partial: Box::new(partial_result(&x, &w, trace)),
                });
            }
            alpha_used = alpha;
            for i in 0..n {
                if in_p[i] {
                    x[i] += alpha * (s[i] - x[i]);
                    if i == hit || x[i] <= 0.0 {
                        x[i] = 0.0;
                        in_p[i] = false;
                    }
                }
            }
            let passive: Vec<usize> = (0..n).filter(|&i| in_p[i]).collect();
            solve_passive(h, atb, &passive, &mut s)?;
        }
        x.copy_from_slice(&s);
        let hx = linalg::matvec(h, &x)?;
        for i in 0..n {
            w[i] = atb[i] - hx[i];
        }
        if x.iter().chain(w.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NumericFailure {
                iteration: k,
                reason: "non-finite iterate in active-set solve".into(),
                partial: Box::new(partial_result(&x, &w, trace)),
            });
        }
        blocked.fill(false);
        if k.is_multiple_of(config.trace_every) {
            trace.push(record(k, &x, &w, &in_p, Some(alpha_used)));
        }
        k += 1;
    };

    Ok(SolveResult {
        x: Vector::new(x)?,
        grad: Vector::new(w.iter().map(|v| -v).collect())?,
        trace,
        termination,
    })
}

fn partial_result(x: &[f64], w: &[f64], trace: Vec<IterRecord>) -> SolveResult {
    let clean = |v: &[f64], sign: f64| Vector::new(v.iter().map(|&a| if a.is_finite() { sign * a } else { 0.0 }).collect()).unwrap();
    SolveResult {
        x: clean(x, 1.0),
        grad: clean(w, -1.0),
        trace,
        termination: Termination::MaxIters,
    }
}

// ---------------------------------------------------------------------------
// Accelerated projected gradient

/// Projected Nesterov iteration with fixed step `1/M`, `M = ‖Q‖_F`.
pub fn solve_accelerated(problem: &NqpProblem, config: &SolverConfig) -> Result<SolveResult> {
    solve_accelerated_observed(problem, config, |_, _| {})
}

/// [`solve_accelerated`] with `observer(k, x_k)` called on every iterate.
pub fn solve_accelerated_observed(
    problem: &NqpProblem,
    config: &SolverConfig,
    mut observer: impl FnMut(usize, &[f64]),
) -> Result<SolveResult> {
    config.validate()?;
    let start = Instant::now();
    let n = problem.dim();
    let q_mat = problem.matrix();
    let q_lin = problem.linear().as_slice();
    let lipschitz = linalg::frobenius_norm(q_mat);
    let step = if lipschitz > 0.0 { 1.0 / lipschitz } else { 0.0 };

    let mut stopper = Stopper::new(config, start);
    let mut x = vec![0.0; n];
    let mut qx = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut qy = vec![0.0; n];
    let mut x_next = vec![0.0; n];
    let mut qx_next = vec![0.0; n];
    let mut grad = q_lin.to_vec();
    let mut mask = Mask::empty();
    let mut support: Vec<usize> = Vec::with_capacity(n);
    let mut t = 1.0_f64;
    let mut trace = Vec::new();
    let mut k = 0usize;
    let mut mults = 0u64;

    let termination = loop {
        observer(k, &x);
        for i in 0..n {
            grad[i] = qx[i] + q_lin[i];
        }
        nqp::fill_passive(&x, &grad, &mut mask);
        let gsq: f64 = mask.indices().iter().map(|&i| grad[i] * grad[i]).sum();
        let f = 0.5 * x.iter().zip(&grad).zip(q_lin).map(|((x, g), q)| x * (g + q)).sum::<f64>() + 0.0;
        let rec = |alpha: Option<f64>, mults: u64| IterRecord {
            k,
            f,
            grad_bar_sq: gsq,
            passive_count: mask.len(),
            elapsed: start.elapsed(),
            alpha,
            mults,
        };
        if !f.is_finite() || !gsq.is_finite() {
            trace.push(rec(None, mults));
            return Err(nqp::numeric_failure(k, "objective or gradient is not finite", x, grad, trace));
        }
        if let Some(stop) = stopper.check(k, mask.is_empty(), gsq) {
            trace.push(rec(None, mults));
            break stop;
        }
        if step == 0.0 {
            trace.push(rec(None, mults));
            break Termination::ZeroCurvature;
        }

        // x+ = [y − (Qy + q)/M]₊
        support.clear();
        for i in 0..n {
            let v = (y[i] - step * (qy[i] + q_lin[i])).max(0.0);
            x_next[i] = v;
            if v != 0.0 {
                support.push(i);
            }
        }
        mults += masked_matvec_into(q_mat, &x_next, &support, &mut qx_next);

        let mut t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let mut beta = (t - 1.0) / t_next;
        if config.restart {
            let f_next = 0.5 * linalg::dot(&x_next, &qx_next) + linalg::dot(q_lin, &x_next);
            if f_next > f {
                t_next = 1.0;
                beta = 0.0;
            }
        }
        for i in 0..n {
            y[i] = x_next[i] + beta * (x_next[i] - x[i]);
            qy[i] = qx_next[i] + beta * (qx_next[i] - qx[i]);
        }
        std::mem::swap(&mut x, &mut x_next);
        std::mem::swap(&mut qx, &mut qx_next);
        t = t_next;

        if k.is_multiple_of(config.trace_every) {
            trace.push(rec(Some(step), mults));
        }
        mults = 0;
        k += 1;
    };

    Ok(SolveResult {
        x: Vector::new(x)?,
        grad: Vector::new(grad)?,
        trace,
        termination,
    })
}

/// Accelerated method applied directly to `(AᵀA, −Aᵀb)` without rescaling.
pub fn solve_accelerated_nnls(a: &DenseMatrix, b: &Vector, config: &SolverConfig) -> Result<NnlsResult> {
    config.validate()?;
    let (h, h_lin) = nnls::normal_system(a, b)?;
    let problem = NqpProblem::new(h, h_lin)?;
    let inner = solve_accelerated(&problem, config)?;
    let residual_sq = linalg::residual_sq(a, &inner.x, b)?;
    Ok(NnlsResult {
        x: inner.x.clone(),
        residual_sq,
        inner,
        dropped: Vec::new(),
    })
}

/// Cosine rescaling followed by the accelerated method.
pub fn solve_anti_accelerated(a: &DenseMatrix, b: &Vector, config: &SolverConfig) -> Result<NnlsResult> {
    nnls::solve_rescaled(a, b, config, solve_accelerated)
}
