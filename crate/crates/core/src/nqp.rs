//! Projected gradient descent with exact line search for non-negative
//! quadratic programs `min ½xᵀQx + qᵀx  s.t. x ⪰ 0`.
//!
//! Each iteration restricts the gradient to the passive set
//! `P(x) = {i : x_i > 0 or ∇f_i < 0}`, takes the exact minimizing step along
//! that direction, clips at zero, and updates the gradient incrementally using
//! only the columns of `Q` whose coordinate actually moved. Work per iteration
//! is therefore proportional to `n · |P|`.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, masked_matvec_acc, masked_matvec_into, DenseMatrix, Mask, Vector};

/// Header of the per-iteration trace CSV.
pub const TRACE_CSV_HEADER: &str = "iter,elapsed_ms,f,grad_bar_sq,passive_count,alpha";

/// `min ½xᵀQx + qᵀx` over `x ⪰ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NqpProblem {
    q_mat: DenseMatrix,
    q_lin: Vector,
}

impl NqpProblem {
    /// Relative asymmetry accepted in `Q` before construction fails.
    pub const SYMMETRY_TOL: f64 = 1e-12;

    pub fn new(q_mat: DenseMatrix, q_lin: Vector) -> Result<Self> {
        if !q_mat.is_square() {
            return Err(Error::dim(format!(
                "Q must be square, got {}x{}",
                q_mat.rows(),
                q_mat.cols()
            )));
        }
        if q_lin.len() != q_mat.cols() {
            return Err(Error::dim(format!(
                "Q is {n}x{n} but q has length {}",
                q_lin.len(),
                n = q_mat.cols()
            )));
        }
        let asym = q_mat.max_asymmetry();
        if asym > Self::SYMMETRY_TOL * q_mat.max_abs().max(1.0) {
            return Err(Error::InvalidArgument(format!("Q is not symmetric (max |Q_ij - Q_ji| = {asym:e})")));
        }
        Ok(Self { q_mat, q_lin })
    }

    pub fn dim(&self) -> usize {
        self.q_lin.len()
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.q_mat
    }

    pub fn linear(&self) -> &Vector {
        &self.q_lin
    }

    /// `Qx + q`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vector> {
        let mut g = linalg::matvec(&self.q_mat, x)?.into_vec();
        g.iter_mut().zip(self.q_lin.iter()).for_each(|(g, q)| *g += q);
        Vector::new(g)
    }

    /// Randomized PSD spot check: `vᵀQv ≥ -tol·‖v‖²·‖Q‖_F` for `trials`
    /// Gaussian-ish directions drawn from `seed`.
    pub fn spot_check_psd(&self, trials: usize, seed: u64) -> bool {
        let n = self.dim();
        let fro = linalg::frobenius_norm(&self.q_mat);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..trials).all(|_| {
            let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let qv = linalg::matvec(&self.q_mat, &v).expect("square");
            let vv = linalg::dot(&v, &v);
            linalg::dot(&v, &qv) >= -1e-10 * vv * fro
        })
    }
}

/// `½xᵀQx + qᵀx`.
pub fn objective(problem: &NqpProblem, x: &[f64]) -> Result<f64> {
    let qx = linalg::matvec(&problem.q_mat, x)?;
    Ok(0.5 * linalg::dot(x, &qx) + linalg::dot(&problem.q_lin, x))
}

/// Stopping rules shared by every solver in the crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Threshold on `‖∇f̄‖²`.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Wall-clock cap; `None` disables it.
    #[serde(with = "opt_secs")]
    pub time_cap: Option<Duration>,
    /// Stop once the smallest `‖∇f̄‖²` seen has not improved for this many
    /// consecutive iterations. Zero disables the rule.
    pub stall_window: usize,
    /// Record every `trace_every`-th iteration (the final record is always kept).
    pub trace_every: usize,
    /// Adaptive momentum restart for the accelerated baseline.
    pub restart: bool,
}

impl SolverConfig {
    pub const DEFAULT_STALL_WINDOW: usize = 50;
    pub const DEFAULT_TIME_CAP: Duration = Duration::from_secs(60);

    /// Defaults for an `n`-variable problem: `ε = 1e-12·n`, `5n` iterations,
    /// a stall window of `max(50, n)` and a 60 s cap.
    pub fn for_dimension(n: usize) -> Self {
        let n = n.max(1);
        Self {
            epsilon: 1e-12 * n as f64,
            max_iters: 5 * n,
            time_cap: Some(Self::DEFAULT_TIME_CAP),
            stall_window: Self::DEFAULT_STALL_WINDOW.max(n),
            trace_every: 1,
            restart: false,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_time_cap(mut self, cap: Option<Duration>) -> Self {
        self.time_cap = cap;
        self
    }

    pub fn with_stall_window(mut self, window: usize) -> Self {
        self.stall_window = window;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        if self.trace_every == 0 {
            return Err(Error::InvalidArgument("trace_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Tolerance used by the approximate KKT certificate: `√ε·(1 + ‖q‖₂)`.
    pub fn kkt_tolerance(&self, q: &[f64]) -> f64 {
        self.epsilon.sqrt() * (1.0 + linalg::norm2(q))
    }
}

mod opt_secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Duration>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(d) => s.serialize_some(&d.as_secs_f64()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Duration>, D::Error> {
        let secs: Option<f64> = Option::deserialize(d)?;
        secs.map(|s| Duration::try_from_secs_f64(s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Termination {
    EmptyPassiveSet,
    GradientBelowEpsilon,
    MaxIters,
    TimeCap,
    Stalled,
    ZeroCurvature,
}

impl Termination {
    /// True for the two outcomes that certify approximate optimality.
    pub fn is_converged(self) -> bool {
        matches!(self, Termination::EmptyPassiveSet | Termination::GradientBelowEpsilon)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Termination::EmptyPassiveSet => "EmptyPassiveSet",
            Termination::GradientBelowEpsilon => "GradientBelowEpsilon",
            Termination::MaxIters => "MaxIters",
            Termination::TimeCap => "TimeCap",
            Termination::Stalled => "Stalled",
            Termination::ZeroCurvature => "ZeroCurvature",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Termination {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Termination::EmptyPassiveSet,
            Termination::GradientBelowEpsilon,
            Termination::MaxIters,
            Termination::TimeCap,
            Termination::Stalled,
            Termination::ZeroCurvature,
        ]
        .into_iter()
        .find(|t| t.as_str() == s)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown termination {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub k: usize,
    pub f: f64,
    pub grad_bar_sq: f64,
    pub passive_count: usize,
    pub elapsed: Duration,
    /// Step taken from this iterate; `None` on the final record.
    pub alpha: Option<f64>,
    /// Scalar multiplies spent in mat-vec kernels during this iteration.
    pub mults: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub x: Vector,
    /// Gradient `Qx + q` as maintained by the solver at `x`.
    pub grad: Vector,
    pub trace: Vec<IterRecord>,
    pub termination: Termination,
}

impl SolveResult {
    /// Number of steps taken (the index of the final record).
    pub fn iterations(&self) -> usize {
        self.trace.last().map_or(0, |r| r.k)
    }

    pub fn final_objective(&self) -> f64 {
        self.trace.last().map_or(0.0, |r| r.f)
    }

    pub fn write_trace_csv(&self, w: impl Write) -> std::io::Result<()> {
        write_trace_csv(&self.trace, w)
    }

    pub fn save_trace_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        write_trace_csv(&self.trace, &mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }
}

/// Writes `trace` as CSV with 17 significant digits per float.
pub fn write_trace_csv(trace: &[IterRecord], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{TRACE_CSV_HEADER}")?;
    for r in trace {
        write!(
            w,
            "{},{:.16e},{:.16e},{:.16e},{},",
            r.k,
            r.elapsed.as_secs_f64() * 1e3,
            r.f,
            r.grad_bar_sq,
            r.passive_count
        )?;
        if let Some(a) = r.alpha {
            write!(w, "{a:.16e}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Shared stopping logic: empty passive set, gradient threshold, iteration
/// cap, time cap, then the stall window.
pub(crate) struct Stopper<'a> {
    config: &'a SolverConfig,
    start: Instant,
    best_gsq: f64,
    since_best: usize,
}

impl<'a> Stopper<'a> {
    pub(crate) fn new(config: &'a SolverConfig, start: Instant) -> Self {
        Self {
            config,
            start,
            best_gsq: f64::INFINITY,
            since_best: 0,
        }
    }

    pub(crate) fn check(&mut self, k: usize, mask_empty: bool, gsq: f64) -> Option<Termination> {
        let cfg = self.config;
        if mask_empty {
            return Some(Termination::EmptyPassiveSet);
        }
        if gsq < cfg.epsilon {
            return Some(Termination::GradientBelowEpsilon);
        }
        if let Some(t) = self.check_caps(k) {
            return Some(t);
        }
        if gsq < self.best_gsq {
            self.best_gsq = gsq;
            self.since_best = 0;
        } else {
            self.since_best += 1;
        }
        (cfg.stall_window > 0 && self.since_best >= cfg.stall_window).then_some(Termination::Stalled)
    }

    pub(crate) fn check_caps(&self, k: usize) -> Option<Termination> {
        if k >= self.config.max_iters {
            Some(Termination::MaxIters)
        } else if self.config.time_cap.is_some_and(|cap| self.start.elapsed() >= cap) {
            Some(Termination::TimeCap)
        } else {
            None
        }
    }
}

/// `{i : x_i > 0 or grad_i < 0}`.
pub fn passive_mask(x: &[f64], grad: &[f64]) -> Result<Mask> {
    if x.len() != grad.len() {
        return Err(Error::dim(format!("x has length {}, gradient {}", x.len(), grad.len())));
    }
    let mut mask = Mask::empty();
    fill_passive(x, grad, &mut mask);
    Ok(mask)
}

pub(crate) fn fill_passive(x: &[f64], grad: &[f64], mask: &mut Mask) {
    mask.clear();
    for (i, (&xi, &gi)) in x.iter().zip(grad).enumerate() {
        if xi > 0.0 || gi < 0.0 {
            mask.push_sorted(i);
        }
    }
}

/// Exact line-search step `‖ḡ‖² / ḡᵀQḡ` for a masked gradient `ḡ`.
///
/// Returns `None` when the curvature along `ḡ` is not positive.
pub fn exact_step(q_mat: &DenseMatrix, grad_bar: &[f64]) -> Result<Option<f64>> {
    if !q_mat.is_square() || grad_bar.len() != q_mat.cols() {
        return Err(Error::dim(format!(
            "{}x{} matrix with gradient of length {}",
            q_mat.rows(),
            q_mat.cols(),
            grad_bar.len()
        )));
    }
    let support: Vec<usize> = (0..grad_bar.len()).filter(|&i| grad_bar[i] != 0.0).collect();
    let mut qg = vec![0.0; grad_bar.len()];
    let (alpha, _) = step_on_mask(q_mat, grad_bar, &support, &mut qg);
    Ok(alpha)
}

/// Computes the exact step over `mask` using `qg` as scratch; returns the step
/// (or `None` for non-positive curvature) and the multiply count.
fn step_on_mask(q_mat: &DenseMatrix, g: &[f64], mask: &[usize], qg: &mut [f64]) -> (Option<f64>, u64) {
    let mults = masked_matvec_into(q_mat, g, mask, qg);
    let mut num = 0.0;
    let mut den = 0.0;
    for &i in mask {
        num += g[i] * g[i];
        den += g[i] * qg[i];
    }
    let mults = mults + 2 * mask.len() as u64;
    if den > 0.0 {
        (Some(num / den), mults)
    } else {
        (None, mults)
    }
}

/// Solves the NQP from the origin.
pub fn solve_nqp(problem: &NqpProblem, config: &SolverConfig) -> Result<SolveResult> {
    let x0 = Vector::zeros(problem.dim());
    solve_nqp_from(problem, config, &x0)
}

/// Solves the NQP from a feasible starting point `x0 ⪰ 0`.
pub fn solve_nqp_from(problem: &NqpProblem, config: &SolverConfig, x0: &Vector) -> Result<SolveResult> {
    solve_nqp_observed(problem, config, x0, |_, _| {})
}

/// Like [`solve_nqp_from`], calling `observer(k, x_k)` on every iterate
/// including the final one.
pub fn solve_nqp_observed(
    problem: &NqpProblem,
    config: &SolverConfig,
    x0: &Vector,
    mut observer: impl FnMut(usize, &[f64]),
) -> Result<SolveResult> {
    config.validate()?;
    let n = problem.dim();
    if x0.len() != n {
        return Err(Error::dim(format!("x0 has length {}, problem dimension {n}", x0.len())));
    }
    if !x0.is_nonnegative() {
        return Err(Error::InvalidArgument("starting point must be non-negative".into()));
    }
    let q_mat = &problem.q_mat;
    let q_lin = problem.q_lin.as_slice();
    let start = Instant::now();

    let mut x = x0.to_vec();
    let mut grad = q_lin.to_vec();
    let support: Vec<usize> = (0..n).filter(|&i| x[i] != 0.0).collect();
    let mut mults = masked_matvec_acc(q_mat, &x, &support, &mut grad);

    let mut mask = Mask::empty();
    let mut changed: Vec<usize> = Vec::with_capacity(n);
    let mut g_bar = vec![0.0; n];
    let mut qg = vec![0.0; n];
    let mut delta = vec![0.0; n];
    let mut q_delta = vec![0.0; n];
    let mut trace = Vec::new();
    let mut stopper = Stopper::new(config, start);
    let mut k = 0usize;

    let termination = loop {
        observer(k, &x);
        fill_passive(&x, &grad, &mut mask);
        g_bar.fill(0.0);
        let mut gsq = 0.0;
        for &i in mask.indices() {
            g_bar[i] = grad[i];
            gsq += grad[i] * grad[i];
        }
        // f = ½xᵀ(Qx + q) + ½qᵀx = ½xᵀ(∇f + q)
        let f = 0.5 * x.iter().zip(&grad).zip(q_lin).map(|((x, g), q)| x * (g + q)).sum::<f64>() + 0.0;
        let record = |alpha: Option<f64>, mults: u64| IterRecord {
            k,
            f,
            grad_bar_sq: gsq,
            passive_count: mask.len(),
            elapsed: start.elapsed(),
            alpha,
            mults,
        };

        if !f.is_finite() || !gsq.is_finite() {
            trace.push(record(None, mults));
            return Err(numeric_failure(k, "objective or gradient is not finite", x, grad, trace));
        }
        let stop = stopper.check(k, mask.is_empty(), gsq);
        if let Some(t) = stop {
            trace.push(record(None, mults));
            break t;
        }

        let (alpha, step_mults) = step_on_mask(q_mat, &g_bar, mask.indices(), &mut qg);
        mults += step_mults;
        let Some(alpha) = alpha else {
            trace.push(record(None, mults));
            break Termination::ZeroCurvature;
        };
        if !alpha.is_finite() {
            trace.push(record(None, mults));
            return Err(numeric_failure(k, "step length is not finite", x, grad, trace));
        }

        // Projected step. If clipping makes it an ascent step, fall back to the
        // longest unclipped step along -ḡ, which is a descent step because the
        // exact minimizer along the ray lies beyond it.
        changed.clear();
        let mut clipped = false;
        for &i in mask.indices() {
            let raw = x[i] - alpha * g_bar[i];
            clipped |= raw < 0.0;
            let d = raw.max(0.0) - x[i];
            if d != 0.0 {
                delta[i] = d;
                changed.push(i);
            }
        }
        mults += masked_matvec_into(q_mat, &delta, &changed, &mut q_delta);
        let mut step = alpha;
        let ascent = clipped && {
            let (mut lin, mut quad) = (0.0, 0.0);
            for &i in &changed {
                lin += grad[i] * delta[i];
                quad += delta[i] * q_delta[i];
            }
            lin + 0.5 * quad > 0.0
        };
        if ascent {
            step = mask
                .indices()
                .iter()
                .filter(|&&i| g_bar[i] > 0.0)
                .map(|&i| x[i] / g_bar[i])
                .fold(alpha, f64::min);
            for &i in mask.indices() {
                x[i] = (x[i] - step * g_bar[i]).max(0.0);
            }
            for (g, qg) in grad.iter_mut().zip(&qg) {
                *g -= step * qg;
            }
        } else {
            for &i in &changed {
                x[i] = (x[i] - alpha * g_bar[i]).max(0.0);
            }
            for (g, qd) in grad.iter_mut().zip(&q_delta) {
                *g += qd;
            }
        }
        for &i in &changed {
            delta[i] = 0.0;
        }

        if k.is_multiple_of(config.trace_every) {
            trace.push(record(Some(step), mults));
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

pub(crate) fn numeric_failure(iteration: usize, reason: &str, x: Vec<f64>, grad: Vec<f64>, trace: Vec<IterRecord>) -> Error {
    // Keep the partial iterate even if it contains non-finite entries.
    let clean = |v: Vec<f64>| Vector::new(v.iter().map(|&a| if a.is_finite() { a } else { 0.0 }).collect()).unwrap();
    Error::NumericFailure {
        iteration,
        reason: reason.to_string(),
        partial: Box::new(SolveResult {
            x: clean(x),
            grad: clean(grad),
            trace,
            termination: Termination::ZeroCurvature,
        }),
    }
}

/// Largest violation of the approximate KKT conditions for `x ⪰ 0`:
/// negativity of `x`, negativity of `grad` where `x_i = 0`, and `|grad_i|`
/// where `x_i > 0`.
pub fn kkt_violation(x: &[f64], grad: &[f64]) -> f64 {
    x.iter().zip(grad).fold(0.0_f64, |worst, (&xi, &gi)| {
        let v = if xi < 0.0 {
            -xi
        } else if xi == 0.0 {
            (-gi).max(0.0)
        } else {
            gi.abs()
        };
        worst.max(v)
    })
}
