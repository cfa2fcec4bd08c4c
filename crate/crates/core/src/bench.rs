//! Benchmark harness: runs solvers over generated test cases and collects
//! per-cell results plus per-(kind, solver) aggregates.

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::baselines;
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Vector};
use crate::nnls::{self, NnlsResult};
use crate::nqp::SolverConfig;
use crate::testgen::{self, TestCaseSpec, TestInstance, TestKind};

pub const REPORT_SCHEMA: &str = "bench-report/1";
pub const DEFAULT_SUB_TESTS: usize = 5;
pub const DEFAULT_N: usize = 400;
pub const DEFAULT_D: usize = 600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Antilop,
    Fast,
    Accer,
    AntiAccer,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Antilop, Algorithm::Fast, Algorithm::Accer, Algorithm::AntiAccer];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Antilop => "antilop",
            Algorithm::Fast => "fast",
            Algorithm::Accer => "accer",
            Algorithm::AntiAccer => "anti-accer",
        }
    }

    pub fn solve(self, a: &DenseMatrix, b: &Vector, config: &SolverConfig) -> Result<NnlsResult> {
        match self {
            Algorithm::Antilop => nnls::solve_nnls(a, b, config),
            Algorithm::Fast => baselines::solve_fast_activeset(a, b, config),
            Algorithm::Accer => baselines::solve_accelerated_nnls(a, b, config),
            Algorithm::AntiAccer => baselines::solve_anti_accelerated(a, b, config),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm {s:?}; expected antilop|fast|accer|anti-accer")))
    }
}

/// Optional replacements for the per-dimension solver defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverOverrides {
    pub epsilon: Option<f64>,
    pub max_iters: Option<usize>,
    /// `Some(None)` disables the time cap.
    pub time_cap: Option<Option<Duration>>,
    pub stall_window: Option<usize>,
}

impl SolverOverrides {
    pub fn apply(&self, n: usize) -> SolverConfig {
        let mut c = SolverConfig::for_dimension(n);
        if let Some(e) = self.epsilon {
            c.epsilon = e;
        }
        if let Some(m) = self.max_iters {
            c.max_iters = m;
        }
        if let Some(t) = self.time_cap {
            c.time_cap = t;
        }
        if let Some(w) = self.stall_window {
            c.stall_window = w;
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub kinds: Vec<TestKind>,
    pub n: usize,
    pub d: usize,
    pub sub_tests: usize,
    pub base_seed: u64,
    pub solvers: Vec<Algorithm>,
    pub overrides: SolverOverrides,
    /// Run cells on several threads. Wall times are then flagged unreliable.
    pub parallel: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            kinds: TestKind::ALL.to_vec(),
            n: DEFAULT_N,
            d: DEFAULT_D,
            sub_tests: DEFAULT_SUB_TESTS,
            base_seed: 1,
            solvers: Algorithm::ALL.to_vec(),
            overrides: SolverOverrides::default(),
            parallel: false,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kinds.is_empty() {
            return Err(Error::InvalidArgument("suite needs at least one kind".into()));
        }
        if self.solvers.is_empty() {
            return Err(Error::InvalidArgument("suite needs at least one solver".into()));
        }
        if self.sub_tests == 0 {
            return Err(Error::InvalidArgument("sub_tests must be at least 1".into()));
        }
        self.overrides.apply(self.n).validate()?;
        TestCaseSpec::new(self.kinds[0], self.n, self.d, 0.0, 0).map(drop)
    }

    /// Sub-test `i` of `m` uses sparsity `0.4·i/(m−1)`, covering 0% to 40%.
    pub fn sparsity(&self, sub_test: usize) -> f64 {
        if self.sub_tests <= 1 {
            0.0
        } else {
            testgen::MAX_SPARSITY * sub_test as f64 / (self.sub_tests - 1) as f64
        }
    }

    pub fn seed(&self, kind: TestKind, sub_test: usize) -> u64 {
        let kind_idx = TestKind::ALL.iter().position(|&k| k == kind).unwrap_or(0) as u64;
        self.base_seed.wrapping_add(100 * kind_idx).wrapping_add(sub_test as u64)
    }

    /// Every test case in the suite, kind-major.
    pub fn specs(&self) -> Result<Vec<(usize, TestCaseSpec)>> {
        let mut out = Vec::with_capacity(self.kinds.len() * self.sub_tests);
        for &kind in &self.kinds {
            for s in 0..self.sub_tests {
                out.push((s, TestCaseSpec::new(kind, self.n, self.d, self.sparsity(s), self.seed(kind, s))?));
            }
        }
        Ok(out)
    }
}

/// One solver run on one test case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub kind: TestKind,
    pub sub_test: usize,
    pub seed: u64,
    pub sparsity: f64,
    pub n: usize,
    pub d: usize,
    pub solver: Algorithm,
    /// `½‖Ax − b‖²` at the returned point.
    pub objective: Option<f64>,
    pub f_star: Option<f64>,
    /// `|f(x) − f*|`
    pub abs_gap: Option<f64>,
    /// `f(x) − f* + 1`, convenient for log-scale plots.
    pub gap_plus_one: Option<f64>,
    pub wall_time_s: f64,
    pub iterations: Option<usize>,
    pub termination: Option<String>,
    pub error: Option<String>,
    pub config: SolverConfig,
}

impl CellRow {
    pub fn spec(&self) -> Result<TestCaseSpec> {
        TestCaseSpec::new(self.kind, self.n, self.d, self.sparsity, self.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub kind: TestKind,
    pub solver: Algorithm,
    pub sub_tests: usize,
    pub failures: usize,
    pub converged: usize,
    pub mean_abs_gap: Option<f64>,
    pub mean_wall_time_s: Option<f64>,
    pub mean_iterations: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema: String,
    pub generator: String,
    pub n: usize,
    pub d: usize,
    pub sub_tests: usize,
    pub parallel: bool,
    pub timing_reliable: bool,
    pub cells: Vec<CellRow>,
    pub aggregates: Vec<Aggregate>,
}

/// A finished solve, kept alongside its row so callers can inspect the
/// iterate and trace.
#[derive(Debug)]
pub struct CellRun {
    pub spec: TestCaseSpec,
    pub solver: Algorithm,
    pub outcome: Result<NnlsResult>,
    pub wall: Duration,
}

/// Solves one instance, timing only the solver call.
pub fn run_cell(instance: &TestInstance, solver: Algorithm, config: &SolverConfig) -> (Result<NnlsResult>, Duration) {
    let start = Instant::now();
    let r = solver.solve(&instance.a, &instance.b, config);
    (r, start.elapsed())
}

/// Runs the suite and returns the report together with every raw result.
pub fn run_suite_detailed(cfg: &SuiteConfig) -> Result<(BenchReport, Vec<CellRun>)> {
    cfg.validate()?;
    let specs = cfg.specs()?;
    let solve_case = |spec: &TestCaseSpec| -> Vec<CellRun> {
        let config = cfg.overrides.apply(spec.n);
        match testgen::generate(spec) {
            Ok(inst) => cfg
                .solvers
                .iter()
                .map(|&solver| {
                    let (outcome, wall) = run_cell(&inst, solver, &config);
                    CellRun { spec: spec.clone(), solver, outcome, wall }
                })
                .collect(),
            Err(e) => {
                let msg = e.to_string();
                cfg.solvers
                    .iter()
                    .map(|&solver| CellRun {
                        spec: spec.clone(),
                        solver,
                        outcome: Err(Error::InvalidArgument(format!("generation failed: {msg}"))),
                        wall: Duration::ZERO,
                    })
                    .collect()
            }
        }
    };

    let per_case: Vec<Vec<CellRun>> = if cfg.parallel {
        let slots: Mutex<Vec<Option<Vec<CellRun>>>> = Mutex::new((0..specs.len()).map(|_| None).collect());
        let next = AtomicUsize::new(0);
        let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(specs.len());
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= specs.len() {
                        break;
                    }
                    let runs = solve_case(&specs[i].1);
                    slots.lock().unwrap()[i] = Some(runs);
                });
            }
        });
        slots.into_inner().unwrap().into_iter().map(|r| r.unwrap_or_default()).collect()
    } else {
        specs.iter().map(|(_, spec)| solve_case(spec)).collect()
    };

    let mut cells = Vec::new();
    for ((sub_test, spec), runs) in specs.iter().zip(&per_case) {
        let config = cfg.overrides.apply(spec.n);
        let candidates: Vec<f64> = runs.iter().filter_map(|r| r.outcome.as_ref().ok().map(NnlsResult::objective)).collect();
        let f_star = testgen::reference_fstar(spec.kind, &candidates).ok();
        for run in runs {
            let objective = run.outcome.as_ref().ok().map(NnlsResult::objective);
            let gap = objective.zip(f_star).map(|(f, s)| f - s);
            cells.push(CellRow {
                kind: spec.kind,
                sub_test: *sub_test,
                seed: spec.seed,
                sparsity: spec.sparsity,
                n: spec.n,
                d: spec.d,
                solver: run.solver,
                objective,
                f_star,
                abs_gap: gap.map(f64::abs),
                gap_plus_one: gap.map(|g| g + 1.0),
                wall_time_s: run.wall.as_secs_f64(),
                iterations: run.outcome.as_ref().ok().map(NnlsResult::iterations),
                termination: run.outcome.as_ref().ok().map(|r| r.termination().to_string()),
                error: run.outcome.as_ref().err().map(ToString::to_string),
                config: config.clone(),
            });
        }
    }

    let aggregates = aggregate(cfg, &cells);
    let report = BenchReport {
        schema: REPORT_SCHEMA.to_string(),
        generator: testgen::GENERATOR_ID.to_string(),
        n: cfg.n,
        d: cfg.d,
        sub_tests: cfg.sub_tests,
        parallel: cfg.parallel,
        timing_reliable: !cfg.parallel,
        cells,
        aggregates,
    };
    Ok((report, per_case.into_iter().flatten().collect()))
}

pub fn run_suite(cfg: &SuiteConfig) -> Result<BenchReport> {
    run_suite_detailed(cfg).map(|(r, _)| r)
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

fn aggregate(cfg: &SuiteConfig, cells: &[CellRow]) -> Vec<Aggregate> {
    let mut out = Vec::new();
    for &kind in &cfg.kinds {
        for &solver in &cfg.solvers {
            let rows: Vec<&CellRow> = cells.iter().filter(|c| c.kind == kind && c.solver == solver).collect();
            let ok = || rows.iter().filter(|c| c.error.is_none());
            out.push(Aggregate {
                kind,
                solver,
                sub_tests: rows.len(),
                failures: rows.len() - ok().count(),
                converged: ok()
                    .filter(|c| matches!(c.termination.as_deref(), Some("EmptyPassiveSet" | "GradientBelowEpsilon")))
                    .count(),
                mean_abs_gap: mean(ok().filter_map(|c| c.abs_gap)),
                mean_wall_time_s: mean(ok().map(|c| c.wall_time_s)),
                mean_iterations: mean(ok().filter_map(|c| c.iterations.map(|i| i as f64))),
            });
        }
    }
    out
}

/// Re-generates and re-solves a report row, returning the final objective.
pub fn replay_row(row: &CellRow) -> Result<f64> {
    let inst = testgen::generate(&row.spec()?)?;
    row.solver.solve(&inst.a, &inst.b, &row.config).map(|r| r.objective())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Shortest round-trip form, with an exponent for very small or large values.
fn num(v: f64) -> String {
    format!("{v:?}")
}

pub const CELLS_CSV_HEADER: &str = "kind,sub_test,seed,sparsity,n,d,solver,objective,f_star,abs_gap,gap_plus_one,\
wall_time_s,iterations,termination,error,epsilon,max_iters,time_cap_s,stall_window";

impl BenchReport {
    /// Flat CSV with one line per cell.
    pub fn cells_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(CELLS_CSV_HEADER);
        s.push('\n');
        for c in &self.cells {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                c.kind,
                c.sub_test,
                c.seed,
                num(c.sparsity),
                c.n,
                c.d,
                c.solver,
                opt(c.objective.map(num)),
                opt(c.f_star.map(num)),
                opt(c.abs_gap.map(num)),
                opt(c.gap_plus_one.map(num)),
                num(c.wall_time_s),
                opt(c.iterations),
                opt(c.termination.as_deref()),
                csv_field(c.error.as_deref().unwrap_or("")),
                num(c.config.epsilon),
                c.config.max_iters,
                opt(c.config.time_cap.map(|t| num(t.as_secs_f64()))),
                c.config.stall_window,
            );
        }
        s
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.cells_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let report: BenchReport = serde_json::from_str(&text)?;
        if report.schema != REPORT_SCHEMA {
            return Err(Error::InvalidArgument(format!("unsupported report schema {:?}", report.schema)));
        }
        Ok(report)
    }
}
