use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand};
use serde::Serialize;

use antilop::bench::{Algorithm, SolverOverrides, SuiteConfig};
use antilop::error::Error;
use antilop::nnls::NnlsResult;
use antilop::nqp::{SolverConfig, Termination};
use antilop::testgen::{self, TestCaseSpec, TestInstance, TestKind};

const TIME_CAP_ENV: &str = "ANTILOP_TIME_CAP_SECS";

#[derive(Parser)]
#[command(name = "antilop", version, about = "Anti-lopsided NNLS solver and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random test instance
    Gen {
        #[arg(long)]
        kind: TestKind,
        #[arg(long)]
        n: usize,
        /// Rows of A; defaults to 1.5n
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, default_value_t = 0.0, value_parser = parse_sparsity)]
        sparsity: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Solve an instance directory with one algorithm
    Solve {
        #[arg(long, default_value = "antilop")]
        algo: Algorithm,
        #[arg(short, long)]
        input: PathBuf,
        #[command(flatten)]
        limits: Limits,
        /// Per-iteration trace CSV
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Result JSON; printed to stdout when omitted
        #[arg(long)]
        result: Option<PathBuf>,
    },
    /// Run every solver on a generated suite and write a report
    Suite {
        /// Comma-separated kinds
        #[arg(long, value_delimiter = ',', default_value = "T1,T2,T3,T4,T5,T6")]
        kinds: Vec<TestKind>,
        #[arg(long, default_value_t = antilop::bench::DEFAULT_N)]
        n: usize,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, default_value_t = antilop::bench::DEFAULT_SUB_TESTS)]
        sub_tests: usize,
        /// Base seed; each cell derives its own from it
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "antilop,fast,accer,anti-accer")]
        solvers: Vec<Algorithm>,
        #[command(flatten)]
        limits: Limits,
        /// JSON report
        #[arg(short, long)]
        out: PathBuf,
        /// Flat per-cell CSV
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Run cells concurrently (timings become unreliable)
        #[arg(long)]
        parallel: bool,
    },
}

#[derive(clap::Args)]
struct Limits {
    /// Threshold on the squared projected gradient norm (default 1e-12·n)
    #[arg(long)]
    epsilon: Option<f64>,
    /// Iteration cap (default 5n)
    #[arg(long)]
    max_iters: Option<usize>,
    /// Wall-clock cap in seconds; 0 disables it
    #[arg(long, env = TIME_CAP_ENV)]
    time_cap: Option<f64>,
    #[arg(long)]
    stall_window: Option<usize>,
}

impl Limits {
    fn overrides(&self) -> Result<SolverOverrides, Error> {
        let time_cap = match self.time_cap {
            None => None,
            Some(0.0) => Some(None),
            Some(s) if s.is_finite() && s > 0.0 => Some(Some(Duration::from_secs_f64(s))),
            Some(s) => return Err(Error::InvalidArgument(format!("invalid time cap {s}"))),
        };
        Ok(SolverOverrides {
            epsilon: self.epsilon,
            max_iters: self.max_iters,
            time_cap,
            stall_window: self.stall_window,
        })
    }
}

fn parse_sparsity(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=testgen::MAX_SPARSITY).contains(&v) {
        Ok(v)
    } else {
        Err(format!("sparsity must lie in [0, {}]", testgen::MAX_SPARSITY))
    }
}

fn default_d(n: usize) -> usize {
    (3 * n).div_ceil(2)
}

#[derive(Serialize)]
struct SolveReport<'a> {
    algo: Algorithm,
    instance: &'a Path,
    kind: TestKind,
    seed: u64,
    objective: f64,
    residual_sq: f64,
    iterations: usize,
    termination: Termination,
    dropped_columns: &'a [usize],
    wall_time_s: f64,
    config: &'a SolverConfig,
    x: &'a [f64],
}

fn write_json(path: Option<&Path>, value: &impl Serialize) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn solve(algo: Algorithm, input: &Path, limits: &Limits, trace: Option<&Path>, result: Option<&Path>) -> Result<(), Error> {
    let inst = TestInstance::load(input)?;
    let config = limits.overrides()?.apply(inst.spec.n);
    let start = Instant::now();
    let outcome = algo.solve(&inst.a, &inst.b, &config);
    let wall = start.elapsed();
    let r: NnlsResult = match outcome {
        Ok(r) => r,
        Err(Error::NumericFailure { iteration, reason, partial }) => {
            if let Some(path) = trace {
                partial.save_trace_csv(path)?;
            }
            return Err(Error::NumericFailure { iteration, reason, partial });
        }
        Err(e) => return Err(e),
    };
    if let Some(path) = trace {
        r.inner.save_trace_csv(path)?;
    }
    let report = SolveReport {
        algo,
        instance: input,
        kind: inst.spec.kind,
        seed: inst.spec.seed,
        objective: r.objective(),
        residual_sq: r.residual_sq,
        iterations: r.iterations(),
        termination: r.termination(),
        dropped_columns: &r.dropped,
        wall_time_s: wall.as_secs_f64(),
        config: &config,
        x: &r.x,
    };
    write_json(result, &report)?;
    if result.is_some() {
        eprintln!(
            "{algo}: f = {:.6e}, {} iterations, {}",
            r.objective(),
            r.iterations(),
            r.termination()
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.cmd {
        Command::Gen { kind, n, d, sparsity, seed, out } => {
            let spec = TestCaseSpec::new(kind, n, d.unwrap_or_else(|| default_d(n)), sparsity, seed)?;
            testgen::generate(&spec)?.save(&out)
        }
        Command::Solve { algo, input, limits, trace, result } => solve(algo, &input, &limits, trace.as_deref(), result.as_deref()),
        Command::Suite { kinds, n, d, sub_tests, seed, solvers, limits, out, csv, parallel } => {
            let cfg = SuiteConfig {
                kinds,
                n,
                d: d.unwrap_or_else(|| default_d(n)),
                sub_tests,
                base_seed: seed,
                solvers,
                overrides: limits.overrides()?,
                parallel,
            };
            let report = antilop::bench::run_suite(&cfg)?;
            report.save_json(&out)?;
            if let Some(csv) = csv {
                report.save_csv(csv)?;
            }
            for a in &report.aggregates {
                eprintln!(
                    "{} {:<10} mean|f-f*| = {:>10} mean time = {:>8} converged {}/{}",
                    a.kind,
                    a.solver,
                    a.mean_abs_gap.map_or("-".into(), |v| format!("{v:.3e}")),
                    a.mean_wall_time_s.map_or("-".into(), |v| format!("{v:.3}s")),
                    a.converged,
                    a.sub_tests
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::NumericFailure { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
