//! Reproducible random NNLS instances for the six test-case families.
//!
//! | kind | sign of `A`, `x*` | column lengths |
//! |------|-------------------|----------------|
//! | T1   | `+`               | same (SAM)     |
//! | T2   | `±`               | random (RAN)   |
//! | T3   | `+`               | various (VAR)  |
//! | T4   | `±`               | same (SAM)     |
//! | T5   | `+`               | random (RAN)   |
//! | T6   | `±`               | various (VAR)  |
//!
//! Randomness comes from ChaCha8 seeded with `seed`; column `k` draws from
//! stream `k` and `x*` from stream `n`, so each column is independent of how
//! many columns precede it. Within a stream the order of draws is: `d` entry
//! uniforms, the sparsity index sample, then the column length uniform.
//! A column that ends up entirely zero is redrawn from the continuation of its
//! stream.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::linalg::{self, DenseMatrix, Vector};

/// Identifier written into instance files.
pub const GENERATOR_ID: &str = "chacha8-stream-per-column/v1";

pub const MAX_SPARSITY: f64 = 0.4;

const MAX_COLUMN_RETRIES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TestKind {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LengthPattern {
    Same,
    Random,
    Various,
}

impl TestKind {
    pub const ALL: [TestKind; 6] = [
        TestKind::T1,
        TestKind::T2,
        TestKind::T3,
        TestKind::T4,
        TestKind::T5,
        TestKind::T6,
    ];

    /// `A` and `x*` non-negative.
    pub fn is_nonnegative(self) -> bool {
        matches!(self, TestKind::T1 | TestKind::T3 | TestKind::T5)
    }

    pub fn lengths(self) -> LengthPattern {
        match self {
            TestKind::T1 | TestKind::T4 => LengthPattern::Same,
            TestKind::T2 | TestKind::T5 => LengthPattern::Random,
            TestKind::T3 | TestKind::T6 => LengthPattern::Various,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TestKind::T1 => "T1",
            TestKind::T2 => "T2",
            TestKind::T3 => "T3",
            TestKind::T4 => "T4",
            TestKind::T5 => "T5",
            TestKind::T6 => "T6",
        }
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TestKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown test kind {s:?} (expected T1..T6)")))
    }
}

/// Column-length laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthLaws {
    /// RAN: length uniform on `[lo, hi)`.
    pub random_range: (f64, f64),
    /// VAR: length `10^v`, `v` uniform on `[lo, hi)`.
    pub various_log10_range: (f64, f64),
}

impl Default for LengthLaws {
    fn default() -> Self {
        Self {
            random_range: (0.5, 2.0),
            various_log10_range: (-2.0, 2.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCaseSpec {
    pub kind: TestKind,
    pub n: usize,
    pub d: usize,
    pub sparsity: f64,
    pub seed: u64,
    #[serde(default)]
    pub lengths: LengthLaws,
}

impl TestCaseSpec {
    pub fn new(kind: TestKind, n: usize, d: usize, sparsity: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            kind,
            n,
            d,
            sparsity,
            seed,
            lengths: LengthLaws::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidArgument(format!("n must be at least 2, got {}", self.n)));
        }
        if self.d < self.n {
            return Err(Error::InvalidArgument(format!("d ({}) must be at least n ({})", self.d, self.n)));
        }
        if !(0.0..=MAX_SPARSITY).contains(&self.sparsity) {
            return Err(Error::InvalidArgument(format!(
                "sparsity {} outside [0, {MAX_SPARSITY}]",
                self.sparsity
            )));
        }
        let (lo, hi) = self.lengths.random_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad random length range ({lo}, {hi})")));
        }
        let (lo, hi) = self.lengths.various_log10_range;
        if !(hi >= lo && lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad log10 length range ({lo}, {hi})")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestInstance {
    pub spec: TestCaseSpec,
    pub a: DenseMatrix,
    pub x_star: Vector,
    pub b: Vector,
    /// Known optimal value of `½‖Ax − b‖²` (zero for non-negative kinds).
    pub f_star_known: Option<f64>,
}

impl TestInstance {
    pub fn kind(&self) -> TestKind {
        self.spec.kind
    }
}

/// Number of entries zeroed out of `len` at the given sparsity.
pub fn zero_count(len: usize, sparsity: f64) -> usize {
    ((sparsity * len as f64).round() as usize).min(len)
}

fn draw_entries(rng: &mut ChaCha8Rng, len: usize, nonnegative: bool, sparsity: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len)
        .map(|_| {
            let u: f64 = rng.random();
            if nonnegative {
                u
            } else {
                2.0 * u - 1.0
            }
        })
        .collect();
    for i in index::sample(rng, len, zero_count(len, sparsity)) {
        v[i] = 0.0;
    }
    v
}

pub fn generate(spec: &TestCaseSpec) -> Result<TestInstance> {
    spec.validate()?;
    let (n, d) = (spec.n, spec.d);
    let nonneg = spec.kind.is_nonnegative();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut data = Vec::with_capacity(n * d);

    for k in 0..n {
        rng.set_stream(k as u64);
        rng.set_word_pos(0);
        let mut col = draw_entries(&mut rng, d, nonneg, spec.sparsity);
        let mut tries = 0;
        while linalg::norm2(&col) == 0.0 {
            tries += 1;
            if tries > MAX_COLUMN_RETRIES {
                return Err(Error::InvalidArgument(format!("column {k} stayed zero after {MAX_COLUMN_RETRIES} redraws")));
            }
            col = draw_entries(&mut rng, d, nonneg, spec.sparsity);
        }
        let u: f64 = rng.random();
        let length = match spec.kind.lengths() {
            LengthPattern::Same => 1.0,
            LengthPattern::Random => {
                let (lo, hi) = spec.lengths.random_range;
                lo + (hi - lo) * u
            }
            LengthPattern::Various => {
                let (lo, hi) = spec.lengths.various_log10_range;
                10f64.powf(lo + (hi - lo) * u)
            }
        };
        let factor = length / linalg::norm2(&col);
        data.extend(col.into_iter().map(|v| v * factor));
    }

    rng.set_stream(n as u64);
    rng.set_word_pos(0);
    let mut x_star = draw_entries(&mut rng, n, nonneg, spec.sparsity);
    if nonneg {
        x_star.iter_mut().for_each(|v| *v = v.max(0.0));
    }

    let a = DenseMatrix::from_col_major(d, n, data)?;
    let x_star = Vector::new(x_star)?;
    let b = linalg::matvec(&a, &x_star)?;
    Ok(TestInstance {
        spec: spec.clone(),
        a,
        x_star,
        b,
        f_star_known: nonneg.then_some(0.0),
    })
}

/// Reference optimum: zero for non-negative kinds, otherwise the best
/// objective any solver reached.
pub fn reference_fstar(kind: TestKind, candidate_objectives: &[f64]) -> Result<f64> {
    if kind.is_nonnegative() {
        return Ok(0.0);
    }
    candidate_objectives
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .reduce(f64::min)
        .ok_or_else(|| Error::InvalidArgument(format!("no finite candidate objectives for mixed kind {kind}")))
}

/// Contents of `meta.json` in an instance directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub kind: TestKind,
    pub n: usize,
    pub d: usize,
    pub sparsity: f64,
    pub seed: u64,
    pub generator: String,
    pub f_star_known: Option<f64>,
    #[serde(default)]
    pub lengths: LengthLaws,
}

pub const A_FILE: &str = "A.mtx";
pub const B_FILE: &str = "b.mtx";
pub const XSTAR_FILE: &str = "xstar.mtx";
pub const META_FILE: &str = "meta.json";

impl TestInstance {
    pub fn meta(&self) -> InstanceMeta {
        InstanceMeta {
            kind: self.spec.kind,
            n: self.spec.n,
            d: self.spec.d,
            sparsity: self.spec.sparsity,
            seed: self.spec.seed,
            generator: GENERATOR_ID.to_string(),
            f_star_known: self.f_star_known,
            lengths: self.spec.lengths,
        }
    }

    /// Writes `A.mtx`, `b.mtx`, `xstar.mtx` and `meta.json` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let header = format!(
            "generator: {GENERATOR_ID} kind: {} seed: {} sparsity: {}",
            self.spec.kind, self.spec.seed, self.spec.sparsity
        );
        io::write_matrix_market(dir.join(A_FILE), &self.a, &[&header])?;
        io::write_vector_market(dir.join(B_FILE), &self.b, &[&header])?;
        io::write_vector_market(dir.join(XSTAR_FILE), &self.x_star, &[&header])?;
        let meta = serde_json::to_string_pretty(&self.meta())? + "\n";
        let path = dir.join(META_FILE);
        fs::write(&path, meta).map_err(|e| Error::io(path, e))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join(META_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let meta: InstanceMeta = serde_json::from_str(&text)?;
        let a = io::read_matrix_market(dir.join(A_FILE))?;
        let b = io::read_vector_market(dir.join(B_FILE))?;
        let x_star = io::read_vector_market(dir.join(XSTAR_FILE))?;
        if a.rows() != meta.d || a.cols() != meta.n || b.len() != meta.d || x_star.len() != meta.n {
            return Err(Error::dim(format!(
                "{}: files do not match meta dimensions n={} d={}",
                dir.display(),
                meta.n,
                meta.d
            )));
        }
        Ok(TestInstance {
            spec: TestCaseSpec {
                kind: meta.kind,
                n: meta.n,
                d: meta.d,
                sparsity: meta.sparsity,
                seed: meta.seed,
                lengths: meta.lengths,
            },
            a,
            x_star,
            b,
            f_star_known: meta.f_star_known,
        })
    }
}
