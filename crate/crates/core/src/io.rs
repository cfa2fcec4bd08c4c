//! MatrixMarket `array` files and a plain CSV fallback.
//!
//! Only dense real general matrices are supported. Values are written with
//! Rust's shortest round-trip formatting, so a write followed by a read
//! reproduces every entry bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Vector};

const MM_HEADER: &str = "%%MatrixMarket matrix array real general";

/// Renders a matrix in MatrixMarket array format. `comments` become `%` lines
/// after the banner.
pub fn format_matrix_market(m: &DenseMatrix, comments: &[&str]) -> String {
    let mut s = String::with_capacity(m.rows() * m.cols() * 24 + 128);
    s.push_str(MM_HEADER);
    s.push('\n');
    for c in comments {
        let _ = writeln!(s, "% {c}");
    }
    let _ = writeln!(s, "{} {}", m.rows(), m.cols());
    for v in m.col_major() {
        let _ = writeln!(s, "{v:e}");
    }
    s
}

pub fn parse_matrix_market(text: &str, path: &Path) -> Result<DenseMatrix> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    let (_, banner) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let fields: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(err(1, format!("not a MatrixMarket banner: {banner:?}")));
    }
    if fields[2] != "array" || fields[3] != "real" || fields[4] != "general" {
        return Err(err(
            1,
            format!("unsupported format {} {} {}; need array real general", fields[2], fields[3], fields[4]),
        ));
    }

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_no, size_line) = body.next().ok_or_else(|| err(1, "missing size line".into()))?;
    let dims: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse().map_err(|e| err(size_no + 1, format!("bad size {t:?}: {e}"))))
        .collect::<Result<_>>()?;
    let [rows, cols] = dims[..] else {
        return Err(err(size_no + 1, format!("expected `rows cols`, got {size_line:?}")));
    };

    let mut data = Vec::with_capacity(rows * cols);
    for (no, line) in body {
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|e| err(no + 1, format!("bad value {tok:?}: {e}")))?;
            data.push(v);
        }
    }
    if data.len() != rows * cols {
        return Err(err(
            text.lines().count(),
            format!("expected {} values for {rows}x{cols}, found {}", rows * cols, data.len()),
        ));
    }
    DenseMatrix::from_col_major(rows, cols, data)
}

pub fn write_matrix_market(path: impl AsRef<Path>, m: &DenseMatrix, comments: &[&str]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_matrix_market(m, comments)).map_err(|e| Error::io(path, e))
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_market(&text, path)
}

/// Writes a vector as an `n x 1` MatrixMarket array.
pub fn write_vector_market(path: impl AsRef<Path>, v: &Vector, comments: &[&str]) -> Result<()> {
    let m = DenseMatrix::from_col_major(v.len(), 1, v.to_vec())?;
    write_matrix_market(path, &m, comments)
}

/// Reads a vector stored as a single-column (or single-row) array.
pub fn read_vector_market(path: impl AsRef<Path>) -> Result<Vector> {
    let path = path.as_ref();
    let m = read_matrix_market(path)?;
    if m.cols() != 1 && m.rows() != 1 {
        return Err(Error::dim(format!(
            "{}: expected a vector, found a {}x{} matrix",
            path.display(),
            m.rows(),
            m.cols()
        )));
    }
    Vector::new(m.into_col_major())
}

pub fn format_csv(m: &DenseMatrix) -> String {
    let mut s = String::new();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if j > 0 {
                s.push(',');
            }
            let _ = write!(s, "{}", m.get(i, j));
        }
        s.push('\n');
    }
    s
}

pub fn parse_csv(text: &str, path: &Path) -> Result<DenseMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| {
                t.trim().parse::<f64>().map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    line: no + 1,
                    msg: format!("bad value {t:?}: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    DenseMatrix::from_rows(&rows)
}

pub fn write_csv(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_csv(m)).map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, path)
}

/// Reads a matrix, choosing the format by extension (`.csv` or MatrixMarket).
pub fn read_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => read_csv(path),
        _ => read_matrix_market(path),
    }
}

/// Reads a vector from either format; any `n x 1` or `1 x n` shape is accepted.
pub fn read_vector(path: impl AsRef<Path>) -> Result<Vector> {
    let path = path.as_ref();
    let m = read_matrix(path)?;
    if m.cols() != 1 && m.rows() != 1 {
        return Err(Error::dim(format!(
            "{}: expected a vector, found a {}x{} matrix",
            path.display(),
            m.rows(),
            m.cols()
        )));
    }
    Vector::new(m.into_col_major())
}
