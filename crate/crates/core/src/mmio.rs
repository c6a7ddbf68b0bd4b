//! Matrix Market reading and writing.
//!
//! Sparse matrices use `coordinate real general` with 1-based indices, dense
//! matrices use `array real general` in column-major order. Values are
//! written with 17 significant digits so a round trip is exact.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

const COORD_HEADER: &str = "%%MatrixMarket matrix coordinate real general";
const ARRAY_HEADER: &str = "%%MatrixMarket matrix array real general";

fn write_comments(out: &mut impl Write, comment: &str) -> io::Result<()> {
    for line in comment.lines() {
        writeln!(out, "% {line}")?;
    }
    Ok(())
}

pub fn write_sparse(out: &mut impl Write, m: &SparseMatrix, comment: &str) -> io::Result<()> {
    writeln!(out, "{COORD_HEADER}")?;
    write_comments(out, comment)?;
    writeln!(out, "{} {} {}", m.n_rows(), m.n_cols(), m.nnz())?;
    for (i, j, v) in m.triplets() {
        writeln!(out, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

/// Dense matrix in coordinate form, keeping every nonzero entry.
pub fn write_dense_coordinate(
    out: &mut impl Write,
    m: &DMatrix<f64>,
    comment: &str,
) -> io::Result<()> {
    write_sparse(out, &SparseMatrix::from_dense(m), comment)
}

pub fn write_dense_array(out: &mut impl Write, m: &DMatrix<f64>, comment: &str) -> io::Result<()> {
    writeln!(out, "{ARRAY_HEADER}")?;
    write_comments(out, comment)?;
    writeln!(out, "{} {}", m.nrows(), m.ncols())?;
    // nalgebra storage is column-major, matching the array format
    for v in m.iter() {
        writeln!(out, "{v:.16e}")?;
    }
    Ok(())
}

pub fn save_sparse(path: &Path, m: &SparseMatrix, comment: &str) -> Result<()> {
    let mut buf = Vec::new();
    write_sparse(&mut buf, m, comment)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn save_dense_array(path: &Path, m: &DMatrix<f64>, comment: &str) -> Result<()> {
    let mut buf = Vec::new();
    write_dense_array(&mut buf, m, comment)?;
    fs::write(path, buf)?;
    Ok(())
}

/// Data lines with their 1-based line numbers, skipping comments and blanks.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .skip(1)
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('%'))
}

fn parse_field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Parse { line, msg: format!("expected {what}") })
}

fn header_line(text: &str) -> Result<&str> {
    text.lines().next().map(str::trim).ok_or(Error::Parse { line: 1, msg: "empty file".into() })
}

pub fn read_sparse(text: &str) -> Result<SparseMatrix> {
    let header = header_line(text)?;
    if !header.eq_ignore_ascii_case(COORD_HEADER) {
        return Err(Error::Parse { line: 1, msg: format!("unsupported header `{header}`") });
    }
    let mut lines = data_lines(text);
    let (line, size) =
        lines.next().ok_or(Error::Parse { line: 1, msg: "missing size line".into() })?;
    let mut toks = size.split_whitespace();
    let n_rows: usize = parse_field(toks.next(), line, "row count")?;
    let n_cols: usize = parse_field(toks.next(), line, "column count")?;
    let nnz: usize = parse_field(toks.next(), line, "entry count")?;

    let mut triplets = Vec::with_capacity(nnz);
    for (line, l) in lines {
        let mut toks = l.split_whitespace();
        let i: usize = parse_field(toks.next(), line, "row index")?;
        let j: usize = parse_field(toks.next(), line, "column index")?;
        let v: f64 = parse_field(toks.next(), line, "value")?;
        if i == 0 || j == 0 || i > n_rows || j > n_cols {
            return Err(Error::Parse { line, msg: format!("index ({i}, {j}) out of range") });
        }
        triplets.push((i - 1, j - 1, v));
    }
    if triplets.len() != nnz {
        return Err(Error::Parse {
            line: 0,
            msg: format!("expected {nnz} entries, found {}", triplets.len()),
        });
    }
    SparseMatrix::from_triplets(n_rows, n_cols, triplets)
}

pub fn read_dense_array(text: &str) -> Result<DMatrix<f64>> {
    let header = header_line(text)?;
    if !header.eq_ignore_ascii_case(ARRAY_HEADER) {
        return Err(Error::Parse { line: 1, msg: format!("unsupported header `{header}`") });
    }
    let mut lines = data_lines(text);
    let (line, size) =
        lines.next().ok_or(Error::Parse { line: 1, msg: "missing size line".into() })?;
    let mut toks = size.split_whitespace();
    let n_rows: usize = parse_field(toks.next(), line, "row count")?;
    let n_cols: usize = parse_field(toks.next(), line, "column count")?;
    let values = lines
        .map(|(line, l)| parse_field(Some(l), line, "value"))
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != n_rows * n_cols {
        return Err(Error::Parse {
            line: 0,
            msg: format!("expected {} values, found {}", n_rows * n_cols, values.len()),
        });
    }
    Ok(DMatrix::from_column_slice(n_rows, n_cols, &values))
}

pub fn load_sparse(path: &Path) -> Result<SparseMatrix> {
    read_sparse(&fs::read_to_string(path)?)
}
