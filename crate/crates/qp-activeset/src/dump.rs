use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::QpError;
use crate::problem::QPProblem;

const HEADER: &str = "qp-dump/1";

/// Serializes a problem to the plain-text `qp-dump/1` format: a header,
/// the dimensions and constant, then the Hessian, gradient, constraint
/// matrix, and bounds as whitespace-separated decimal floats. The float
/// formatting round-trips exactly, so a parsed dump reproduces the
/// original problem bit for bit.
pub fn dump(qp: &QPProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "dim {}", qp.dim());
    let _ = writeln!(out, "rows {}", qp.num_constraints());
    let _ = writeln!(out, "constant {}", qp.constant());
    let _ = writeln!(out, "phi");
    push_matrix(&mut out, qp.phi());
    let _ = writeln!(out, "psi");
    push_row(&mut out, qp.psi().iter().copied());
    let _ = writeln!(out, "g");
    push_matrix(&mut out, qp.constraints());
    let _ = writeln!(out, "bounds");
    push_row(&mut out, qp.bounds().iter().copied());
    out
}

pub fn parse(text: &str) -> Result<QPProblem, QpError> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| QpError::Parse("empty dump".into()))?;
    if header != HEADER {
        return Err(QpError::Parse(format!(
            "unsupported dump header {header:?}, expected {HEADER:?}"
        )));
    }
    let dim = tagged_usize(lines.next(), "dim")?;
    let rows = tagged_usize(lines.next(), "rows")?;
    let constant = tagged_f64(lines.next(), "constant")?;

    expect_tag(lines.next(), "phi")?;
    let phi = read_matrix(&mut lines, dim, dim, "phi")?;
    expect_tag(lines.next(), "psi")?;
    let psi = DVector::from_vec(read_floats(lines.next(), dim, "psi")?);
    expect_tag(lines.next(), "g")?;
    let g = read_matrix(&mut lines, rows, dim, "g")?;
    expect_tag(lines.next(), "bounds")?;
    let bounds = DVector::from_vec(read_floats(lines.next(), rows, "bounds")?);

    QPProblem::new(phi, psi, g, bounds, constant)
}

pub fn write_dump(qp: &QPProblem, path: impl AsRef<Path>) -> Result<(), QpError> {
    std::fs::write(path, dump(qp))?;
    Ok(())
}

pub fn read_dump(path: impl AsRef<Path>) -> Result<QPProblem, QpError> {
    parse(&std::fs::read_to_string(path)?)
}

fn push_matrix(out: &mut String, m: &DMatrix<f64>) {
    for i in 0..m.nrows() {
        push_row(out, (0..m.ncols()).map(|j| m[(i, j)]));
    }
}

fn push_row(out: &mut String, values: impl Iterator<Item = f64>) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(' ');
        }
        let _ = write!(out, "{v}");
        first = false;
    }
    out.push('\n');
}

fn expect_tag(line: Option<&str>, tag: &str) -> Result<(), QpError> {
    match line {
        Some(l) if l == tag => Ok(()),
        Some(l) => Err(QpError::Parse(format!("expected section {tag:?}, found {l:?}"))),
        None => Err(QpError::Parse(format!("missing section {tag:?}"))),
    }
}

fn tagged_usize(line: Option<&str>, tag: &str) -> Result<usize, QpError> {
    let line = line.ok_or_else(|| QpError::Parse(format!("missing {tag} line")))?;
    let value = line
        .strip_prefix(tag)
        .ok_or_else(|| QpError::Parse(format!("expected {tag:?} line, found {line:?}")))?;
    value
        .trim()
        .parse()
        .map_err(|e| QpError::Parse(format!("bad {tag} value {value:?}: {e}")))
}

fn tagged_f64(line: Option<&str>, tag: &str) -> Result<f64, QpError> {
    let line = line.ok_or_else(|| QpError::Parse(format!("missing {tag} line")))?;
    let value = line
        .strip_prefix(tag)
        .ok_or_else(|| QpError::Parse(format!("expected {tag:?} line, found {line:?}")))?;
    value
        .trim()
        .parse()
        .map_err(|e| QpError::Parse(format!("bad {tag} value {value:?}: {e}")))
}

fn read_floats(line: Option<&str>, expected: usize, section: &str) -> Result<Vec<f64>, QpError> {
    let line = line.ok_or_else(|| QpError::Parse(format!("truncated {section} section")))?;
    let values: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
    let values =
        values.map_err(|e| QpError::Parse(format!("bad float in {section}: {e}")))?;
    if values.len() != expected {
        return Err(QpError::Parse(format!(
            "{section} row has {} entries, expected {expected}",
            values.len()
        )));
    }
    Ok(values)
}

fn read_matrix<'a>(
    lines: &mut impl Iterator<Item = &'a str>,
    rows: usize,
    cols: usize,
    section: &str,
) -> Result<DMatrix<f64>, QpError> {
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        data.extend(read_floats(lines.next(), cols, section)?);
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}
