//! Plain-text vector and matrix files.
//!
//! Vectors hold one value per line. Matrices start with a `rows cols`
//! header line followed by one line per row of whitespace-separated values.
//! Values are written in scientific notation with 17 significant digits,
//! which round-trips every finite `f64` exactly.

use std::fs;
use std::path::Path;

use bregman_cs::Matrix;

use crate::error::CliError;

pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<(), CliError> {
    let mut out = String::with_capacity(v.len() * 24);
    for x in v {
        out.push_str(&format_value(*x));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| CliError::io(path, e))
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_value(path, i + 1, l.trim()))
        .collect()
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<(), CliError> {
    let mut out = String::with_capacity(m.nrows() * m.ncols() * 24 + 16);
    out.push_str(&format!("{} {}\n", m.nrows(), m.ncols()));
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format_value(*v)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| CliError::io(path, e))
}

pub fn read_matrix(path: &Path) -> Result<Matrix, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| CliError::format(path, 1, "missing `rows cols` header"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::format(path, 1, "header must be two integers"))?;
    let [rows, cols] = dims[..] else {
        return Err(CliError::format(path, 1, "header must be two integers"));
    };
    let mut data = Vec::with_capacity(rows * cols);
    for (i, line) in lines {
        for tok in line.split_whitespace() {
            data.push(parse_value(path, i + 1, tok)?);
        }
    }
    if data.len() != rows * cols {
        return Err(CliError::format(
            path,
            0,
            &format!("expected {} values for a {rows}x{cols} matrix, found {}", rows * cols, data.len()),
        ));
    }
    Ok(Matrix::from_row_major(rows, cols, data).expect("length checked above"))
}

fn parse_value(path: &Path, line: usize, tok: &str) -> Result<f64, CliError> {
    tok.parse::<f64>().map_err(|_| CliError::format(path, line, &format!("not a number: '{tok}'")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.txt");
        let v = vec![0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0, -0.0, f64::MIN_POSITIVE, 123456789.12345679];
        write_vector(&path, &v).unwrap();
        let back = read_vector(&path).unwrap();
        for (a, b) in v.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn matrix_round_trip_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        let m = Matrix::from_rows(&[vec![1.5, -2.0, 1e-9], vec![0.0, 3.25, -7.0]]).unwrap();
        write_matrix(&path, &m).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("2 3\n"));
        assert_eq!(read_matrix(&path).unwrap(), m);
    }

    #[test]
    fn malformed_files_report_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        fs::write(&path, "1.0\nabc\n").unwrap();
        let err = read_vector(&path).unwrap_err();
        assert!(err.to_string().contains(":2"), "{err}");
        fs::write(&path, "2 2\n1 2 3\n").unwrap();
        assert!(read_matrix(&path).is_err());
    }
}
