//! Plain-text matrix format.
//!
//! Line 1 holds the dimension `d`; each of the next `d` lines holds `d`
//! whitespace-separated entries written `re,im`. Floats use the shortest
//! decimal form that parses back to the same bits.

use std::fmt::Write as _;
use std::path::Path;

use super::matrix::{ComplexMatrix, C64};
use crate::error::{Error, Result};

fn fmt_f64(x: f64) -> String {
    // -0.0 prints as "-0"; normalise so zero entries read "0,0"
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x}")
}

pub fn write_matrix_string(m: &ComplexMatrix) -> String {
    let d = m.dim();
    let mut out = String::new();
    writeln!(out, "{d}").unwrap();
    for i in 0..d {
        let row: Vec<String> = (0..d)
            .map(|j| {
                let z = m.get(i, j);
                format!("{},{}", fmt_f64(z.re), fmt_f64(z.im))
            })
            .collect();
        writeln!(out, "{}", row.join(" ")).unwrap();
    }
    out
}

pub fn parse_matrix_str(text: &str) -> Result<ComplexMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty input".into(),
    })?;
    let d: usize = header.trim().parse().map_err(|_| Error::Parse {
        line: 1,
        message: format!("bad dimension {:?}", header.trim()),
    })?;
    if d == 0 {
        return Err(Error::Parse {
            line: 1,
            message: "dimension must be positive".into(),
        });
    }
    let mut entries = Vec::with_capacity(d * d);
    let mut rows = 0;
    for (idx, line) in lines {
        let lineno = idx + 1;
        if rows == d {
            return Err(Error::Parse {
                line: lineno,
                message: "trailing data after matrix".into(),
            });
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != d {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected {d} entries, found {}", fields.len()),
            });
        }
        for field in fields {
            entries.push(parse_entry(field).ok_or_else(|| Error::Parse {
                line: lineno,
                message: format!("bad complex entry {field:?}"),
            })?);
        }
        rows += 1;
    }
    if rows != d {
        return Err(Error::Parse {
            line: rows + 2,
            message: format!("expected {d} rows, found {rows}"),
        });
    }
    ComplexMatrix::new(d, entries)
}

fn parse_entry(field: &str) -> Option<C64> {
    let (re, im) = field.split_once(',')?;
    Some(C64::new(re.parse().ok()?, im.parse().ok()?))
}

pub fn write_matrix(path: impl AsRef<Path>, m: &ComplexMatrix) -> Result<()> {
    std::fs::write(path, write_matrix_string(m))?;
    Ok(())
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<ComplexMatrix> {
    parse_matrix_str(&std::fs::read_to_string(path)?)
}
