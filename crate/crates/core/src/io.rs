//! File formats: Matrix Market coordinate files for tridiagonal and
//! bidiagonal matrices, JSON spectral data and states, and trace CSV.

use std::io::{Read, Write};
use std::path::Path;

use num::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Trace, TraceRecord};
use crate::matrix::{BidiagonalMatrix, TridiagonalMatrix};
use crate::scalar::{format_rational, parse_rational, Rational};
use crate::solutions::StateDocument;
use crate::spectral::{ShiftSchedule, SpectralData, SpectralDocument};

#[derive(Debug, Clone, PartialEq)]
pub struct MarketMatrix {
    pub rows: usize,
    pub cols: usize,
    /// 0-based `(row, col, value)`, symmetric files already mirrored.
    pub entries: Vec<(usize, usize, Rational)>,
}

pub fn parse_matrix_market(text: &str) -> Result<MarketMatrix> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty Matrix Market file".into()))?;
    let fields: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(Error::Parse(format!("bad Matrix Market header {header:?}")));
    }
    if fields[2] != "coordinate" {
        return Err(Error::Parse(format!("only coordinate format is supported, got {}", fields[2])));
    }
    if fields[3] != "real" && fields[3] != "integer" {
        return Err(Error::Parse(format!("only real or integer fields are supported, got {}", fields[3])));
    }
    let symmetric = match fields[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(Error::Parse(format!("unsupported symmetry {other:?}"))),
    };

    let mut data = lines.filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('%'));
    let size = data.next().ok_or_else(|| Error::Parse("missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|v| v.parse().map_err(|_| Error::Parse(format!("bad size line {size:?}"))))
        .collect::<Result<_>>()?;
    let [rows, cols, nnz] = dims[..] else {
        return Err(Error::Parse(format!("size line needs 3 integers, got {size:?}")));
    };

    let mut entries = Vec::with_capacity(nnz);
    for line in data {
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [i, j, v] = parts[..] else {
            return Err(Error::Parse(format!("bad entry line {line:?}")));
        };
        let index = |x: &str, bound: usize| -> Result<usize> {
            match x.parse::<usize>() {
                Ok(n) if n >= 1 && n <= bound => Ok(n - 1),
                _ => Err(Error::Parse(format!("index {x:?} out of range in {line:?}"))),
            }
        };
        let (i, j) = (index(i, rows)?, index(j, cols)?);
        let v = parse_rational(v)?;
        if symmetric && i != j {
            entries.push((j, i, v.clone()));
        }
        entries.push((i, j, v));
    }
    let declared = if symmetric {
        entries.len() - entries.iter().filter(|(i, j, _)| i != j).count() / 2
    } else {
        entries.len()
    };
    if declared != nnz {
        return Err(Error::Parse(format!("header declares {nnz} entries, file has {declared}")));
    }
    Ok(MarketMatrix { rows, cols, entries })
}

impl MarketMatrix {
    fn square(&self) -> Result<usize> {
        if self.rows != self.cols || self.rows == 0 {
            return Err(Error::Dimension(format!("need a nonempty square matrix, got {}x{}", self.rows, self.cols)));
        }
        Ok(self.rows)
    }

    pub fn to_tridiagonal(&self) -> Result<TridiagonalMatrix<Rational>> {
        let n = self.square()?;
        let mut diag = vec![Rational::zero(); n];
        let mut sub = vec![Rational::zero(); n - 1];
        let mut sup = vec![Rational::zero(); n - 1];
        for (i, j, v) in &self.entries {
            let slot = match (*i as isize) - (*j as isize) {
                0 => &mut diag[*i],
                1 => &mut sub[*j],
                -1 => &mut sup[*i],
                _ => {
                    return Err(Error::Parse(format!(
                        "entry ({}, {}) lies off the three central diagonals",
                        i + 1,
                        j + 1
                    )))
                }
            };
            *slot += v;
        }
        TridiagonalMatrix::new(diag, sub, sup)
    }

    pub fn to_bidiagonal(&self) -> Result<BidiagonalMatrix<Rational>> {
        let n = self.square()?;
        let mut diag = vec![Rational::zero(); n];
        let mut sup = vec![Rational::zero(); n - 1];
        for (i, j, v) in &self.entries {
            let slot = match (*j as isize) - (*i as isize) {
                0 => &mut diag[*i],
                1 => &mut sup[*i],
                _ => {
                    return Err(Error::Parse(format!(
                        "entry ({}, {}) is not on the diagonal or superdiagonal",
                        i + 1,
                        j + 1
                    )))
                }
            };
            *slot += v;
        }
        BidiagonalMatrix::new(diag, sup)
    }
}

fn write_market(entries: &[(usize, usize, &Rational)], n: usize) -> String {
    let nonzero: Vec<_> = entries.iter().filter(|(_, _, v)| !v.is_zero()).collect();
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    out.push_str(&format!("{n} {n} {}\n", nonzero.len()));
    for (i, j, v) in nonzero {
        out.push_str(&format!("{} {} {}\n", i + 1, j + 1, format_rational(v)));
    }
    out
}

/// Matrix Market text for a tridiagonal matrix; zero entries are omitted.
/// Rationals are written as `p/q`, which this crate's reader accepts.
pub fn tridiagonal_to_market(a: &TridiagonalMatrix<Rational>) -> String {
    let n = a.n();
    let mut entries = Vec::new();
    for i in 0..n {
        entries.push((i, i, &a.diag[i]));
        if i + 1 < n {
            entries.push((i + 1, i, &a.sub[i]));
            entries.push((i, i + 1, &a.sup[i]));
        }
    }
    write_market(&entries, n)
}

pub fn bidiagonal_to_market(b: &BidiagonalMatrix<Rational>) -> String {
    let n = b.n();
    let mut entries = Vec::new();
    for i in 0..n {
        entries.push((i, i, &b.diag[i]));
        if i + 1 < n {
            entries.push((i, i + 1, &b.sup[i]));
        }
    }
    write_market(&entries, n)
}

pub fn parse_spectral(text: &str) -> Result<(SpectralData, ShiftSchedule)> {
    let doc: SpectralDocument = serde_json::from_str(text)?;
    doc.into_parts()
}

pub fn parse_state(text: &str) -> Result<StateDocument> {
    Ok(serde_json::from_str(text)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    iter: usize,
    kind: crate::lattice::TraceKind,
    index: usize,
    value: f64,
}

pub fn write_trace<W: Write>(trace: &Trace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in &trace.records {
        w.serialize(TraceRow { iter: r.iter, kind: r.kind, index: r.index, value: r.value })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace<R: Read>(input: R) -> Result<Trace> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["iter", "kind", "index", "value"] {
        return Err(Error::Parse(format!("trace header must be iter,kind,index,value, got {headers:?}")));
    }
    let mut records = Vec::new();
    for row in reader.deserialize() {
        let row: TraceRow = row?;
        records.push(TraceRecord { iter: row.iter, kind: row.kind, index: row.index, value: row.value });
    }
    Ok(Trace { records })
}

pub fn write_trace_file(trace: &Trace, path: &Path) -> Result<()> {
    write_trace(trace, std::fs::File::create(path)?)
}

pub fn read_trace_file(path: &Path) -> Result<Trace> {
    read_trace(std::fs::File::open(path)?)
}
