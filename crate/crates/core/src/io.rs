//! CSV point files.
//!
//! Coordinate files have a header `id,x1,...,xd` (an optional trailing
//! `weight` column is honoured) and one point per row. Matrix files have a
//! header of `n` column labels followed by `n` rows of `n` distances, row-major.
//! Numbers are parsed with Rust's decimal `f64` parser, which rounds
//! correctly, so loading is bit-exact.

use std::io::Read;
use std::path::Path;

use crate::error::LoadError;
use crate::metric::{MetricInstance, Weight};

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum InputKind {
    Coords,
    Matrix,
}

pub fn load_path(path: &Path, kind: InputKind) -> Result<MetricInstance, LoadError> {
    let file =
        std::fs::File::open(path).map_err(|source| LoadError::Io { path: path.display().to_string(), source })?;
    load_reader(file, kind)
}

pub fn load_reader<R: Read>(reader: R, kind: InputKind) -> Result<MetricInstance, LoadError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| LoadError::Parse { line: 1, msg: e.to_string() })?.clone();
    match kind {
        InputKind::Coords => load_coords(&mut rdr, &header),
        InputKind::Matrix => load_matrix(&mut rdr, &header),
    }
}

fn parse_f64(s: &str, line: usize) -> Result<f64, LoadError> {
    let v: f64 = s.parse().map_err(|_| LoadError::Parse { line, msg: format!("not a number: {s:?}") })?;
    if !v.is_finite() {
        return Err(LoadError::Parse { line, msg: format!("non-finite value {s:?}") });
    }
    Ok(v)
}

fn line_of(rec: &csv::StringRecord, fallback: usize) -> usize {
    rec.position().map_or(fallback, |p| p.line() as usize)
}

fn load_coords<R: Read>(rdr: &mut csv::Reader<R>, header: &csv::StringRecord) -> Result<MetricInstance, LoadError> {
    if header.len() < 2 || &header[0] != "id" {
        return Err(LoadError::Parse { line: 1, msg: "expected header id,x1,...,xd".into() });
    }
    let weighted = header.iter().next_back() == Some("weight");
    let dim = header.len() - 1 - usize::from(weighted);
    if dim == 0 {
        return Err(LoadError::Parse { line: 1, msg: "no coordinate columns".into() });
    }
    let mut coords = Vec::new();
    let mut weights: Vec<Weight> = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| LoadError::Parse { line: row + 2, msg: e.to_string() })?;
        let line = line_of(&rec, row + 2);
        if rec.len() != header.len() {
            return Err(LoadError::Parse {
                line,
                msg: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        rec[0].parse::<u64>().map_err(|_| LoadError::Parse { line, msg: format!("bad id {:?}", &rec[0]) })?;
        for f in rec.iter().skip(1).take(dim) {
            coords.push(parse_f64(f, line)?);
        }
        let w = if weighted {
            let w: Weight = rec[dim + 1]
                .parse()
                .map_err(|_| LoadError::Parse { line, msg: format!("bad weight {:?}", &rec[dim + 1]) })?;
            if w == 0 {
                return Err(LoadError::Parse { line, msg: "weight must be >= 1".into() });
            }
            w
        } else {
            1
        };
        weights.push(w);
    }
    Ok(MetricInstance::euclidean(dim, coords)?.with_weights(weights)?)
}

fn load_matrix<R: Read>(rdr: &mut csv::Reader<R>, header: &csv::StringRecord) -> Result<MetricInstance, LoadError> {
    let n = header.len();
    let mut entries = Vec::with_capacity(n * n);
    let mut rows = 0;
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| LoadError::Parse { line: row + 2, msg: e.to_string() })?;
        let line = line_of(&rec, row + 2);
        if rec.len() != n {
            return Err(LoadError::Parse { line, msg: format!("expected {n} fields, found {}", rec.len()) });
        }
        for f in rec.iter() {
            entries.push(parse_f64(f, line)?);
        }
        rows += 1;
    }
    if rows != n {
        return Err(LoadError::Parse { line: rows + 2, msg: format!("expected {n} rows, found {rows}") });
    }
    Ok(MetricInstance::from_matrix(n, entries)?)
}
