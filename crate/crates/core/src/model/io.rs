//! Text formats for observations and features.
//!
//! Observation files hold `k` whitespace separated 1-based indices and a
//! value per line. Dense features are CSV with one row per instance. Sparse
//! features start with a `%%shape N F` header followed by 1-based
//! `row col value` triplets. Lines starting with `%` are comments.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use super::Observation;
use crate::error::{Error, Result};
use crate::features::{CsrMatrix, FeatureMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureFormat {
    DenseCsv,
    SparseTriplet,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('%'))
}

fn parse_index(path: &Path, line: usize, tok: &str) -> Result<usize> {
    let ix: usize = tok
        .parse()
        .map_err(|_| parse_err(path, line, format!("invalid index `{tok}`")))?;
    if ix == 0 {
        return Err(parse_err(path, line, "indices are 1-based, got 0"));
    }
    Ok(ix - 1)
}

fn parse_value(path: &Path, line: usize, tok: &str) -> Result<f64> {
    tok.parse()
        .map_err(|_| parse_err(path, line, format!("invalid value `{tok}`")))
}

/// Reads observations of a degree-`degree` relation. Indices come back 0-based.
pub fn load_observations(path: impl AsRef<Path>, degree: usize) -> Result<Vec<Observation>> {
    let path = path.as_ref();
    let text = read(path)?;
    let mut out = Vec::new();
    for (line, content) in data_lines(&text) {
        let toks: Vec<&str> = content.split_whitespace().collect();
        if toks.len() != degree + 1 {
            return Err(parse_err(
                path,
                line,
                format!("expected {} columns, found {}", degree + 1, toks.len()),
            ));
        }
        let index = toks[..degree]
            .iter()
            .map(|t| parse_index(path, line, t))
            .collect::<Result<Vec<_>>>()?;
        out.push(Observation::new(
            index,
            parse_value(path, line, toks[degree])?,
        ));
    }
    Ok(out)
}

/// Degree implied by the first data line of an observation file.
pub fn detect_degree(path: impl AsRef<Path>) -> Result<usize> {
    let path = path.as_ref();
    let text = read(path)?;
    let (line, content) = data_lines(&text)
        .next()
        .ok_or_else(|| parse_err(path, 0, "no observations"))?;
    let cols = content.split_whitespace().count();
    if cols < 3 {
        return Err(parse_err(
            path,
            line,
            format!("expected at least 3 columns, found {cols}"),
        ));
    }
    Ok(cols - 1)
}

/// Writes observations with 1-based indices; values round-trip exactly.
pub fn save_observations<'a>(
    path: impl AsRef<Path>,
    observations: impl IntoIterator<Item = &'a Observation>,
) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for obs in observations {
        for ix in &obs.index {
            write!(text, "{} ", ix + 1).unwrap();
        }
        writeln!(text, "{:?}", obs.value).unwrap();
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_features(path: impl AsRef<Path>, format: FeatureFormat) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let text = read(path)?;
    match format {
        FeatureFormat::DenseCsv => parse_dense(path, &text),
        FeatureFormat::SparseTriplet => parse_sparse(path, &text),
    }
}

fn parse_dense(path: &Path, text: &str) -> Result<FeatureMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (line, content) in data_lines(text) {
        let row = content
            .split(',')
            .map(|t| parse_value(path, line, t.trim()))
            .collect::<Result<Vec<_>>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(parse_err(
                    path,
                    line,
                    format!("row has {} columns, expected {w}", row.len()),
                ))
            }
            _ => {}
        }
        rows.push(row);
    }
    let ncols = width.unwrap_or(0);
    Ok(FeatureMatrix::Dense(DMatrix::from_fn(
        rows.len(),
        ncols,
        |i, j| rows[i][j],
    )))
}

fn parse_sparse(path: &Path, text: &str) -> Result<FeatureMatrix> {
    let mut shape = None;
    let mut triplets = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim();
        if let Some(rest) = content.strip_prefix("%%shape") {
            let dims: Vec<&str> = rest.split_whitespace().collect();
            if dims.len() != 2 || shape.is_some() {
                return Err(parse_err(path, line, "malformed `%%shape N F` header"));
            }
            let n = dims[0]
                .parse::<usize>()
                .map_err(|_| parse_err(path, line, "invalid row count"))?;
            let f = dims[1]
                .parse::<usize>()
                .map_err(|_| parse_err(path, line, "invalid column count"))?;
            shape = Some((n, f));
            continue;
        }
        if content.is_empty() || content.starts_with('%') {
            continue;
        }
        let Some((n, f)) = shape else {
            return Err(parse_err(
                path,
                line,
                "missing `%%shape N F` header before data",
            ));
        };
        let toks: Vec<&str> = content.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(parse_err(
                path,
                line,
                format!("expected `row col value`, found {} columns", toks.len()),
            ));
        }
        let r = parse_index(path, line, toks[0])?;
        let c = parse_index(path, line, toks[1])?;
        if r >= n || c >= f {
            return Err(parse_err(
                path,
                line,
                format!(
                    "entry ({}, {}) outside declared shape {n}x{f}",
                    r + 1,
                    c + 1
                ),
            ));
        }
        triplets.push((r, c, parse_value(path, line, toks[2])?));
    }
    let (n, f) = shape.ok_or_else(|| parse_err(path, 0, "missing `%%shape N F` header"))?;
    Ok(FeatureMatrix::Sparse(CsrMatrix::from_triplets(
        n, f, &triplets,
    )?))
}
