//! File formats: edge-list supports, signal CSVs and GSO JSON.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Gso, GsoKind, SignalMatrix, SupportSet};

/// Floats are written with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn parse_err(path: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        msg: msg.into(),
    }
}

/// Parses an edge list: first line `N`, then one `i j` pair per line.
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_support(text: &str, origin: &str) -> Result<SupportSet> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (first_no, first) = lines
        .next()
        .ok_or_else(|| parse_err(origin, 1, "missing node count"))?;
    let n: usize = first
        .parse()
        .map_err(|_| parse_err(origin, first_no, format!("bad node count {first:?}")))?;
    let mut edges = Vec::new();
    for (no, line) in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(parse_err(origin, no, format!("expected `i j`, got {line:?}")));
        }
        let i: usize = parts[0]
            .parse()
            .map_err(|_| parse_err(origin, no, format!("bad node index {:?}", parts[0])))?;
        let j: usize = parts[1]
            .parse()
            .map_err(|_| parse_err(origin, no, format!("bad node index {:?}", parts[1])))?;
        if i >= j {
            return Err(parse_err(origin, no, format!("edge ({i}, {j}) must have i < j")));
        }
        if j >= n {
            return Err(parse_err(origin, no, format!("node {j} out of range for N={n}")));
        }
        edges.push((i, j));
    }
    SupportSet::new(n, edges).map_err(|e| parse_err(origin, 0, e.to_string()))
}

pub fn format_support(support: &SupportSet) -> String {
    let mut out = format!("{}\n", support.n_nodes());
    for &(i, j) in support.edges() {
        let _ = writeln!(out, "{i} {j}");
    }
    out
}

pub fn read_support(path: &Path) -> Result<SupportSet> {
    parse_support(&fs::read_to_string(path)?, &path.display().to_string())
}

pub fn write_support(path: &Path, support: &SupportSet) -> Result<()> {
    Ok(fs::write(path, format_support(support))?)
}

/// Parses a signal CSV: header `# N=<n> T=<t>`, then one row per node.
pub fn parse_signal_csv(text: &str, origin: &str) -> Result<SignalMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(origin, 1, "empty file"))?;
    let (n, t) = parse_header(header).ok_or_else(|| {
        parse_err(origin, 1, format!("expected header `# N=<n> T=<t>`, got {header:?}"))
    })?;
    let mut values = DMatrix::zeros(n, t);
    let mut row = 0;
    for (no, line) in lines {
        if line.is_empty() {
            continue;
        }
        if row == n {
            return Err(parse_err(origin, no, format!("expected N={n} rows, found more")));
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != t {
            return Err(parse_err(
                origin,
                no,
                format!("expected T={t} columns, got {}", fields.len()),
            ));
        }
        for (col, f) in fields.iter().enumerate() {
            let v: f64 = f
                .parse()
                .map_err(|_| parse_err(origin, no, format!("bad number {f:?} in column {}", col + 1)))?;
            if !v.is_finite() {
                return Err(parse_err(origin, no, format!("non-finite value in column {}", col + 1)));
            }
            values[(row, col)] = v;
        }
        row += 1;
    }
    if row != n {
        return Err(parse_err(origin, row + 1, format!("expected N={n} rows, got {row}")));
    }
    SignalMatrix::new(values)
}

fn parse_header(header: &str) -> Option<(usize, usize)> {
    let rest = header.strip_prefix('#')?;
    let mut n = None;
    let mut t = None;
    for tok in rest.split_whitespace() {
        if let Some(v) = tok.strip_prefix("N=") {
            n = v.parse().ok();
        } else if let Some(v) = tok.strip_prefix("T=") {
            t = v.parse().ok();
        }
    }
    match (n?, t?) {
        (0, _) | (_, 0) => None,
        dims => Some(dims),
    }
}

pub fn format_signal_csv(signal: &SignalMatrix) -> String {
    let m = signal.values();
    let mut out = format!("# N={} T={}\n", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_f64(m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn read_signal_csv(path: &Path) -> Result<SignalMatrix> {
    parse_signal_csv(&fs::read_to_string(path)?, &path.display().to_string())
}

pub fn write_signal_csv(path: &Path, signal: &SignalMatrix) -> Result<()> {
    Ok(fs::write(path, format_signal_csv(signal))?)
}

/// JSON form of a [`Gso`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GsoFile {
    pub kind: GsoKind,
    pub n_nodes: usize,
    pub edges: Vec<[usize; 2]>,
    pub weights: Vec<f64>,
}

impl From<&Gso> for GsoFile {
    fn from(g: &Gso) -> Self {
        Self {
            kind: g.kind(),
            n_nodes: g.n_nodes(),
            edges: g.support().edges().iter().map(|&(i, j)| [i, j]).collect(),
            weights: g.weights().to_vec(),
        }
    }
}

impl GsoFile {
    /// Edges must already be in canonical sorted order so weights stay
    /// aligned with them.
    pub fn into_gso(self) -> Result<Gso> {
        let pairs: Vec<(usize, usize)> = self.edges.iter().map(|e| (e[0], e[1])).collect();
        let support = SupportSet::new(self.n_nodes, pairs.iter().copied())?;
        if support.edges() != pairs.as_slice() {
            return Err(Error::InvalidSupport(
                "edges must be listed as sorted (i, j) pairs with i < j".into(),
            ));
        }
        Gso::new(self.kind, Arc::new(support), self.weights)
    }
}

pub fn read_gso(path: &Path) -> Result<Gso> {
    let file: GsoFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    file.into_gso()
}

pub fn write_gso(path: &Path, gso: &Gso) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&GsoFile::from(gso))?;
    text.push('\n');
    Ok(fs::write(path, text)?)
}
