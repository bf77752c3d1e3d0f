//! Graph supports, structural graph shift operators and signal matrices.
//!
//! A [`Gso`] is stored as one nonnegative weight per support edge. Dense
//! matrices are derived views produced by [`Gso::expand`]; [`contract`] maps a
//! structural matrix back to edge weights.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when reading edge weights back out of a dense matrix.
pub const STRUCTURAL_TOL: f64 = 1e-10;

/// Undirected edge set known a priori. Edges are `(i, j)` with `i < j`,
/// sorted lexicographically and free of duplicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportSet {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
}

impl SupportSet {
    /// Builds a support from arbitrary node pairs. Pairs are reordered so that
    /// `i < j` and sorted; self-loops, duplicates and out-of-range indices are
    /// rejected.
    pub fn new(n_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::InvalidSupport("graph must have at least one node".into()));
        }
        let mut out = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidSupport(format!("self-loop at node {a}")));
            }
            if a >= n_nodes || b >= n_nodes {
                return Err(Error::InvalidSupport(format!(
                    "edge ({a}, {b}) out of range for {n_nodes} nodes"
                )));
            }
            out.push((a.min(b), a.max(b)));
        }
        out.sort_unstable();
        if let Some(w) = out.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidSupport(format!(
                "duplicate edge ({}, {})",
                w[0].0, w[0].1
            )));
        }
        Ok(Self { n_nodes, edges: out })
    }

    /// Support with no edges.
    pub fn empty(n_nodes: usize) -> Result<Self> {
        Self::new(n_nodes, std::iter::empty())
    }

    /// Every pair of distinct nodes.
    pub fn complete(n_nodes: usize) -> Result<Self> {
        let pairs = (0..n_nodes).flat_map(|i| (i + 1..n_nodes).map(move |j| (i, j)));
        Self::new(n_nodes, pairs)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.edges.binary_search(&(i.min(j), i.max(j))).is_ok()
    }

    /// Whether every node is reachable from node 0.
    pub fn is_connected(&self) -> bool {
        let n = self.n_nodes;
        let mut adj = vec![Vec::new(); n];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == n
    }
}

/// Which structural family a GSO belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GsoKind {
    /// Weighted adjacency matrix.
    #[serde(rename = "W")]
    Adjacency,
    /// Combinatorial Laplacian.
    #[serde(rename = "L")]
    Laplacian,
}

impl GsoKind {
    pub fn label(self) -> &'static str {
        match self {
            GsoKind::Adjacency => "W",
            GsoKind::Laplacian => "L",
        }
    }
}

impl fmt::Display for GsoKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for GsoKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "W" => Ok(GsoKind::Adjacency),
            "L" => Ok(GsoKind::Laplacian),
            other => Err(Error::InvalidConfig(format!("unknown GSO kind {other:?}"))),
        }
    }
}

/// A structural graph shift operator: kind, support and one nonnegative
/// weight per support edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Gso {
    kind: GsoKind,
    support: Arc<SupportSet>,
    weights: Vec<f64>,
}

impl Gso {
    pub fn new(kind: GsoKind, support: Arc<SupportSet>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != support.n_edges() {
            return Err(Error::DimensionMismatch {
                context: "edge weights",
                expected: support.n_edges(),
                actual: weights.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
            return Err(Error::StructuralViolation(format!("non-finite edge weight {w}")));
        }
        if let Some(w) = weights.iter().find(|&&w| w < 0.0) {
            return Err(Error::StructuralViolation(format!("negative edge weight {w}")));
        }
        Ok(Self {
            kind,
            support,
            weights,
        })
    }

    /// All edge weights equal to one: the binary adjacency or the
    /// combinatorial Laplacian of the support graph.
    pub fn unweighted(kind: GsoKind, support: Arc<SupportSet>) -> Self {
        let weights = vec![1.0; support.n_edges()];
        Self {
            kind,
            support,
            weights,
        }
    }

    /// Same kind and support, new weights.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        Self::new(self.kind, Arc::clone(&self.support), weights)
    }

    pub fn kind(&self) -> GsoKind {
        self.kind
    }

    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    pub fn support_arc(&self) -> &Arc<SupportSet> {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_nodes(&self) -> usize {
        self.support.n_nodes()
    }

    /// Dense symmetric matrix view.
    pub fn expand(&self) -> DMatrix<f64> {
        let n = self.n_nodes();
        let mut s = DMatrix::zeros(n, n);
        for (&(i, j), &w) in self.support.edges().iter().zip(&self.weights) {
            match self.kind {
                GsoKind::Adjacency => {
                    s[(i, j)] = w;
                    s[(j, i)] = w;
                }
                GsoKind::Laplacian => {
                    s[(i, j)] = -w;
                    s[(j, i)] = -w;
                    s[(i, i)] += w;
                    s[(j, j)] += w;
                }
            }
        }
        s
    }
}

/// Reads edge weights out of a structural matrix.
///
/// The Laplacian diagonal is not read; it is implied by the off-diagonal
/// entries. Weights in `[-1e-10, 0)` are clamped to zero.
pub fn contract(matrix: &DMatrix<f64>, kind: GsoKind, support: Arc<SupportSet>) -> Result<Gso> {
    let n = support.n_nodes();
    if matrix.nrows() != n || matrix.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "contract",
            expected: n,
            actual: matrix.nrows().max(matrix.ncols()),
        });
    }
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (matrix[(i, j)], matrix[(j, i)]);
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::NonFiniteValue("contract"));
            }
            if (a - b).abs() > STRUCTURAL_TOL {
                return Err(Error::StructuralViolation(format!(
                    "matrix not symmetric at ({i}, {j}): {a} vs {b}"
                )));
            }
            if !support.contains(i, j) && a.abs() > STRUCTURAL_TOL {
                return Err(Error::StructuralViolation(format!(
                    "off-support entry ({i}, {j}) = {a}"
                )));
            }
        }
    }
    let mut weights = Vec::with_capacity(support.n_edges());
    for &(i, j) in support.edges() {
        let v = 0.5 * (matrix[(i, j)] + matrix[(j, i)]);
        let w = match kind {
            GsoKind::Adjacency => v,
            GsoKind::Laplacian => -v,
        };
        if w < -STRUCTURAL_TOL {
            return Err(Error::StructuralViolation(format!(
                "edge ({i}, {j}) would have negative weight {w} for kind {kind}"
            )));
        }
        weights.push(w.max(0.0));
    }
    let gso = Gso::new(kind, support, weights)?;
    if kind == GsoKind::Laplacian {
        let expanded = gso.expand();
        for i in 0..n {
            if (expanded[(i, i)] - matrix[(i, i)]).abs() > STRUCTURAL_TOL * (1.0 + matrix[(i, i)].abs()) {
                return Err(Error::StructuralViolation(format!(
                    "Laplacian diagonal at {i} is {} but edge weights imply {}",
                    matrix[(i, i)],
                    expanded[(i, i)]
                )));
            }
        }
    } else if let Some(i) = (0..n).find(|&i| matrix[(i, i)].abs() > STRUCTURAL_TOL) {
        return Err(Error::StructuralViolation(format!(
            "adjacency diagonal at {i} is {}",
            matrix[(i, i)]
        )));
    }
    Ok(gso)
}

/// True iff every off-diagonal entry larger than `tol` in magnitude lies on a
/// support edge.
pub fn validate_support_subset(matrix: &DMatrix<f64>, support: &SupportSet, tol: f64) -> bool {
    let n = matrix.nrows();
    (0..n).all(|i| {
        (0..matrix.ncols()).all(|j| i == j || matrix[(i, j)].abs() <= tol || support.contains(i, j))
    })
}

/// Graph signals stacked column-wise: `n_nodes` rows, one column per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalMatrix(DMatrix<f64>);

impl SignalMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::DegenerateInput("signal matrix must be non-empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue("signal matrix"));
        }
        Ok(Self(values))
    }

    pub fn n_nodes(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.0.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

pub(crate) fn check_nodes(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        });
    }
    Ok(())
}
