//! Polynomial graph filters `H(h, S) = sum_k h_k S^k`.
//!
//! Filters are evaluated by repeated shifting, `z_{k+1} = S z_k`, so `S^k` is
//! never formed.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{check_nodes, Gso, SignalMatrix};

/// Filter coefficients `[h_0, ..., h_K]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FilterTaps(Vec<f64>);

impl FilterTaps {
    pub fn new(taps: Vec<f64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::DegenerateInput("filter needs at least one tap".into()));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFiniteValue("filter taps"));
        }
        Ok(Self(taps))
    }

    /// Order `K`; there are `K + 1` taps.
    pub fn order(&self) -> usize {
        self.0.len() - 1
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for FilterTaps {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<FilterTaps> for Vec<f64> {
    fn from(t: FilterTaps) -> Self {
        t.0
    }
}

/// `acc += scale * z`, in place.
pub(crate) fn add_scaled(acc: &mut DMatrix<f64>, scale: f64, z: &DMatrix<f64>) {
    acc.zip_apply(z, |a, b| *a += scale * b);
}

/// `[X, SX, ..., S^depth X]` on raw matrices.
pub(crate) fn krylov(s: &DMatrix<f64>, x: &DMatrix<f64>, depth: usize) -> Vec<DMatrix<f64>> {
    let mut out = Vec::with_capacity(depth + 1);
    out.push(x.clone());
    for k in 0..depth {
        let next = s * &out[k];
        out.push(next);
    }
    out
}

/// `sum_k taps[k] * S^k X` on raw matrices.
pub(crate) fn filter_output(taps: &[f64], s: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut z = x.clone();
    let mut acc = x * taps[0];
    for &h in &taps[1..] {
        z = s * &z;
        add_scaled(&mut acc, h, &z);
    }
    acc
}

/// Returns `[X, SX, ..., S^depth X]`.
pub fn shift_krylov(gso: &Gso, x: &SignalMatrix, depth: usize) -> Result<Vec<SignalMatrix>> {
    check_nodes("shift_krylov", gso.n_nodes(), x.n_nodes())?;
    krylov(&gso.expand(), x.values(), depth)
        .into_iter()
        .map(SignalMatrix::new)
        .collect()
}

/// Applies `H(h, S)` to every column of `x`.
pub fn apply_filter(taps: &FilterTaps, gso: &Gso, x: &SignalMatrix) -> Result<SignalMatrix> {
    check_nodes("apply_filter", gso.n_nodes(), x.n_nodes())?;
    let y = filter_output(taps.as_slice(), &gso.expand(), x.values());
    SignalMatrix::new(y).map_err(|_| Error::NonFiniteValue("apply_filter"))
}
