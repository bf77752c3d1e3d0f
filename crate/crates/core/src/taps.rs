//! Closed-form filter-tap update for a fixed shift operator.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::filter::{krylov, FilterTaps};
use crate::graph::{check_nodes, Gso, SignalMatrix};
use crate::lstsq::lstsq;

/// Result of a tap solve. `degenerate` is set when the design matrix
/// `[vec(X), vec(SX), ..., vec(S^K X)]` is rank deficient; the taps are then
/// the minimum-norm least-squares solution.
#[derive(Debug, Clone)]
pub struct TapFit {
    pub taps: FilterTaps,
    pub degenerate: bool,
}

pub(crate) fn solve_taps_raw(
    s: &DMatrix<f64>,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    order: usize,
) -> Result<TapFit> {
    let cols = krylov(s, x, order);
    let rows = x.len();
    let mut design = DMatrix::zeros(rows, order + 1);
    for (k, c) in cols.iter().enumerate() {
        design.column_mut(k).copy_from_slice(c.as_slice());
    }
    let rhs = DVector::from_column_slice(y.as_slice());
    let sol = lstsq(&design, &rhs);
    Ok(TapFit {
        degenerate: !sol.is_full_rank(),
        taps: FilterTaps::new(sol.coef.iter().copied().collect())?,
    })
}

/// Least-squares taps of order `order` for the shift `gso`.
pub fn solve_taps(gso: &Gso, x: &SignalMatrix, y: &SignalMatrix, order: usize) -> Result<TapFit> {
    check_nodes("input signals", gso.n_nodes(), x.n_nodes())?;
    check_nodes("output signals", gso.n_nodes(), y.n_nodes())?;
    check_nodes("sample count", x.n_samples(), y.n_samples())?;
    solve_taps_raw(&gso.expand(), x.values(), y.values(), order)
}
