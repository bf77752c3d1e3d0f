//! Joint least-squares cost `f(h, S) = ||Y - sum_k h_k S^k X||_F^2` and its
//! derivatives with respect to the shift operator.
//!
//! Three derivative views are exposed:
//!
//! * [`partial_derivative`]: the unstructured derivative `D = df/dS`, treating
//!   every entry of `S` as independent.
//! * [`grad_matrix`]: the gradient that accounts for symmetry,
//!   `D + D^T - diag(D)`.
//! * [`grad_edges`]: `df/dw_e` through the edge-weight parametrization, which
//!   is what drives the SCP step.
//!
//! `D` is evaluated from the residual `R`, as
//! `-2 sum_k h_k sum_{r<k} (S^r R)(S^{k-1-r} X)^T`. This differs from the trace
//! expansion in [`trace_expansion_derivative`] only by an antisymmetric part,
//! so both give the same structured gradient; the residual form has no
//! cancellation between large terms near a zero-residual point.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::filter::{add_scaled, filter_output, krylov, FilterTaps};
use crate::graph::{check_nodes, Gso, GsoKind, SignalMatrix, SupportSet};

fn check_dims(gso: &Gso, x: &SignalMatrix, y: &SignalMatrix) -> Result<()> {
    check_nodes("input signals", gso.n_nodes(), x.n_nodes())?;
    check_nodes("output signals", gso.n_nodes(), y.n_nodes())?;
    check_nodes("sample count", x.n_samples(), y.n_samples())
}

pub(crate) fn residual_raw(
    taps: &[f64],
    s: &DMatrix<f64>,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
) -> DMatrix<f64> {
    y - filter_output(taps, s, x)
}

/// `X` and `Y` reduced to at most `N` columns.
///
/// With the thin factorization `X^T = Q R`, `H X (I - Q Q^T) = 0` for every
/// `H`, so `||Y - H X||^2 = ||Y Q - H R^T||^2 + ||Y - Y Q Q^T||^2`. The second
/// term is `offset`; costs, derivatives in `S` and tap fits can all be taken on
/// the reduced pair.
pub(crate) struct Reduced {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub offset: f64,
}

pub(crate) fn reduce(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Reduced {
    if x.ncols() <= x.nrows() {
        return Reduced {
            x: x.clone(),
            y: y.clone(),
            offset: 0.0,
        };
    }
    let qr = x.transpose().qr();
    let q = qr.q();
    let yq = y * &q;
    let offset = (y - &yq * q.transpose()).norm_squared();
    Reduced {
        x: qr.r().transpose(),
        y: yq,
        offset,
    }
}

/// Squared Frobenius norm of the filtering residual.
pub fn cost(taps: &FilterTaps, gso: &Gso, x: &SignalMatrix, y: &SignalMatrix) -> Result<f64> {
    check_dims(gso, x, y)?;
    let c = residual_raw(taps.as_slice(), &gso.expand(), x.values(), y.values()).norm_squared();
    if c.is_finite() {
        Ok(c)
    } else {
        Err(Error::NonFiniteValue("cost"))
    }
}

/// Unstructured derivative `df/dS` on raw matrices, from the residual.
pub(crate) fn partial_derivative_raw(
    taps: &[f64],
    s: &DMatrix<f64>,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
) -> DMatrix<f64> {
    let n = s.nrows();
    let order = taps.len() - 1;
    let mut d = DMatrix::zeros(n, n);
    if order == 0 {
        return d;
    }
    let px = krylov(s, x, order);
    let mut r = y.clone();
    for (p, &h) in px.iter().zip(taps) {
        add_scaled(&mut r, -h, p);
    }
    let pr = krylov(s, &r, order - 1);
    for b in 0..order {
        let mut c = DMatrix::zeros(n, x.ncols());
        for (a, ra) in pr.iter().enumerate().take(order - b) {
            add_scaled(&mut c, taps[a + b + 1], ra);
        }
        d -= 2.0 * (c * px[b].transpose());
    }
    d
}

/// Unstructured derivative `D = df/dS`.
pub fn partial_derivative(
    taps: &FilterTaps,
    gso: &Gso,
    x: &SignalMatrix,
    y: &SignalMatrix,
) -> Result<DMatrix<f64>> {
    check_dims(gso, x, y)?;
    finite(
        partial_derivative_raw(taps.as_slice(), &gso.expand(), x.values(), y.values()),
        "partial_derivative",
    )
}

/// Unstructured derivative from the trace expansion of the cost,
///
/// `-2 sum_{k>=1} h_k sum_{r<k} (S^r X Y^T S^{k-r-1})^T
///  + sum_{k1,k2>=0} h_k1 h_k2 sum_{r<k1+k2} (S^r X X^T S^{k1+k2-r-1})^T`.
///
/// Equal to [`partial_derivative`] up to an antisymmetric term.
pub fn trace_expansion_derivative(
    taps: &FilterTaps,
    gso: &Gso,
    x: &SignalMatrix,
    y: &SignalMatrix,
) -> Result<DMatrix<f64>> {
    check_dims(gso, x, y)?;
    let h = taps.as_slice();
    let order = taps.order();
    let n = gso.n_nodes();
    let mut d = DMatrix::zeros(n, n);
    if order == 0 {
        return Ok(d);
    }
    let s = gso.expand();
    let (x, y) = (x.values(), y.values());
    let px = krylov(&s, x, 2 * order - 1);
    let py = krylov(&s, y, order - 1);

    // (S^r X Y^T S^{k-r-1})^T = (S^{k-r-1} Y)(S^r X)^T
    for k in 1..=order {
        for r in 0..k {
            d -= 2.0 * h[k] * (&py[k - r - 1] * px[r].transpose());
        }
    }
    // pair-product coefficients c_m = sum_{k1+k2=m} h_k1 h_k2
    let mut c = vec![0.0; 2 * order + 1];
    for (k1, &a) in h.iter().enumerate() {
        for (k2, &b) in h.iter().enumerate() {
            c[k1 + k2] += a * b;
        }
    }
    for (m, &cm) in c.iter().enumerate().skip(1) {
        for r in 0..m {
            d += cm * (&px[m - r - 1] * px[r].transpose());
        }
    }
    finite(d, "trace_expansion_derivative")
}

/// `D + D^T - diag(D)`, the gradient over symmetric matrices.
pub(crate) fn structured(d: &DMatrix<f64>) -> DMatrix<f64> {
    let n = d.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            d[(i, i)]
        } else {
            d[(i, j)] + d[(j, i)]
        }
    })
}

/// Gradient of the cost over symmetric shift operators.
pub fn grad_matrix(
    taps: &FilterTaps,
    gso: &Gso,
    x: &SignalMatrix,
    y: &SignalMatrix,
) -> Result<DMatrix<f64>> {
    Ok(structured(&partial_derivative(taps, gso, x, y)?))
}

/// Chain rule from `D = df/dS` to `df/dw_e` for the expansion of `kind`.
pub(crate) fn edge_gradient(kind: GsoKind, support: &SupportSet, d: &DMatrix<f64>) -> Vec<f64> {
    support
        .edges()
        .iter()
        .map(|&(i, j)| match kind {
            GsoKind::Adjacency => d[(i, j)] + d[(j, i)],
            GsoKind::Laplacian => d[(i, i)] + d[(j, j)] - d[(i, j)] - d[(j, i)],
        })
        .collect()
}

/// Derivative of the cost with respect to each support edge weight.
pub fn grad_edges(
    taps: &FilterTaps,
    gso: &Gso,
    x: &SignalMatrix,
    y: &SignalMatrix,
) -> Result<Vec<f64>> {
    let d = partial_derivative(taps, gso, x, y)?;
    Ok(edge_gradient(gso.kind(), gso.support(), &d))
}

fn finite(d: DMatrix<f64>, context: &'static str) -> Result<DMatrix<f64>> {
    if d.iter().all(|v| v.is_finite()) {
        Ok(d)
    } else {
        Err(Error::NonFiniteValue(context))
    }
}
