//! Sequential convex programming over the edge weights of the shift operator,
//! with the filter taps held fixed.
//!
//! Each iteration linearizes the cost around the current weights, minimizes
//! the linear model over a box trust region intersected with `w >= 0`, and
//! then line-searches along the segment to that box vertex. Every iterate is a
//! convex combination of feasible points, and `alpha = 0` is always a
//! candidate, so the cost never increases.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{add_scaled, filter_output, FilterTaps};
use crate::graph::{check_nodes, Gso, SignalMatrix};
use crate::objective::{edge_gradient, partial_derivative_raw, reduce, Reduced};

/// Uniform trust-region breadth `rho(l) = max(rho_min, rho0 * gamma^l)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrustSchedule {
    pub rho0: f64,
    pub gamma: f64,
    pub rho_min: f64,
}

impl Default for TrustSchedule {
    fn default() -> Self {
        Self {
            rho0: 1.0,
            gamma: 0.9,
            rho_min: 1e-3,
        }
    }
}

impl TrustSchedule {
    pub fn radius(&self, l: usize) -> f64 {
        let decayed = self.rho0 * self.gamma.powi(l.min(i32::MAX as usize) as i32);
        decayed.max(self.rho_min)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho0 > 0.0 && self.rho0.is_finite()) {
            return Err(Error::InvalidConfig(format!("rho0 must be positive, got {}", self.rho0)));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidConfig(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        if !(self.rho_min > 0.0 && self.rho_min.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "rho_min must be positive, got {}",
                self.rho_min
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScpConfig {
    pub trust: TrustSchedule,
    pub max_iters: usize,
    /// Stop once the relative cost decrease of one iteration drops below this.
    pub eps: f64,
    pub line_search_grid: usize,
    pub line_search_refines: usize,
}

impl Default for ScpConfig {
    fn default() -> Self {
        Self {
            trust: TrustSchedule::default(),
            max_iters: 200,
            eps: 1e-6,
            line_search_grid: 33,
            line_search_refines: 20,
        }
    }
}

impl ScpConfig {
    pub fn validate(&self) -> Result<()> {
        self.trust.validate()?;
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("scp.max_iters must be positive".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidConfig(format!("scp.eps must be positive, got {}", self.eps)));
        }
        if self.line_search_grid < 2 {
            return Err(Error::InvalidConfig("line_search_grid must be at least 2".into()));
        }
        Ok(())
    }
}

/// One SCP iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScpRecord {
    pub iter: usize,
    pub cost: f64,
    pub alpha: f64,
    pub rho: f64,
    /// `max_e |w_e^[l] - w_e^[l-1]|`
    pub step_inf: f64,
}

#[derive(Debug, Clone)]
pub struct ScpOutcome {
    pub gso: Gso,
    pub records: Vec<ScpRecord>,
}

/// Minimizer of the linearized cost over `|w_e - w_e^cur| <= rho`, `w_e >= 0`.
///
/// The model is separable in edge coordinates, so each weight moves to the
/// lower end of its interval when its gradient is positive, the upper end when
/// negative, and stays put when it is exactly zero.
pub fn surrogate_minimize(current: &Gso, edge_grad: &[f64], rho: f64) -> Result<Gso> {
    if edge_grad.len() != current.weights().len() {
        return Err(Error::DimensionMismatch {
            context: "edge gradient",
            expected: current.weights().len(),
            actual: edge_grad.len(),
        });
    }
    let weights = current
        .weights()
        .iter()
        .zip(edge_grad)
        .map(|(&w, &g)| {
            if g > 0.0 {
                (w - rho).max(0.0)
            } else if g < 0.0 {
                w + rho
            } else {
                w
            }
        })
        .collect();
    current.with_weights(weights)
}

/// The cost along `S + alpha * Delta` as a polynomial in `alpha`.
///
/// `sum_k h_k (S + alpha Delta)^k X = sum_j alpha^j M_j`, and the `M_j` are
/// built once, so each evaluation costs `O(K N T)`.
struct SegmentCost<'a> {
    coeffs: Vec<DMatrix<f64>>,
    y: &'a DMatrix<f64>,
}

impl<'a> SegmentCost<'a> {
    fn new(
        taps: &[f64],
        s: &DMatrix<f64>,
        delta: &DMatrix<f64>,
        x: &DMatrix<f64>,
        y: &'a DMatrix<f64>,
    ) -> Self {
        // level[j] holds the alpha^j coefficient of (S + alpha Delta)^k X
        let mut level = vec![x.clone()];
        let mut coeffs = vec![x * taps[0]];
        for &h in &taps[1..] {
            let mut next = Vec::with_capacity(level.len() + 1);
            for j in 0..=level.len() {
                let mut z = if j < level.len() {
                    s * &level[j]
                } else {
                    DMatrix::zeros(x.nrows(), x.ncols())
                };
                if j > 0 {
                    z += delta * &level[j - 1];
                }
                next.push(z);
            }
            coeffs.push(DMatrix::zeros(x.nrows(), x.ncols()));
            for (c, z) in coeffs.iter_mut().zip(&next) {
                add_scaled(c, h, z);
            }
            level = next;
        }
        Self { coeffs, y }
    }

    fn eval(&self, alpha: f64) -> f64 {
        let ys = self.y.as_slice();
        let cs: Vec<&[f64]> = self.coeffs.iter().map(|c| c.as_slice()).collect();
        let mut total = 0.0;
        for (i, &yi) in ys.iter().enumerate() {
            let mut v = 0.0;
            for c in cs.iter().rev() {
                v = v * alpha + c[i];
            }
            let r = yi - v;
            total += r * r;
        }
        if total.is_finite() {
            total
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchResult {
    pub alpha: f64,
    pub cost: f64,
}

fn search_segment(seg: &SegmentCost<'_>, grid: usize, refines: usize, moving: bool) -> Result<LineSearchResult> {
    let f0 = seg.eval(0.0);
    if !f0.is_finite() {
        return Err(Error::NonFiniteValue("line search at alpha = 0"));
    }
    let mut best = LineSearchResult { alpha: 0.0, cost: f0 };
    if !moving {
        return Ok(best);
    }
    let step = 1.0 / (grid - 1) as f64;
    let mut best_idx = 0;
    for i in 1..grid {
        let alpha = i as f64 * step;
        let c = seg.eval(alpha);
        if c < best.cost {
            best = LineSearchResult { alpha, cost: c };
            best_idx = i;
        }
    }

    // golden-section refinement on the bracket around the best grid point
    let mut lo = best_idx.saturating_sub(1) as f64 * step;
    let mut hi = ((best_idx + 1).min(grid - 1)) as f64 * step;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let mut fa = seg.eval(a);
    let mut fb = seg.eval(b);
    let consider = |alpha: f64, c: f64, best: &mut LineSearchResult| {
        if c < best.cost || (c == best.cost && alpha < best.alpha) {
            *best = LineSearchResult { alpha, cost: c };
        }
    };
    consider(a, fa, &mut best);
    consider(b, fb, &mut best);
    for _ in 0..refines {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = seg.eval(a);
            consider(a, fa, &mut best);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = seg.eval(b);
            consider(b, fb, &mut best);
        }
    }
    Ok(best)
}

/// Best step `alpha` in `[0, 1]` along `current -> hat`: a uniform grid of
/// `grid` points (including both ends) followed by `refines` golden-section
/// steps around the best grid point. Ties go to the smaller `alpha`.
pub fn line_search(
    taps: &FilterTaps,
    current: &Gso,
    hat: &Gso,
    x: &SignalMatrix,
    y: &SignalMatrix,
    grid: usize,
    refines: usize,
) -> Result<LineSearchResult> {
    if current.kind() != hat.kind() || current.support() != hat.support() {
        return Err(Error::SupportMismatch);
    }
    if grid < 2 {
        return Err(Error::InvalidConfig("line search grid must have at least 2 points".into()));
    }
    check_nodes("input signals", current.n_nodes(), x.n_nodes())?;
    check_nodes("output signals", current.n_nodes(), y.n_nodes())?;
    check_nodes("sample count", x.n_samples(), y.n_samples())?;
    let s = current.expand();
    let delta = hat.expand() - &s;
    let moving = current.weights() != hat.weights();
    let data = reduce(x.values(), y.values());
    let seg = SegmentCost::new(taps.as_slice(), &s, &delta, &data.x, &data.y);
    let best = search_segment(&seg, grid, refines, moving)?;
    Ok(LineSearchResult {
        alpha: best.alpha,
        cost: best.cost + data.offset,
    })
}

/// Minimizes the cost over the edge weights for fixed `taps`, starting at
/// `init`. Returns the final operator and one record per iteration.
pub fn scp_solve(
    taps: &FilterTaps,
    init: &Gso,
    x: &SignalMatrix,
    y: &SignalMatrix,
    config: &ScpConfig,
) -> Result<ScpOutcome> {
    config.validate()?;
    check_nodes("input signals", init.n_nodes(), x.n_nodes())?;
    check_nodes("output signals", init.n_nodes(), y.n_nodes())?;
    check_nodes("sample count", x.n_samples(), y.n_samples())?;
    scp_reduced(taps, init, &reduce(x.values(), y.values()), config)
}

/// [`scp_solve`] on reduced data; recorded costs include the offset.
pub(crate) fn scp_reduced(taps: &FilterTaps, init: &Gso, data: &Reduced, config: &ScpConfig) -> Result<ScpOutcome> {
    let h = taps.as_slice();
    let (xv, yv) = (&data.x, &data.y);

    let mut gso = init.clone();
    let mut s = gso.expand();
    let mut f = (yv - filter_output(h, &s, xv)).norm_squared() + data.offset;
    if !f.is_finite() {
        return Err(Error::NonFiniteValue("initial SCP cost"));
    }
    let mut records = Vec::new();
    for l in 1..=config.max_iters {
        let rho = config.trust.radius(l - 1);
        let d = partial_derivative_raw(h, &s, xv, yv);
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue("SCP gradient"));
        }
        let grad = edge_gradient(gso.kind(), gso.support(), &d);
        let hat = surrogate_minimize(&gso, &grad, rho)?;
        let delta = hat.expand() - &s;
        let moving = hat.weights() != gso.weights();
        let seg = SegmentCost::new(h, &s, &delta, xv, yv);
        let ls = search_segment(
            &seg,
            config.line_search_grid,
            config.line_search_refines,
            moving,
        )?;

        let mut alpha = 0.0;
        let mut step_inf = 0.0;
        let f_prev = f;
        if ls.alpha > 0.0 {
            let weights: Vec<f64> = gso
                .weights()
                .iter()
                .zip(hat.weights())
                .map(|(&w, &wh)| (w + ls.alpha * (wh - w)).max(0.0))
                .collect();
            let cand = gso.with_weights(weights)?;
            let cand_s = cand.expand();
            let cand_f = (yv - filter_output(h, &cand_s, xv)).norm_squared() + data.offset;
            // the segment polynomial and the direct evaluation round differently
            if cand_f.is_finite() && cand_f <= f_prev {
                step_inf = cand
                    .weights()
                    .iter()
                    .zip(gso.weights())
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                alpha = ls.alpha;
                gso = cand;
                s = cand_s;
                f = cand_f;
            }
        }
        records.push(ScpRecord {
            iter: l,
            cost: f,
            alpha,
            rho,
            step_inf,
        });
        if (f_prev - f) / f_prev.max(1e-15) < config.eps {
            break;
        }
    }
    Ok(ScpOutcome { gso, records })
}
