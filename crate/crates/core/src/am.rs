//! Alternating minimization over filter taps and shift operator, plus start
//! generation and multi-start orchestration.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{filter_output, krylov, FilterTaps};
use crate::graph::{check_nodes, Gso, GsoKind, SignalMatrix, SupportSet};
use crate::lstsq::lstsq;
use crate::objective::reduce;
use crate::scp::{scp_reduced, ScpConfig};
use crate::taps::solve_taps_raw;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmConfig {
    pub filter_order: usize,
    pub scp: ScpConfig,
    pub outer_eps: f64,
    pub outer_max_iters: usize,
    pub hypothesis_kind: GsoKind,
}

impl Default for AmConfig {
    fn default() -> Self {
        Self {
            filter_order: 5,
            scp: ScpConfig::default(),
            outer_eps: 1e-8,
            outer_max_iters: 50,
            hypothesis_kind: GsoKind::Laplacian,
        }
    }
}

impl AmConfig {
    pub fn validate(&self) -> Result<()> {
        self.scp.validate()?;
        if !(self.outer_eps > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "outer_eps must be positive, got {}",
                self.outer_eps
            )));
        }
        if self.outer_max_iters == 0 {
            return Err(Error::InvalidConfig("outer_max_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    #[serde(rename = "tap")]
    TapStep,
    #[serde(rename = "scp")]
    ScpStep,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::TapStep => "tap",
            Phase::ScpStep => "scp",
        })
    }
}

/// One entry of the cumulative (outer + inner) iteration count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub cumulative_iter: usize,
    pub outer_iter: usize,
    pub phase: Phase,
    pub cost: f64,
    pub nmse: f64,
    /// Line-search step; SCP records only.
    pub alpha: Option<f64>,
    /// Trust-region breadth; SCP records only.
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IterationTrace {
    pub records: Vec<TraceRecord>,
}

impl IterationTrace {
    pub fn final_cost(&self) -> Option<f64> {
        self.records.last().map(|r| r.cost)
    }

    pub fn initial_nmse(&self) -> Option<f64> {
        self.records.first().map(|r| r.nmse)
    }

    pub fn final_nmse(&self) -> Option<f64> {
        self.records.last().map(|r| r.nmse)
    }

    /// True when no cost exceeds its predecessor by more than
    /// `rel_slack * (1 + first cost)`.
    pub fn is_monotone(&self, rel_slack: f64) -> bool {
        let Some(first) = self.records.first() else {
            return true;
        };
        let slack = rel_slack * (1.0 + first.cost);
        self.records.windows(2).all(|w| w[1].cost <= w[0].cost + slack)
    }

    fn push(&mut self, outer_iter: usize, phase: Phase, cost: f64, energy: f64, alpha: Option<f64>, rho: Option<f64>) {
        let nmse = if energy > 0.0 { cost / energy } else { f64::NAN };
        self.records.push(TraceRecord {
            cumulative_iter: self.records.len() + 1,
            outer_iter,
            phase,
            cost,
            nmse,
            alpha,
            rho,
        });
    }
}

/// Current estimate of an alternating-minimization run.
#[derive(Debug, Clone)]
pub struct AmState {
    pub taps: FilterTaps,
    pub gso: Gso,
    pub trace: IterationTrace,
}

fn check_data(gso: &Gso, x: &SignalMatrix, y: &SignalMatrix) -> Result<()> {
    check_nodes("input signals", gso.n_nodes(), x.n_nodes())?;
    check_nodes("output signals", gso.n_nodes(), y.n_nodes())?;
    check_nodes("sample count", x.n_samples(), y.n_samples())
}

/// Alternates the closed-form tap solve with an SCP pass over the edge
/// weights until the relative cost decrease of one outer iteration falls below
/// `outer_eps`.
pub fn am_fit(init: &Gso, x: &SignalMatrix, y: &SignalMatrix, config: &AmConfig) -> Result<AmState> {
    config.validate()?;
    check_data(init, x, y)?;
    if init.kind() != config.hypothesis_kind {
        return Err(Error::InvalidConfig(format!(
            "initial GSO has kind {} but the hypothesis is {}",
            init.kind(),
            config.hypothesis_kind
        )));
    }
    let energy = y.values().norm_squared();
    let data = reduce(x.values(), y.values());
    let (xv, yv) = (&data.x, &data.y);
    let order = config.filter_order;

    let mut trace = IterationTrace::default();
    let mut gso = init.clone();
    let mut taps: Option<FilterTaps> = None;
    let mut reference: Option<f64> = None;

    for outer in 1..=config.outer_max_iters {
        // tap step; keep the incoming taps if rounding makes the new ones worse
        let s = gso.expand();
        let fit = solve_taps_raw(&s, xv, yv, order)?;
        let new_cost = (yv - filter_output(fit.taps.as_slice(), &s, xv)).norm_squared() + data.offset;
        let (next_taps, tap_cost) = match taps.take() {
            Some(old) => {
                let old_cost = (yv - filter_output(old.as_slice(), &s, xv)).norm_squared() + data.offset;
                if new_cost <= old_cost {
                    (fit.taps, new_cost)
                } else {
                    (old, old_cost)
                }
            }
            None => (fit.taps, new_cost),
        };
        if !tap_cost.is_finite() {
            return Err(Error::NonFiniteValue("tap step cost"));
        }
        trace.push(outer, Phase::TapStep, tap_cost, energy, None, None);
        let current_taps = next_taps;

        match scp_reduced(&current_taps, &gso, &data, &config.scp) {
            Ok(out) => {
                for r in &out.records {
                    trace.push(outer, Phase::ScpStep, r.cost, energy, Some(r.alpha), Some(r.rho));
                }
                gso = out.gso;
            }
            Err(e) => {
                return Err(Error::ScpFailed {
                    outer_iter: outer,
                    source: Box::new(e),
                    last_good: Box::new(AmState {
                        taps: current_taps,
                        gso,
                        trace,
                    }),
                })
            }
        }
        taps = Some(current_taps);

        let end = trace.final_cost().unwrap_or(tap_cost);
        let prev = reference.unwrap_or(tap_cost);
        reference = Some(end);
        if (prev - end) / prev.max(1e-15) < config.outer_eps {
            break;
        }
    }
    Ok(AmState {
        taps: taps.expect("at least one outer iteration runs"),
        gso,
        trace,
    })
}

/// Candidate start produced by [`generate_candidates`].
#[derive(Debug, Clone)]
pub struct Candidate {
    pub gso: Gso,
    /// Fitted scalar taps `[h0, h2, ..., hm]` (the linear tap is fixed to 1).
    pub scalar_taps: Vec<f64>,
    pub degenerate: bool,
}

/// Column `vec(E_e X)` for the unit-weight structural matrix of edge `(i, j)`.
fn edge_column(kind: GsoKind, i: usize, j: usize, x: &DMatrix<f64>, out: &mut [f64]) {
    let n = x.nrows();
    for t in 0..x.ncols() {
        let (xi, xj) = (x[(i, t)], x[(j, t)]);
        match kind {
            GsoKind::Adjacency => {
                out[t * n + i] = xj;
                out[t * n + j] = xi;
            }
            GsoKind::Laplacian => {
                out[t * n + i] = xi - xj;
                out[t * n + j] = xj - xi;
            }
        }
    }
}

/// Sequence of increasing-order fits with the linear tap pinned to one.
///
/// Fit `m` solves `y ~ (h0 I + S_m + sum_{j=2..m} h_j C_{m-1}^j) x` by least
/// squares over `h0`, `h_2..h_m` and the edge weights of `S_m`, where
/// `C_{m-1}` is the previous candidate. Negative fitted weights are clamped to
/// zero afterwards. Returns `order` candidates.
pub fn generate_candidates(
    x: &SignalMatrix,
    y: &SignalMatrix,
    support: Arc<SupportSet>,
    kind: GsoKind,
    order: usize,
) -> Result<Vec<Candidate>> {
    if order == 0 {
        return Err(Error::InvalidConfig("candidate generation needs order >= 1".into()));
    }
    check_nodes("input signals", support.n_nodes(), x.n_nodes())?;
    check_nodes("output signals", support.n_nodes(), y.n_nodes())?;
    check_nodes("sample count", x.n_samples(), y.n_samples())?;
    // every design column is linear in X, so the reduced pair gives the same fit
    let data = reduce(x.values(), y.values());
    let (xv, yv) = (&data.x, &data.y);
    let rows = xv.len();
    let n_edges = support.n_edges();
    let rhs = DVector::from_column_slice(yv.as_slice());

    let mut candidates: Vec<Candidate> = Vec::with_capacity(order);
    for m in 1..=order {
        let powers = match candidates.last() {
            Some(prev) => krylov(&prev.gso.expand(), xv, m),
            None => Vec::new(),
        };
        let n_scalar = m;
        let mut design = DMatrix::zeros(rows, n_scalar + n_edges);
        design.column_mut(0).copy_from_slice(xv.as_slice());
        for j in 2..=m {
            design.column_mut(j - 1).copy_from_slice(powers[j].as_slice());
        }
        for (e, &(i, j)) in support.edges().iter().enumerate() {
            let mut col = design.column_mut(n_scalar + e);
            edge_column(kind, i, j, xv, col.as_mut_slice());
        }
        let sol = lstsq(&design, &rhs);
        let weights = sol.coef.as_slice()[n_scalar..]
            .iter()
            .map(|&w| w.max(0.0))
            .collect();
        candidates.push(Candidate {
            gso: Gso::new(kind, Arc::clone(&support), weights)?,
            scalar_taps: sol.coef.as_slice()[..n_scalar].to_vec(),
            degenerate: !sol.is_full_rank(),
        });
    }
    Ok(candidates)
}

/// Label and operator of a start.
#[derive(Debug, Clone)]
pub struct Start {
    pub label: String,
    pub gso: Gso,
}

/// The two default starts: binary adjacency `A` and combinatorial Laplacian
/// `L` of the support graph, both expressed in the hypothesized kind. In edge
/// coordinates both are the all-ones weight vector.
pub fn default_starts(support: Arc<SupportSet>, kind: GsoKind) -> Vec<Start> {
    ["A", "L"]
        .into_iter()
        .map(|label| Start {
            label: label.to_string(),
            gso: Gso::unweighted(kind, Arc::clone(&support)),
        })
        .collect()
}

/// Starts `S1..SK` from [`generate_candidates`].
pub fn candidate_starts(
    x: &SignalMatrix,
    y: &SignalMatrix,
    support: Arc<SupportSet>,
    kind: GsoKind,
    order: usize,
) -> Result<Vec<Start>> {
    Ok(generate_candidates(x, y, support, kind, order)?
        .into_iter()
        .enumerate()
        .map(|(i, c)| Start {
            label: format!("S{}", i + 1),
            gso: c.gso,
        })
        .collect())
}

#[derive(Debug)]
pub struct MultiStartResult {
    pub runs: Vec<Result<AmState>>,
    /// Index of the successful run with the lowest final cost.
    pub best: usize,
}

impl MultiStartResult {
    pub fn best_run(&self) -> &AmState {
        self.runs[self.best]
            .as_ref()
            .expect("best always points at a successful run")
    }
}

/// Runs [`am_fit`] from every start independently.
pub fn multi_start(starts: &[Gso], x: &SignalMatrix, y: &SignalMatrix, config: &AmConfig) -> Result<MultiStartResult> {
    if starts.is_empty() {
        return Err(Error::InvalidConfig("no starts given".into()));
    }
    let first = &starts[0];
    if starts
        .iter()
        .any(|s| s.kind() != first.kind() || s.support() != first.support())
    {
        return Err(Error::SupportMismatch);
    }
    // Identical starts give identical runs, so each distinct start runs once.
    let origin: Vec<usize> = (0..starts.len())
        .map(|i| (0..i).find(|&j| starts[j] == starts[i]).unwrap_or(i))
        .collect();
    let mut runs: Vec<Option<Result<AmState>>> = starts
        .par_iter()
        .enumerate()
        .map(|(i, s)| (origin[i] == i).then(|| am_fit(s, x, y, config)))
        .collect();
    for i in 0..runs.len() {
        if runs[i].is_none() {
            runs[i] = Some(match &runs[origin[i]] {
                Some(Ok(state)) => Ok(state.clone()),
                _ => am_fit(&starts[i], x, y, config),
            });
        }
    }
    let runs: Vec<Result<AmState>> = runs.into_iter().map(|r| r.expect("every run filled")).collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, run) in runs.iter().enumerate() {
        if let Ok(state) = run {
            let c = state.trace.final_cost().unwrap_or(f64::INFINITY);
            if best.is_none_or(|(_, b)| c < b) {
                best = Some((i, c));
            }
        }
    }
    match best {
        Some((best, _)) => Ok(MultiStartResult { runs, best }),
        None => Err(Error::AllStartsFailed(starts.len())),
    }
}
