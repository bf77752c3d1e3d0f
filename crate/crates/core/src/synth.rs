//! Synthetic experiments: random connected graph, random taps, Gaussian
//! inputs and noiseless filtered outputs.
//!
//! All randomness comes from one `ChaCha8Rng` seeded with
//! `seed_from_u64(spec.seed)`, consumed in a fixed order: graph attempts, edge
//! weights (support order), taps, `X` (column by column), then noise.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{apply_filter, FilterTaps};
use crate::graph::{Gso, GsoKind, SignalMatrix, SupportSet};

/// Maximum number of graph draws before giving up on connectivity.
pub const MAX_GRAPH_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphModel {
    /// Every pair is an edge independently with probability `p`.
    ErdosRenyi { p: f64 },
    /// Nodes uniform in the unit square, joined when closer than `radius`.
    RandomGeometric { radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub n_nodes: usize,
    pub n_samples: usize,
    pub filter_order: usize,
    pub tap_sigma: f64,
    pub generating_kind: GsoKind,
    pub graph_model: GraphModel,
    pub weight_range: [f64; 2],
    pub seed: u64,
    /// Standard deviation of additive output noise.
    pub noise_sigma: f64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            n_nodes: 30,
            n_samples: 500,
            filter_order: 5,
            tap_sigma: 3.0,
            generating_kind: GsoKind::Laplacian,
            graph_model: GraphModel::ErdosRenyi { p: 0.2 },
            weight_range: [0.5, 1.5],
            seed: 0,
            noise_sigma: 0.0,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_nodes == 0 || self.n_samples == 0 {
            return bad("n_nodes and n_samples must be positive".into());
        }
        match self.graph_model {
            GraphModel::ErdosRenyi { p } if !(p > 0.0 && p < 1.0) => {
                return bad(format!("edge probability must lie in (0, 1), got {p}"));
            }
            GraphModel::RandomGeometric { radius } if !(radius > 0.0 && radius.is_finite()) => {
                return bad(format!("radius must be positive, got {radius}"));
            }
            _ => {}
        }
        let [lo, hi] = self.weight_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return bad(format!("weight_range must satisfy 0 < lo <= hi, got [{lo}, {hi}]"));
        }
        if !(self.tap_sigma >= 0.0 && self.tap_sigma.is_finite()) {
            return bad(format!("tap_sigma must be nonnegative, got {}", self.tap_sigma));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise_sigma must be nonnegative, got {}", self.noise_sigma));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub support: Arc<SupportSet>,
    pub gso_true: Gso,
    pub taps_true: FilterTaps,
    pub x: SignalMatrix,
    pub y: SignalMatrix,
}

fn sample_edges<R: Rng>(rng: &mut R, n: usize, model: GraphModel) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    match model {
        GraphModel::ErdosRenyi { p } => {
            for i in 0..n {
                for j in i + 1..n {
                    if rng.random::<f64>() < p {
                        edges.push((i, j));
                    }
                }
            }
        }
        GraphModel::RandomGeometric { radius } => {
            let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random(), rng.random())).collect();
            for i in 0..n {
                for j in i + 1..n {
                    let (dx, dy) = (pts[i].0 - pts[j].0, pts[i].1 - pts[j].1);
                    if dx.hypot(dy) <= radius {
                        edges.push((i, j));
                    }
                }
            }
        }
    }
    edges
}

pub fn generate_experiment(spec: &ExperimentSpec) -> Result<Experiment> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_nodes;

    let mut support = None;
    for _ in 0..MAX_GRAPH_ATTEMPTS {
        let s = SupportSet::new(n, sample_edges(&mut rng, n, spec.graph_model))?;
        if s.is_connected() {
            support = Some(Arc::new(s));
            break;
        }
    }
    let support = support.ok_or(Error::GraphGenerationFailed {
        attempts: MAX_GRAPH_ATTEMPTS,
    })?;

    let [lo, hi] = spec.weight_range;
    let weights = (0..support.n_edges())
        .map(|_| lo + (hi - lo) * rng.random::<f64>())
        .collect();
    let gso_true = Gso::new(spec.generating_kind, Arc::clone(&support), weights)?;

    let taps = (0..=spec.filter_order)
        .map(|_| spec.tap_sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let taps_true = FilterTaps::new(taps)?;

    // from_fn visits column-major, i.e. one sample at a time
    let x = SignalMatrix::new(DMatrix::from_fn(n, spec.n_samples, |_, _| rng.sample(StandardNormal)))?;
    let mut y = apply_filter(&taps_true, &gso_true, &x)?;
    if spec.noise_sigma > 0.0 {
        let noise = DMatrix::from_fn(n, spec.n_samples, |_, _| {
            spec.noise_sigma * rng.sample::<f64, _>(StandardNormal)
        });
        y = SignalMatrix::new(y.into_inner() + noise)?;
    }
    Ok(Experiment {
        support,
        gso_true,
        taps_true,
        x,
        y,
    })
}
