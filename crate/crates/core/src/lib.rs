//! Joint identification of polynomial graph filter taps and graph shift
//! operator edge weights from input/output signal pairs on a known support.
//!
//! The estimator alternates a closed-form least-squares update of the taps
//! ([`taps::solve_taps`]) with a sequential convex programming pass over the
//! edge weights ([`scp::scp_solve`]); see [`am::am_fit`]. Both steps are
//! non-increasing in the cost, so the whole trace is.

pub mod am;
pub mod cli;
pub mod error;
pub mod filter;
pub mod graph;
pub mod io;
pub mod lstsq;
pub mod metrics;
pub mod objective;
pub mod scp;
pub mod synth;
pub mod taps;

#[cfg(test)]
mod testutil;

pub use am::{am_fit, generate_candidates, multi_start, AmConfig, AmState, IterationTrace, Phase};
pub use error::{Error, Result};
pub use filter::{apply_filter, shift_krylov, FilterTaps};
pub use graph::{contract, validate_support_subset, Gso, GsoKind, SignalMatrix, SupportSet};
pub use metrics::{edge_weight_vectors, nmse, qq_pairs, spearman};
pub use objective::{cost, grad_edges, grad_matrix};
pub use scp::{line_search, scp_solve, surrogate_minimize, ScpConfig, TrustSchedule};
pub use synth::{generate_experiment, ExperimentSpec, GraphModel};
pub use taps::solve_taps;
