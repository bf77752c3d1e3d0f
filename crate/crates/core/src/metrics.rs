//! Evaluation metrics: NMSE, Spearman rank correlation and Q-Q pairs.

use crate::error::{Error, Result};
use crate::graph::{check_nodes, Gso, SignalMatrix};

/// `||Y_hat - Y||_F^2 / ||Y||_F^2`.
pub fn nmse(y_hat: &SignalMatrix, y: &SignalMatrix) -> Result<f64> {
    check_nodes("nmse rows", y.n_nodes(), y_hat.n_nodes())?;
    check_nodes("nmse columns", y.n_samples(), y_hat.n_samples())?;
    let energy = y.values().norm_squared();
    if energy == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok((y_hat.values() - y.values()).norm_squared() / energy)
}

/// Fractional ranks starting at 1; tied values share the average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman rank correlation: Pearson correlation of the average ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::DegenerateInput("need at least two paired values".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::DegenerateInput("NaN in rank correlation input".into()));
    }
    pearson(&average_ranks(a), &average_ranks(b))
        .ok_or_else(|| Error::DegenerateInput("constant vector has no rank correlation".into()))
}

/// Per-edge weight magnitudes of two operators on the same support.
pub fn edge_weight_vectors(a: &Gso, b: &Gso) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.support() != b.support() {
        return Err(Error::SupportMismatch);
    }
    let mag = |g: &Gso| g.weights().iter().map(|w| w.abs()).collect();
    Ok((mag(a), mag(b)))
}

/// Empirical quantile pairs of two equal-length samples.
pub fn qq_pairs(a: &[f64], b: &[f64]) -> Result<Vec<(f64, f64)>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    Ok(sa.into_iter().zip(sb).collect())
}
