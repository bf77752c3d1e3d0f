use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::graph::{Gso, GsoKind, SignalMatrix, SupportSet};

pub fn random_gso<R: Rng>(rng: &mut R, n: usize, kind: GsoKind) -> Gso {
    loop {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < 0.6 {
                    edges.push((i, j));
                }
            }
        }
        if edges.is_empty() {
            continue;
        }
        let weights = edges.iter().map(|_| rng.random_range(0.5..1.5)).collect();
        let support = Arc::new(SupportSet::new(n, edges).unwrap());
        return Gso::new(kind, support, weights).unwrap();
    }
}

pub fn random_signal<R: Rng>(rng: &mut R, n: usize, t: usize) -> SignalMatrix {
    SignalMatrix::new(DMatrix::from_fn(n, t, |_, _| rng.sample(StandardNormal))).unwrap()
}
