//! Dense linear least squares through the SVD, with a minimum-norm answer on
//! rank-deficient designs.

use nalgebra::{DMatrix, DVector, SVD};

/// Singular values below `RANK_RTOL * sigma_max` are treated as zero.
pub const RANK_RTOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LstsqSolution {
    pub coef: DVector<f64>,
    pub rank: usize,
}

impl LstsqSolution {
    pub fn is_full_rank(&self) -> bool {
        self.rank == self.coef.len()
    }
}

fn svd_solve(a: DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, usize) {
    let ncols = a.ncols();
    let svd = SVD::new(a, true, true);
    let smax = svd.singular_values.max();
    if smax <= 0.0 {
        return (DVector::zeros(ncols), 0);
    }
    let tol = RANK_RTOL * smax;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let coef = svd
        .solve(b, tol)
        .expect("U and V^T were requested from the SVD");
    (coef, rank)
}

/// `argmin_c ||A c - b||`, minimum norm among minimizers.
///
/// Columns are equilibrated before factoring. If the nonzero columns are
/// linearly dependent the unscaled design is refactored so the answer is the
/// true minimum-norm solution.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> LstsqSolution {
    let ncols = a.ncols();
    let norms: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    let live: Vec<usize> = (0..ncols).filter(|&j| norms[j] > 0.0).collect();
    if live.is_empty() {
        return LstsqSolution {
            coef: DVector::zeros(ncols),
            rank: 0,
        };
    }
    let scaled = DMatrix::from_fn(a.nrows(), live.len(), |i, k| a[(i, live[k])] / norms[live[k]]);
    let (z, rank) = svd_solve(scaled, b);
    if rank == live.len() {
        let mut coef = DVector::zeros(ncols);
        for (k, &j) in live.iter().enumerate() {
            coef[j] = z[k] / norms[j];
        }
        return LstsqSolution { coef, rank };
    }
    let (coef, rank) = svd_solve(a.clone(), b);
    LstsqSolution { coef, rank }
}
