//! Sparse linear solvers: Jacobi-preconditioned CG and GMRES, envelope LU,
//! and a block-preconditioned FGMRES for saddle-point systems.

mod envelope;
mod krylov;
mod saddle;

pub use envelope::{reverse_cuthill_mckee, EnvelopeLu};
pub use krylov::{fgmres, solve_gmres, solve_spd, solve_spd_observed};
pub use saddle::{solve_saddle, SaddleSolution, SaddleSolver, SchurApprox};

use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::fem::SparseMatrix;

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual: f64,
    /// Seconds.
    pub wall_time: f64,
    pub converged: bool,
}

impl SolveReport {
    pub(crate) fn new(iterations: usize, residual: f64, start: Instant, converged: bool) -> Self {
        Self {
            iterations,
            residual,
            wall_time: start.elapsed().as_secs_f64(),
            converged,
        }
    }
}

#[derive(Debug, Error)]
pub enum LinsolveError {
    #[error("no convergence after {} iterations (residual {:.3e})", .0.iterations, .0.residual)]
    NotConverged(SolveReport),
    #[error("matrix is not positive definite (negative curvature at iteration {iteration})")]
    Indefinite { iteration: usize },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Imposes `x_i = values_i` on masked rows by symmetric elimination: the
/// known values move to the right-hand side, masked rows and columns are
/// zeroed and their diagonal set to one.
pub fn apply_dirichlet(a: &mut SparseMatrix, b: &mut [f64], mask: &[bool], values: &[f64]) {
    let n = a.nrows();
    let g: Vec<f64> = (0..n).map(|i| if mask[i] { values[i] } else { 0.0 }).collect();
    if g.iter().any(|&v| v != 0.0) {
        let ag = a.mul(&g);
        for i in 0..n {
            b[i] -= ag[i];
        }
    }
    zero_constrained(a, mask, mask);
    for i in 0..n {
        if mask[i] {
            a.set(i, i, 1.0);
            b[i] = values[i];
        }
    }
}

/// Zeroes rows in `row_mask` and columns in `col_mask` while keeping the
/// pattern.
pub fn zero_constrained(a: &mut SparseMatrix, row_mask: &[bool], col_mask: &[bool]) {
    let rp = a.row_ptr().to_vec();
    let ci = a.col_idx().to_vec();
    let vals = a.values_mut();
    for i in 0..rp.len() - 1 {
        for k in rp[i]..rp[i + 1] {
            if row_mask[i] || col_mask[ci[k]] {
                vals[k] = 0.0;
            }
        }
    }
}
