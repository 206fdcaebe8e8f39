use std::time::Instant;

use log::warn;

use super::envelope::EnvelopeLu;
use super::krylov::{fgmres, norm2};
use super::{LinsolveError, SolveReport};
use crate::fem::SparseMatrix;

/// Inverse Schur complement approximation `Ŝ⁻¹ ≈ Σ wₖ Pₖ⁻¹`.
#[derive(Debug, Clone)]
pub struct SchurApprox {
    terms: Vec<(f64, EnvelopeLu)>,
}

impl SchurApprox {
    pub fn new() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn with_term(mut self, weight: f64, m: &SparseMatrix) -> Result<Self, LinsolveError> {
        self.terms.push((weight, EnvelopeLu::factor(m)?));
        Ok(self)
    }

    /// `G diag(A)⁻¹ Gᵀ`, the generic fallback.
    pub fn diagonal(a: &SparseMatrix, g: &SparseMatrix) -> Result<Self, LinsolveError> {
        let d = a.diag();
        let gt = g.transpose();
        let np = g.nrows();
        let mut t = Vec::new();
        for i in 0..np {
            let (ci, vi) = g.row(i);
            let mut acc: std::collections::BTreeMap<usize, f64> = Default::default();
            for (&k, &gik) in ci.iter().zip(vi) {
                let (cj, vj) = gt.row(k);
                for (&j, &gkj) in cj.iter().zip(vj) {
                    *acc.entry(j).or_default() += gik * gkj / d[k];
                }
            }
            for (j, v) in acc {
                t.push((i, j, v));
            }
        }
        let mut s = SparseMatrix::from_triplets(np, np, &t);
        // guard the pressure nullspace of enclosed domains
        let eps = 1e-10 * s.max_abs().max(1e-300);
        for i in 0..np {
            s.add(i, i, eps);
        }
        Self::new().with_term(1.0, &s)
    }

    fn apply(&self, r: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut tmp = vec![0.0; r.len()];
        for (w, lu) in &self.terms {
            lu.solve(r, &mut tmp);
            for (o, t) in out.iter_mut().zip(&tmp) {
                *o += w * t;
            }
        }
    }
}

impl Default for SchurApprox {
    fn default() -> Self {
        Self::new()
    }
}

/// Result of one saddle-point solve.
#[derive(Debug, Clone)]
pub struct SaddleSolution {
    pub velocity: Vec<f64>,
    pub pressure: Vec<f64>,
    pub report: SolveReport,
    /// Set when constant pressures lie in the kernel of `Gᵀ`.
    pub pressure_nullspace: bool,
}

/// Solver for `[A Gᵀ; G 0] [u; p] = [f; g]` by FGMRES with the block upper
/// triangular preconditioner `[A Gᵀ; 0 −Ŝ]`. The velocity block is
/// factorized exactly once.
#[derive(Debug, Clone)]
pub struct SaddleSolver {
    a: SparseMatrix,
    g: SparseMatrix,
    gt: SparseMatrix,
    a_lu: EnvelopeLu,
    schur: SchurApprox,
    nullspace: bool,
    pub restart: usize,
}

impl SaddleSolver {
    pub fn new(a: SparseMatrix, g: SparseMatrix, schur: SchurApprox) -> Result<Self, LinsolveError> {
        if a.nrows() != a.ncols() || g.ncols() != a.nrows() {
            return Err(LinsolveError::Dimension(format!(
                "velocity block {}x{}, constraint block {}x{}",
                a.nrows(),
                a.ncols(),
                g.nrows(),
                g.ncols()
            )));
        }
        let a_lu = EnvelopeLu::factor(&a)?;
        let gt = g.transpose();
        let ones = vec![1.0; g.nrows()];
        let mut gt1 = vec![0.0; g.ncols()];
        gt.matvec(&ones, &mut gt1);
        let nullspace = g.nrows() > 0 && norm2(&gt1) <= 1e-10 * g.max_abs() * (g.ncols() as f64).sqrt();
        if nullspace {
            warn!("pressure is determined only up to a constant (no open boundary); projecting to zero mean");
        }
        Ok(Self {
            a,
            g,
            gt,
            a_lu,
            schur,
            nullspace,
            restart: 200,
        })
    }

    pub fn has_pressure_nullspace(&self) -> bool {
        self.nullspace
    }

    pub fn velocity_block(&self) -> &SparseMatrix {
        &self.a
    }

    pub fn constraint_block(&self) -> &SparseMatrix {
        &self.g
    }

    pub fn solve(
        &self,
        f: &[f64],
        g: &[f64],
        guess: Option<(&[f64], &[f64])>,
        tol: f64,
        max_iter: usize,
    ) -> Result<SaddleSolution, LinsolveError> {
        let start = Instant::now();
        let nu = self.a.nrows();
        let np = self.g.nrows();
        if f.len() != nu || g.len() != np {
            return Err(LinsolveError::Dimension("saddle right-hand side".into()));
        }
        let mut rhs = f.to_vec();
        rhs.extend_from_slice(g);
        let mut x = vec![0.0; nu + np];
        if let Some((u0, p0)) = guess {
            x[..nu].copy_from_slice(u0);
            x[nu..].copy_from_slice(p0);
        }
        let apply = |v: &[f64], out: &mut [f64]| {
            let (vu, vp) = v.split_at(nu);
            let (ou, op) = out.split_at_mut(nu);
            self.a.matvec(vu, ou);
            let mut t = vec![0.0; nu];
            self.gt.matvec(vp, &mut t);
            for (o, t) in ou.iter_mut().zip(&t) {
                *o += t;
            }
            self.g.matvec(vu, op);
        };
        let mut tmp_u = vec![0.0; nu];
        let precond = |r: &[f64], out: &mut [f64]| {
            let (ru, rp) = r.split_at(nu);
            let (ou, op) = out.split_at_mut(nu);
            self.schur.apply(rp, op);
            for v in op.iter_mut() {
                *v = -*v;
            }
            self.gt.matvec(op, &mut tmp_u);
            for (t, r) in tmp_u.iter_mut().zip(ru) {
                *t = r - *t;
            }
            self.a_lu.solve(&tmp_u, ou);
        };
        let mut report = fgmres(apply, precond, &rhs, &mut x, tol, max_iter, self.restart);
        report.wall_time = start.elapsed().as_secs_f64();
        let mut pressure = x.split_off(nu);
        if self.nullspace && np > 0 {
            let mean = pressure.iter().sum::<f64>() / np as f64;
            pressure.iter_mut().for_each(|p| *p -= mean);
        }
        if !report.converged {
            return Err(LinsolveError::NotConverged(report));
        }
        Ok(SaddleSolution {
            velocity: x,
            pressure,
            report,
            pressure_nullspace: self.nullspace,
        })
    }
}

/// One-shot saddle solve with the generic diagonal Schur approximation.
/// `bt` must equal the transpose of `b`.
pub fn solve_saddle(
    a: &SparseMatrix,
    bt: &SparseMatrix,
    b: &SparseMatrix,
    f: &[f64],
    g: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<SaddleSolution, LinsolveError> {
    if bt.nrows() != b.ncols() || bt.ncols() != b.nrows() {
        return Err(LinsolveError::Dimension("Bᵀ is not the transpose of B".into()));
    }
    let schur = SchurApprox::diagonal(a, b)?;
    SaddleSolver::new(a.clone(), b.clone(), schur)?.solve(f, g, None, tol, max_iter)
}
