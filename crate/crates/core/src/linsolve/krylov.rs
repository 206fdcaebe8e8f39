use std::time::Instant;

use super::{LinsolveError, SolveReport};
use crate::fem::SparseMatrix;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn jacobi(a: &SparseMatrix) -> Vec<f64> {
    a.diag()
        .into_iter()
        .map(|d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect()
}

/// Jacobi-preconditioned conjugate gradients. `observe` sees every iterate.
pub fn solve_spd_observed(
    a: &SparseMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
    mut observe: impl FnMut(usize, &[f64]),
) -> Result<(Vec<f64>, SolveReport), LinsolveError> {
    let start = Instant::now();
    let n = b.len();
    if a.nrows() != n || a.ncols() != n {
        return Err(LinsolveError::Dimension(format!(
            "{}x{} matrix with rhs of length {n}",
            a.nrows(),
            a.ncols()
        )));
    }
    let mut x = vec![0.0; n];
    let bnorm = norm2(b);
    let target = tol * bnorm;
    if bnorm == 0.0 {
        return Ok((x, SolveReport::new(0, 0.0, start, true)));
    }
    let dinv = jacobi(a);
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut res = bnorm;
    for it in 1..=max_iter {
        a.matvec(&p, &mut ap);
        let curv = dot(&p, &ap);
        if curv <= 0.0 {
            return Err(LinsolveError::Indefinite { iteration: it });
        }
        let alpha = rz / curv;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        observe(it, &x);
        res = norm2(&r);
        if res <= target {
            return Ok((x, SolveReport::new(it, res, start, true)));
        }
        for i in 0..n {
            z[i] = r[i] * dinv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(LinsolveError::NotConverged(SolveReport::new(
        max_iter, res, start, false,
    )))
}

/// Solves `A x = b` for symmetric positive definite `A` to
/// `‖Ax − b‖ ≤ tol ‖b‖`.
pub fn solve_spd(
    a: &SparseMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveReport), LinsolveError> {
    solve_spd_observed(a, b, tol, max_iter, |_, _| {})
}

/// Flexible restarted GMRES with right preconditioning. `x` holds the
/// initial guess on entry. The preconditioner may change between calls.
pub fn fgmres(
    apply_a: impl Fn(&[f64], &mut [f64]),
    mut apply_m: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
    restart: usize,
) -> SolveReport {
    let start = Instant::now();
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return SolveReport::new(0, 0.0, start, true);
    }
    let target = tol * bnorm;
    let m = restart.max(1);
    let mut r = vec![0.0; n];
    let residual = |x: &[f64], r: &mut [f64]| {
        apply_a(x, r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
    };
    residual(x, &mut r);
    let mut beta = norm2(&r);
    let mut iters = 0;
    let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut h = vec![vec![0.0; m]; m + 1];
    let mut cs = vec![0.0; m];
    let mut sn = vec![0.0; m];
    let mut g = vec![0.0; m + 1];
    let mut w = vec![0.0; n];
    while beta > target && iters < max_iter {
        v.clear();
        z.clear();
        v.push(r.iter().map(|x| x / beta).collect());
        g.iter_mut().for_each(|x| *x = 0.0);
        g[0] = beta;
        let mut k = 0;
        for j in 0..m {
            let mut zj = vec![0.0; n];
            apply_m(&v[j], &mut zj);
            apply_a(&zj, &mut w);
            z.push(zj);
            for i in 0..=j {
                let hij = dot(&w, &v[i]);
                h[i][j] = hij;
                for (wk, vk) in w.iter_mut().zip(&v[i]) {
                    *wk -= hij * vk;
                }
            }
            let hn = norm2(&w);
            h[j + 1][j] = hn;
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let d = h[j][j].hypot(h[j + 1][j]);
            if d == 0.0 {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else {
                cs[j] = h[j][j] / d;
                sn[j] = h[j + 1][j] / d;
            }
            h[j][j] = d;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            iters += 1;
            k = j + 1;
            if g[j + 1].abs() <= target || iters >= max_iter || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|x| x / hn).collect());
        }
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for l in i + 1..k {
                s -= h[i][l] * y[l];
            }
            y[i] = if h[i][i] != 0.0 { s / h[i][i] } else { 0.0 };
        }
        for (yi, zi) in y.iter().zip(&z) {
            for (xk, zk) in x.iter_mut().zip(zi) {
                *xk += yi * zk;
            }
        }
        residual(x, &mut r);
        let new_beta = norm2(&r);
        if new_beta >= beta && k < m {
            beta = new_beta;
            break;
        }
        beta = new_beta;
    }
    SolveReport::new(iters, beta, start, beta <= target)
}

/// Jacobi-preconditioned restarted GMRES for general square systems.
pub fn solve_gmres(
    a: &SparseMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveReport), LinsolveError> {
    let n = b.len();
    if a.nrows() != n || a.ncols() != n {
        return Err(LinsolveError::Dimension(format!(
            "{}x{} matrix with rhs of length {n}",
            a.nrows(),
            a.ncols()
        )));
    }
    let dinv = jacobi(a);
    let mut x = x0.map_or_else(|| vec![0.0; n], |v| v.to_vec());
    let report = fgmres(
        |v, out| a.matvec(v, out),
        |v, out| {
            for i in 0..n {
                out[i] = v[i] * dinv[i];
            }
        },
        b,
        &mut x,
        tol,
        max_iter,
        60,
    );
    if report.converged {
        Ok((x, report))
    } else {
        Err(LinsolveError::NotConverged(report))
    }
}
