//! Field norms, the X-norm surrogate, backflow and flux monitors, and the
//! Gronwall sentinel for the enthalpy.

use serde::Serialize;

use crate::fem::{
    assemble_a_u, assemble_mass, for_each_cell_point, for_each_facet_point, FeSpace, FemError,
    FieldVector,
};
use crate::geom::{self, Point};
use crate::linsolve::{solve_spd, LinsolveError};
use crate::mesh::BoundaryTag;

/// Facet rule degree used by the cut monitors.
pub const CUT_QUADRATURE_DEGREE: usize = 9;

/// Cell rule degree for the norms of a field on `space`.
pub fn norm_degree(space: &FeSpace) -> usize {
    2 * space.family().degree() + 1
}

fn check_finite(v: &[f64], what: &str) -> Result<(), FemError> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(FemError::NonFinite(what.into()));
    }
    Ok(())
}

fn vec_abs(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn grad_abs(g: &[[f64; 3]; 3]) -> f64 {
    g.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

fn integrate(space: &FeSpace, u: &[f64], f: impl Fn(&Point, &[f64; 3], &[[f64; 3]; 3]) -> f64) -> f64 {
    let nc = space.components();
    let mut total = 0.0;
    for_each_cell_point(&[space], norm_degree(space), |c, x, w, b| {
        let nodes = space.cell_nodes(c);
        total += w * f(x, &b[0].value(nodes, u, nc), &b[0].gradient(nodes, u, nc));
    });
    total
}

pub fn l2_norm(space: &FeSpace, u: &[f64]) -> f64 {
    integrate(space, u, |_, v, _| vec_abs(v).powi(2)).sqrt()
}

pub fn h1_seminorm(space: &FeSpace, u: &[f64]) -> f64 {
    integrate(space, u, |_, _, g| grad_abs(g).powi(2)).sqrt()
}

pub fn h1_norm(space: &FeSpace, u: &[f64]) -> f64 {
    integrate(space, u, |_, v, g| vec_abs(v).powi(2) + grad_abs(g).powi(2)).sqrt()
}

/// `(∫|u|^p)^{1/p}`.
pub fn lp_norm(space: &FeSpace, u: &[f64], p: f64) -> f64 {
    integrate(space, u, |_, v, _| vec_abs(v).powf(p)).powf(1.0 / p)
}

/// `(∫|u|^p + |∇u|^p)^{1/p}` with the Frobenius norm of the gradient.
pub fn w1p_norm(space: &FeSpace, u: &[f64], p: f64) -> f64 {
    integrate(space, u, |_, v, g| vec_abs(v).powf(p) + grad_abs(g).powf(p)).powf(1.0 / p)
}

/// `‖u_h − u‖_{L²}` against a pointwise exact field.
pub fn l2_error(space: &FeSpace, u: &[f64], exact: impl Fn(&Point, &mut [f64])) -> f64 {
    let nc = space.components();
    let mut ex = [0.0; 3];
    let mut total = 0.0;
    for_each_cell_point(&[space], QUADRATURE_DEGREE_ERR, |c, x, w, b| {
        let v = b[0].value(space.cell_nodes(c), u, nc);
        exact(x, &mut ex[..nc]);
        total += w * (0..nc).map(|k| (v[k] - ex[k]).powi(2)).sum::<f64>();
    });
    total.sqrt()
}

/// `‖∇(u_h − u)‖_{L²}` against a pointwise exact gradient `g[c][j]`.
pub fn h1_error(space: &FeSpace, u: &[f64], exact_grad: impl Fn(&Point) -> [[f64; 3]; 3]) -> f64 {
    let nc = space.components();
    let mut total = 0.0;
    for_each_cell_point(&[space], QUADRATURE_DEGREE_ERR, |c, x, w, b| {
        let g = b[0].gradient(space.cell_nodes(c), u, nc);
        let e = exact_grad(x);
        total += w * (0..nc)
            .flat_map(|k| (0..3).map(move |j| (k, j)))
            .map(|(k, j)| (g[k][j] - e[k][j]).powi(2))
            .sum::<f64>();
    });
    total.sqrt()
}

const QUADRATURE_DEGREE_ERR: usize = 8;

/// `(∫|f(x)|²)^{1/2}` of a pointwise vector field with `nc` components.
pub fn function_l2_norm(space: &FeSpace, nc: usize, f: impl Fn(&Point, &mut [f64])) -> f64 {
    let mut v = [0.0; 3];
    let mut total = 0.0;
    for_each_cell_point(&[space], QUADRATURE_DEGREE_ERR, |_, x, w, _| {
        v = [0.0; 3];
        f(x, &mut v[..nc]);
        total += w * vec_abs(&v).powi(2);
    });
    total.sqrt()
}

/// Trapezoid rule on a uniform grid.
pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => dt * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}

/// Cumulative trapezoid integral, starting at 0.
pub fn cumulative_trapezoid(values: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            acc += 0.5 * dt * (values[i - 1] + v);
        }
        out.push(acc);
    }
    out
}

fn grid_step(traj: &[FieldVector]) -> f64 {
    if traj.len() < 2 {
        0.0
    } else {
        traj[1].time - traj[0].time
    }
}

/// Per-step spatial norms of a trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryNorms {
    pub time: Vec<f64>,
    pub l2: Vec<f64>,
    pub h1: Vec<f64>,
    pub l24: Vec<f64>,
    pub w1_24_11: Vec<f64>,
    /// `‖·‖_{L²(I;L²)}`.
    pub l2_l2: f64,
    /// `‖·‖_{L²(I;H¹)}`.
    pub l2_h1: f64,
}

pub fn trajectory_norms(space: &FeSpace, traj: &[FieldVector]) -> Result<TrajectoryNorms, FemError> {
    let mut n = TrajectoryNorms {
        time: Vec::new(),
        l2: Vec::new(),
        h1: Vec::new(),
        l24: Vec::new(),
        w1_24_11: Vec::new(),
        l2_l2: 0.0,
        l2_h1: 0.0,
    };
    for f in traj {
        check_finite(&f.values, "trajectory")?;
        n.time.push(f.time);
        n.l2.push(l2_norm(space, &f.values));
        n.h1.push(h1_norm(space, &f.values));
        n.l24.push(lp_norm(space, &f.values, 24.0));
        n.w1_24_11.push(w1p_norm(space, &f.values, 24.0 / 11.0));
    }
    let dt = grid_step(traj);
    let sq = |v: &[f64]| v.iter().map(|x| x * x).collect::<Vec<_>>();
    n.l2_l2 = trapezoid(&sq(&n.l2), dt).sqrt();
    n.l2_h1 = trapezoid(&sq(&n.h1), dt).sqrt();
    Ok(n)
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct XNorm {
    /// `‖u‖_{L⁴(I;L²⁴)}`.
    pub l4_l24: f64,
    /// `‖u‖_{L⁸(I;W^{1,24/11})}`.
    pub l8_w1: f64,
    pub total: f64,
}

/// X-norm from per-step `L²⁴` norms `a` and `W^{1,24/11}` norms `b`.
pub fn x_norm_from_steps(a: &[f64], b: &[f64], dt: f64) -> XNorm {
    let p4: Vec<f64> = a.iter().map(|v| v.powi(4)).collect();
    let p8: Vec<f64> = b.iter().map(|v| v.powi(8)).collect();
    let l4_l24 = trapezoid(&p4, dt).powf(0.25);
    let l8_w1 = trapezoid(&p8, dt).powf(0.125);
    XNorm {
        l4_l24,
        l8_w1,
        total: l4_l24 + l8_w1,
    }
}

pub fn x_norm_surrogate(space: &FeSpace, traj: &[FieldVector]) -> Result<XNorm, FemError> {
    let mut a = Vec::with_capacity(traj.len());
    let mut b = Vec::with_capacity(traj.len());
    for f in traj {
        check_finite(&f.values, "velocity trajectory")?;
        a.push(lp_norm(space, &f.values, 24.0));
        b.push(w1p_norm(space, &f.values, 24.0 / 11.0));
    }
    Ok(x_norm_from_steps(&a, &b, grid_step(traj)))
}

fn cut_integrals(space: &FeSpace, u: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<(usize, f64)> {
    let ids = space.mesh().cut_ids();
    let mut out: Vec<(usize, f64)> = ids.iter().map(|&i| (i, 0.0)).collect();
    let nc = space.components();
    for_each_facet_point(
        &[space],
        CUT_QUADRATURE_DEGREE,
        |f| matches!(f.tag, BoundaryTag::Cut(_)),
        |facet, _, w, b| {
            let BoundaryTag::Cut(id) = facet.tag else { return };
            let v = b[0].value(space.cell_nodes(facet.cell), u, nc);
            let un = geom::dot(&v, &facet.normal);
            let slot = ids.iter().position(|&i| i == id).expect("cut id");
            out[slot].1 += w * f(un, geom::dot(&v, &v));
        },
    );
    out
}

/// `½∮ |(u·n)₋| |u|²` per cut, as `(cut id, value)`.
pub fn backflow_energy(space: &FeSpace, u: &[f64]) -> Vec<(usize, f64)> {
    cut_integrals(space, u, |un, u2| 0.5 * (-un).max(0.0) * u2)
}

/// `∮ u·n` per cut with the outward normal.
pub fn cut_fluxes(space: &FeSpace, u: &[f64]) -> Vec<(usize, f64)> {
    cut_integrals(space, u, |un, _| un)
}

#[derive(Debug, Clone, Serialize)]
pub struct BudgetRow {
    pub time: f64,
    pub kinetic: f64,
    pub dissipation: f64,
    pub fluxes: Vec<f64>,
}

/// Kinetic energy `½‖u‖²`, `∫|∇u|²` and cut fluxes per step.
pub fn energy_budget(space: &FeSpace, traj: &[FieldVector]) -> Vec<BudgetRow> {
    traj.iter()
        .map(|f| BudgetRow {
            time: f.time,
            kinetic: 0.5 * l2_norm(space, &f.values).powi(2),
            dissipation: h1_seminorm(space, &f.values).powi(2),
            fluxes: cut_fluxes(space, &f.values).into_iter().map(|(_, v)| v).collect(),
        })
        .collect()
}

/// Norm of a load functional in the dual of the discrete `H¹`, via the
/// Riesz representative `(M + K) r = g`.
pub struct DualNorm {
    gram: crate::fem::SparseMatrix,
}

impl DualNorm {
    pub fn new(space: &FeSpace) -> Self {
        let m = assemble_mass(space);
        let k = assemble_a_u(space);
        Self {
            gram: m.linear_combination(1.0, &k, 1.0),
        }
    }

    pub fn norm(&self, g: &[f64]) -> Result<f64, LinsolveError> {
        let (r, _) = solve_spd(&self.gram, g, 1e-13, 10 * g.len() + 100)?;
        Ok(g.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GronwallConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Default for GronwallConstants {
    fn default() -> Self {
        Self {
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GronwallCheck {
    pub time: Vec<f64>,
    /// `‖e(t)‖²`.
    pub energy: Vec<f64>,
    pub bound: Vec<f64>,
    pub satisfied: bool,
}

/// Evaluates `exp(∫₀ᵗ c₂‖u‖⁸_{L⁴} + c₃)·[‖e₀‖² + ∫₀ᵗ c₁(‖g‖_* + ‖u‖²_{W^{1,12/5}})²]`
/// on the grid and compares with `‖e(t)‖²`. `g[n]` is the load vector at
/// step `n`.
pub fn gronwall_bound(
    space_e: &FeSpace,
    space_u: &FeSpace,
    e: &[FieldVector],
    u: &[FieldVector],
    g: &[Vec<f64>],
    e0: &[f64],
    c: GronwallConstants,
) -> Result<GronwallCheck, GronwallError> {
    if e.len() != u.len() || e.len() != g.len() {
        return Err(GronwallError::Length(e.len(), u.len(), g.len()));
    }
    let dual = DualNorm::new(space_e);
    let dt = grid_step(e);
    let mut growth = Vec::with_capacity(e.len());
    let mut source = Vec::with_capacity(e.len());
    for n in 0..e.len() {
        let uu = &u[n].values;
        growth.push(c.c2 * lp_norm(space_u, uu, 4.0).powi(8) + c.c3);
        let gn = if g[n].iter().all(|&v| v == 0.0) {
            0.0
        } else {
            dual.norm(&g[n])?
        };
        source.push(c.c1 * (gn + w1p_norm(space_u, uu, 12.0 / 5.0).powi(2)).powi(2));
    }
    let gi = cumulative_trapezoid(&growth, dt);
    let si = cumulative_trapezoid(&source, dt);
    let e00 = l2_norm(space_e, e0).powi(2);
    let bound: Vec<f64> = gi.iter().zip(&si).map(|(a, s)| a.exp() * (e00 + s)).collect();
    let energy: Vec<f64> = e.iter().map(|f| l2_norm(space_e, &f.values).powi(2)).collect();
    let satisfied = energy
        .iter()
        .zip(&bound)
        .all(|(en, b)| *en <= b * (1.0 + 1e-12));
    Ok(GronwallCheck {
        time: e.iter().map(|f| f.time).collect(),
        energy,
        bound,
        satisfied,
    })
}

#[derive(Debug, thiserror::Error)]
pub enum GronwallError {
    #[error("trajectory lengths differ: {0} enthalpy, {1} velocity, {2} load")]
    Length(usize, usize, usize),
    #[error(transparent)]
    Solve(#[from] LinsolveError),
}
