//! Implicit-Euler time stepping of the momentum and mass balance with
//! homogeneous do-nothing conditions on the cuts.
//!
//! Each step solves
//! `(ϱ₀M/Δt + νK) u − Bᵀ P = ϱ₀M u_prev/Δt + load`, `−B u = 0`, `u = 0` on
//! the walls, where `B` pairs pressure tests with the velocity divergence.
//! The lagged convection `−ϱ₀ b_u(ũ, ũ, ·)` and buoyancy `(ϱ(ẽ)f, ·)` enter
//! through the load, so the operator is the same at every step and is
//! factorized once.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fem::{
    self, assemble_a_u, assemble_b_u, assemble_divergence, assemble_mass,
    assemble_weighted_load, for_each_cell_point, for_each_facet_point, FeSpace, FemError,
    FieldVector, SparseMatrix, QUADRATURE_DEGREE,
};
use crate::geom::Point;
use crate::linsolve::{
    apply_dirichlet, zero_constrained, LinsolveError, SaddleSolver, SchurApprox, SolveReport,
};
use crate::materials::{EnthalpyMap, MaterialConstants};
use crate::mesh::BoundaryTag;

#[derive(Debug, Error)]
pub enum StokesError {
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("saddle solve failed: {0}")]
    Solve(#[from] LinsolveError),
    #[error("invalid time step {0}")]
    TimeStep(f64),
    #[error("trajectory length mismatch: {0}")]
    Trajectory(String),
    #[error("non-finite values in {0}")]
    NonFinite(&'static str),
}

/// Where the convective term lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Convection {
    /// `−ϱ₀ b_u(ũ, ũ, ·)` on the right-hand side.
    #[default]
    Lagged,
    /// `ϱ₀ b_u(ũ, u, ·)` in the operator, refactorized every step.
    Oseen,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StokesOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub convection: Convection,
}

impl Default for StokesOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_iter: 2000,
            convection: Convection::Lagged,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub velocity: Vec<f64>,
    pub pressure: Vec<f64>,
    pub report: SolveReport,
}

/// Assembled operators of one momentum step.
#[derive(Debug, Clone)]
pub struct MomentumSystem {
    space_u: FeSpace,
    space_p: FeSpace,
    constants: MaterialConstants,
    dt: f64,
    options: StokesOptions,
    mask: Vec<bool>,
    mass: SparseMatrix,
    operator: SparseMatrix,
    constraint: SparseMatrix,
    schur: SchurApprox,
    solver: SaddleSolver,
}

impl MomentumSystem {
    pub fn new(
        space_u: &FeSpace,
        space_p: &FeSpace,
        constants: MaterialConstants,
        dt: f64,
        options: StokesOptions,
    ) -> Result<Self, StokesError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(StokesError::TimeStep(dt));
        }
        let rho0 = constants.reference_density;
        let nu = constants.viscosity;
        let mask = space_u.dirichlet_dofs();
        let mass = assemble_mass(space_u);
        let stiffness = assemble_a_u(space_u);
        let mut operator = mass.linear_combination(rho0 / dt, &stiffness, nu);
        let mut dummy = vec![0.0; space_u.ndofs()];
        apply_dirichlet(&mut operator, &mut dummy, &mask, &vec![0.0; mask.len()]);

        let mut constraint = assemble_divergence(space_u, space_p)?.scaled(-1.0);
        zero_constrained(&mut constraint, &vec![false; space_p.ndofs()], &mask);

        let schur = pressure_schur(space_p, rho0, nu, dt)?;
        let solver = SaddleSolver::new(operator.clone(), constraint.clone(), schur.clone())?;
        Ok(Self {
            space_u: space_u.clone(),
            space_p: space_p.clone(),
            constants,
            dt,
            options,
            mask,
            mass,
            operator,
            constraint,
            schur,
            solver,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn velocity_space(&self) -> &FeSpace {
        &self.space_u
    }

    pub fn pressure_space(&self) -> &FeSpace {
        &self.space_p
    }

    pub fn options(&self) -> &StokesOptions {
        &self.options
    }

    /// Velocity Dirichlet mask (wall closure).
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// `−B` with wall columns removed; `constraint · u` is the discrete
    /// divergence residual.
    pub fn constraint(&self) -> &SparseMatrix {
        &self.constraint
    }

    pub fn has_pressure_nullspace(&self) -> bool {
        self.solver.has_pressure_nullspace()
    }

    /// Lagged right-hand side `(ϱ(ẽ) f, v) − ϱ₀ b_u(ũ, ũ, v)`. With Oseen
    /// convection only the buoyancy part is returned.
    pub fn momentum_rhs(
        &self,
        e_tilde: &[f64],
        space_e: &FeSpace,
        material: &EnthalpyMap,
        u_tilde: &[f64],
        f: &dyn Fn(&Point, &mut [f64]),
    ) -> Result<Vec<f64>, StokesError> {
        fem::check_len(space_e, e_tilde, "lagged enthalpy")?;
        fem::check_len(&self.space_u, u_tilde, "lagged velocity")?;
        let rho: Vec<f64> = e_tilde
            .iter()
            .map(|&e| material.density_of_enthalpy(e))
            .collect();
        let mut load = assemble_weighted_load(&self.space_u, &rho, space_e, f)?;
        if self.options.convection == Convection::Lagged && u_tilde.iter().any(|&v| v != 0.0) {
            let conv = convection_load(&self.space_u, u_tilde);
            let rho0 = self.constants.reference_density;
            for (l, c) in load.iter_mut().zip(&conv) {
                *l -= rho0 * c;
            }
        }
        if load.iter().any(|v| !v.is_finite()) {
            return Err(StokesError::NonFinite("momentum load"));
        }
        Ok(load)
    }

    /// One implicit-Euler step. `transport` is the lagged velocity used by
    /// Oseen convection and ignored otherwise.
    pub fn stokes_step(
        &self,
        u_prev: &[f64],
        load: &[f64],
        transport: Option<&[f64]>,
        pressure_guess: Option<&[f64]>,
    ) -> Result<StepResult, StokesError> {
        let n = self.space_u.ndofs();
        if u_prev.len() != n || load.len() != n {
            return Err(StokesError::Trajectory("step input length".into()));
        }
        let rho0 = self.constants.reference_density;
        let mut rhs = self.mass.mul(u_prev);
        for (r, l) in rhs.iter_mut().zip(load) {
            *r = rho0 / self.dt * *r + l;
        }
        for (r, &m) in rhs.iter_mut().zip(&self.mask) {
            if m {
                *r = 0.0;
            }
        }
        let g = vec![0.0; self.space_p.ndofs()];
        let p0 = pressure_guess
            .map(|p| p.to_vec())
            .unwrap_or_else(|| vec![0.0; self.space_p.ndofs()]);
        let mut u0 = u_prev.to_vec();
        for (u, &m) in u0.iter_mut().zip(&self.mask) {
            if m {
                *u = 0.0;
            }
        }
        let guess = Some((u0.as_slice(), p0.as_slice()));
        let sol = match (self.options.convection, transport) {
            (Convection::Oseen, Some(w)) if w.iter().any(|&v| v != 0.0) => {
                let c = assemble_b_u(w, &self.space_u)?;
                let mut op = self.operator.linear_combination(1.0, &c, rho0);
                zero_constrained(&mut op, &self.mask, &self.mask);
                for (i, &m) in self.mask.iter().enumerate() {
                    if m {
                        op.set(i, i, 1.0);
                    }
                }
                let solver = SaddleSolver::new(op, self.constraint.clone(), self.schur.clone())?;
                solver.solve(&rhs, &g, guess, self.options.tol, self.options.max_iter)?
            }
            _ => self
                .solver
                .solve(&rhs, &g, guess, self.options.tol, self.options.max_iter)?,
        };
        let mut velocity = sol.velocity;
        for (u, &m) in velocity.iter_mut().zip(&self.mask) {
            if m {
                *u = 0.0;
            }
        }
        Ok(StepResult {
            velocity,
            pressure: sol.pressure,
            report: sol.report,
        })
    }

    /// Residual `‖−P n + ν ∂u/∂n‖` in `L²` over all cut facets.
    pub fn do_nothing_residual(&self, u: &[f64], p: &[f64]) -> f64 {
        do_nothing_residual(&self.space_u, &self.space_p, self.constants.viscosity, u, p)
    }
}

fn pressure_schur(space_p: &FeSpace, rho0: f64, nu: f64, dt: f64) -> Result<SchurApprox, StokesError> {
    let mp = assemble_mass(space_p);
    let mut schur = SchurApprox::new().with_term(nu, &mp)?;
    let cut_nodes = cut_mask(space_p);
    if cut_nodes.iter().any(|&c| c) {
        let mut lp = assemble_a_u(space_p);
        let mut dummy = vec![0.0; space_p.ndofs()];
        apply_dirichlet(&mut lp, &mut dummy, &cut_nodes, &vec![0.0; cut_nodes.len()]);
        schur = schur.with_term(rho0 / dt, &lp)?;
    }
    Ok(schur)
}

/// Nodes of a P1 space lying on some cut.
fn cut_mask(space: &FeSpace) -> Vec<bool> {
    let mut m = vec![false; space.num_nodes()];
    for f in space.mesh().facets() {
        if matches!(f.tag, BoundaryTag::Cut(_)) {
            for &v in &f.vertices {
                m[v] = true;
            }
        }
    }
    m
}

/// `b_u(w, w, φ) = ∫ (w·∇)w · φ` for every velocity test function.
pub fn convection_load(space: &FeSpace, w: &[f64]) -> Vec<f64> {
    let nc = space.components();
    let mut out = vec![0.0; space.ndofs()];
    for_each_cell_point(&[space], QUADRATURE_DEGREE, |c, _, wt, b| {
        let nodes = space.cell_nodes(c);
        let val = b[0].value(nodes, w, nc);
        let grad = b[0].gradient(nodes, w, nc);
        let mut adv = [0.0; 3];
        for (i, a) in adv.iter_mut().enumerate().take(nc) {
            *a = (0..nc).map(|j| val[j] * grad[i][j]).sum();
        }
        for (a, &node) in nodes.iter().enumerate() {
            let phi = wt * b[0].values[a];
            for i in 0..nc {
                out[node * nc + i] += phi * adv[i];
            }
        }
    });
    out
}

/// `‖−P n + ν ∇u n‖_{L²(Γ₂)}`.
pub fn do_nothing_residual(space_u: &FeSpace, space_p: &FeSpace, nu: f64, u: &[f64], p: &[f64]) -> f64 {
    let nc = space_u.components();
    let mut total = 0.0;
    for_each_facet_point(
        &[space_u, space_p],
        QUADRATURE_DEGREE,
        |f| matches!(f.tag, BoundaryTag::Cut(_)),
        |facet, _, w, b| {
            let g = b[0].gradient(space_u.cell_nodes(facet.cell), u, nc);
            let pv = b[1].value(space_p.cell_nodes(facet.cell), p, 1)[0];
            let n = facet.normal;
            let mut s = 0.0;
            for i in 0..nc {
                let dn: f64 = (0..nc).map(|j| g[i][j] * n[j]).sum();
                let t = -pv * n[i] + nu * dn;
                s += t * t;
            }
            total += w * s;
        },
    );
    total.sqrt()
}

/// Velocity and pressure on the uniform time grid, with per-step solver
/// reports (the initial slot has none).
#[derive(Debug, Clone)]
pub struct MomentumTrajectory {
    pub velocity: Vec<FieldVector>,
    pub pressure: Vec<FieldVector>,
    pub reports: Vec<SolveReport>,
}

/// Marches from `u0` through `e_tilde.len() − 1` steps. At step `n` the load
/// uses `ẽ(tₙ)`, `ũ(tₙ)` and `f(·, tₙ)`.
pub fn solve_momentum_transient(
    system: &MomentumSystem,
    material: &EnthalpyMap,
    space_e: &FeSpace,
    e_tilde: &[FieldVector],
    u_tilde: &[FieldVector],
    f: &dyn Fn(&Point, f64, &mut [f64]),
    u0: &[f64],
) -> Result<MomentumTrajectory, StokesError> {
    if e_tilde.len() != u_tilde.len() || e_tilde.is_empty() {
        return Err(StokesError::Trajectory(format!(
            "{} enthalpy slots, {} velocity slots",
            e_tilde.len(),
            u_tilde.len()
        )));
    }
    let dt = system.dt();
    let mut u = u0.to_vec();
    for (v, &m) in u.iter_mut().zip(system.mask()) {
        if m {
            *v = 0.0;
        }
    }
    let np = system.pressure_space().ndofs();
    let mut velocity = vec![FieldVector::new(u.clone(), 0.0)];
    let mut pressure = vec![FieldVector::zeros(np, 0.0)];
    let mut reports = Vec::new();
    for n in 1..e_tilde.len() {
        let t = n as f64 * dt;
        let load = system.momentum_rhs(
            &e_tilde[n].values,
            space_e,
            material,
            &u_tilde[n].values,
            &|x, out| f(x, t, out),
        )?;
        let step = system.stokes_step(
            &u,
            &load,
            Some(&u_tilde[n].values),
            Some(&pressure[n - 1].values),
        )?;
        u = step.velocity;
        velocity.push(FieldVector::new(u.clone(), t));
        pressure.push(FieldVector::new(step.pressure, t));
        reports.push(step.report);
    }
    Ok(MomentumTrajectory {
        velocity,
        pressure,
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{Discretization, Family};
    use crate::materials::DensityLaw;
    use crate::mesh::{generate_pipe, PipeSpec};
    use std::sync::Arc;

    fn channel(h: f64) -> Discretization {
        let mesh = Arc::new(generate_pipe(&PipeSpec::channel(0.0, 4.0, 1.0, h)).unwrap());
        Discretization::taylor_hood(mesh, Family::P1)
    }

    fn unit_material() -> EnthalpyMap {
        EnthalpyMap::new(DensityLaw::constant(1.0, MaterialConstants::default()).unwrap())
    }

    #[test]
    fn zero_data_gives_zero_step() {
        let d = channel(0.5);
        let sys = MomentumSystem::new(
            &d.velocity,
            &d.pressure,
            MaterialConstants::default(),
            0.1,
            StokesOptions::default(),
        )
        .unwrap();
        let z = vec![0.0; d.velocity.ndofs()];
        let r = sys.stokes_step(&z, &z, None, None).unwrap();
        assert!(r.velocity.iter().chain(&r.pressure).all(|&v| v == 0.0));
    }

    #[test]
    fn buoyancy_load_with_unit_density() {
        let d = channel(0.5);
        let sys = MomentumSystem::new(
            &d.velocity,
            &d.pressure,
            MaterialConstants::default(),
            0.1,
            StokesOptions::default(),
        )
        .unwrap();
        let e = vec![3.0; d.enthalpy.ndofs()];
        let z = vec![0.0; d.velocity.ndofs()];
        let load = sys
            .momentum_rhs(&e, &d.enthalpy, &unit_material(), &z, &|_, o| {
                o[0] = 1.0;
                o[1] = 0.0
            })
            .unwrap();
        let ex = d.velocity.interpolate(|_, o| {
            o[0] = 1.0;
            o[1] = 0.0
        });
        let s: f64 = load.iter().zip(&ex).map(|(a, b)| a * b).sum();
        assert!((s - 8.0).abs() < 1e-12);
    }

    #[test]
    fn poiseuille_is_steady() {
        let d = channel(0.5);
        let sys = MomentumSystem::new(
            &d.velocity,
            &d.pressure,
            MaterialConstants::default(),
            0.5,
            StokesOptions::default(),
        )
        .unwrap();
        assert!(!sys.has_pressure_nullspace());
        let exact = d.velocity.interpolate(|x, o| {
            o[0] = 1.0 - x[1] * x[1];
            o[1] = 0.0
        });
        let e = vec![0.0; d.enthalpy.ndofs()];
        let z = vec![0.0; d.velocity.ndofs()];
        let load = sys
            .momentum_rhs(&e, &d.enthalpy, &unit_material(), &z, &|_, o| {
                o[0] = 2.0;
                o[1] = 0.0
            })
            .unwrap();
        let step = sys.stokes_step(&exact, &load, None, None).unwrap();
        for (a, b) in step.velocity.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(step.pressure.iter().all(|p| p.abs() < 1e-8));
        assert!(sys.do_nothing_residual(&step.velocity, &step.pressure) < 1e-8);
        let div = sys.constraint().mul(&step.velocity);
        assert!(div.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn pure_stokes_step_dissipates() {
        let d = channel(0.5);
        let sys = MomentumSystem::new(
            &d.velocity,
            &d.pressure,
            MaterialConstants::default(),
            0.05,
            StokesOptions::default(),
        )
        .unwrap();
        let m = assemble_mass(&d.velocity);
        let mut u = d.velocity.interpolate(|x, o| {
            let s = (std::f64::consts::PI * x[0] / 4.0).sin();
            o[0] = (1.0 - x[1] * x[1]) * s;
            o[1] = 0.3 * x[1] * (1.0 - x[1] * x[1]) * s;
        });
        let z = vec![0.0; u.len()];
        let mut energy = f64::INFINITY;
        for _ in 0..5 {
            u = sys.stokes_step(&u, &z, None, None).unwrap().velocity;
            let e = m.form(&u, &u);
            assert!(e < energy);
            energy = e;
        }
    }
}
