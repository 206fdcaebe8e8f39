//! Implicit-Euler stepping of the enthalpy equation
//! `e_t + u·∇e − ∇·(κ(ẽ)∇e) = h + ν D(u):D(u)` with the Newton heat
//! exchange `α β(e)` on the walls, solved by damped Newton, and homogeneous
//! Neumann data on the cuts.

use log::debug;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fem::{
    self, assemble_a_e, assemble_b_e, assemble_dissipation_load, assemble_mass, assemble_rhs_g,
    facet_to_cell_bary, CellGeometry, FeSpace, FemError, FieldVector, PointBasis, QuadratureRule,
    SparseMatrix, QUADRATURE_DEGREE,
};
use crate::geom::Point;
use crate::linsolve::{solve_gmres, solve_spd, LinsolveError};
use crate::materials::EnthalpyMap;
use crate::mesh::BoundaryTag;

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("linear solve failed: {0}")]
    Solve(#[from] LinsolveError),
    #[error("Newton did not converge in {iterations} iterations (residual {residual:.3e})")]
    Newton { iterations: usize, residual: f64 },
    #[error("invalid time step {0}")]
    TimeStep(f64),
    #[error("trajectory length mismatch: {0}")]
    Trajectory(String),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnergyOptions {
    /// Newton tolerance on the residual, relative to the right-hand side.
    pub tol: f64,
    pub max_newton: usize,
    pub linear_tol: f64,
    pub linear_max_iter: usize,
}

impl Default for EnergyOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_newton: 50,
            linear_tol: 1e-13,
            linear_max_iter: 5000,
        }
    }
}

/// Pointwise wall data and volume source at a given time.
pub struct EnergyData<'a> {
    pub theta_inf: &'a dyn Fn(&Point, f64) -> f64,
    pub q_e: &'a dyn Fn(&Point, f64) -> f64,
    pub h: &'a dyn Fn(&Point, f64) -> f64,
}

impl EnergyData<'static> {
    pub fn zero() -> Self {
        Self {
            theta_inf: &|_, _| 0.0,
            q_e: &|_, _| 0.0,
            h: &|_, _| 0.0,
        }
    }
}

/// Wall quadrature points with shape values of the enthalpy space.
#[derive(Debug, Clone)]
pub struct WallTrace {
    points: Vec<(usize, f64, Vec<f64>)>,
    nodes_per_cell: usize,
}

impl WallTrace {
    pub fn new(space: &FeSpace) -> Self {
        let mesh = space.mesh();
        let dim = mesh.dim();
        let rule = QuadratureRule::simplex(dim - 1, QUADRATURE_DEGREE);
        let mut basis = PointBasis::new(space.family(), dim);
        let mut points = Vec::new();
        for f in mesh.facets().iter().filter(|f| f.tag == BoundaryTag::Wall) {
            let geo = CellGeometry::new(dim, &mesh.cell_points(f.cell));
            for (fb, w) in rule.bary.iter().zip(&rule.weights) {
                basis.eval(&geo, &facet_to_cell_bary(dim, f.opposite, fb));
                points.push((f.cell, w * f.area, basis.values.clone()));
            }
        }
        Self {
            points,
            nodes_per_cell: space.nodes_per_cell(),
        }
    }

    /// `N(e)_a = ∫_Γ₁ β(e) φ_a` and, if requested, its Jacobian.
    fn evaluate(
        &self,
        space: &FeSpace,
        material: &EnthalpyMap,
        e: &[f64],
        values: &mut [f64],
        mut jac: Option<&mut SparseMatrix>,
    ) {
        values.iter_mut().for_each(|v| *v = 0.0);
        let n = self.nodes_per_cell;
        let mut local = vec![0.0; n * n];
        for (cell, w, phi) in &self.points {
            let nodes = space.cell_nodes(*cell);
            let eh: f64 = nodes.iter().zip(phi).map(|(&k, p)| e[k] * p).sum();
            let b = material.inverse_enthalpy(eh);
            for (a, &k) in nodes.iter().enumerate() {
                values[k] += w * b * phi[a];
            }
            if let Some(j) = jac.as_deref_mut() {
                let db = w * material.inverse_enthalpy_derivative(eh);
                for a in 0..n {
                    for c in 0..n {
                        local[a * n + c] = db * phi[a] * phi[c];
                    }
                }
                j.add_local(nodes, nodes, &local);
            }
        }
    }
}

/// The linear part `M/Δt + A_e(κ(ẽ)) + B_e(u)` and right-hand side
/// `M e_prev/Δt + ⟨g,·⟩ + ν d(u,u,·)` of one step, plus the wall
/// nonlinearity.
pub struct EnergyStepSystem<'a> {
    pub operator: SparseMatrix,
    pub rhs: Vec<f64>,
    pub alpha: f64,
    pub transport: bool,
    pub dissipation: Vec<f64>,
    space: &'a FeSpace,
    material: &'a EnthalpyMap,
    trace: &'a WallTrace,
    jac_pattern: SparseMatrix,
}

impl EnergyStepSystem<'_> {
    pub fn residual(&self, e: &[f64]) -> Vec<f64> {
        let mut nb = vec![0.0; e.len()];
        self.trace.evaluate(self.space, self.material, e, &mut nb, None);
        let mut r = self.operator.mul(e);
        for i in 0..r.len() {
            r[i] += self.alpha * nb[i] - self.rhs[i];
        }
        r
    }

    fn jacobian(&self, e: &[f64]) -> SparseMatrix {
        let mut bj = self.jac_pattern.clone();
        let mut scratch = vec![0.0; e.len()];
        self.trace
            .evaluate(self.space, self.material, e, &mut scratch, Some(&mut bj));
        self.operator.linear_combination(1.0, &bj, self.alpha)
    }

    /// `γ(β(e), e) = ∫_Γ₁ β(e) e`.
    pub fn gamma_pairing(&self, e: &[f64]) -> f64 {
        let mut nb = vec![0.0; e.len()];
        self.trace.evaluate(self.space, self.material, e, &mut nb, None);
        nb.iter().zip(e).map(|(a, b)| a * b).sum()
    }

    /// Lagged-β fixed point `A e_{k+1} = rhs − α N(e_k)`, used as an
    /// independent check of the Newton solver.
    pub fn lagged_boundary_solve(
        &self,
        guess: &[f64],
        tol: f64,
        max_iter: usize,
    ) -> Result<(Vec<f64>, usize), EnergyError> {
        let mut e = guess.to_vec();
        let mut nb = vec![0.0; e.len()];
        for k in 1..=max_iter {
            self.trace.evaluate(self.space, self.material, &e, &mut nb, None);
            let b: Vec<f64> = self
                .rhs
                .iter()
                .zip(&nb)
                .map(|(r, n)| r - self.alpha * n)
                .collect();
            let (next, _) = solve_gmres(&self.operator, &b, Some(&e), 1e-14, 5000)?;
            let diff = next
                .iter()
                .zip(&e)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            let scale = next.iter().fold(1.0f64, |m, a| m.max(a.abs()));
            e = next;
            if diff <= tol * scale {
                return Ok((e, k));
            }
        }
        Err(EnergyError::Newton {
            iterations: max_iter,
            residual: f64::NAN,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residuals: Vec<f64>,
    /// Whether any step was shortened by the line search.
    pub damped: bool,
}

/// Damped Newton for `A e + α N(e) = rhs`. Since β is monotone and
/// Lipschitz the Jacobian `A + α N′(e)` stays nonsingular for any iterate.
pub fn newton_boundary_solve(
    system: &EnergyStepSystem,
    guess: &[f64],
    options: &EnergyOptions,
) -> Result<(Vec<f64>, NewtonReport), EnergyError> {
    let mut e = guess.to_vec();
    let scale = fem_norm(&system.rhs).max(1e-300);
    let mut r = system.residual(&e);
    let mut rn = fem_norm(&r);
    let mut report = NewtonReport {
        iterations: 0,
        residuals: vec![rn],
        damped: false,
    };
    let target = options.tol * scale;
    while rn > target {
        if report.iterations >= options.max_newton {
            return Err(EnergyError::Newton {
                iterations: report.iterations,
                residual: rn,
            });
        }
        let j = system.jacobian(&e);
        let (delta, _) = if system.transport {
            solve_gmres(&j, &r, None, options.linear_tol, options.linear_max_iter)?
        } else {
            solve_spd(&j, &r, options.linear_tol, options.linear_max_iter)?
        };
        let mut lambda = 1.0;
        let (mut trial, mut tr, mut tn);
        loop {
            trial = e.iter().zip(&delta).map(|(a, d)| a - lambda * d).collect::<Vec<_>>();
            tr = system.residual(&trial);
            tn = fem_norm(&tr);
            if tn < rn || tn <= target || lambda < 1.0 / 1024.0 {
                break;
            }
            lambda *= 0.5;
            report.damped = true;
        }
        if lambda < 1.0 {
            debug!("Newton step damped to {lambda}");
        }
        e = trial;
        r = tr;
        rn = tn;
        report.iterations += 1;
        report.residuals.push(rn);
    }
    Ok((e, report))
}

fn fem_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Per-trajectory energy solver: caches the mass matrix and wall trace.
pub struct EnergySolver<'a> {
    space_e: &'a FeSpace,
    space_u: &'a FeSpace,
    material: &'a EnthalpyMap,
    dt: f64,
    mass: SparseMatrix,
    trace: WallTrace,
    jac_pattern: SparseMatrix,
    pub options: EnergyOptions,
}

impl<'a> EnergySolver<'a> {
    pub fn new(
        space_e: &'a FeSpace,
        space_u: &'a FeSpace,
        material: &'a EnthalpyMap,
        dt: f64,
        options: EnergyOptions,
    ) -> Result<Self, EnergyError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(EnergyError::TimeStep(dt));
        }
        fem::check_pair(space_e, space_u)?;
        let mass = assemble_mass(space_e);
        let jac_pattern = mass.scaled(0.0);
        Ok(Self {
            space_e,
            space_u,
            material,
            dt,
            mass,
            trace: WallTrace::new(space_e),
            jac_pattern,
            options,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Assembles the step system at time `t` with lagged enthalpy `e_tilde`
    /// and transport velocity `u`.
    pub fn system(
        &self,
        e_prev: &[f64],
        e_tilde: &[f64],
        u: &[f64],
        data: &EnergyData,
        t: f64,
    ) -> Result<EnergyStepSystem<'_>, EnergyError> {
        let c = self.material.constants();
        fem::check_len(self.space_e, e_prev, "previous enthalpy")?;
        let kappa: Vec<f64> = e_tilde.iter().map(|&e| self.material.kappa(e)).collect();
        let a_e = assemble_a_e(&kappa, self.space_e)?;
        let mut operator = self.mass.linear_combination(1.0 / self.dt, &a_e, 1.0);
        let transport = u.iter().any(|&v| v != 0.0);
        if transport {
            let b_e = assemble_b_e(u, self.space_u, self.space_e)?;
            operator = operator.linear_combination(1.0, &b_e, 1.0);
        } else {
            fem::check_len(self.space_u, u, "velocity")?;
        }
        let g = assemble_rhs_g(
            self.space_e,
            c.heat_transfer,
            &|x| (data.theta_inf)(x, t),
            &|x| (data.q_e)(x, t),
            &|x| (data.h)(x, t),
        );
        let dissipation = if transport {
            assemble_dissipation_load(u, u, self.space_u, self.space_e)?
        } else {
            vec![0.0; self.space_e.ndofs()]
        };
        let me = self.mass.mul(e_prev);
        let rhs = (0..me.len())
            .map(|i| me[i] / self.dt + g[i] + c.viscosity * dissipation[i])
            .collect();
        Ok(EnergyStepSystem {
            operator,
            rhs,
            alpha: c.heat_transfer,
            transport,
            dissipation,
            space: self.space_e,
            material: self.material,
            trace: &self.trace,
            jac_pattern: self.jac_pattern.clone(),
        })
    }

    /// One implicit step from `e_prev` to time `t`.
    pub fn energy_step(
        &self,
        e_prev: &[f64],
        e_tilde: &[f64],
        u: &[f64],
        data: &EnergyData,
        t: f64,
    ) -> Result<StepOutcome, EnergyError> {
        let sys = self.system(e_prev, e_tilde, u, data, t)?;
        let (e, newton) = newton_boundary_solve(&sys, e_prev, &self.options)?;
        let gamma = sys.gamma_pairing(&e);
        let dmin = sys.dissipation.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        Ok(StepOutcome {
            enthalpy: e,
            newton,
            gamma_pairing: gamma,
            dissipation_min: dmin,
        })
    }
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub enthalpy: Vec<f64>,
    pub newton: NewtonReport,
    pub gamma_pairing: f64,
    /// Smallest entry of the dissipation load (nonnegative for P1).
    pub dissipation_min: f64,
}

#[derive(Debug, Clone)]
pub struct EnergyTrajectory {
    pub enthalpy: Vec<FieldVector>,
    pub newton: Vec<NewtonReport>,
    pub gamma_pairing: Vec<f64>,
    pub dissipation_min: Vec<f64>,
}

/// Marches from `e0`; step `n` uses `ẽ(tₙ)`, `u(tₙ)` and data at `tₙ`.
pub fn solve_energy_transient(
    solver: &EnergySolver,
    e_tilde: &[FieldVector],
    u: &[FieldVector],
    data: &EnergyData,
    e0: &[f64],
) -> Result<EnergyTrajectory, EnergyError> {
    if e_tilde.len() != u.len() || e_tilde.is_empty() {
        return Err(EnergyError::Trajectory(format!(
            "{} enthalpy slots, {} velocity slots",
            e_tilde.len(),
            u.len()
        )));
    }
    let mut e = e0.to_vec();
    let mut out = EnergyTrajectory {
        enthalpy: vec![FieldVector::new(e.clone(), 0.0)],
        newton: Vec::new(),
        gamma_pairing: Vec::new(),
        dissipation_min: Vec::new(),
    };
    for n in 1..e_tilde.len() {
        let t = n as f64 * solver.dt();
        let step = solver.energy_step(&e, &e_tilde[n].values, &u[n].values, data, t)?;
        e = step.enthalpy;
        out.enthalpy.push(FieldVector::new(e.clone(), t));
        out.newton.push(step.newton);
        out.gamma_pairing.push(step.gamma_pairing);
        out.dissipation_min.push(step.dissipation_min);
    }
    Ok(out)
}
