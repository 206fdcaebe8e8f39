//! The decoupled map `T(ũ, ẽ) = (u, e)`, its Picard iteration, and the
//! smallness and constant-estimation checks.

use std::sync::Arc;

use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::diagnostics::{self, x_norm_surrogate, XNorm};
use crate::energy::{
    solve_energy_transient, EnergyData, EnergyError, EnergyOptions, EnergySolver, EnergyTrajectory,
};
use crate::fem::{assemble_rhs_g, Discretization, FemError, FieldVector};
use crate::geom::Point;
use crate::materials::{DensityLaw, EnthalpyMap};
use crate::stokes::{
    solve_momentum_transient, MomentumSystem, MomentumTrajectory, StokesError, StokesOptions,
};

pub type ScalarData = Arc<dyn Fn(&Point, f64) -> f64 + Send + Sync>;
pub type VectorData = Arc<dyn Fn(&Point, f64, &mut [f64]) + Send + Sync>;

pub fn zero_scalar() -> ScalarData {
    Arc::new(|_, _| 0.0)
}

pub fn zero_vector() -> VectorData {
    Arc::new(|_, _, out: &mut [f64]| out.iter_mut().for_each(|v| *v = 0.0))
}

#[derive(Debug, Error)]
pub enum CouplerError {
    #[error(transparent)]
    Stokes(#[from] StokesError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("Picard iteration did not reach the tolerance in {} iterations", .0.iterations)]
    NotConverged(Box<PicardReport>),
    #[error("no admissible samples: all {0} had zero data")]
    NoSamples(usize),
}

/// Everything the coupled problem needs on one discretization.
#[derive(Clone)]
pub struct ScenarioData {
    pub disc: Discretization,
    pub material: EnthalpyMap,
    pub f: VectorData,
    pub h: ScalarData,
    pub theta_inf: ScalarData,
    pub q_e: ScalarData,
    pub u0: Vec<f64>,
    pub e0: Vec<f64>,
    pub horizon: f64,
    pub dt: f64,
}

impl ScenarioData {
    /// Number of time steps `T/Δt`.
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<(), CouplerError> {
        if !(self.horizon > 0.0 && self.dt > 0.0) {
            return Err(CouplerError::Invalid("T and Δt must be positive".into()));
        }
        let n = self.horizon / self.dt;
        if (n - n.round()).abs() > 1e-9 * n.max(1.0) || n.round() < 1.0 {
            return Err(CouplerError::Invalid(format!(
                "T/Δt = {n} is not a positive integer"
            )));
        }
        if self.u0.len() != self.disc.velocity.ndofs() || self.e0.len() != self.disc.enthalpy.ndofs() {
            return Err(CouplerError::Invalid("initial data length".into()));
        }
        let mask = self.disc.velocity.dirichlet_dofs();
        let scale = self.u0.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if self
            .u0
            .iter()
            .zip(&mask)
            .any(|(v, &m)| m && v.abs() > 1e-12 * scale)
        {
            return Err(CouplerError::Invalid("u₀ does not vanish on the wall".into()));
        }
        Ok(())
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    /// Wall and volume load `⟨g(tₙ), ·⟩` of the enthalpy equation.
    pub fn energy_load(&self, n: usize) -> Vec<f64> {
        let t = self.time(n);
        assemble_rhs_g(
            &self.disc.enthalpy,
            self.material.constants().heat_transfer,
            &|x| (self.theta_inf)(x, t),
            &|x| (self.q_e)(x, t),
            &|x| (self.h)(x, t),
        )
    }
}

/// Picard iterate on the time grid.
#[derive(Debug, Clone)]
pub struct PicardState {
    pub velocity: Vec<FieldVector>,
    pub enthalpy: Vec<FieldVector>,
    pub iteration: usize,
    pub increments: Vec<f64>,
}

impl PicardState {
    /// Constant-in-time extension of the initial data.
    pub fn initial(data: &ScenarioData) -> Self {
        let grid = |v: &[f64]| {
            (0..=data.steps())
                .map(|n| FieldVector::new(v.to_vec(), data.time(n)))
                .collect()
        };
        Self {
            velocity: grid(&data.u0),
            enthalpy: grid(&data.e0),
            iteration: 0,
            increments: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PicardOptions {
    pub tol: f64,
    pub max_outer: usize,
    /// Under-relaxation factor in `(0, 1]`.
    pub omega: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_outer: 30,
            omega: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PicardReport {
    pub iterations: usize,
    pub converged: bool,
    /// Absolute increments `max_n ‖Δu‖_{H¹} + ‖Δe‖_{L²}`.
    pub increments: Vec<f64>,
    /// Increments relative to the first one.
    pub relative: Vec<f64>,
    /// Ratios of successive increments.
    pub ratios: Vec<f64>,
    /// Whether some increment failed to decrease after the second iteration.
    pub non_contracting: bool,
    /// X-surrogate of each velocity iterate.
    pub x_norms: Vec<f64>,
    pub min_gamma_pairing: f64,
    pub min_dissipation: f64,
}

/// One application of `T` with its subsystem outputs.
pub struct Application {
    pub momentum: MomentumTrajectory,
    pub energy: EnergyTrajectory,
}

/// Solvers bound to one scenario; the momentum factorization is reused
/// across Picard iterations.
pub struct Coupler<'a> {
    pub data: &'a ScenarioData,
    momentum: MomentumSystem,
    energy_options: EnergyOptions,
}

impl<'a> Coupler<'a> {
    pub fn new(
        data: &'a ScenarioData,
        stokes: StokesOptions,
        energy_options: EnergyOptions,
    ) -> Result<Self, CouplerError> {
        data.validate()?;
        let momentum = MomentumSystem::new(
            &data.disc.velocity,
            &data.disc.pressure,
            *data.material.constants(),
            data.dt,
            stokes,
        )?;
        Ok(Self {
            data,
            momentum,
            energy_options,
        })
    }

    pub fn momentum(&self) -> &MomentumSystem {
        &self.momentum
    }

    pub fn energy_solver(&self) -> Result<EnergySolver<'_>, CouplerError> {
        Ok(EnergySolver::new(
            &self.data.disc.enthalpy,
            &self.data.disc.velocity,
            &self.data.material,
            self.data.dt,
            self.energy_options,
        )?)
    }

    /// `T(ũ, ẽ)`: momentum with lagged buoyancy and convection, then energy
    /// with lagged diffusivity and the new velocity.
    pub fn apply_t(
        &self,
        u_tilde: &[FieldVector],
        e_tilde: &[FieldVector],
    ) -> Result<Application, CouplerError> {
        let d = self.data;
        let n = d.steps() + 1;
        if u_tilde.len() != n || e_tilde.len() != n {
            return Err(CouplerError::Invalid(format!(
                "trajectories have {}/{} slots, grid has {n}",
                u_tilde.len(),
                e_tilde.len()
            )));
        }
        let f = d.f.clone();
        let momentum = solve_momentum_transient(
            &self.momentum,
            &d.material,
            &d.disc.enthalpy,
            e_tilde,
            u_tilde,
            &move |x, t, out| f(x, t, out),
            &d.u0,
        )?;
        let (th, qe, h) = (d.theta_inf.clone(), d.q_e.clone(), d.h.clone());
        let th = move |x: &Point, t| th(x, t);
        let qe = move |x: &Point, t| qe(x, t);
        let h = move |x: &Point, t| h(x, t);
        let data = EnergyData {
            theta_inf: &th,
            q_e: &qe,
            h: &h,
        };
        let solver = self.energy_solver()?;
        let energy = solve_energy_transient(&solver, e_tilde, &momentum.velocity, &data, &d.e0)?;
        Ok(Application { momentum, energy })
    }

    /// Stopping metric between two iterates.
    pub fn increment(&self, u: (&[FieldVector], &[FieldVector]), e: (&[FieldVector], &[FieldVector])) -> f64 {
        let su = &self.data.disc.velocity;
        let se = &self.data.disc.enthalpy;
        let mut m = 0.0f64;
        for n in 0..u.0.len() {
            let du: Vec<f64> = u.0[n].values.iter().zip(&u.1[n].values).map(|(a, b)| a - b).collect();
            let de: Vec<f64> = e.0[n].values.iter().zip(&e.1[n].values).map(|(a, b)| a - b).collect();
            m = m.max(diagnostics::h1_norm(su, &du) + diagnostics::l2_norm(se, &de));
        }
        m
    }

    /// Iterates `(ũ, ẽ) ← T(ũ, ẽ)` from the extended initial data until
    /// the relative increment is below `tol`.
    pub fn picard_solve(&self, options: &PicardOptions) -> Result<PicardOutcome, CouplerError> {
        if !(options.omega > 0.0 && options.omega <= 1.0) {
            return Err(CouplerError::Invalid(format!("ω = {} not in (0, 1]", options.omega)));
        }
        let mut state = PicardState::initial(self.data);
        let mut report = PicardReport {
            iterations: 0,
            converged: false,
            increments: Vec::new(),
            relative: Vec::new(),
            ratios: Vec::new(),
            non_contracting: false,
            x_norms: Vec::new(),
            min_gamma_pairing: f64::INFINITY,
            min_dissipation: f64::INFINITY,
        };
        let mut pressure = Vec::new();
        for k in 1..=options.max_outer {
            let app = self.apply_t(&state.velocity, &state.enthalpy)?;
            let (mut u, mut e) = (app.momentum.velocity, app.energy.enthalpy);
            if options.omega < 1.0 {
                relax(&mut u, &state.velocity, options.omega);
                relax(&mut e, &state.enthalpy, options.omega);
            }
            let inc = self.increment((&u, &state.velocity), (&e, &state.enthalpy));
            report.x_norms.push(x_norm_surrogate(&self.data.disc.velocity, &u)?.total);
            for &g in &app.energy.gamma_pairing {
                report.min_gamma_pairing = report.min_gamma_pairing.min(g);
            }
            for &g in &app.energy.dissipation_min {
                report.min_dissipation = report.min_dissipation.min(g);
            }
            if let Some(&prev) = report.increments.last() {
                let r = if prev > 0.0 { inc / prev } else { 0.0 };
                report.ratios.push(r);
                if k > 2 && r >= 1.0 {
                    report.non_contracting = true;
                }
            }
            report.increments.push(inc);
            let first = report.increments[0];
            let rel = if first > 0.0 { inc / first } else { 0.0 };
            report.relative.push(rel);
            report.iterations = k;
            state.velocity = u;
            state.enthalpy = e;
            state.iteration = k;
            state.increments.push(inc);
            pressure = app.momentum.pressure;
            info!("Picard {k}: increment {inc:.6e} (relative {rel:.3e})");
            if inc == 0.0 || (k > 1 && rel <= options.tol) {
                report.converged = true;
                break;
            }
        }
        if !report.converged {
            warn!(
                "Picard stopped after {} iterations without convergence",
                report.iterations
            );
            report.non_contracting = true;
            return Err(CouplerError::NotConverged(Box::new(report)));
        }
        Ok(PicardOutcome {
            velocity: state.velocity,
            pressure,
            enthalpy: state.enthalpy,
            report,
        })
    }
}

fn relax(new: &mut [FieldVector], old: &[FieldVector], omega: f64) {
    for (a, b) in new.iter_mut().zip(old) {
        for (x, y) in a.values.iter_mut().zip(&b.values) {
            *x = omega * *x + (1.0 - omega) * y;
        }
    }
}

#[derive(Debug, Clone)]
pub struct PicardOutcome {
    pub velocity: Vec<FieldVector>,
    pub pressure: Vec<FieldVector>,
    pub enthalpy: Vec<FieldVector>,
    pub report: PicardReport,
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Smallness {
    pub pass: bool,
    /// `1/(4 C_S² T^{1/8}) − (ρ₂‖f‖ + ‖u₀‖)`.
    pub margin: f64,
    pub threshold: f64,
    pub data_size: f64,
}

pub fn check_smallness(f_norm: f64, u0_norm: f64, horizon: f64, c_s: f64, rho2: f64) -> Smallness {
    let threshold = 1.0 / (4.0 * c_s * c_s * horizon.powf(0.125));
    let data_size = rho2 * f_norm + u0_norm;
    let margin = threshold - data_size;
    Smallness {
        pass: margin >= 0.0,
        margin,
        threshold,
        data_size,
    }
}

/// Radius `1/(2 C_S T^{1/8})` of the velocity ball.
pub fn ball_radius(c_s: f64, horizon: f64) -> f64 {
    1.0 / (2.0 * c_s * horizon.powf(0.125))
}

/// `‖f‖_{L²(I;L²)}` by the trapezoid rule over the grid.
pub fn force_norm(data: &ScenarioData) -> f64 {
    let d = data.mesh_dim();
    let per: Vec<f64> = (0..=data.steps())
        .map(|n| {
            let t = data.time(n);
            diagnostics::function_l2_norm(&data.disc.enthalpy, d, |x, o| (data.f)(x, t, o)).powi(2)
        })
        .collect();
    diagnostics::trapezoid(&per, data.dt).sqrt()
}

impl ScenarioData {
    fn mesh_dim(&self) -> usize {
        self.disc.mesh().dim()
    }

    /// Data sizes `(‖f‖_{L²(I;L²)}, ‖u₀‖_{H¹})`.
    pub fn data_norms(&self) -> (f64, f64) {
        (force_norm(self), diagnostics::h1_norm(&self.disc.velocity, &self.u0))
    }
}

/// Admissible Stokes data for the constant estimate.
#[derive(Clone)]
pub struct CsSample {
    pub f: VectorData,
    pub u0: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CsEstimate {
    /// Largest observed ratio; a lower bound for the constant on this mesh.
    pub value: f64,
    pub lower_bound: bool,
    pub ratios: Vec<f64>,
    pub used: usize,
    pub skipped: usize,
    pub mesh: String,
}

/// Ratio `‖u‖_X / (‖f‖_{L²(I;L²)} + ‖u₀‖_{H¹})` for Stokes solves of each
/// sample with constant density. Samples with zero data are skipped.
pub fn estimate_cs_from_samples(
    base: &ScenarioData,
    samples: &[CsSample],
) -> Result<CsEstimate, CouplerError> {
    let law = DensityLaw::constant(
        base.material.constants().reference_density,
        *base.material.constants(),
    )
    .map_err(|e| CouplerError::Invalid(e.to_string()))?;
    let material = EnthalpyMap::new(law);
    let system = MomentumSystem::new(
        &base.disc.velocity,
        &base.disc.pressure,
        *material.constants(),
        base.dt,
        StokesOptions::default(),
    )?;
    let steps = base.steps();
    let zeros_e: Vec<FieldVector> = (0..=steps)
        .map(|n| FieldVector::zeros(base.disc.enthalpy.ndofs(), base.time(n)))
        .collect();
    let zeros_u: Vec<FieldVector> = (0..=steps)
        .map(|n| FieldVector::zeros(base.disc.velocity.ndofs(), base.time(n)))
        .collect();
    let results: Vec<Result<Option<f64>, CouplerError>> = samples
        .par_iter()
        .map(|s| {
            let mut data = base.clone();
            data.f = s.f.clone();
            data.u0 = s.u0.clone();
            let (fnorm, unorm) = data.data_norms();
            if fnorm + unorm == 0.0 {
                return Ok(None);
            }
            let f = s.f.clone();
            let traj = solve_momentum_transient(
                &system,
                &material,
                &base.disc.enthalpy,
                &zeros_e,
                &zeros_u,
                &move |x, t, o| f(x, t, o),
                &s.u0,
            )?;
            let x: XNorm = x_norm_surrogate(&base.disc.velocity, &traj.velocity)?;
            Ok(Some(x.total / (fnorm + unorm)))
        })
        .collect();
    let mut ratios = Vec::new();
    let mut skipped = 0;
    for r in results {
        match r? {
            Some(v) => ratios.push(v),
            None => skipped += 1,
        }
    }
    if ratios.is_empty() {
        return Err(CouplerError::NoSamples(samples.len()));
    }
    Ok(CsEstimate {
        value: ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        lower_bound: true,
        used: ratios.len(),
        ratios,
        skipped,
        mesh: base.disc.mesh().fingerprint(),
    })
}

/// Random smooth sample `i` from the stream seeded with `seed + i`.
pub fn random_sample(data: &ScenarioData, seed: u64, i: usize) -> CsSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
    let dim = data.disc.mesh().dim();
    let modes: Vec<[f64; 6]> = (0..3 * dim)
        .map(|_| {
            [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.0..3.0),
                rng.gen_range(0.0..3.0),
                rng.gen_range(0.0..3.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(-1.0..1.0),
            ]
        })
        .collect();
    let u0_amp: f64 = rng.gen_range(-1.0..1.0);
    let eval = move |x: &Point, t: f64, out: &mut [f64]| {
        for (c, o) in out.iter_mut().enumerate() {
            *o = modes[c * 3..c * 3 + 3]
                .iter()
                .map(|m| m[0] * (m[1] * x[0] + m[2] * x[1] + m[3] * x[2] + m[4]).sin() * (1.0 + m[5] * t))
                .sum();
        }
    };
    let eval = Arc::new(eval);
    let e2 = eval.clone();
    let mut u0 = data
        .disc
        .velocity
        .interpolate(|x, o| e2(x, 0.0, o));
    for (v, m) in u0.iter_mut().zip(data.disc.velocity.dirichlet_dofs()) {
        *v = if m { 0.0 } else { u0_amp * *v };
    }
    CsSample { f: eval, u0 }
}

/// Seeded estimate over `samples` random data sets.
pub fn estimate_cs(data: &ScenarioData, samples: usize, seed: u64) -> Result<CsEstimate, CouplerError> {
    let set: Vec<CsSample> = (0..samples).map(|i| random_sample(data, seed, i)).collect();
    estimate_cs_from_samples(data, &set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::Family;
    use crate::materials::MaterialConstants;
    use crate::mesh::{generate_pipe, PipeSpec};

    fn scenario(h: f64, steps: usize) -> ScenarioData {
        let mesh = Arc::new(generate_pipe(&PipeSpec::channel(0.0, 4.0, 1.0, h)).unwrap());
        let disc = Discretization::taylor_hood(mesh, Family::P1);
        let law = DensityLaw::new(vec![(0.0, 1.0), (1.0, 0.9)], MaterialConstants::default()).unwrap();
        ScenarioData {
            u0: vec![0.0; disc.velocity.ndofs()],
            e0: vec![0.0; disc.enthalpy.ndofs()],
            disc,
            material: EnthalpyMap::new(law),
            f: zero_vector(),
            h: zero_scalar(),
            theta_inf: zero_scalar(),
            q_e: zero_scalar(),
            horizon: 0.1 * steps as f64,
            dt: 0.1,
        }
    }

    fn heated(mut s: ScenarioData) -> ScenarioData {
        s.f = Arc::new(|_, _, o: &mut [f64]| {
            o[0] = 0.05;
            o[1] = 0.0;
        });
        s.theta_inf = Arc::new(|x, _| 0.5 * (1.0 + x[1]));
        s
    }

    #[test]
    fn smallness_examples() {
        let s = check_smallness(0.1, 0.1, 1.0, 1.0, 1.0);
        assert!(s.pass && (s.margin - 0.05).abs() < 1e-15);
        let s = check_smallness(0.3, 0.0, 1.0, 1.0, 1.0);
        assert!(!s.pass && (s.margin + 0.05).abs() < 1e-15);
        assert!(check_smallness(0.0, 0.0, 1e6, 1e3, 5.0).pass);
    }

    #[test]
    fn zero_data_is_fixed_in_one_iteration() {
        let s = scenario(0.5, 3);
        let c = Coupler::new(&s, StokesOptions::default(), EnergyOptions::default()).unwrap();
        let out = c.picard_solve(&PicardOptions::default()).unwrap();
        assert_eq!(out.report.iterations, 1);
        assert!(out.velocity.iter().all(|f| f.values.iter().all(|&v| v == 0.0)));
        assert!(out.enthalpy.iter().all(|f| f.values.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn apply_t_matches_manual_composition() {
        let s = heated(scenario(0.5, 3));
        let c = Coupler::new(&s, StokesOptions::default(), EnergyOptions::default()).unwrap();
        let st = PicardState::initial(&s);
        let app = c.apply_t(&st.velocity, &st.enthalpy).unwrap();
        let f = s.f.clone();
        let m = solve_momentum_transient(
            c.momentum(),
            &s.material,
            &s.disc.enthalpy,
            &st.enthalpy,
            &st.velocity,
            &move |x, t, o| f(x, t, o),
            &s.u0,
        )
        .unwrap();
        let th = |x: &Point, _t: f64| 0.5 * (1.0 + x[1]);
        let data = EnergyData {
            theta_inf: &th,
            q_e: &|_, _| 0.0,
            h: &|_, _| 0.0,
        };
        let solver = c.energy_solver().unwrap();
        let e = solve_energy_transient(&solver, &st.enthalpy, &m.velocity, &data, &s.e0).unwrap();
        assert_eq!(app.momentum.velocity, m.velocity);
        assert_eq!(app.energy.enthalpy, e.enthalpy);
    }

    #[test]
    fn constant_density_velocity_ignores_enthalpy() {
        let mut s = heated(scenario(0.5, 2));
        s.material = EnthalpyMap::new(DensityLaw::constant(1.0, MaterialConstants::default()).unwrap());
        let c = Coupler::new(&s, StokesOptions::default(), EnergyOptions::default()).unwrap();
        let st = PicardState::initial(&s);
        let a = c.apply_t(&st.velocity, &st.enthalpy).unwrap();
        let shifted: Vec<FieldVector> = st
            .enthalpy
            .iter()
            .map(|f| FieldVector::new(vec![3.7; f.len()], f.time))
            .collect();
        let b = c.apply_t(&st.velocity, &shifted).unwrap();
        assert_eq!(a.momentum.velocity, b.momentum.velocity);
    }

    #[test]
    fn small_data_contracts() {
        let s = heated(scenario(0.5, 4));
        let c = Coupler::new(&s, StokesOptions::default(), EnergyOptions::default()).unwrap();
        let out = c.picard_solve(&PicardOptions::default()).unwrap();
        assert!(out.report.converged);
        assert!(out.report.iterations <= 30);
        // one more application barely moves
        let app = c.apply_t(&out.velocity, &out.enthalpy).unwrap();
        let inc = c.increment(
            (&app.momentum.velocity, &out.velocity),
            (&app.energy.enthalpy, &out.enthalpy),
        );
        assert!(inc / out.report.increments[0] <= 2.0 * 1e-6);
    }

    #[test]
    fn relaxation_is_validated() {
        let s = scenario(0.5, 1);
        let c = Coupler::new(&s, StokesOptions::default(), EnergyOptions::default()).unwrap();
        let o = PicardOptions { omega: 0.0, ..Default::default() };
        assert!(c.picard_solve(&o).is_err());
    }

    #[test]
    fn non_integral_grid_is_rejected() {
        let mut s = scenario(0.5, 1);
        s.horizon = 0.25;
        assert!(s.validate().is_err());
    }

    #[test]
    fn cs_estimate_samples() {
        let s = scenario(1.0, 2);
        let zero = CsSample {
            f: zero_vector(),
            u0: vec![0.0; s.disc.velocity.ndofs()],
        };
        assert!(matches!(
            estimate_cs_from_samples(&s, std::slice::from_ref(&zero)),
            Err(CouplerError::NoSamples(1))
        ));
        let one = random_sample(&s, 7, 0);
        let single = estimate_cs_from_samples(&s, &[zero, one.clone()]).unwrap();
        assert_eq!(single.used, 1);
        assert_eq!(single.skipped, 1);
        assert_eq!(single.value, single.ratios[0]);
        let a = estimate_cs(&s, 4, 11).unwrap();
        let b = estimate_cs(&s, 4, 11).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert!(a.value > 0.0);
    }
}
