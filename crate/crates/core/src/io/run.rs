//! Scenario drivers that write VTK, CSV and summary artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;
use thiserror::Error;

use super::config::RunConfig;
use super::output::{write_csv, write_vtk, CsvTable, PointField, StoredTrajectory};
use crate::coupler::{
    ball_radius, check_smallness, estimate_cs, Coupler, CouplerError, CsEstimate, PicardReport,
    PicardState, ScenarioData, Smallness,
};
use crate::diagnostics::{
    self, backflow_energy, cut_fluxes, gronwall_bound, norm_degree, x_norm_surrogate, GronwallCheck,
    XNorm,
};
use crate::energy::{solve_energy_transient, EnergyData};
use crate::fem::FieldVector;
use crate::geom::Point;
use crate::stokes::solve_momentum_transient;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("scenario setup failed: {0}")]
    Setup(String),
    #[error(transparent)]
    Coupler(#[from] CouplerError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("Picard iteration did not converge; partial summary written to {0}")]
    NotConverged(PathBuf),
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshInfo {
    pub fingerprint: String,
    pub dim: usize,
    pub vertices: usize,
    pub cells: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub status: String,
    pub mesh: MeshInfo,
    pub steps: usize,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    pub force_norm: f64,
    pub u0_norm: f64,
    pub rho_max: f64,
    pub cs_estimate: Option<CsEstimate>,
    pub smallness: Option<Smallness>,
    pub ball_radius: Option<f64>,
    pub x_norm: Option<XNorm>,
    pub within_ball: Option<bool>,
    pub gronwall_satisfied: Option<bool>,
    pub picard: Option<PicardReport>,
    pub velocity_norm_quadrature_degree: usize,
    pub enthalpy_norm_quadrature_degree: usize,
}

fn mesh_info(d: &ScenarioData) -> MeshInfo {
    let m = d.disc.mesh();
    MeshInfo {
        fingerprint: m.fingerprint(),
        dim: m.dim(),
        vertices: m.num_vertices(),
        cells: m.num_cells(),
    }
}

fn setup(cfg: &RunConfig) -> Result<ScenarioData, RunError> {
    cfg.scenario_data().map_err(|e| RunError::Setup(e.to_string()))
}

fn base_summary(cfg: &RunConfig, data: &ScenarioData) -> RunSummary {
    let (f, u0) = data.data_norms();
    RunSummary {
        status: String::new(),
        mesh: mesh_info(data),
        steps: data.steps(),
        dt: data.dt,
        horizon: data.horizon,
        seed: cfg.solver.seed,
        force_norm: f,
        u0_norm: u0,
        rho_max: data.material.rho_max(),
        cs_estimate: None,
        smallness: None,
        ball_radius: None,
        x_norm: None,
        within_ball: None,
        gronwall_satisfied: None,
        picard: None,
        velocity_norm_quadrature_degree: norm_degree(&data.disc.velocity),
        enthalpy_norm_quadrature_degree: norm_degree(&data.disc.enthalpy),
    }
}

fn write_summary(dir: &Path, s: &RunSummary) -> Result<PathBuf, RunError> {
    let path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(s).expect("summary serializes");
    fs::write(&path, text + "\n")?;
    Ok(path)
}

/// Per-vertex VTK output of one time slot.
fn write_step_vtk(
    dir: &Path,
    data: &ScenarioData,
    n: usize,
    u: &[f64],
    p: &[f64],
    e: &[f64],
) -> Result<(), RunError> {
    let mesh = data.disc.mesh();
    let dim = mesh.dim();
    let theta: Vec<f64> = e.iter().map(|&v| data.material.inverse_enthalpy(v)).collect();
    write_vtk(
        dir.join(format!("fields_{n:05}.vtk")),
        mesh,
        &[
            PointField { name: "velocity", components: dim, values: u },
            PointField { name: "pressure", components: 1, values: p },
            PointField { name: "enthalpy", components: 1, values: e },
            PointField { name: "temperature", components: 1, values: &theta },
        ],
    )?;
    Ok(())
}

fn write_all_vtk(
    dir: &Path,
    cfg: &RunConfig,
    data: &ScenarioData,
    u: &[FieldVector],
    p: &[FieldVector],
    e: &[FieldVector],
) -> Result<(), RunError> {
    if !cfg.output.vtk {
        return Ok(());
    }
    for n in (0..u.len()).step_by(cfg.output.vtk_every) {
        write_step_vtk(dir, data, n, &u[n].values, &p[n].values, &e[n].values)?;
    }
    Ok(())
}

/// Per-step diagnostics table.
pub fn diagnostics_table(
    data: &ScenarioData,
    u: &[FieldVector],
    e: &[FieldVector],
    gronwall: Option<&GronwallCheck>,
) -> CsvTable {
    let cuts = data.disc.mesh().cut_ids();
    let mut header: Vec<String> = ["step", "time", "u_l2", "u_h1", "e_l2", "kinetic", "dissipation"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(cuts.iter().map(|c| format!("flux_{c}")));
    header.extend(cuts.iter().map(|c| format!("backflow_{c}")));
    if gronwall.is_some() {
        header.extend(["gronwall_energy", "gronwall_bound", "gronwall_ok"].map(String::from));
    }
    let su = &data.disc.velocity;
    let se = &data.disc.enthalpy;
    let mut t = CsvTable::new(header);
    for n in 0..u.len() {
        let uu = &u[n].values;
        let l2 = diagnostics::l2_norm(su, uu);
        let mut row = vec![
            u[n].time,
            l2,
            diagnostics::h1_norm(su, uu),
            diagnostics::l2_norm(se, &e[n].values),
            0.5 * l2 * l2,
            diagnostics::h1_seminorm(su, uu).powi(2),
        ];
        row.extend(cut_fluxes(su, uu).into_iter().map(|(_, v)| v));
        row.extend(backflow_energy(su, uu).into_iter().map(|(_, v)| v));
        if let Some(g) = gronwall {
            let ok = g.energy[n] <= g.bound[n] * (1.0 + 1e-12);
            row.extend([g.energy[n], g.bound[n], if ok { 1.0 } else { 0.0 }]);
        }
        t.push(n, row);
    }
    t
}

pub fn picard_table(r: &PicardReport) -> CsvTable {
    let mut t = CsvTable::new(["iteration", "increment", "relative", "x_norm"].map(String::from).to_vec());
    for k in 0..r.iterations {
        t.push(k + 1, vec![r.increments[k], r.relative[k], r.x_norms[k]]);
    }
    t
}

/// Full coupled run: constant estimate, smallness check, Picard solve and
/// artifacts in `dir`.
pub fn run_scenario(cfg: &RunConfig, dir: &Path) -> Result<RunSummary, RunError> {
    fs::create_dir_all(dir)?;
    let data = setup(cfg)?;
    let mut summary = base_summary(cfg, &data);
    info!(
        "mesh {} with {} cells, {} steps",
        summary.mesh.fingerprint, summary.mesh.cells, summary.steps
    );
    if cfg.solver.cs_samples > 0 {
        let cs = estimate_cs(&data, cfg.solver.cs_samples, cfg.solver.seed)?;
        let small = check_smallness(
            summary.force_norm,
            summary.u0_norm,
            data.horizon,
            cs.value,
            summary.rho_max,
        );
        info!("C_S lower bound {:.6e}; smallness margin {:.6e}", cs.value, small.margin);
        summary.ball_radius = Some(ball_radius(cs.value, data.horizon));
        summary.smallness = Some(small);
        summary.cs_estimate = Some(cs);
    }
    let coupler = Coupler::new(&data, cfg.solver.stokes(), cfg.solver.energy())?;
    let outcome = match coupler.picard_solve(&cfg.solver.picard()) {
        Ok(o) => o,
        Err(CouplerError::NotConverged(report)) => {
            summary.status = "not converged".into();
            summary.picard = Some(*report.clone());
            write_csv(dir.join("picard.csv"), &picard_table(&report))?;
            let path = write_summary(dir, &summary)?;
            return Err(RunError::NotConverged(path));
        }
        Err(e) => {
            summary.status = format!("failed: {e}");
            write_summary(dir, &summary)?;
            return Err(e.into());
        }
    };
    let r = &outcome.report;
    summary.status = if r.iterations == 1 {
        "fixed point in 1 iteration".into()
    } else {
        format!("converged in {} iterations", r.iterations)
    };
    let x = x_norm_surrogate(&data.disc.velocity, &outcome.velocity).map_err(CouplerError::from)?;
    summary.x_norm = Some(x);
    summary.within_ball = summary.ball_radius.map(|b| x.total <= b + 1e-8);

    let loads: Vec<Vec<f64>> = (0..=data.steps()).map(|n| data.energy_load(n)).collect();
    let gw = gronwall_bound(
        &data.disc.enthalpy,
        &data.disc.velocity,
        &outcome.enthalpy,
        &outcome.velocity,
        &loads,
        &data.e0,
        cfg.solver.gronwall,
    )
    .map_err(|e| RunError::Setup(e.to_string()))?;
    summary.gronwall_satisfied = Some(gw.satisfied);
    summary.picard = Some(outcome.report.clone());

    write_csv(
        dir.join("diagnostics.csv"),
        &diagnostics_table(&data, &outcome.velocity, &outcome.enthalpy, Some(&gw)),
    )?;
    write_csv(dir.join("picard.csv"), &picard_table(&outcome.report))?;
    write_all_vtk(dir, cfg, &data, &outcome.velocity, &outcome.pressure, &outcome.enthalpy)?;
    store(dir.join("velocity.json"), &data, &outcome.velocity)?;
    write_summary(dir, &summary)?;
    Ok(summary)
}

fn store(path: PathBuf, data: &ScenarioData, u: &[FieldVector]) -> Result<(), RunError> {
    let s = StoredTrajectory::new(data.disc.mesh().fingerprint(), u);
    fs::write(path, serde_json::to_string(&s).expect("trajectory serializes"))?;
    Ok(())
}

/// Momentum subsystem only, with `ẽ ≡ e₀` and `ũ ≡ u₀`.
pub fn run_stokes(cfg: &RunConfig, dir: &Path) -> Result<RunSummary, RunError> {
    fs::create_dir_all(dir)?;
    let data = setup(cfg)?;
    let mut summary = base_summary(cfg, &data);
    let coupler = Coupler::new(&data, cfg.solver.stokes(), cfg.solver.energy())?;
    let st = PicardState::initial(&data);
    let f = data.f.clone();
    let m = solve_momentum_transient(
        coupler.momentum(),
        &data.material,
        &data.disc.enthalpy,
        &st.enthalpy,
        &st.velocity,
        &move |x: &Point, t, o: &mut [f64]| f(x, t, o),
        &data.u0,
    )
    .map_err(CouplerError::from)?;
    let x = x_norm_surrogate(&data.disc.velocity, &m.velocity).map_err(CouplerError::from)?;
    summary.x_norm = Some(x);
    summary.status = "momentum solved".into();
    write_csv(
        dir.join("diagnostics.csv"),
        &diagnostics_table(&data, &m.velocity, &st.enthalpy, None),
    )?;
    write_all_vtk(dir, cfg, &data, &m.velocity, &m.pressure, &st.enthalpy)?;
    store(dir.join("velocity.json"), &data, &m.velocity)?;
    write_summary(dir, &summary)?;
    Ok(summary)
}

/// Enthalpy subsystem only, driven by a stored velocity trajectory, with
/// `ẽ ≡ e₀`.
pub fn run_energy(cfg: &RunConfig, velocity: &Path, dir: &Path) -> Result<RunSummary, RunError> {
    fs::create_dir_all(dir)?;
    let data = setup(cfg)?;
    let mut summary = base_summary(cfg, &data);
    let text = fs::read_to_string(velocity)?;
    let stored: StoredTrajectory =
        serde_json::from_str(&text).map_err(|e| RunError::Setup(format!("{}: {e}", velocity.display())))?;
    let u = stored.fields();
    if stored.mesh != summary.mesh.fingerprint
        || stored.ndofs != data.disc.velocity.ndofs()
        || u.len() != data.steps() + 1
    {
        return Err(RunError::Setup(
            "stored velocity does not match the configured mesh and time grid".into(),
        ));
    }
    let coupler = Coupler::new(&data, cfg.solver.stokes(), cfg.solver.energy())?;
    let solver = coupler.energy_solver()?;
    let st = PicardState::initial(&data);
    let (th, qe, h) = (data.theta_inf.clone(), data.q_e.clone(), data.h.clone());
    let th = move |x: &Point, t| th(x, t);
    let qe = move |x: &Point, t| qe(x, t);
    let h = move |x: &Point, t| h(x, t);
    let ed = EnergyData { theta_inf: &th, q_e: &qe, h: &h };
    let e = solve_energy_transient(&solver, &st.enthalpy, &u, &ed, &data.e0)
        .map_err(CouplerError::from)?;
    if e.gamma_pairing.iter().any(|&g| g < -1e-12) {
        warn!("negative wall pairing encountered");
    }
    let loads: Vec<Vec<f64>> = (0..=data.steps()).map(|n| data.energy_load(n)).collect();
    let gw = gronwall_bound(
        &data.disc.enthalpy,
        &data.disc.velocity,
        &e.enthalpy,
        &u,
        &loads,
        &data.e0,
        cfg.solver.gronwall,
    )
    .map_err(|e| RunError::Setup(e.to_string()))?;
    summary.gronwall_satisfied = Some(gw.satisfied);
    summary.status = "enthalpy solved".into();
    write_csv(
        dir.join("diagnostics.csv"),
        &diagnostics_table(&data, &u, &e.enthalpy, Some(&gw)),
    )?;
    let zero_p: Vec<FieldVector> = u
        .iter()
        .map(|f| FieldVector::zeros(data.disc.pressure.ndofs(), f.time))
        .collect();
    write_all_vtk(dir, cfg, &data, &u, &zero_p, &e.enthalpy)?;
    write_summary(dir, &summary)?;
    Ok(summary)
}

/// Seeded constant estimate on the configured mesh and grid.
pub fn run_estimate_cs(cfg: &RunConfig, samples: usize) -> Result<(CsEstimate, Smallness), RunError> {
    let data = setup(cfg)?;
    let cs = estimate_cs(&data, samples, cfg.solver.seed)?;
    let (f, u0) = data.data_norms();
    let s = check_smallness(f, u0, data.horizon, cs.value, data.material.rho_max());
    Ok((cs, s))
}
