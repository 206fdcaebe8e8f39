//! TOML run configuration with sections `[mesh]`, `[material]`,
//! `[scenario]`, `[solver]` and `[output]`. Unknown keys are rejected.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::expr::{Expr, ExprValue};
use crate::coupler::{PicardOptions, ScalarData, ScenarioData, VectorData};
use crate::diagnostics::GronwallConstants;
use crate::energy::EnergyOptions;
use crate::fem::{Discretization, Family};
use crate::materials::{DensityLaw, EnthalpyMap, MaterialConstants};
use crate::mesh::{generate_pipe, import_msh, Branch, PipeMesh, PipeSpec};
use crate::stokes::{Convection, StokesOptions};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Channel { x0: f64, x1: f64, half_width: f64 },
    UnitSquare,
    Cylinder { start: [f64; 3], end: [f64; 3], radius: f64 },
    Branches { dim: usize, branches: Vec<Branch> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    /// Target mesh size for generated meshes.
    pub h: Option<f64>,
    pub shape: Option<Shape>,
    /// Gmsh file, used instead of a generator.
    pub msh: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    /// `(θ, ρ)` breakpoints with ρ nonincreasing.
    pub density: Vec<(f64, f64)>,
    #[serde(default = "one")]
    pub cv: f64,
    #[serde(default = "one")]
    pub conductivity: f64,
    #[serde(default = "one")]
    pub viscosity: f64,
    #[serde(default = "one")]
    pub heat_transfer: f64,
    #[serde(default = "one")]
    pub reference_density: f64,
}

fn one() -> f64 {
    1.0
}

impl MaterialConfig {
    pub fn constants(&self) -> MaterialConstants {
        MaterialConstants {
            cv: self.cv,
            conductivity: self.conductivity,
            viscosity: self.viscosity,
            heat_transfer: self.heat_transfer,
            reference_density: self.reference_density,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub f: Vec<ExprValue>,
    #[serde(default)]
    pub h: ExprValue,
    #[serde(default)]
    pub theta_inf: ExprValue,
    #[serde(default)]
    pub q_e: ExprValue,
    #[serde(default)]
    pub u0: Vec<ExprValue>,
    #[serde(default)]
    pub e0: ExprValue,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnthalpyElement {
    P1,
    P2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub picard_tol: f64,
    pub max_outer: usize,
    pub omega: f64,
    pub stokes_tol: f64,
    pub stokes_max_iter: usize,
    pub convection: Convection,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub linear_tol: f64,
    pub linear_max_iter: usize,
    pub enthalpy_element: EnthalpyElement,
    /// Random samples for the constant estimate; 0 disables it.
    pub cs_samples: usize,
    pub seed: u64,
    pub gronwall: GronwallConstants,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let s = StokesOptions::default();
        let e = EnergyOptions::default();
        let p = PicardOptions::default();
        Self {
            picard_tol: p.tol,
            max_outer: p.max_outer,
            omega: p.omega,
            stokes_tol: s.tol,
            stokes_max_iter: s.max_iter,
            convection: s.convection,
            newton_tol: e.tol,
            newton_max_iter: e.max_newton,
            linear_tol: e.linear_tol,
            linear_max_iter: e.linear_max_iter,
            enthalpy_element: EnthalpyElement::P1,
            cs_samples: 0,
            seed: 0,
            gronwall: GronwallConstants::default(),
        }
    }
}

impl SolverConfig {
    pub fn stokes(&self) -> StokesOptions {
        StokesOptions {
            tol: self.stokes_tol,
            max_iter: self.stokes_max_iter,
            convection: self.convection,
        }
    }

    pub fn energy(&self) -> EnergyOptions {
        EnergyOptions {
            tol: self.newton_tol,
            max_newton: self.newton_max_iter,
            linear_tol: self.linear_tol,
            linear_max_iter: self.linear_max_iter,
        }
    }

    pub fn picard(&self) -> PicardOptions {
        PicardOptions {
            tol: self.picard_tol,
            max_outer: self.max_outer,
            omega: self.omega,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub vtk: bool,
    /// Write every n-th step.
    pub vtk_every: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("output"),
            vtk: true,
            vtk_every: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: MeshConfig,
    pub material: MaterialConfig,
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cfg = parse_config_str(&text)?;
    cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(cfg)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(0);
        ConfigError::Parse {
            line,
            message: e.message().to_string(),
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    /// Checks every invariant and reports all violations at once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        let s = &self.scenario;
        if !(s.horizon.is_finite() && s.horizon > 0.0) {
            errs.push(format!("scenario.T = {} must be positive", s.horizon));
        }
        if !(s.dt.is_finite() && s.dt > 0.0) {
            errs.push(format!("scenario.dt = {} must be positive", s.dt));
        } else if s.horizon > 0.0 {
            let n = s.horizon / s.dt;
            if (n - n.round()).abs() > 1e-9 * n.max(1.0) || n.round() < 1.0 {
                errs.push(format!("scenario.T / scenario.dt = {n} is not an integer"));
            }
        }
        let dim = self.dim();
        for (name, v) in [("f", &s.f), ("u0", &s.u0)] {
            if !v.is_empty() && Some(v.len()) != dim {
                errs.push(format!(
                    "scenario.{name} has {} components, mesh dimension is {}",
                    v.len(),
                    dim.map_or("unknown".into(), |d| d.to_string())
                ));
            }
            for (i, e) in v.iter().enumerate() {
                if let Err(err) = e.compile() {
                    errs.push(format!("scenario.{name}[{i}]: {err}"));
                }
            }
        }
        for (name, e) in [("h", &s.h), ("theta_inf", &s.theta_inf), ("q_e", &s.q_e), ("e0", &s.e0)] {
            if let Err(err) = e.compile() {
                errs.push(format!("scenario.{name}: {err}"));
            }
        }
        let sv = &self.solver;
        for (name, v) in [
            ("picard_tol", sv.picard_tol),
            ("stokes_tol", sv.stokes_tol),
            ("newton_tol", sv.newton_tol),
            ("linear_tol", sv.linear_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                errs.push(format!("solver.{name} = {v} must be positive"));
            }
        }
        if !(sv.omega > 0.0 && sv.omega <= 1.0) {
            errs.push(format!("solver.omega = {} must lie in (0, 1]", sv.omega));
        }
        if sv.max_outer == 0 {
            errs.push("solver.max_outer must be at least 1".into());
        }
        if self.output.vtk_every == 0 {
            errs.push("output.vtk_every must be at least 1".into());
        }
        if let Err(e) = DensityLaw::new(self.material.density.clone(), self.material.constants()) {
            errs.push(format!("material: {e}"));
        }
        match (&self.mesh.shape, &self.mesh.msh) {
            (None, None) => errs.push("mesh: give either `shape` or `msh`".into()),
            (Some(_), Some(_)) => errs.push("mesh: `shape` and `msh` are exclusive".into()),
            (Some(_), None) => match self.mesh.h {
                Some(h) if h.is_finite() && h > 0.0 => {}
                _ => errs.push("mesh.h must be positive for generated meshes".into()),
            },
            _ => {}
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    fn dim(&self) -> Option<usize> {
        match &self.mesh.shape {
            Some(Shape::Channel { .. } | Shape::UnitSquare) => Some(2),
            Some(Shape::Cylinder { .. }) => Some(3),
            Some(Shape::Branches { dim, .. }) => Some(*dim),
            None => None,
        }
    }

    pub fn pipe_spec(&self) -> Option<PipeSpec> {
        let h = self.mesh.h?;
        Some(match self.mesh.shape.as_ref()? {
            Shape::Channel { x0, x1, half_width } => PipeSpec::channel(*x0, *x1, *half_width, h),
            Shape::UnitSquare => PipeSpec::unit_square(h),
            Shape::Cylinder { start, end, radius } => PipeSpec::cylinder(*start, *end, *radius, h),
            Shape::Branches { dim, branches } => PipeSpec {
                dim: *dim,
                branches: branches.clone(),
                h,
            },
        })
    }

    pub fn build_mesh(&self) -> Result<PipeMesh, crate::mesh::MeshError> {
        match (&self.mesh.msh, self.pipe_spec()) {
            (Some(p), _) => import_msh(self.base_dir.join(p)),
            (None, Some(spec)) => generate_pipe(&spec),
            (None, None) => unreachable!("validated config has a mesh source"),
        }
    }

    pub fn material_map(&self) -> EnthalpyMap {
        EnthalpyMap::new(
            DensityLaw::new(self.material.density.clone(), self.material.constants())
                .expect("validated material law"),
        )
    }

    /// Scenario data on a freshly built mesh.
    pub fn scenario_data(&self) -> Result<ScenarioData, Box<dyn std::error::Error + Send + Sync>> {
        let mesh = Arc::new(self.build_mesh()?);
        let dim = mesh.dim();
        let family = match self.solver.enthalpy_element {
            EnthalpyElement::P1 => Family::P1,
            EnthalpyElement::P2 => Family::P2,
        };
        let disc = Discretization::taylor_hood(mesh, family);
        let s = &self.scenario;
        let f = vector_data(&s.f, dim)?;
        let u0_expr = vector_exprs(&s.u0, dim)?;
        let mut u0 = disc.velocity.interpolate(|x, o| {
            for (c, e) in u0_expr.iter().enumerate() {
                o[c] = e.eval(x, 0.0);
            }
        });
        let scale = u0.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (v, m) in u0.iter_mut().zip(disc.velocity.dirichlet_dofs()) {
            if m && v.abs() <= 1e-12 * scale {
                *v = 0.0;
            }
        }
        let e0e = s.e0.compile()?;
        let e0 = disc.enthalpy.interpolate_scalar(|x| e0e.eval(x, 0.0));
        let data = ScenarioData {
            disc,
            material: self.material_map(),
            f,
            h: scalar_data(&s.h)?,
            theta_inf: scalar_data(&s.theta_inf)?,
            q_e: scalar_data(&s.q_e)?,
            u0,
            e0,
            horizon: s.horizon,
            dt: s.dt,
        };
        data.validate()?;
        Ok(data)
    }
}

fn vector_exprs(v: &[ExprValue], dim: usize) -> Result<Vec<Expr>, super::expr::ExprError> {
    if v.is_empty() {
        return Ok(vec![Expr::constant(0.0); dim]);
    }
    v.iter().map(ExprValue::compile).collect()
}

fn vector_data(v: &[ExprValue], dim: usize) -> Result<VectorData, super::expr::ExprError> {
    let e = vector_exprs(v, dim)?;
    Ok(Arc::new(move |x, t, out: &mut [f64]| {
        for (o, ex) in out.iter_mut().zip(&e) {
            *o = ex.eval(x, t);
        }
    }))
}

fn scalar_data(v: &ExprValue) -> Result<ScalarData, super::expr::ExprError> {
    let e = v.compile()?;
    Ok(Arc::new(move |x, t| e.eval(x, t)))
}
