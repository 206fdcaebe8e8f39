//! Coupled flow and heat transfer in pipe systems with do-nothing outflow:
//! Taylor–Hood momentum, enthalpy with a nonlinear Newton wall condition,
//! and the Picard coupling between them.

pub mod coupler;
pub mod diagnostics;
pub mod energy;
pub mod fem;
pub mod geom;
pub mod io;
pub mod linsolve;
pub mod materials;
pub mod mesh;
pub mod stokes;

pub use coupler::{
    check_smallness, estimate_cs, Coupler, CouplerError, CsEstimate, PicardOptions, PicardReport,
    ScenarioData, Smallness,
};
pub use fem::{Discretization, FeSpace, Family, FieldVector, SparseMatrix};
pub use geom::Point;
pub use io::{parse_config, RunConfig, RunSummary};
pub use linsolve::SolveReport;
pub use materials::{DensityLaw, EnthalpyMap, MaterialConstants};
pub use mesh::{BoundaryTag, PipeMesh, PipeSpec};
