//! Run configuration, expression data, scenario drivers and file output.

mod config;
mod expr;
mod output;
mod run;

pub use config::{
    parse_config, parse_config_str, ConfigError, EnthalpyElement, MaterialConfig, MeshConfig,
    OutputConfig, RunConfig, ScenarioConfig, Shape, SolverConfig,
};
pub use expr::{Expr, ExprError, ExprValue};
pub use output::{vtk_string, write_csv, write_vtk, CsvTable, PointField, StoredTrajectory};
pub use run::{
    diagnostics_table, picard_table, run_energy, run_estimate_cs, run_scenario, run_stokes,
    MeshInfo, RunError, RunSummary,
};
