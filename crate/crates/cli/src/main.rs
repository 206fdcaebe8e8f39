use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::error;

use pipeflow_core::io::{self, RunConfig, RunError};
use pipeflow_core::mesh::{import_msh, validate_geometry, write_msh};

#[derive(Parser)]
#[command(name = "pipeflow", version, about = "Coupled flow and heat transfer in pipe systems")]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Overrides `[solver] seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or import the configured mesh, validate it and write it out.
    Mesh {
        #[arg(long, conflicts_with = "msh")]
        config: Option<PathBuf>,
        /// Validate an existing Gmsh file instead.
        #[arg(long)]
        msh: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Full Picard solve of the coupled problem.
    Run(Common),
    /// Momentum subsystem only.
    Stokes(Common),
    /// Enthalpy subsystem only, driven by a stored velocity.
    Energy {
        #[command(flatten)]
        common: Common,
        /// `velocity.json` written by `run` or `stokes`.
        #[arg(long)]
        velocity: PathBuf,
    },
    /// Lower-bound estimate of the maximal-regularity constant.
    EstimateCs {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 32)]
        samples: usize,
    },
}

fn load(common: &Common) -> Result<(RunConfig, PathBuf)> {
    let mut cfg = io::parse_config(&common.config)?;
    if let Some(s) = common.seed {
        cfg.solver.seed = s;
    }
    let out = common
        .output
        .clone()
        .unwrap_or_else(|| cfg.base_dir.join(&cfg.output.dir));
    Ok((cfg, out))
}

fn mesh_cmd(config: Option<&Path>, msh: Option<&Path>, output: Option<&Path>) -> Result<bool> {
    let mesh = match (config, msh) {
        (_, Some(p)) => import_msh(p).with_context(|| format!("reading {}", p.display()))?,
        (Some(c), None) => io::parse_config(c)?.build_mesh()?,
        (None, None) => anyhow::bail!("give --config or --msh"),
    };
    let report = validate_geometry(&mesh);
    println!("{}", serde_json::to_string_pretty(&report)?);
    if let Some(dir) = output {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("mesh.msh"), write_msh(&mesh))?;
        io::write_vtk(dir.join("mesh.vtk"), &mesh, &[])?;
    }
    Ok(report.passed)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Mesh { config, msh, output } => {
            let ok = mesh_cmd(config.as_deref(), msh.as_deref(), output.as_deref())?;
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(3) })
        }
        Command::Run(c) => {
            let (cfg, out) = load(&c)?;
            match io::run_scenario(&cfg, &out) {
                Ok(s) => {
                    println!("{}", s.status);
                    if let Some(sm) = s.smallness {
                        println!(
                            "smallness {} (margin {:.6e})",
                            if sm.pass { "satisfied" } else { "violated" },
                            sm.margin
                        );
                    }
                    Ok(ExitCode::SUCCESS)
                }
                Err(e @ RunError::NotConverged(_)) => {
                    error!("{e}");
                    Ok(ExitCode::from(2))
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Stokes(c) => {
            let (cfg, out) = load(&c)?;
            println!("{}", io::run_stokes(&cfg, &out)?.status);
            Ok(ExitCode::SUCCESS)
        }
        Command::Energy { common, velocity } => {
            let (cfg, out) = load(&common)?;
            println!("{}", io::run_energy(&cfg, &velocity, &out)?.status);
            Ok(ExitCode::SUCCESS)
        }
        Command::EstimateCs { common, samples } => {
            let (cfg, _) = load(&common)?;
            let (cs, small) = io::run_estimate_cs(&cfg, samples)?;
            let v = serde_json::json!({ "estimate": cs, "smallness": small });
            println!("{}", serde_json::to_string_pretty(&v)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PIPEFLOW_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
