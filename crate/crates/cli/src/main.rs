use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;
use sbl_core::analysis::{balanced_norm, energy_norm};
use sbl_core::harness::{csv_string, emit_plot, make_reference, run_sweep, solve_to_record, PlotStyle, RunConfig, SweepOptions};
use sbl_core::mesh::{export_mesh, MeshFormat};
use sbl_core::{Error, Result};

#[derive(Parser)]
#[command(name = "sbl", version, about = "hp-FEM with spectral boundary layer meshes for ε₁²Δ²u − ε₂²Δu + cu = f")]
struct Cli {
    /// Log progress to stderr (-v info, -vv debug)
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the SBL mesh for a configuration and export it
    Mesh {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long, default_value = "json")]
        format: MeshFormat,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve the configured problem once and store the solution
    Solve {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve at degree p + 2 and store the result as a reference
    Reference {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the convergence study described by [sweep]
    Sweep {
        #[arg(short, long)]
        config: PathBuf,
        /// CSV destination (default: [output] csv, else stdout)
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Also write the convergence plot here (default: [output] svg)
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Run on one thread and zero the timing column for bit-identical output
        #[arg(long)]
        single_thread: bool,
    },
    /// Turn a sweep CSV into a semi-log SVG plot
    Plot {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value = "")]
        title: String,
    },
}

fn emit(bytes: &[u8], path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            std::fs::write(p, bytes)?;
            info!("wrote {}", p.display());
        }
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Mesh { config, format, output } => {
            let cfg = RunConfig::from_file(&config)?;
            let mesh = cfg.problem.mesh_spec().build()?;
            let report = mesh.check_admissibility(cfg.problem.quad_order())?;
            info!("{} elements, regime {}, {:?}", mesh.n_elements(), mesh.regime().as_str(), report);
            let bytes = export_mesh(&mesh, format)?;
            emit(&bytes, output.as_deref().or(cfg.output().mesh.as_deref()))
        }
        Command::Solve { config, output } => {
            let cfg = RunConfig::from_file(&config)?;
            let (sol, record) = solve_to_record(&cfg.problem)?;
            let q = cfg.problem.quad_order();
            eprintln!(
                "regime {}  dofs {}  residual {:.3e}  energy norm {:.12e}  balanced norm {:.12e}",
                sol.regime().as_str(),
                sol.n_dofs(),
                sol.residual(),
                energy_norm(&sol, q)?,
                balanced_norm(&sol, q)?,
            );
            emit(record.to_json()?.as_bytes(), output.as_deref().or(cfg.output().solution.as_deref()))
        }
        Command::Reference { config, output } => {
            let cfg = RunConfig::from_file(&config)?;
            let (sol, record) = make_reference(&cfg.problem)?;
            eprintln!(
                "reference p = {}  regime {}  dofs {}  residual {:.3e}",
                sol.degree(),
                sol.regime().as_str(),
                sol.n_dofs(),
                sol.residual()
            );
            emit(record.to_json()?.as_bytes(), output.as_deref().or(cfg.output().reference.as_deref()))
        }
        Command::Sweep { config, csv, svg, single_thread } => {
            let cfg = RunConfig::from_file(&config)?;
            info!("sweep of {} rows", cfg.sweep.n_rows());
            let rows = run_sweep(&cfg.sweep, SweepOptions { single_thread })?;
            let text = csv_string(&rows)?;
            emit(text.as_bytes(), csv.as_deref().or(cfg.output().csv.as_deref()))?;
            if let Some(path) = svg.as_deref().or(cfg.output().svg.as_deref()) {
                let style = PlotStyle { title: config.display().to_string(), ..PlotStyle::default() };
                emit(emit_plot(&text, &style)?.as_bytes(), Some(path))?;
            }
            Ok(())
        }
        Command::Plot { input, output, title } => {
            let text = std::fs::read_to_string(&input)?;
            let svg = emit_plot(&text, &PlotStyle { title, ..PlotStyle::default() })?;
            emit(svg.as_bytes(), output.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    e.exit_code() as u8
}
