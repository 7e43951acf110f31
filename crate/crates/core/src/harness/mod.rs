//! Configuration-driven studies: parameter sweeps with errors against
//! reference or exact solutions, stored reference solutions, and plots.

mod config;
mod plot;

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{OutputPaths, ProblemRecord, RunConfig, DEFAULT_SWEEP_DEGREES};
pub use plot::{emit_plot, PlotStyle};

use crate::analysis::{error_against_exact, error_against_reference, ComparisonKind, ManufacturedCase};
use crate::assembly::ProblemConfig;
use crate::error::{Error, Result};
use crate::femspace::{Solution, SolutionRecord};
use crate::mesh::{AsymptoticMesh, Regime, SblMesh};
use crate::solver::{solve_on_mesh, RESIDUAL_BOUND};

/// CSV header of sweep output.
pub const CSV_HEADER: &str = "p,dofs,eps1,eps2,energy_error,balanced_error,solve_seconds,regime";

/// A full study: every `(p, ε₁, ε₂)` combination of the lists.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: ProblemConfig,
    pub p: Vec<usize>,
    pub eps1: Vec<f64>,
    pub eps2: Vec<f64>,
    pub mode: ComparisonKind,
    pub output: OutputPaths,
}

impl SweepSpec {
    pub fn new(base: ProblemConfig, p: Vec<usize>, eps1: Vec<f64>, eps2: Vec<f64>, mode: ComparisonKind) -> Self {
        Self { base, p, eps1, eps2, mode, output: OutputPaths::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p.is_empty() || self.eps1.is_empty() || self.eps2.is_empty() {
            return Err(Error::InvalidParameter("sweep lists must be nonempty".into()));
        }
        if self.p.contains(&0) {
            return Err(Error::InvalidParameter("sweep degrees must be positive".into()));
        }
        self.mode.check_usable(&self.base)?;
        for c in self.configs() {
            c.validate()?;
        }
        Ok(())
    }

    /// Sorted, deduplicated copies of the lists.
    fn sorted(&self) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
        let mut p = self.p.clone();
        p.sort_unstable();
        p.dedup();
        let sort = |v: &[f64]| {
            let mut v = v.to_vec();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        (p, sort(&self.eps1), sort(&self.eps2))
    }

    /// `(ε₁, ε₂)` series in row order.
    fn series(&self) -> Vec<(f64, f64)> {
        let (_, e1, e2) = self.sorted();
        e1.iter().flat_map(|&a| e2.iter().map(move |&b| (a, b))).collect()
    }

    /// Every problem solved by the sweep, references included.
    fn configs(&self) -> Vec<ProblemConfig> {
        let (ps, _, _) = self.sorted();
        let extra = if self.mode == ComparisonKind::Reference { 2 } else { 0 };
        let mut out = Vec::new();
        for (eps1, eps2) in self.series() {
            let mut degrees: Vec<usize> = ps.iter().flat_map(|&p| [p, p + extra]).collect();
            degrees.sort_unstable();
            degrees.dedup();
            for p in degrees {
                out.push(ProblemConfig { eps1, eps2, ..self.base.with_degree(p) });
            }
        }
        out
    }

    pub fn n_rows(&self) -> usize {
        let (p, e1, e2) = self.sorted();
        p.len() * e1.len() * e2.len()
    }
}

/// One line of sweep output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: usize,
    pub dofs: usize,
    pub eps1: f64,
    pub eps2: f64,
    pub energy_error: f64,
    pub balanced_error: f64,
    pub solve_seconds: f64,
    pub regime: Regime,
}

/// Execution options of [`run_sweep`].
#[derive(Debug, Clone, Copy, Default)]
pub struct SweepOptions {
    /// Run on one thread and write `solve_seconds = 0`, so that identical
    /// configurations give bit-identical output.
    pub single_thread: bool,
}

struct Solved {
    solution: Arc<Solution>,
    seconds: f64,
}

/// `run_sweep`: rows ordered by `p`, then ε₁, then ε₂, all ascending.
/// Series of fixed `(ε₁, ε₂)` run in parallel unless `single_thread`.
pub fn run_sweep(spec: &SweepSpec, options: SweepOptions) -> Result<Vec<SweepRow>> {
    if options.single_thread {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("cannot start a thread pool: {e}")))?;
        pool.install(|| sweep_inner(spec, options))
    } else {
        sweep_inner(spec, options)
    }
}

fn sweep_inner(spec: &SweepSpec, options: SweepOptions) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let base = spec.base.mesh_spec().build_base()?;
    // c > 0 on every mesh of the study before anything is solved
    let meshes: Vec<(ProblemConfig, Arc<SblMesh>)> = spec
        .configs()
        .into_iter()
        .map(|c| {
            let mesh = Arc::new(SblMesh::build(base.clone(), c.layer())?);
            c.check_coefficient(&mesh)?;
            Ok((c, mesh))
        })
        .collect::<Result<_>>()?;
    let (ps, _, _) = spec.sorted();
    let series = spec.series();
    let per_series: Vec<Vec<SweepRow>> = series
        .par_iter()
        .map(|&(eps1, eps2)| run_series(spec, &base, &meshes, &ps, eps1, eps2, options))
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(spec.n_rows());
    for k in 0..ps.len() {
        rows.extend(per_series.iter().map(|s| s[k]));
    }
    Ok(rows)
}

fn run_series(
    spec: &SweepSpec,
    base: &Arc<AsymptoticMesh>,
    meshes: &[(ProblemConfig, Arc<SblMesh>)],
    ps: &[usize],
    eps1: f64,
    eps2: f64,
    options: SweepOptions,
) -> Result<Vec<SweepRow>> {
    let mut cache: HashMap<usize, Solved> = HashMap::new();
    let solve = |p: usize, cache: &mut HashMap<usize, Solved>| -> Result<Arc<Solution>> {
        if let Some(s) = cache.get(&p) {
            return Ok(s.solution.clone());
        }
        let (config, mesh) = meshes
            .iter()
            .find(|(c, _)| c.p == p && c.eps1 == eps1 && c.eps2 == eps2)
            .expect("every swept problem has a mesh");
        debug_assert!(Arc::ptr_eq(mesh.base(), base));
        let start = Instant::now();
        let solution = Arc::new(
            solve_on_mesh(config, mesh.clone())
                .map_err(|e| Error::AtParameters { p, eps1, eps2, source: Box::new(e) })?,
        );
        let seconds = if options.single_thread { 0.0 } else { start.elapsed().as_secs_f64() };
        cache.insert(p, Solved { solution: solution.clone(), seconds });
        Ok(solution)
    };
    let mut rows = Vec::with_capacity(ps.len());
    for &p in ps {
        let sol = solve(p, &mut cache)?;
        let report = match spec.mode {
            ComparisonKind::Exact => error_against_exact(&sol, &ManufacturedCase::new(eps1, eps2)),
            ComparisonKind::Reference => {
                let reference = solve(p + 2, &mut cache)?;
                error_against_reference(&sol, &reference)
            }
        }
        .map_err(|e| Error::AtParameters { p, eps1, eps2, source: Box::new(e) })?;
        log::info!(
            "p = {p} eps1 = {eps1:e} eps2 = {eps2:e}: energy {:.3e}, balanced {:.3e}",
            report.energy_error,
            report.balanced_error
        );
        rows.push(SweepRow {
            p,
            dofs: sol.n_dofs(),
            eps1,
            eps2,
            energy_error: report.energy_error,
            balanced_error: report.balanced_error,
            solve_seconds: cache[&p].seconds,
            regime: sol.regime(),
        });
    }
    Ok(rows)
}

/// Writes rows with [`CSV_HEADER`].
pub fn write_csv(rows: &[SweepRow], out: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[SweepRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

/// Parses sweep output; errors name the offending line.
pub fn read_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(|s| s.trim().to_string()).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Parse(format!("line 1: expected header {CSV_HEADER:?}, found {:?}", header.join(","))));
    }
    r.deserialize().collect::<std::result::Result<Vec<SweepRow>, _>>().map_err(Error::from)
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line());
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            kind => {
                let msg = match kind {
                    csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
                    other => format!("{other:?}"),
                };
                match line {
                    Some(l) => Error::Parse(format!("line {l}: {msg}")),
                    None => Error::Parse(msg),
                }
            }
        }
    }
}

/// Stored reference solution with the problem it solves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFile {
    pub problem: ProblemRecord,
    pub solution: SolutionRecord,
}

impl ReferenceFile {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn solution(&self) -> Result<Solution> {
        Solution::from_record(&self.solution)
    }
}

/// Solves `config` and packages the result.
pub fn solve_to_record(config: &ProblemConfig) -> Result<(Solution, ReferenceFile)> {
    let problem = ProblemRecord::from_config(config)?;
    let sol = crate::solver::solve_problem(config)?;
    debug_assert!(sol.residual() <= RESIDUAL_BOUND);
    let solution = sol.to_record(config.mesh_spec())?;
    Ok((sol, ReferenceFile { problem, solution }))
}

/// `make_reference`: the solution at degree `p + 2` on its own mesh.
pub fn make_reference(config: &ProblemConfig) -> Result<(Solution, ReferenceFile)> {
    solve_to_record(&config.with_degree(config.p + 2))
}
