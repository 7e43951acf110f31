//! Direct solution of the assembled block system: equilibration, sparse LU
//! with threshold pivoting, and one step of iterative refinement.

mod equilibrate;
mod lu;
pub mod ordering;
mod sparse;

use std::sync::Arc;

pub use equilibrate::{equilibrate, equilibrate_with_hint, EquilibratedSystem, MAX_SWEEPS};
pub use lu::{LuFactors, PIVOT_THRESHOLD, SINGULAR_TOLERANCE};
pub use sparse::{inf_norm, CscMatrix};

use crate::assembly::{assemble_system, LinearSystem, ProblemConfig};
use crate::error::{Error, Result};
use crate::femspace::{build_dof_map, Field, Solution, SolutionMeta};
use crate::mesh::{AsymptoticMesh, SblMesh};

/// Largest relative residual `‖Ax − b‖∞ / ‖b‖∞` an accepted solution may have.
pub const RESIDUAL_BOUND: f64 = 1e-8;

/// `‖b − A x‖∞ / ‖b‖∞`, or the absolute residual when `b = 0`.
pub fn relative_residual(a: &CscMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let r = ax.iter().zip(b).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
    let nb = inf_norm(b);
    if nb > 0.0 {
        r / nb
    } else {
        r
    }
}

/// `sparse_lu_solve`: factor the scaled system, solve, refine once against
/// the original system. Returns the solution and its relative residual.
pub fn sparse_lu_solve(sys: &EquilibratedSystem) -> Result<(Vec<f64>, f64)> {
    let order = ordering::elimination_order(&sys.matrix, &sys.eliminate_first);
    let lu = LuFactors::factor(&sys.matrix, &order)?;
    let mut x = sys.unscale(&lu.solve(&sys.rhs));
    let ax = sys.original.mul_vec(&x);
    let r: Vec<f64> = sys.original_rhs.iter().zip(&ax).map(|(b, v)| b - v).collect();
    let dx = sys.unscale(&lu.solve(&sys.scale_rhs(&r)));
    for (xi, d) in x.iter_mut().zip(dx) {
        *xi += d;
    }
    let residual = relative_residual(&sys.original, &x, &sys.original_rhs);
    Ok((x, residual))
}

/// Equilibrates and solves an assembled system.
pub fn solve_system(sys: &LinearSystem) -> Result<(Vec<f64>, f64)> {
    let eq = equilibrate_with_hint(&sys.matrix, &sys.rhs, sys.interior.clone())?;
    sparse_lu_solve(&eq)
}

/// `solve_problem`: mesh, dofs, assembly, solve, residual check.
pub fn solve_problem(config: &ProblemConfig) -> Result<Solution> {
    config.validate()?;
    let base = config.mesh_spec().build_base()?;
    solve_on_base(config, base)
}

/// As [`solve_problem`], reusing an already built asymptotic mesh.
pub fn solve_on_base(config: &ProblemConfig, base: Arc<AsymptoticMesh>) -> Result<Solution> {
    config.validate()?;
    let mesh = Arc::new(SblMesh::build(base, config.layer())?);
    solve_on_mesh(config, mesh)
}

pub fn solve_on_mesh(config: &ProblemConfig, mesh: Arc<SblMesh>) -> Result<Solution> {
    config.check_coefficient(&mesh)?;
    let du = Arc::new(build_dof_map(&mesh, config.p, Field::U)?);
    let dw = Arc::new(build_dof_map(&mesh, config.p, Field::W)?);
    let sys = assemble_system(&mesh, &du, &dw, config)?;
    let (x, residual) = solve_system(&sys)?;
    if !(residual <= RESIDUAL_BOUND) {
        return Err(Error::ResidualTooLarge { residual, bound: RESIDUAL_BOUND });
    }
    log::debug!(
        "solved p = {} eps1 = {:e} eps2 = {:e}: {} unknowns, residual {residual:e}",
        config.p,
        config.eps1,
        config.eps2,
        sys.dim()
    );
    let (u, w) = x.split_at(sys.n_u);
    let meta = SolutionMeta { eps1: config.eps1, eps2: config.eps2, kappa: config.kappa, residual };
    Solution::new(mesh, du, dw, u.to_vec(), w.to_vec(), meta)
}
