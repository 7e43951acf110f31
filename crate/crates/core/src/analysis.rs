//! Energy and balanced norms, errors against closed-form solutions and
//! against higher-degree reference solutions, and a coercivity probe.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_system, ProblemConfig};
use crate::error::{Error, Result};
use crate::femspace::{DofMap, Field, Solution, SolutionMeta};
use crate::geometry::Vec2;
use crate::mesh::SblMesh;
use crate::refspace::gauss_rule;

/// Value of `u`, its physical gradient, and value of `w` at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PointValues {
    pub u: f64,
    pub grad_u: Vec2,
    pub w: f64,
}

/// Squared component norms `‖u‖₀², ‖∇u‖₀², ‖w‖₀²`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NormParts {
    pub l2_u_sq: f64,
    pub h1semi_u_sq: f64,
    pub l2_w_sq: f64,
}

impl NormParts {
    /// `√(‖u‖² + ε₂²‖∇u‖² + ‖w‖²)`.
    pub fn energy(&self, eps2: f64) -> f64 {
        (self.l2_u_sq + eps2 * eps2 * self.h1semi_u_sq + self.l2_w_sq).sqrt()
    }

    /// `√((ε₂/ε₁)‖w‖² + ε₂‖∇u‖² + ‖u‖²)`.
    pub fn balanced(&self, eps1: f64, eps2: f64) -> Result<f64> {
        if !(eps1 > 0.0) {
            return Err(Error::InvalidParameter(format!("balanced norm needs eps1 > 0, got {eps1}")));
        }
        Ok((eps2 / eps1 * self.l2_w_sq + eps2 * self.h1semi_u_sq + self.l2_u_sq).sqrt())
    }
}

/// Sum in a fixed binary tree, so the result depends only on the order of `v`.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n if n <= 8 => v.iter().sum(),
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

/// Integrates the component norms of the fields sampled by `sample` over
/// `mesh`, with `quad_order` Gauss points per direction. `sample` gets the
/// element, reference point and physical point.
pub fn integrate_parts<F>(mesh: &SblMesh, quad_order: usize, sample: F) -> Result<NormParts>
where
    F: Fn(usize, f64, f64, Vec2) -> Result<PointValues> + Sync,
{
    integrate_parts_split(mesh, quad_order, |_| vec![[0.0, 1.0]], sample)
}

/// As [`integrate_parts`], with element `e` cut into the ξ-strips
/// `strips(e)`, each integrated by the full rule.
fn integrate_parts_split<S, F>(mesh: &SblMesh, quad_order: usize, strips: S, sample: F) -> Result<NormParts>
where
    S: Fn(usize) -> Vec<[f64; 2]> + Sync,
    F: Fn(usize, f64, f64, Vec2) -> Result<PointValues> + Sync,
{
    let rule = gauss_rule(quad_order)?;
    let per_element: Vec<[f64; 3]> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| {
            let map = &mesh.element(e).map;
            let mut acc = [0.0; 3];
            for [s, t] in strips(e) {
                for (j, &eta) in rule.points.iter().enumerate() {
                    for (i, &r) in rule.points.iter().enumerate() {
                        let xi = s + (t - s) * r;
                        let (x, jac) = map.eval(xi, eta);
                        let wdet = (t - s) * rule.weights[i] * rule.weights[j] * jac.determinant();
                        let v = sample(e, xi, eta, x)?;
                        acc[0] += wdet * v.u * v.u;
                        acc[1] += wdet * v.grad_u.norm_squared();
                        acc[2] += wdet * v.w * v.w;
                    }
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let column = |k: usize| pairwise_sum(&per_element.iter().map(|a| a[k]).collect::<Vec<_>>());
    Ok(NormParts { l2_u_sq: column(0), h1semi_u_sq: column(1), l2_w_sq: column(2) })
}

fn solution_values(sol: &Solution, e: usize, xi: f64, eta: f64) -> PointValues {
    let (u, grad_u) = sol.eval_local(Field::U, e, xi, eta);
    let (w, _) = sol.eval_local(Field::W, e, xi, eta);
    PointValues { u, grad_u, w }
}

/// Component norms of a discrete pair on its own mesh.
pub fn solution_parts(sol: &Solution, quad_order: usize) -> Result<NormParts> {
    integrate_parts(sol.mesh(), quad_order, |e, xi, eta, _| Ok(solution_values(sol, e, xi, eta)))
}

/// `energy_norm` of a discrete pair, using its stored ε₂.
pub fn energy_norm(sol: &Solution, quad_order: usize) -> Result<f64> {
    Ok(solution_parts(sol, quad_order)?.energy(sol.meta().eps2))
}

/// `balanced_norm` of a discrete pair, using its stored ε₁ and ε₂.
pub fn balanced_norm(sol: &Solution, quad_order: usize) -> Result<f64> {
    let meta = sol.meta();
    solution_parts(sol, quad_order)?.balanced(meta.eps1, meta.eps2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComparisonKind {
    Exact,
    Reference,
}

impl ComparisonKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ComparisonKind::Exact => "exact",
            ComparisonKind::Reference => "reference",
        }
    }
}

impl std::str::FromStr for ComparisonKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(ComparisonKind::Exact),
            "reference" => Ok(ComparisonKind::Reference),
            _ => Err(Error::Parse(format!("unknown comparison kind '{s}' (expected exact or reference)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub energy_error: f64,
    pub balanced_error: f64,
    pub l2_u_error: f64,
    pub l2_w_error: f64,
    pub h1semi_u_error: f64,
    pub quad_order: usize,
    pub kind: ComparisonKind,
}

impl ErrorReport {
    pub fn from_parts(parts: NormParts, eps1: f64, eps2: f64, quad_order: usize, kind: ComparisonKind) -> Result<Self> {
        Ok(Self {
            energy_error: parts.energy(eps2),
            balanced_error: parts.balanced(eps1, eps2)?,
            l2_u_error: parts.l2_u_sq.sqrt(),
            l2_w_error: parts.l2_w_sq.sqrt(),
            h1semi_u_error: parts.h1semi_u_sq.sqrt(),
            quad_order,
            kind,
        })
    }
}

/// A closed-form pair `(u, w)` to compare discrete solutions against.
pub trait ExactSolution: Sync {
    fn u(&self, x: Vec2) -> f64;
    fn grad_u(&self, x: Vec2) -> Vec2;
    fn w(&self, x: Vec2) -> f64;
}

/// `u = (1 − r²)²` on the unit disk with `c ≡ 1`: `Δu = 16r² − 8`,
/// `Δ²u = 64`, `w = ε₁Δu`, `f = ε₁²Δ²u − ε₂²Δu + u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    pub eps1: f64,
    pub eps2: f64,
}

impl ManufacturedCase {
    pub fn new(eps1: f64, eps2: f64) -> Self {
        Self { eps1, eps2 }
    }

    pub fn laplacian(&self, x: Vec2) -> f64 {
        16.0 * x.norm_squared() - 8.0
    }

    pub fn bilaplacian(&self, _x: Vec2) -> f64 {
        64.0
    }

    pub fn forcing(&self, x: Vec2) -> f64 {
        self.eps1 * self.eps1 * self.bilaplacian(x) - self.eps2 * self.eps2 * self.laplacian(x) + self.u(x)
    }
}

impl ExactSolution for ManufacturedCase {
    fn u(&self, x: Vec2) -> f64 {
        (1.0 - x.norm_squared()).powi(2)
    }

    fn grad_u(&self, x: Vec2) -> Vec2 {
        x * (-4.0 * (1.0 - x.norm_squared()))
    }

    fn w(&self, x: Vec2) -> f64 {
        self.eps1 * self.laplacian(x)
    }
}

/// `error_against_exact`: errors of `sol` on its own mesh at order p+3.
pub fn error_against_exact(sol: &Solution, exact: &impl ExactSolution) -> Result<ErrorReport> {
    error_against_exact_with(sol, exact, sol.degree() + 3)
}

pub fn error_against_exact_with(sol: &Solution, exact: &impl ExactSolution, quad_order: usize) -> Result<ErrorReport> {
    let parts = integrate_parts(sol.mesh(), quad_order, |e, xi, eta, x| {
        let v = solution_values(sol, e, xi, eta);
        Ok(PointValues { u: v.u - exact.u(x), grad_u: v.grad_u - exact.grad_u(x), w: v.w - exact.w(x) })
    })?;
    let SolutionMeta { eps1, eps2, .. } = sol.meta();
    ErrorReport::from_parts(parts, eps1, eps2, quad_order, ComparisonKind::Exact)
}

/// `error_against_reference`: integrates `sol − reference` on the reference
/// mesh at order `p_ref + 3`, locating each reference quadrature point in
/// the coarse mesh.
pub fn error_against_reference(sol: &Solution, reference: &Solution) -> Result<ErrorReport> {
    error_against_reference_with(sol, reference, reference.degree() + 3)
}

pub fn error_against_reference_with(sol: &Solution, reference: &Solution, quad_order: usize) -> Result<ErrorReport> {
    let (a, b) = (sol.meta(), reference.meta());
    if a.eps1 != b.eps1 || a.eps2 != b.eps2 {
        return Err(Error::InvalidParameter(format!(
            "solution (eps1 {}, eps2 {}) and reference (eps1 {}, eps2 {}) solve different problems",
            a.eps1, a.eps2, b.eps1, b.eps2
        )));
    }
    let coarse = sol.mesh();
    let fine = reference.mesh();
    let parts = if coarse.base().same_geometry(fine.base()) {
        // Same Δ_A: parent coordinates are known, so only the breakpoint
        // lookup remains. Reference elements are cut at the coarse
        // breakpoints so the difference is smooth on every strip.
        let strips = |e: usize| {
            let el = fine.element(e);
            let [a, b] = el.xi_interval();
            let mut cuts = vec![0.0];
            for &c in coarse.children(el.parent) {
                let x = coarse.element(c).xi_interval()[1];
                if x > a && x < b {
                    cuts.push((x - a) / (b - a));
                }
            }
            cuts.push(1.0);
            cuts.windows(2).map(|w| [w[0], w[1]]).collect()
        };
        integrate_parts_split(fine, quad_order, strips, |e, xi, eta, _| {
            let r = solution_values(reference, e, xi, eta);
            let el = fine.element(e);
            let (ce, cxi, ceta) = coarse.locate_in_parent(el.parent, el.map.to_parent_xi(xi), eta);
            let c = solution_values(sol, ce, cxi, ceta);
            Ok(PointValues { u: c.u - r.u, grad_u: c.grad_u - r.grad_u, w: c.w - r.w })
        })?
    } else {
        integrate_parts(fine, quad_order, |e, xi, eta, x| {
            let r = solution_values(reference, e, xi, eta);
            let (u, grad_u, _) = sol.evaluate_hinted(Field::U, x, None)?;
            let (w, _, _) = sol.evaluate_hinted(Field::W, x, None)?;
            Ok(PointValues { u: u - r.u, grad_u: grad_u - r.grad_u, w: w - r.w })
        })?
    };
    ErrorReport::from_parts(parts, b.eps1, b.eps2, quad_order, ComparisonKind::Reference)
}

/// Outcome of [`coercivity_probe`] over nonzero random vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoercivityReport {
    /// Largest `|vᵀAv − (⟨cu,u⟩ + ε₂²‖∇u‖² + ‖w‖²)| / |||v|||²`.
    pub max_defect: f64,
    /// Smallest `vᵀAv / |||v|||²`.
    pub min_ratio: f64,
    pub trials: usize,
}

pub const PROBE_SEED: u64 = 0x5b1_c0e7;

/// `coercivity_probe` with the default seed.
pub fn coercivity_probe(
    mesh: &std::sync::Arc<SblMesh>,
    dofs_u: &std::sync::Arc<DofMap>,
    dofs_w: &std::sync::Arc<DofMap>,
    config: &ProblemConfig,
    trials: usize,
) -> Result<CoercivityReport> {
    coercivity_probe_seeded(mesh, dofs_u, dofs_w, config, trials, PROBE_SEED)
}

/// Compares the assembled quadratic form `vᵀAv` with `⟨cu,u⟩ + ε₂²‖∇u‖² +
/// ‖w‖²` integrated pointwise from the fields of `v`. The skew coupling
/// blocks cancel in `vᵀAv`, so the two agree up to roundoff.
pub fn coercivity_probe_seeded(
    mesh: &std::sync::Arc<SblMesh>,
    dofs_u: &std::sync::Arc<DofMap>,
    dofs_w: &std::sync::Arc<DofMap>,
    config: &ProblemConfig,
    trials: usize,
    seed: u64,
) -> Result<CoercivityReport> {
    let sys = assemble_system(mesh, dofs_u, dofs_w, config)?;
    let q = config.quad_order();
    let eps2 = config.eps2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CoercivityReport { max_defect: 0.0, min_ratio: f64::INFINITY, trials: 0 };
    for _ in 0..trials {
        let v: Vec<f64> = (0..sys.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if v.iter().all(|&x| x == 0.0) {
            continue;
        }
        let form = sys.matrix.bilinear(&v, &v);
        let (u, w) = v.split_at(sys.n_u);
        let meta = SolutionMeta { eps1: config.eps1, eps2, kappa: config.kappa, residual: 0.0 };
        let sol = Solution::new(mesh.clone(), dofs_u.clone(), dofs_w.clone(), u.to_vec(), w.to_vec(), meta)?;
        let weighted = integrate_parts(mesh, q, |e, xi, eta, x| {
            let v = solution_values(&sol, e, xi, eta);
            Ok(PointValues { u: v.u * config.coefficient.eval(x).sqrt(), ..v })
        })?;
        let plain = solution_parts(&sol, q)?;
        let expected = weighted.l2_u_sq + eps2 * eps2 * weighted.h1semi_u_sq + weighted.l2_w_sq;
        let norm_sq = plain.energy(eps2).powi(2);
        if norm_sq == 0.0 {
            continue;
        }
        report.max_defect = report.max_defect.max((form - expected).abs() / norm_sq);
        report.min_ratio = report.min_ratio.min(form / norm_sq);
        report.trials += 1;
    }
    Ok(report)
}
