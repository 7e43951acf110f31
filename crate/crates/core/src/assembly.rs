//! Element matrices and the global block system of the mixed problem
//!
//! ```text
//! ⟨cu,ψ⟩ + ε₂²⟨∇u,∇ψ⟩ + ⟨w,φ⟩ + ε₁⟨∇u,∇φ⟩ − ε₁⟨∇w,∇ψ⟩ = ⟨f,ψ⟩
//! ```
//!
//! with `u` in the Dirichlet-constrained space and `w = ε₁Δu` unconstrained.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::femspace::DofMap;
use crate::geometry::{CurveSpec, ElementMap, Vec2};
use crate::mesh::{GridParams, LayerParams, MeshSpec, SblMesh};
use crate::refspace::{gauss_rule, TensorBasis};
use crate::solver::CscMatrix;

/// Scalar field on the plane.
pub type ScalarFn = dyn Fn(Vec2) -> f64 + Send + Sync;

/// The reaction coefficient `c(x, y)`.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    /// `c = 2 + x`.
    TwoPlusX,
    Custom(Arc<ScalarFn>),
}

impl Coefficient {
    pub fn eval(&self, x: Vec2) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::TwoPlusX => 2.0 + x.x,
            Coefficient::Custom(f) => f(x),
        }
    }

    /// Parses a number or `"2+x"`.
    pub fn parse(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if t == "2+x" {
            return Ok(Coefficient::TwoPlusX);
        }
        t.parse::<f64>()
            .map(Coefficient::Constant)
            .map_err(|_| Error::InvalidParameter(format!("unknown coefficient {s:?}")))
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "{c}"),
            Coefficient::TwoPlusX => f.write_str("2+x"),
            Coefficient::Custom(_) => f.write_str("custom"),
        }
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// The right-hand side `f(x, y)`.
#[derive(Clone)]
pub enum Forcing {
    /// `f = 10x`.
    TenX,
    /// `f = 1/√((x+½)² + y²)`, singular just outside the cranioid.
    InverseDistance,
    /// Forcing of the manufactured solution `u = (1 − x² − y²)²` on the unit disk.
    ManufacturedDisk,
    Zero,
    Custom(Arc<ScalarFn>),
}

impl Forcing {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "10x" => Ok(Forcing::TenX),
            "inverse-distance" => Ok(Forcing::InverseDistance),
            "manufactured-disk" => Ok(Forcing::ManufacturedDisk),
            "zero" | "0" => Ok(Forcing::Zero),
            other => Err(Error::InvalidParameter(format!("unknown forcing {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Forcing::TenX => "10x",
            Forcing::InverseDistance => "inverse-distance",
            Forcing::ManufacturedDisk => "manufactured-disk",
            Forcing::Zero => "zero",
            Forcing::Custom(_) => "custom",
        }
    }
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Location of the singularity of [`Forcing::InverseDistance`].
pub const INVERSE_DISTANCE_POLE: [f64; 2] = [-0.5, 0.0];

/// Everything defining one discrete problem.
#[derive(Debug, Clone)]
pub struct ProblemConfig {
    pub curve: CurveSpec,
    pub grid: GridParams,
    pub eps1: f64,
    pub eps2: f64,
    pub kappa: f64,
    pub p: usize,
    /// Gauss points per direction; `p + 3` when unset.
    pub quad_order: Option<usize>,
    pub coefficient: Coefficient,
    pub forcing: Forcing,
}

impl ProblemConfig {
    pub fn new(curve: CurveSpec, eps1: f64, eps2: f64, p: usize, forcing: Forcing) -> Self {
        Self {
            curve,
            grid: GridParams::default(),
            eps1,
            eps2,
            kappa: 1.0,
            p,
            quad_order: None,
            coefficient: Coefficient::Constant(1.0),
            forcing,
        }
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order.unwrap_or(self.p + 3)
    }

    pub fn layer(&self) -> LayerParams {
        LayerParams { kappa: self.kappa, p: self.p, eps1: self.eps1, eps2: self.eps2 }
    }

    pub fn mesh_spec(&self) -> MeshSpec {
        MeshSpec { curve: self.curve, grid: self.grid, layer: self.layer() }
    }

    /// The same problem at degree `p` (and hence on the degree-`p` mesh).
    /// An explicit quadrature order is shifted along with the degree.
    pub fn with_degree(&self, p: usize) -> Self {
        let mut c = self.clone();
        c.quad_order = self.quad_order.map(|q| (q + p).saturating_sub(self.p).max(1));
        c.p = p;
        c
    }

    pub fn forcing_at(&self, x: Vec2) -> f64 {
        match &self.forcing {
            Forcing::TenX => 10.0 * x.x,
            Forcing::InverseDistance => {
                let [a, b] = INVERSE_DISTANCE_POLE;
                1.0 / ((x.x - a).powi(2) + (x.y - b).powi(2)).sqrt()
            }
            Forcing::ManufacturedDisk => {
                let r2 = x.norm_squared();
                64.0 * self.eps1 * self.eps1 - self.eps2 * self.eps2 * (16.0 * r2 - 8.0)
                    + self.coefficient.eval(x) * (1.0 - r2).powi(2)
            }
            Forcing::Zero => 0.0,
            Forcing::Custom(f) => f(x),
        }
    }

    /// Checks parameter ranges and data placement. Positivity of `c` is
    /// checked where it is used, at quadrature points.
    pub fn validate(&self) -> Result<()> {
        self.layer().validate()?;
        if self.quad_order() < 1 {
            return Err(Error::InvalidParameter("quadrature order must be at least 1".into()));
        }
        if self.eps1 > self.eps2 * self.eps2 {
            log::warn!(
                "eps1 = {} exceeds eps2² = {}; outside the regime the mesh is designed for",
                self.eps1,
                self.eps2 * self.eps2
            );
        }
        let curve = self.curve.build()?;
        match self.forcing {
            Forcing::InverseDistance => {
                let pole = Vec2::from(INVERSE_DISTANCE_POLE);
                if curve.contains(pole) || curve.sampled_distance(pole) < 1e-12 {
                    return Err(Error::InvalidParameter(
                        "the inverse-distance forcing is singular inside the domain".into(),
                    ));
                }
            }
            Forcing::ManufacturedDisk => {
                if self.curve != (CurveSpec::Circle { radius: 1.0 }) {
                    return Err(Error::InvalidParameter(
                        "the manufactured forcing is defined on the unit disk only".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Rejects the problem unless `c > 0` at every quadrature point of `mesh`.
    pub fn check_coefficient(&self, mesh: &SblMesh) -> Result<()> {
        let rule = gauss_rule(self.quad_order())?;
        for el in mesh.elements() {
            for &xi in &rule.points {
                for &eta in &rule.points {
                    let x = el.map.point(xi, eta);
                    let c = self.coefficient.eval(x);
                    if !(c > 0.0) {
                        return Err(Error::CoefficientNotPositive { value: c, x: x.x, y: x.y });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Basis values and reference gradients tabulated at tensor Gauss points.
#[derive(Debug, Clone)]
pub struct ReferenceTables {
    n_basis: usize,
    points: Vec<[f64; 2]>,
    weights: Vec<f64>,
    values: Vec<f64>,
    grads: Vec<[f64; 2]>,
}

impl ReferenceTables {
    pub fn new(basis: &TensorBasis, quad_order: usize) -> Result<Self> {
        let rule = gauss_rule(quad_order)?;
        let n_basis = basis.len();
        let mut t = Self { n_basis, points: Vec::new(), weights: Vec::new(), values: Vec::new(), grads: Vec::new() };
        for (j, &eta) in rule.points.iter().enumerate() {
            for (i, &xi) in rule.points.iter().enumerate() {
                let b = basis.eval(xi, eta);
                t.points.push([xi, eta]);
                t.weights.push(rule.weights[i] * rule.weights[j]);
                t.values.extend_from_slice(&b.values);
                t.grads.extend_from_slice(&b.grads);
            }
        }
        Ok(t)
    }

    pub fn n_points(&self) -> usize {
        self.weights.len()
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn point(&self, q: usize) -> [f64; 2] {
        self.points[q]
    }

    pub fn weight(&self, q: usize) -> f64 {
        self.weights[q]
    }

    pub fn values(&self, q: usize) -> &[f64] {
        &self.values[q * self.n_basis..(q + 1) * self.n_basis]
    }

    pub fn grads(&self, q: usize) -> &[[f64; 2]] {
        &self.grads[q * self.n_basis..(q + 1) * self.n_basis]
    }
}

/// Dense local matrices, row-major `n × n` with `n = (p+1)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementMatrices {
    pub n: usize,
    /// `∫ c φᵢ φⱼ`.
    pub mass_c: Vec<f64>,
    /// `∫ φᵢ φⱼ`.
    pub mass: Vec<f64>,
    /// `∫ ∇φᵢ · ∇φⱼ`.
    pub stiffness: Vec<f64>,
    /// `∫ f φᵢ`.
    pub load: Vec<f64>,
}

/// `element_matrices` for the element `id` with map `map`.
pub fn element_matrices(
    id: usize,
    map: &ElementMap,
    tables: &ReferenceTables,
    c: impl Fn(Vec2) -> f64,
    f: impl Fn(Vec2) -> f64,
) -> Result<ElementMatrices> {
    let n = tables.n_basis();
    let mut m = ElementMatrices {
        n,
        mass_c: vec![0.0; n * n],
        mass: vec![0.0; n * n],
        stiffness: vec![0.0; n * n],
        load: vec![0.0; n],
    };
    let mut phys = vec![[0.0; 2]; n];
    for q in 0..tables.n_points() {
        let [xi, eta] = tables.point(q);
        let (x, jac) = map.eval(xi, eta);
        let det = jac.determinant();
        if !(det > 0.0) {
            return Err(Error::NonPositiveJacobian { element: id, det });
        }
        // physical gradient = J⁻ᵀ ∇̂
        let (a, b, cc, d) = (jac[(0, 0)], jac[(0, 1)], jac[(1, 0)], jac[(1, 1)]);
        for (g, r) in phys.iter_mut().zip(tables.grads(q)) {
            *g = [(d * r[0] - cc * r[1]) / det, (-b * r[0] + a * r[1]) / det];
        }
        let wdet = tables.weight(q) * det;
        let cval = c(x);
        if !(cval > 0.0) {
            return Err(Error::CoefficientNotPositive { value: cval, x: x.x, y: x.y });
        }
        let fval = f(x);
        let vals = tables.values(q);
        for i in 0..n {
            let wi = wdet * vals[i];
            m.load[i] += wi * fval;
            let gi = [wdet * phys[i][0], wdet * phys[i][1]];
            let row = i * n;
            for j in i..n {
                let mij = wi * vals[j];
                m.mass[row + j] += mij;
                m.mass_c[row + j] += cval * mij;
                m.stiffness[row + j] += gi[0] * phys[j][0] + gi[1] * phys[j][1];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            m.mass[i * n + j] = m.mass[j * n + i];
            m.mass_c[i * n + j] = m.mass_c[j * n + i];
            m.stiffness[i * n + j] = m.stiffness[j * n + i];
        }
    }
    Ok(m)
}

/// Assembled block system over the free dofs, `u` first then `w`.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: CscMatrix,
    pub rhs: Vec<f64>,
    pub n_u: usize,
    pub n_w: usize,
    /// Unknowns interior to a single element (an elimination-order hint).
    pub interior: Vec<bool>,
}

impl LinearSystem {
    pub fn dim(&self) -> usize {
        self.n_u + self.n_w
    }

    pub fn write_matrix_market(&self, out: &mut impl Write) -> Result<()> {
        self.matrix.write_matrix_market(out)
    }
}

/// `assemble_system`.
pub fn assemble_system(mesh: &SblMesh, dofs_u: &DofMap, dofs_w: &DofMap, config: &ProblemConfig) -> Result<LinearSystem> {
    let p = dofs_u.degree();
    if dofs_w.degree() != p || dofs_u.n_elements() != mesh.n_elements() || dofs_w.n_elements() != mesh.n_elements() {
        return Err(Error::InvalidParameter("dof maps were built for a different mesh or degree".into()));
    }
    let basis = TensorBasis::new(p)?;
    let tables = ReferenceTables::new(&basis, config.quad_order())?;
    let (nu, nw) = (dofs_u.n_free(), dofs_w.n_free());
    let (e1, e2sq) = (config.eps1, config.eps2 * config.eps2);

    let locals: Vec<Result<(Vec<(usize, usize, f64)>, Vec<(usize, f64)>)>> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| {
            let m = element_matrices(
                e,
                &mesh.element(e).map,
                &tables,
                |x| config.coefficient.eval(x),
                |x| config.forcing_at(x),
            )?;
            let n = m.n;
            let u: Vec<Option<usize>> = dofs_u.element_dofs(e).collect();
            let w: Vec<Option<usize>> = dofs_w.element_dofs(e).map(|d| d.map(|d| d + nu)).collect();
            let mut trip = Vec::with_capacity(4 * n * n);
            for a in 0..n {
                for b in 0..n {
                    let k = a * n + b;
                    let coupling = e1 * m.stiffness[k];
                    if let (Some(i), Some(j)) = (u[a], u[b]) {
                        trip.push((i, j, m.mass_c[k] + e2sq * m.stiffness[k]));
                    }
                    if let (Some(i), Some(j)) = (u[a], w[b]) {
                        trip.push((i, j, -coupling));
                    }
                    if let (Some(i), Some(j)) = (w[a], u[b]) {
                        trip.push((i, j, coupling));
                    }
                    if let (Some(i), Some(j)) = (w[a], w[b]) {
                        trip.push((i, j, m.mass[k]));
                    }
                }
            }
            let load = u.iter().zip(&m.load).filter_map(|(d, &l)| d.map(|d| (d, l))).collect();
            Ok((trip, load))
        })
        .collect();

    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; nu + nw];
    for local in locals {
        let (trip, load) = local?;
        triplets.extend(trip);
        for (d, l) in load {
            rhs[d] += l;
        }
    }
    let matrix = CscMatrix::from_triplets(nu + nw, nu + nw, &triplets)?;
    if matrix.values().iter().any(|v| !v.is_finite()) || rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("assembled system has non-finite entries".into()));
    }
    let interior = (0..nu).map(|d| dofs_u.is_element_interior(d)).chain((0..nw).map(|d| dofs_w.is_element_interior(d))).collect();
    Ok(LinearSystem { matrix, rhs, n_u: nu, n_w: nw, interior })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::femspace::{build_dof_map, Field};
    use crate::geometry::TransfiniteMap;
    use crate::mesh::AsymptoticMesh;

    fn unit_square() -> ElementMap {
        ElementMap::new(Arc::new(TransfiniteMap::bilinear([
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(1.0, 1.0),
        ])))
    }

    fn local(p: usize, map: &ElementMap, f: impl Fn(Vec2) -> f64) -> ElementMatrices {
        let basis = TensorBasis::new(p).unwrap();
        let tables = ReferenceTables::new(&basis, p + 3).unwrap();
        element_matrices(0, map, &tables, |_| 1.0, f).unwrap()
    }

    #[test]
    fn unit_square_p1_entries() {
        let m = local(1, &unit_square(), |_| 0.0);
        assert!((m.mass[0] - 1.0 / 9.0).abs() < 1e-15);
        assert!((m.stiffness[0] - 2.0 / 3.0).abs() < 1e-15);
        // opposite corners: ∫(1−x)x(1−y)y·… mass 1/36, stiffness −1/3
        assert!((m.mass[3] - 1.0 / 36.0).abs() < 1e-15);
        assert!((m.stiffness[3] + 1.0 / 3.0).abs() < 1e-15);
        assert!(m.load.iter().all(|&l| l == 0.0));
        assert_eq!(m.mass, m.mass_c);
    }

    #[test]
    fn stiffness_annihilates_constants() {
        let base = AsymptoticMesh::build(&crate::geometry::BoundaryCurve::cranioid(), GridParams::default()).unwrap();
        for e in [0, 5, 9] {
            let m = local(5, &ElementMap::new(base.map(e).clone()), |_| 1.0);
            let n = m.n;
            for i in 0..n {
                let row: f64 = m.stiffness[i * n..(i + 1) * n].iter().sum();
                assert!(row.abs() < 1e-11, "{row}");
            }
            // Σ load = ∫ 1 = Σ mass
            let total: f64 = m.mass.iter().sum();
            let load: f64 = m.load.iter().sum();
            assert!((total - load).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_nonpositive_coefficient() {
        let basis = TensorBasis::new(2).unwrap();
        let tables = ReferenceTables::new(&basis, 5).unwrap();
        let r = element_matrices(0, &unit_square(), &tables, |x| x.x - 0.5, |_| 0.0);
        assert!(matches!(r, Err(Error::CoefficientNotPositive { .. })));
    }

    fn disk_system(eps1: f64, eps2: f64, p: usize) -> (SblMesh, DofMap, DofMap, LinearSystem) {
        let cfg = ProblemConfig::new(CurveSpec::Circle { radius: 1.0 }, eps1, eps2, p, Forcing::TenX);
        let mesh = cfg.mesh_spec().build().unwrap();
        let du = build_dof_map(&mesh, p, Field::U).unwrap();
        let dw = build_dof_map(&mesh, p, Field::W).unwrap();
        let sys = assemble_system(&mesh, &du, &dw, &cfg).unwrap();
        (mesh, du, dw, sys)
    }

    #[test]
    fn block_structure() {
        let (_, du, dw, sys) = disk_system(1e-9, 1e-3, 3);
        assert_eq!(sys.dim(), du.n_free() + dw.n_free());
        let nu = sys.n_u;
        let a = &sys.matrix;
        let at = a.transpose();
        for c in 0..sys.dim() {
            let (rows, vals) = a.col(c);
            for (&r, &v) in rows.iter().zip(vals) {
                match (r < nu, c < nu) {
                    (true, true) | (false, false) => {
                        let s = at.get(r, c);
                        assert!((v - s).abs() <= 1e-13 * v.abs().max(s.abs()));
                    }
                    _ => assert_eq!(v, -at.get(r, c)),
                }
            }
        }
        assert!(sys.rhs[nu..].iter().all(|&b| b == 0.0));
    }

    #[test]
    fn parallel_assembly_is_deterministic() {
        let (_, _, _, a) = disk_system(1e-9, 1e-3, 4);
        let (_, _, _, b) = disk_system(1e-9, 1e-3, 4);
        assert_eq!(a.matrix, b.matrix);
        assert_eq!(a.rhs, b.rhs);
    }

    #[test]
    fn quadrature_order_stability() {
        let cfg = ProblemConfig::new(CurveSpec::Circle { radius: 1.0 }, 1e-5, 1e-2, 4, Forcing::TenX);
        let mesh = cfg.mesh_spec().build().unwrap();
        let du = build_dof_map(&mesh, 4, Field::U).unwrap();
        let dw = build_dof_map(&mesh, 4, Field::W).unwrap();
        let lo = assemble_system(&mesh, &du, &dw, &cfg).unwrap();
        let hi = assemble_system(&mesh, &du, &dw, &ProblemConfig { quad_order: Some(4 + 5), ..cfg }).unwrap();
        let scale = lo.matrix.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diff = lo
            .matrix
            .to_dense()
            .iter()
            .flatten()
            .zip(hi.matrix.to_dense().iter().flatten())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        // curved ring edges: measured ≈ 2e-8 of the largest entry
        assert!(diff <= 1e-7 * scale, "{}", diff / scale);
    }

    #[test]
    fn config_validation() {
        let ok = ProblemConfig::new(CurveSpec::Cranioid, 1e-11, 1e-3, 4, Forcing::InverseDistance);
        ok.validate().unwrap();
        let disk = ProblemConfig::new(CurveSpec::Circle { radius: 1.0 }, 1e-11, 1e-3, 4, Forcing::InverseDistance);
        assert!(disk.validate().is_err());
        let bad = ProblemConfig::new(CurveSpec::Cranioid, 1e-3, 1e-4, 4, Forcing::TenX);
        assert!(bad.validate().is_err());
        let manufactured = ProblemConfig::new(CurveSpec::Cranioid, 1e-3, 1e-1, 4, Forcing::ManufacturedDisk);
        assert!(manufactured.validate().is_err());
        let neg = ProblemConfig { coefficient: Coefficient::Constant(-1.0), ..ok.clone() };
        let mesh = neg.mesh_spec().build().unwrap();
        assert!(matches!(neg.check_coefficient(&mesh), Err(Error::CoefficientNotPositive { .. })));
        assert!(ProblemConfig { coefficient: Coefficient::TwoPlusX, ..ok }.check_coefficient(&mesh).is_ok());
    }

    #[test]
    fn parse_names() {
        assert!(matches!(Coefficient::parse("2 + x"), Ok(Coefficient::TwoPlusX)));
        assert!(matches!(Coefficient::parse("1.5"), Ok(Coefficient::Constant(c)) if c == 1.5));
        assert!(Coefficient::parse("x").is_err());
        for name in ["10x", "inverse-distance", "manufactured-disk", "zero"] {
            assert_eq!(Forcing::parse(name).unwrap().name(), name);
        }
        assert!(Forcing::parse("sin").is_err());
    }
}
