//! Global C⁰ numbering of the tensor Gauss–Lobatto nodes for the two
//! discrete fields, and point evaluation of discrete solutions.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::mesh::{MeshSpec, Regime, SblMesh, Topology};
use crate::refspace::TensorBasis;

/// Which discrete space a [`DofMap`] numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    /// `u`, with homogeneous Dirichlet trace.
    U,
    /// `w = ε₁Δu`, unconstrained.
    W,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum NodeKey {
    Vertex(usize),
    Edge(usize, usize),
    Interior(usize, usize),
}

/// Degree-of-freedom map of one field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofMap {
    field: Field,
    degree: usize,
    n_elements: usize,
    /// Global node id of every local node, element-major.
    nodes: Vec<usize>,
    /// Free index of every global node, `None` if constrained.
    free: Vec<Option<usize>>,
    constrained: Vec<usize>,
    /// Free dofs that belong to a single element's interior.
    interior: Vec<bool>,
}

/// `build_dof_map`.
pub fn build_dof_map(mesh: &SblMesh, p: usize, field: Field) -> Result<DofMap> {
    DofMap::from_topology(mesh.topology(), p, field)
}

impl DofMap {
    /// Numbers nodes element by element in lexicographic local order,
    /// identifying shared vertex and edge nodes topologically.
    pub fn from_topology(topology: &Topology, p: usize, field: Field) -> Result<Self> {
        if p < 1 {
            return Err(Error::InvalidParameter("polynomial degree must be at least 1".into()));
        }
        let n = p + 1;
        let boundary_vertex = topology.boundary_vertices();
        let mut ids: HashMap<NodeKey, usize> = HashMap::new();
        let mut nodes = Vec::with_capacity(topology.n_elements() * n * n);
        let mut on_boundary = Vec::new();
        let mut is_interior = Vec::new();
        for e in 0..topology.n_elements() {
            let verts = topology.element_vertices(e);
            for j in 0..n {
                for i in 0..n {
                    let (at_x, at_y) = (i == 0 || i == p, j == 0 || j == p);
                    let (key, boundary) = if at_x && at_y {
                        let v = verts[usize::from(i == p) + 2 * usize::from(j == p)];
                        (NodeKey::Vertex(v), boundary_vertex[v])
                    } else if at_x || at_y {
                        let (side, k) = match (i, j) {
                            (0, _) => (0, j),
                            (_, _) if i == p => (1, j),
                            (_, 0) => (2, i),
                            _ => (3, i),
                        };
                        let edge = topology.edge_of(e, side);
                        let k = if topology.side_forward(e, side) { k } else { p - k };
                        (NodeKey::Edge(edge, k), topology.edges()[edge].is_boundary())
                    } else {
                        (NodeKey::Interior(e, i + n * j), false)
                    };
                    let next = ids.len();
                    let id = *ids.entry(key).or_insert(next);
                    if id == next {
                        on_boundary.push(boundary);
                        is_interior.push(matches!(key, NodeKey::Interior(..)));
                    }
                    nodes.push(id);
                }
            }
        }
        let mut free = Vec::with_capacity(on_boundary.len());
        let mut constrained = Vec::new();
        let mut interior = Vec::new();
        for (id, &b) in on_boundary.iter().enumerate() {
            if field == Field::U && b {
                free.push(None);
                constrained.push(id);
            } else {
                free.push(Some(interior.len()));
                interior.push(is_interior[id]);
            }
        }
        Ok(Self { field, degree: p, n_elements: topology.n_elements(), nodes, free, constrained, interior })
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn n_nodes(&self) -> usize {
        self.free.len()
    }

    pub fn n_free(&self) -> usize {
        self.interior.len()
    }

    /// Constrained global node ids; their value is zero.
    pub fn constrained(&self) -> &[usize] {
        &self.constrained
    }

    /// Global node ids of element `e`, lexicographic.
    pub fn element_nodes(&self, e: usize) -> &[usize] {
        let n = (self.degree + 1) * (self.degree + 1);
        &self.nodes[e * n..(e + 1) * n]
    }

    /// Free dof indices of element `e` (`None` where constrained).
    pub fn element_dofs(&self, e: usize) -> impl Iterator<Item = Option<usize>> + '_ {
        self.element_nodes(e).iter().map(|&g| self.free[g])
    }

    pub fn free_index(&self, node: usize) -> Option<usize> {
        self.free[node]
    }

    /// Whether free dof `d` is interior to one element.
    pub fn is_element_interior(&self, d: usize) -> bool {
        self.interior[d]
    }

    /// Local coefficients of element `e` from a free-dof vector.
    pub fn gather(&self, coeffs: &[f64], e: usize) -> Vec<f64> {
        self.element_dofs(e).map(|d| d.map_or(0.0, |d| coeffs[d])).collect()
    }

    /// Free coefficients of the nodal interpolant of `f` on `mesh`.
    /// Constrained nodes are dropped whatever `f` is there.
    pub fn interpolate(&self, mesh: &SblMesh, f: impl Fn(Vec2) -> f64) -> Result<Vec<f64>> {
        let basis = TensorBasis::new(self.degree)?;
        let x = basis.nodes().nodes();
        let n = self.degree + 1;
        let mut out = vec![0.0; self.n_free()];
        for e in 0..self.n_elements {
            let map = &mesh.element(e).map;
            for (k, d) in self.element_dofs(e).enumerate() {
                if let Some(d) = d {
                    out[d] = f(map.point(x[k % n], x[k / n]));
                }
            }
        }
        Ok(out)
    }
}

/// Problem metadata kept with a discrete solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionMeta {
    pub eps1: f64,
    pub eps2: f64,
    pub kappa: f64,
    pub residual: f64,
}

/// A discrete pair `(u_N, w_N)` together with its mesh.
#[derive(Debug, Clone)]
pub struct Solution {
    mesh: Arc<SblMesh>,
    basis: Arc<TensorBasis>,
    dofs_u: Arc<DofMap>,
    dofs_w: Arc<DofMap>,
    u: Vec<f64>,
    w: Vec<f64>,
    meta: SolutionMeta,
}

impl Solution {
    pub fn new(
        mesh: Arc<SblMesh>,
        dofs_u: Arc<DofMap>,
        dofs_w: Arc<DofMap>,
        u: Vec<f64>,
        w: Vec<f64>,
        meta: SolutionMeta,
    ) -> Result<Self> {
        let p = dofs_u.degree();
        if dofs_w.degree() != p || dofs_u.n_elements() != mesh.n_elements() || dofs_w.n_elements() != mesh.n_elements() {
            return Err(Error::InvalidParameter("dof maps do not match the mesh".into()));
        }
        if u.len() != dofs_u.n_free() || w.len() != dofs_w.n_free() {
            return Err(Error::InvalidParameter(format!(
                "coefficient lengths ({}, {}) differ from free dof counts ({}, {})",
                u.len(),
                w.len(),
                dofs_u.n_free(),
                dofs_w.n_free()
            )));
        }
        Ok(Self { mesh, basis: Arc::new(TensorBasis::new(p)?), dofs_u, dofs_w, u, w, meta })
    }

    /// The zero pair on `mesh` at degree `p`.
    pub fn zero(mesh: Arc<SblMesh>, p: usize, meta: SolutionMeta) -> Result<Self> {
        let du = Arc::new(build_dof_map(&mesh, p, Field::U)?);
        let dw = Arc::new(build_dof_map(&mesh, p, Field::W)?);
        let (u, w) = (vec![0.0; du.n_free()], vec![0.0; dw.n_free()]);
        Self::new(mesh, du, dw, u, w, meta)
    }

    pub fn mesh(&self) -> &Arc<SblMesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn basis(&self) -> &TensorBasis {
        &self.basis
    }

    pub fn dofs(&self, field: Field) -> &Arc<DofMap> {
        match field {
            Field::U => &self.dofs_u,
            Field::W => &self.dofs_w,
        }
    }

    pub fn coeffs(&self, field: Field) -> &[f64] {
        match field {
            Field::U => &self.u,
            Field::W => &self.w,
        }
    }

    pub fn meta(&self) -> SolutionMeta {
        self.meta
    }

    pub fn residual(&self) -> f64 {
        self.meta.residual
    }

    pub fn regime(&self) -> Regime {
        self.mesh.regime()
    }

    /// Total free dofs of both fields.
    pub fn n_dofs(&self) -> usize {
        self.u.len() + self.w.len()
    }

    /// Value and physical gradient on element `e` at reference `(ξ, η)`.
    pub fn eval_local(&self, field: Field, e: usize, xi: f64, eta: f64) -> (f64, Vec2) {
        let dofs = self.dofs(field);
        let coeffs = self.coeffs(field);
        let b = self.basis.eval(xi, eta);
        let (mut v, mut g) = (0.0, [0.0; 2]);
        for (k, d) in dofs.element_dofs(e).enumerate() {
            if let Some(d) = d {
                let c = coeffs[d];
                v += c * b.values[k];
                g[0] += c * b.grads[k][0];
                g[1] += c * b.grads[k][1];
            }
        }
        let jac = self.mesh.element(e).map.eval(xi, eta).1;
        let grad = jac
            .transpose()
            .try_inverse()
            .map_or(Vec2::new(f64::NAN, f64::NAN), |jt| jt * Vec2::new(g[0], g[1]));
        (v, grad)
    }

    /// `evaluate_field`: value and physical gradient at a physical point.
    pub fn evaluate(&self, field: Field, x: Vec2) -> Result<(f64, Vec2)> {
        self.evaluate_hinted(field, x, None).map(|(v, g, _)| (v, g))
    }

    /// As [`Solution::evaluate`], trying element `hint` first; also returns
    /// the element that contained `x`.
    pub fn evaluate_hinted(&self, field: Field, x: Vec2, hint: Option<usize>) -> Result<(f64, Vec2, usize)> {
        let (e, xi, eta) = self.mesh.locate(x, hint)?;
        let (v, g) = self.eval_local(field, e, xi, eta);
        Ok((v, g, e))
    }

    /// Serializable record; `spec` must describe this solution's mesh.
    pub fn to_record(&self, spec: MeshSpec) -> Result<SolutionRecord> {
        if spec.layer != self.mesh.params() {
            return Err(Error::InvalidParameter("mesh spec does not describe this solution's mesh".into()));
        }
        Ok(SolutionRecord {
            mesh: spec,
            p: self.degree(),
            regime: self.regime(),
            meta: self.meta,
            u: self.u.clone(),
            w: self.w.clone(),
        })
    }

    pub fn from_record(record: &SolutionRecord) -> Result<Self> {
        let mesh = Arc::new(record.mesh.build()?);
        if mesh.regime() != record.regime {
            return Err(Error::Parse(format!(
                "stored regime {} differs from rebuilt mesh regime {}",
                record.regime,
                mesh.regime()
            )));
        }
        let du = Arc::new(build_dof_map(&mesh, record.p, Field::U)?);
        let dw = Arc::new(build_dof_map(&mesh, record.p, Field::W)?);
        Self::new(mesh, du, dw, record.u.clone(), record.w.clone(), record.meta)
    }
}

/// JSON form of a [`Solution`]: the mesh description plus both coefficient
/// vectors. Floats are written in shortest round-trip form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub mesh: MeshSpec,
    pub p: usize,
    pub regime: Regime,
    pub meta: SolutionMeta,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
}
