//! The fixed asymptotic mesh and the Spectral Boundary Layer mesh built on it.
//!
//! The asymptotic mesh is an O-grid: one ring of `4m` boundary-fitted
//! elements covering the tubular strip `0 ≤ ρ ≤ ρ₀` along the boundary, and a
//! central `m × m` block filling the inner offset curve. Ring elements have
//! their `ξ = 0` side on the boundary with `ξ` increasing inward, so the
//! boundary layer split acts on the reference `ξ` coordinate only.

mod export;
mod topology;

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use export::{export_mesh, ElementRecord, EdgeRecord, MeshFormat, MeshRecord};
pub use topology::{Edge, SharedEdge, Topology, SIDE_CORNERS};

use crate::geometry::{
    inverse_map, BoundaryCurve, CurveSpec, EdgeCurve, ElementMap, LocateError, TransfiniteMap, Vec2,
};
use crate::error::{Error, Result};
use crate::refspace::{gauss_rule, gll_nodes};

/// Gauss points per direction used as Jacobian checkpoints during construction.
const CHECKPOINT_ORDER: usize = 10;

/// Parameters of the asymptotic O-grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    /// Angular refinement: `4m` ring elements and an `m × m` core.
    pub m: usize,
    /// Ring width as a fraction of the minimum radius of curvature.
    pub strip_fraction: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        Self { m: 2, strip_fraction: 0.5 }
    }
}

/// The fixed mesh Δ_A. Boundary elements come first.
#[derive(Debug, Clone)]
pub struct AsymptoticMesh {
    curve: Option<BoundaryCurve>,
    params: GridParams,
    rho0: f64,
    maps: Vec<Arc<TransfiniteMap>>,
    topology: Topology,
    n_boundary: usize,
}

/// `build_asymptotic_mesh`.
pub fn build_asymptotic_mesh(curve: &BoundaryCurve, params: GridParams) -> Result<AsymptoticMesh> {
    AsymptoticMesh::build(curve, params)
}

impl AsymptoticMesh {
    pub fn build(curve: &BoundaryCurve, params: GridParams) -> Result<Self> {
        let GridParams { m, strip_fraction } = params;
        if m < 1 {
            return Err(Error::InvalidParameter("angular refinement m must be at least 1".into()));
        }
        if !(strip_fraction > 0.0 && strip_fraction <= 0.5) {
            return Err(Error::InvalidParameter(format!(
                "strip_fraction {strip_fraction} outside (0, 1/2]"
            )));
        }
        curve.check_star_shaped()?;
        let rho0 = strip_fraction * curve.min_curvature_radius();
        if !rho0.is_finite() {
            return Err(Error::InvalidParameter("curve has no finite curvature radius".into()));
        }

        let nb = 4 * m;
        let period = curve.period();
        let theta = |k: usize| period * (k as f64 / nb as f64 - 0.125);
        let inner = |k: usize| curve.offset_jet(theta(k), rho0).0;

        let mut maps = Vec::with_capacity(nb + m * m);
        let mut verts = Vec::with_capacity(nb + m * m);

        // ring: ξ from the boundary inward, η clockwise
        for k in 0..nb {
            let outer = EdgeCurve::arc(curve, theta(k + 1), theta(k), 0.0);
            let offset = EdgeCurve::line(inner(k + 1), inner(k));
            let low = EdgeCurve::line(outer.point(0.0), offset.point(0.0));
            let high = EdgeCurve::line(outer.point(1.0), offset.point(1.0));
            maps.push(Arc::new(TransfiniteMap::new([outer, offset, low, high])?));
            let (b0, b1) = ((k + 1) % nb, k);
            verts.push([b0, nb + b0, b1, nb + b1]);
        }

        // core grid: boundary nodes are the inner offset points, traversed
        // counterclockwise bottom, right, top, left
        let ring_index = |i: usize, j: usize| -> Option<usize> {
            if j == 0 {
                Some(i)
            } else if i == m {
                Some(m + j)
            } else if j == m {
                Some(3 * m - i)
            } else if i == 0 {
                Some((4 * m - j) % nb)
            } else {
                None
            }
        };
        let vid = |i: usize, j: usize| match ring_index(i, j) {
            Some(k) => nb + k,
            None => 2 * nb + (i - 1) + (m - 1) * (j - 1),
        };
        let mut grid = vec![Vec2::zeros(); (m + 1) * (m + 1)];
        let g = |i: usize, j: usize| i + (m + 1) * j;
        for j in 0..=m {
            for i in 0..=m {
                if let Some(k) = ring_index(i, j) {
                    grid[g(i, j)] = inner(k);
                }
            }
        }
        for j in 1..m {
            for i in 1..m {
                let (u, v) = (i as f64 / m as f64, j as f64 / m as f64);
                let sides = grid[g(0, j)] * (1.0 - u)
                    + grid[g(m, j)] * u
                    + grid[g(i, 0)] * (1.0 - v)
                    + grid[g(i, m)] * v;
                let corners = grid[g(0, 0)] * ((1.0 - u) * (1.0 - v))
                    + grid[g(m, 0)] * (u * (1.0 - v))
                    + grid[g(0, m)] * ((1.0 - u) * v)
                    + grid[g(m, m)] * (u * v);
                grid[g(i, j)] = sides - corners;
            }
        }
        for j in 0..m {
            for i in 0..m {
                let corners = [grid[g(i, j)], grid[g(i + 1, j)], grid[g(i, j + 1)], grid[g(i + 1, j + 1)]];
                maps.push(Arc::new(TransfiniteMap::bilinear(corners)));
                verts.push([vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1)]);
            }
        }

        let n_vertices = 2 * nb + (m - 1) * (m - 1);
        let mut mesh = Self::from_parts(maps, verts, n_vertices, nb)?;
        mesh.curve = Some(curve.clone());
        mesh.params = params;
        mesh.rho0 = rho0;
        Ok(mesh)
    }

    /// A mesh from explicit element maps and corner vertex ids. The first
    /// `n_boundary` elements must have their `ξ = 0` side on the boundary.
    pub fn from_parts(
        maps: Vec<Arc<TransfiniteMap>>,
        element_vertices: Vec<[usize; 4]>,
        n_vertices: usize,
        n_boundary: usize,
    ) -> Result<Self> {
        if maps.len() != element_vertices.len() || n_boundary > maps.len() {
            return Err(Error::Topology("element maps and vertex lists disagree".into()));
        }
        let topology = Topology::from_elements(element_vertices, n_vertices)?;
        let rule = gauss_rule(CHECKPOINT_ORDER)?;
        for (e, map) in maps.iter().enumerate() {
            for &xi in &rule.points {
                for &eta in &rule.points {
                    let det = map.eval(xi, eta).1.determinant();
                    if !(det > 0.0) {
                        return Err(Error::NonPositiveJacobian { element: e, det });
                    }
                }
            }
        }
        for e in 0..n_boundary {
            if !topology.is_boundary_side(e, 0) {
                return Err(Error::Topology(format!("boundary element {e} misses the boundary")));
            }
        }
        let params = GridParams { m: 0, strip_fraction: 0.0 };
        Ok(Self { curve: None, params, rho0: 0.0, maps, topology, n_boundary })
    }

    /// The boundary curve, for meshes built on one.
    pub fn curve(&self) -> Option<&BoundaryCurve> {
        self.curve.as_ref()
    }

    pub fn params(&self) -> GridParams {
        self.params
    }

    /// Width of the boundary strip, `ρ₀`.
    pub fn strip_width(&self) -> f64 {
        self.rho0
    }

    /// Total element count `N₁`.
    pub fn n_elements(&self) -> usize {
        self.maps.len()
    }

    /// Boundary element count `N₂`.
    pub fn n_boundary(&self) -> usize {
        self.n_boundary
    }

    pub fn map(&self, e: usize) -> &Arc<TransfiniteMap> {
        &self.maps[e]
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    /// Whether `other` has the same topology and bitwise identical element
    /// maps, checked at the corners and a few interior points.
    pub fn same_geometry(&self, other: &AsymptoticMesh) -> bool {
        if std::ptr::eq(self, other) {
            return true;
        }
        const PROBES: [(f64, f64); 4] = [(0.5, 0.0), (0.0, 0.5), (0.25, 0.75), (1.0, 0.5)];
        self.topology == other.topology
            && self.n_boundary == other.n_boundary
            && self.maps.iter().zip(&other.maps).all(|(a, b)| {
                a.corners() == b.corners() && PROBES.iter().all(|&(x, y)| a.point(x, y) == b.point(x, y))
            })
    }
}

/// Mesh regime selected by `κ p ε₁/ε₂` against ½.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Asymptotic,
    PreAsymptotic,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Asymptotic => "asymptotic",
            Regime::PreAsymptotic => "pre-asymptotic",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Layer mesh parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub kappa: f64,
    pub p: usize,
    pub eps1: f64,
    pub eps2: f64,
}

impl LayerParams {
    pub fn validate(&self) -> Result<()> {
        let LayerParams { kappa, p, eps1, eps2 } = *self;
        if !(eps1 > 0.0 && eps1 <= eps2 && eps2 <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < eps1 <= eps2 <= 1, got eps1 = {eps1}, eps2 = {eps2}"
            )));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa {kappa} must be positive")));
        }
        if p < 1 {
            return Err(Error::InvalidParameter("polynomial degree must be at least 1".into()));
        }
        Ok(())
    }

    /// Reference width of the inner layer strip, `κ p ε₁/ε₂`.
    pub fn inner_width(&self) -> f64 {
        self.kappa * self.p as f64 * self.eps1 / self.eps2
    }

    /// Unclamped outer layer breakpoint, `κ p ε₂`.
    pub fn outer_width(&self) -> f64 {
        self.kappa * self.p as f64 * self.eps2
    }

    pub fn regime(&self) -> Regime {
        if self.inner_width() >= 0.5 {
            Regime::Asymptotic
        } else {
            Regime::PreAsymptotic
        }
    }

    /// Reference ξ-breakpoints `{0, κpε₁/ε₂, min(κpε₂, ½), 1}` of a split
    /// boundary element, or `None` in the asymptotic regime.
    ///
    /// For `ε₁ ≥ ε₂²` the two layer widths coincide or swap; the outer
    /// breakpoint then becomes `min(2κpε₁/ε₂, ½)` so the outer layer element
    /// stays non-degenerate, and the result is flagged `widened`.
    pub fn breakpoints(&self) -> Option<Breakpoints> {
        match self.regime() {
            Regime::Asymptotic => None,
            Regime::PreAsymptotic => {
                let inner = self.inner_width();
                let raw = self.outer_width();
                let clamped = raw >= 0.5;
                let mut outer = if clamped { 0.5 } else { raw };
                let widened = outer <= inner;
                if widened {
                    outer = (2.0 * inner).min(0.5);
                }
                Some(Breakpoints { inner, outer, clamped, widened })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakpoints {
    pub inner: f64,
    pub outer: f64,
    /// `κ p ε₂ ≥ ½` was clamped to ½.
    pub clamped: bool,
    /// `κ p ε₂ ≤ κ p ε₁/ε₂`; the outer breakpoint was moved past the inner one.
    pub widened: bool,
}

impl Breakpoints {
    pub fn as_array(&self) -> [f64; 4] {
        [0.0, self.inner, self.outer, 1.0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerTag {
    #[serde(rename = "BL1")]
    Inner,
    #[serde(rename = "BL2")]
    Outer,
    #[serde(rename = "regular")]
    Regular,
    #[serde(rename = "interior")]
    Interior,
}

impl LayerTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            LayerTag::Inner => "BL1",
            LayerTag::Outer => "BL2",
            LayerTag::Regular => "regular",
            LayerTag::Interior => "interior",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SblElement {
    pub map: ElementMap,
    pub tag: LayerTag,
    pub parent: usize,
}

impl SblElement {
    pub fn xi_interval(&self) -> [f64; 2] {
        self.map.xi_range()
    }
}

/// The Spectral Boundary Layer mesh Δ_BL(κ, p).
///
/// In the pre-asymptotic regime elements are ordered as all inner-layer
/// elements, all outer-layer elements, the regular remainders of the
/// boundary elements, then the untouched core elements.
#[derive(Debug, Clone)]
pub struct SblMesh {
    base: Arc<AsymptoticMesh>,
    params: LayerParams,
    breakpoints: Option<Breakpoints>,
    elements: Vec<SblElement>,
    topology: Topology,
    children: Vec<Vec<usize>>,
    boxes: Vec<[f64; 4]>,
}

/// `build_sbl_mesh`.
pub fn build_sbl_mesh(base: Arc<AsymptoticMesh>, params: LayerParams) -> Result<SblMesh> {
    SblMesh::build(base, params)
}

impl SblMesh {
    pub fn build(base: Arc<AsymptoticMesh>, params: LayerParams) -> Result<Self> {
        params.validate()?;
        let breakpoints = params.breakpoints();
        let n1 = base.n_elements();
        let n2 = base.n_boundary();
        let btopo = base.topology();
        let tag_of = |e: usize| if e < n2 { LayerTag::Regular } else { LayerTag::Interior };

        let (elements, topology) = match breakpoints {
            None => {
                let elements = (0..n1)
                    .map(|e| SblElement { map: ElementMap::new(base.map(e).clone()), tag: tag_of(e), parent: e })
                    .collect();
                (elements, btopo.clone())
            }
            Some(bp) => {
                let mut n_vertices = btopo.n_vertices();
                // split vertices on the radial edges, keyed by (edge, break index)
                let mut split: HashMap<(usize, usize), usize> = HashMap::new();
                let mut split_vertex = |edge: usize, k: usize| {
                    *split.entry((edge, k)).or_insert_with(|| {
                        n_vertices += 1;
                        n_vertices - 1
                    })
                };
                let boundary = btopo.boundary_vertices();
                let mut layers: [Vec<(SblElement, [usize; 4])>; 3] = Default::default();
                let cuts = bp.as_array();
                for e in 0..n2 {
                    let [c00, c10, c01, c11] = btopo.element_vertices(e);
                    if !(boundary[c00] && boundary[c01]) || boundary[c10] || boundary[c11] {
                        return Err(Error::Topology(format!(
                            "boundary element {e} does not touch the boundary with exactly its xi = 0 side"
                        )));
                    }
                    let (low, high) = (btopo.edge_of(e, 2), btopo.edge_of(e, 3));
                    let lo = [c00, split_vertex(low, 1), split_vertex(low, 2), c10];
                    let hi = [c01, split_vertex(high, 1), split_vertex(high, 2), c11];
                    let tags = [LayerTag::Inner, LayerTag::Outer, LayerTag::Regular];
                    for (k, tag) in tags.into_iter().enumerate() {
                        let map = ElementMap::restricted(base.map(e).clone(), cuts[k], cuts[k + 1]);
                        layers[k].push((SblElement { map, tag, parent: e }, [lo[k], lo[k + 1], hi[k], hi[k + 1]]));
                    }
                }
                let mut elements = Vec::with_capacity(n1 + 2 * n2);
                let mut verts = Vec::with_capacity(n1 + 2 * n2);
                for (el, v) in layers.into_iter().flatten() {
                    elements.push(el);
                    verts.push(v);
                }
                for e in n2..n1 {
                    elements.push(SblElement { map: ElementMap::new(base.map(e).clone()), tag: LayerTag::Interior, parent: e });
                    verts.push(btopo.element_vertices(e));
                }
                (elements, Topology::from_elements(verts, n_vertices)?)
            }
        };

        let mut children = vec![Vec::new(); n1];
        for (id, el) in elements.iter().enumerate() {
            children[el.parent].push(id);
        }
        for c in &mut children {
            c.sort_by(|&a, &b| elements[a].xi_interval()[0].total_cmp(&elements[b].xi_interval()[0]));
        }
        let boxes = (0..n1).map(|e| bounding_box(base.map(e))).collect();
        Ok(Self { base, params, breakpoints, elements, topology, children, boxes })
    }

    pub fn base(&self) -> &Arc<AsymptoticMesh> {
        &self.base
    }

    pub fn params(&self) -> LayerParams {
        self.params
    }

    pub fn regime(&self) -> Regime {
        self.params.regime()
    }

    pub fn breakpoints(&self) -> Option<Breakpoints> {
        self.breakpoints
    }

    pub fn elements(&self) -> &[SblElement] {
        &self.elements
    }

    pub fn element(&self, e: usize) -> &SblElement {
        &self.elements[e]
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    /// Element ids generated from asymptotic element `parent`, by increasing ξ.
    pub fn children(&self, parent: usize) -> &[usize] {
        &self.children[parent]
    }

    /// The element containing parent coordinates `(ξ, η)` of asymptotic
    /// element `parent`, and the local coordinates there.
    pub fn locate_in_parent(&self, parent: usize, xi: f64, eta: f64) -> (usize, f64, f64) {
        let kids = &self.children[parent];
        let id = kids
            .iter()
            .copied()
            .find(|&c| xi <= self.elements[c].xi_interval()[1])
            .unwrap_or(*kids.last().expect("every parent has a child"));
        let [a, b] = self.elements[id].xi_interval();
        (id, ((xi - a) / (b - a)).clamp(0.0, 1.0), eta)
    }

    /// Locates `x`, returning the element and its local reference coordinates.
    /// `hint` is an element tried first.
    pub fn locate(&self, x: Vec2, hint: Option<usize>) -> Result<(usize, f64, f64)> {
        let n1 = self.base.n_elements();
        let scale = self.boxes.iter().map(|b| (b[2] - b[0]).max(b[3] - b[1])).fold(0.0, f64::max);
        let tol = 1e-13 * scale.max(1.0);
        let first = hint.map(|h| self.elements[h].parent);
        let order = first.into_iter().chain((0..n1).filter(|&e| Some(e) != first));
        let mut failure = false;
        for parent in order {
            let b = self.boxes[parent];
            if x.x < b[0] || x.x > b[2] || x.y < b[1] || x.y > b[3] {
                continue;
            }
            let map = ElementMap::new(self.base.map(parent).clone());
            match inverse_map(&map, x, tol) {
                Ok((xi, eta)) => {
                    let (id, local, eta) = self.locate_in_parent(parent, xi, eta);
                    let [a, b] = self.elements[id].xi_interval();
                    if b - a < 1.0 {
                        // the parent solve only resolves ξ to tol / width of the strip
                        if let Ok((lx, le)) = inverse_map(&self.elements[id].map, x, tol) {
                            return Ok((id, lx, le));
                        }
                    }
                    return Ok((id, local, eta));
                }
                Err(LocateError::Outside) => {}
                Err(LocateError::NoConvergence) => failure = true,
            }
        }
        if failure {
            log::debug!("point location stalled near ({}, {})", x.x, x.y);
        }
        Err(Error::PointNotFound { x: x.x, y: x.y })
    }

    /// `check_admissibility`.
    pub fn check_admissibility(&self, quad_order: usize) -> Result<AdmissibilityReport> {
        let rule = gauss_rule(quad_order)?;
        let mut min_det = Vec::with_capacity(self.elements.len());
        let mut max_det = Vec::with_capacity(self.elements.len());
        for el in &self.elements {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &xi in &rule.points {
                for &eta in &rule.points {
                    let d = el.map.eval(xi, eta).1.determinant();
                    lo = lo.min(d);
                    hi = hi.max(d);
                }
            }
            min_det.push(lo);
            max_det.push(hi);
        }
        let nodes = gll_nodes(self.params.p.max(1))?;
        let mut worst: f64 = 0.0;
        for s in self.topology.shared_edges() {
            for &t in nodes.nodes() {
                let ta = t;
                let tb = if s.orientation == 1 { t } else { 1.0 - t };
                let pa = self.elements[s.a.0].map.side_point(s.a.1, ta);
                let pb = self.elements[s.b.0].map.side_point(s.b.1, tb);
                worst = worst.max((pa - pb).norm());
            }
        }
        Ok(AdmissibilityReport {
            all_positive: min_det.iter().all(|&d| d > 0.0),
            min_det,
            max_det,
            worst_edge_mismatch: worst,
            clamped: self.breakpoints.is_some_and(|b| b.clamped),
            widened: self.breakpoints.is_some_and(|b| b.widened),
        })
    }
}

/// Everything needed to rebuild an [`SblMesh`] on a built-in curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshSpec {
    pub curve: CurveSpec,
    pub grid: GridParams,
    pub layer: LayerParams,
}

impl MeshSpec {
    pub fn build_base(&self) -> Result<Arc<AsymptoticMesh>> {
        Ok(Arc::new(AsymptoticMesh::build(&self.curve.build()?, self.grid)?))
    }

    pub fn build(&self) -> Result<SblMesh> {
        SblMesh::build(self.build_base()?, self.layer)
    }
}

/// Outcome of [`SblMesh::check_admissibility`].
#[derive(Debug, Clone)]
pub struct AdmissibilityReport {
    pub min_det: Vec<f64>,
    pub max_det: Vec<f64>,
    pub worst_edge_mismatch: f64,
    pub all_positive: bool,
    /// The outer layer breakpoint was clamped to ½.
    pub clamped: bool,
    /// The outer layer breakpoint was moved past a larger inner one.
    pub widened: bool,
}

impl AdmissibilityReport {
    pub fn is_admissible(&self) -> bool {
        self.all_positive && self.worst_edge_mismatch <= 1e-10
    }
}

fn bounding_box(map: &TransfiniteMap) -> [f64; 4] {
    let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    let n = 32;
    for k in 0..=n {
        let t = k as f64 / n as f64;
        for p in [map.point(0.0, t), map.point(1.0, t), map.point(t, 0.0), map.point(t, 1.0)] {
            b[0] = b[0].min(p.x);
            b[1] = b[1].min(p.y);
            b[2] = b[2].max(p.x);
            b[3] = b[3].max(p.y);
        }
    }
    let pad = 0.05 * (b[2] - b[0]).max(b[3] - b[1]) + 1e-12;
    [b[0] - pad, b[1] - pad, b[2] + pad, b[3] + pad]
}
