use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Local corner indices (into `c00, c10, c01, c11`) at the start and end of
/// each side, following increasing edge parameter.
pub const SIDE_CORNERS: [[usize; 2]; 4] = [[0, 2], [1, 3], [0, 1], [2, 3]];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    /// Endpoint vertex ids, lower id first.
    pub vertices: [usize; 2],
    /// `(element, side)` pairs touching the edge, in element order.
    pub incident: Vec<(usize, usize)>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.incident.len() == 1
    }
}

/// A shared interior edge as seen from its two elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SharedEdge {
    pub edge: usize,
    pub a: (usize, usize),
    pub b: (usize, usize),
    /// `+1` if both elements traverse the edge in the same direction.
    pub orientation: i32,
}

/// Vertex/edge incidence of a conforming quadrilateral mesh.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    n_vertices: usize,
    element_vertices: Vec<[usize; 4]>,
    element_edges: Vec<[usize; 4]>,
    edges: Vec<Edge>,
}

impl Topology {
    /// Builds edges from per-element corner vertex ids.
    pub fn from_elements(element_vertices: Vec<[usize; 4]>, n_vertices: usize) -> Result<Self> {
        let mut index: BTreeMap<[usize; 2], usize> = BTreeMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut element_edges = Vec::with_capacity(element_vertices.len());
        for (e, verts) in element_vertices.iter().enumerate() {
            let mut distinct = verts.to_vec();
            distinct.sort_unstable();
            distinct.dedup();
            if distinct.len() != 4 || verts.iter().any(|&v| v >= n_vertices) {
                return Err(Error::Topology(format!("element {e} has invalid corners {verts:?}")));
            }
            let mut ids = [0; 4];
            for (side, [s, t]) in SIDE_CORNERS.iter().enumerate() {
                let (u, v) = (verts[*s], verts[*t]);
                let key = [u.min(v), u.max(v)];
                let id = *index.entry(key).or_insert_with(|| {
                    edges.push(Edge { vertices: key, incident: Vec::new() });
                    edges.len() - 1
                });
                if edges[id].incident.len() == 2 {
                    return Err(Error::Topology(format!("edge {key:?} has more than two elements")));
                }
                edges[id].incident.push((e, side));
                ids[side] = id;
            }
            element_edges.push(ids);
        }
        Ok(Self { n_vertices, element_vertices, element_edges, edges })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_elements(&self) -> usize {
        self.element_vertices.len()
    }

    pub fn element_vertices(&self, e: usize) -> [usize; 4] {
        self.element_vertices[e]
    }

    pub fn edge_of(&self, e: usize, side: usize) -> usize {
        self.element_edges[e][side]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Whether side `side` of element `e` runs from the edge's lower vertex
    /// to its higher one.
    pub fn side_forward(&self, e: usize, side: usize) -> bool {
        let [s, _] = SIDE_CORNERS[side];
        let edge = &self.edges[self.element_edges[e][side]];
        self.element_vertices[e][s] == edge.vertices[0]
    }

    pub fn is_boundary_side(&self, e: usize, side: usize) -> bool {
        self.edges[self.element_edges[e][side]].is_boundary()
    }

    pub fn shared_edges(&self) -> impl Iterator<Item = SharedEdge> + '_ {
        self.edges.iter().enumerate().filter(|(_, e)| e.incident.len() == 2).map(move |(id, e)| {
            let (a, b) = (e.incident[0], e.incident[1]);
            let same = self.side_forward(a.0, a.1) == self.side_forward(b.0, b.1);
            SharedEdge { edge: id, a, b, orientation: if same { 1 } else { -1 } }
        })
    }

    /// Vertices lying on boundary edges.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut flags = vec![false; self.n_vertices];
        for e in self.edges.iter().filter(|e| e.is_boundary()) {
            flags[e.vertices[0]] = true;
            flags[e.vertices[1]] = true;
        }
        flags
    }
}
