use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{LayerTag, SblMesh};
use crate::error::Result;

/// Points sampled along each element side in the SVG rendering.
const SVG_EDGE_SAMPLES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Json,
    Svg,
}

impl std::str::FromStr for MeshFormat {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(MeshFormat::Json),
            "svg" => Ok(MeshFormat::Svg),
            other => Err(crate::error::Error::InvalidParameter(format!("unknown mesh format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementRecord {
    pub id: usize,
    pub tag: LayerTag,
    pub parent: usize,
    pub xi_interval: [f64; 2],
    pub corners: [[f64; 2]; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub a: [usize; 2],
    pub b: [usize; 2],
    pub orientation: i32,
}

/// Serialized form of an [`SblMesh`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshRecord {
    pub regime: String,
    pub kappa: f64,
    pub p: usize,
    pub eps1: f64,
    pub eps2: f64,
    pub elements: Vec<ElementRecord>,
    pub edges: Vec<EdgeRecord>,
}

impl MeshRecord {
    pub fn from_mesh(mesh: &SblMesh) -> Self {
        let params = mesh.params();
        let elements = mesh
            .elements()
            .iter()
            .enumerate()
            .map(|(id, el)| ElementRecord {
                id,
                tag: el.tag,
                parent: el.parent,
                xi_interval: el.xi_interval(),
                corners: el.map.corners().map(|c| [c.x, c.y]),
            })
            .collect();
        let edges = mesh
            .topology()
            .shared_edges()
            .map(|s| EdgeRecord { a: [s.a.0, s.a.1], b: [s.b.0, s.b.1], orientation: s.orientation })
            .collect();
        Self {
            regime: mesh.regime().as_str().to_string(),
            kappa: params.kappa,
            p: params.p,
            eps1: params.eps1,
            eps2: params.eps2,
            elements,
            edges,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// The ξ-breakpoints of split boundary elements, read back from the
    /// layer element intervals; `None` if nothing was split.
    pub fn breakpoints(&self) -> Option<[f64; 4]> {
        let inner = self.elements.iter().find(|e| e.tag == LayerTag::Inner)?;
        let outer = self.elements.iter().find(|e| e.tag == LayerTag::Outer)?;
        Some([inner.xi_interval[0], inner.xi_interval[1], outer.xi_interval[1], 1.0])
    }
}

/// `export_mesh`: JSON record or SVG drawing of the mesh.
pub fn export_mesh(mesh: &SblMesh, format: MeshFormat) -> Result<Vec<u8>> {
    match format {
        MeshFormat::Json => Ok(serde_json::to_vec_pretty(&MeshRecord::from_mesh(mesh))?),
        MeshFormat::Svg => Ok(render_svg(mesh).into_bytes()),
    }
}

fn tag_color(tag: LayerTag) -> &'static str {
    match tag {
        LayerTag::Inner => "#d62728",
        LayerTag::Outer => "#ff7f0e",
        LayerTag::Regular => "#1f77b4",
        LayerTag::Interior => "#555555",
    }
}

fn render_svg(mesh: &SblMesh) -> String {
    let n = SVG_EDGE_SAMPLES - 1;
    let outlines: Vec<Vec<(f64, f64)>> = mesh
        .elements()
        .iter()
        .map(|el| {
            // counterclockwise in reference space: η = 0, ξ = 1, η = 1 reversed, ξ = 0 reversed
            let mut pts = Vec::with_capacity(4 * SVG_EDGE_SAMPLES);
            for (side, reverse) in [(2, false), (1, false), (3, true), (0, true)] {
                for k in 0..SVG_EDGE_SAMPLES {
                    let t = k as f64 / n as f64;
                    let p = el.map.side_point(side, if reverse { 1.0 - t } else { t });
                    pts.push((p.x, -p.y));
                }
            }
            pts
        })
        .collect();
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(x, y) in outlines.iter().flatten() {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    let pad = 0.02 * (x1 - x0).max(y1 - y0);
    let stroke = 0.002 * (x1 - x0).max(y1 - y0);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="800" height="800">"#,
        x0 - pad,
        y0 - pad,
        x1 - x0 + 2.0 * pad,
        y1 - y0 + 2.0 * pad
    );
    for (el, pts) in mesh.elements().iter().zip(&outlines) {
        let mut d = String::new();
        for (k, (x, y)) in pts.iter().enumerate() {
            let _ = write!(d, "{}{x:.9} {y:.9} ", if k == 0 { "M" } else { "L" });
        }
        d.push('Z');
        let _ = writeln!(
            svg,
            r#"  <path class="{}" d="{d}" fill="none" stroke="{}" stroke-width="{stroke}"/>"#,
            el.tag.as_str(),
            tag_color(el.tag)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundaryCurve;
    use crate::mesh::{AsymptoticMesh, GridParams, LayerParams};
    use std::sync::Arc;

    fn mesh(eps1: f64, eps2: f64, m: usize) -> SblMesh {
        let base = AsymptoticMesh::build(&BoundaryCurve::unit_circle(), GridParams { m, strip_fraction: 0.5 }).unwrap();
        SblMesh::build(Arc::new(base), LayerParams { kappa: 1.0, p: 4, eps1, eps2 }).unwrap()
    }

    #[test]
    fn json_has_one_record_per_element() {
        let bytes = export_mesh(&mesh(0.5, 0.5, 1), MeshFormat::Json).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(v["elements"].as_array().unwrap().len(), 5);
        assert_eq!(v["regime"], "asymptotic");
        assert_eq!(v["elements"][0]["tag"], "regular");
        assert_eq!(v["elements"][4]["tag"], "interior");
        assert_eq!(v["edges"].as_array().unwrap().len(), 8);
    }

    #[test]
    fn breakpoints_roundtrip_exactly() {
        let m = mesh(3.7e-11, 1.3e-3, 2);
        let bytes = export_mesh(&m, MeshFormat::Json).unwrap();
        let rec = MeshRecord::from_json(std::str::from_utf8(&bytes).unwrap()).unwrap();
        assert_eq!(rec.breakpoints().unwrap(), m.breakpoints().unwrap().as_array());
        assert_eq!(rec, MeshRecord::from_mesh(&m));
    }

    #[test]
    fn svg_has_one_path_per_element() {
        let m = mesh(1e-9, 1e-3, 2);
        let svg = String::from_utf8(export_mesh(&m, MeshFormat::Svg).unwrap()).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<path").count(), m.n_elements());
        assert_eq!(svg.matches("class=\"BL1\"").count(), 8);
    }
}
