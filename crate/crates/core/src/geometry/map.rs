//! Curvilinear quadrilateral element maps on the reference square `[0,1]²`.
//!
//! Sides are numbered `0: ξ = 0`, `1: ξ = 1`, `2: η = 0`, `3: η = 1`; the
//! ξ-sides are parametrized by η and the η-sides by ξ. Corners are ordered
//! `c00, c10, c01, c11`.

use std::sync::Arc;

use super::curve::BoundaryCurve;
use super::{Mat2, Vec2};
use crate::error::{Error, Result};

/// Corner tolerance accepted when blending four edges.
pub const CORNER_TOLERANCE: f64 = 1e-10;

/// Clamp tolerance on reference coordinates for point location.
pub const LOCATE_SLACK: f64 = 1e-9;

const NEWTON_MAX_ITER: usize = 50;

/// An analytic edge curve `[0,1] → ℝ²`.
#[derive(Debug, Clone)]
pub enum EdgeCurve {
    Line { a: Vec2, b: Vec2 },
    /// Piece of the curve offset inward by `rho` (zero for the boundary
    /// itself), traversed from `theta0` to `theta1`.
    Arc { curve: BoundaryCurve, theta0: f64, theta1: f64, rho: f64 },
}

impl EdgeCurve {
    pub fn line(a: Vec2, b: Vec2) -> Self {
        EdgeCurve::Line { a, b }
    }

    pub fn arc(curve: &BoundaryCurve, theta0: f64, theta1: f64, rho: f64) -> Self {
        EdgeCurve::Arc { curve: curve.clone(), theta0, theta1, rho }
    }

    /// Point and derivative with respect to the edge parameter.
    pub fn eval(&self, t: f64) -> (Vec2, Vec2) {
        match self {
            EdgeCurve::Line { a, b } => (a + (b - a) * t, b - a),
            EdgeCurve::Arc { curve, theta0, theta1, rho } => {
                let dtheta = theta1 - theta0;
                let (p, d) = curve.offset_jet(theta0 + dtheta * t, *rho);
                (p, d * dtheta)
            }
        }
    }

    pub fn point(&self, t: f64) -> Vec2 {
        self.eval(t).0
    }

    pub fn reversed(&self) -> Self {
        match self {
            EdgeCurve::Line { a, b } => EdgeCurve::Line { a: *b, b: *a },
            EdgeCurve::Arc { curve, theta0, theta1, rho } => EdgeCurve::Arc {
                curve: curve.clone(),
                theta0: *theta1,
                theta1: *theta0,
                rho: *rho,
            },
        }
    }
}

/// Gordon–Hall bilinear blending of four edge curves.
#[derive(Debug, Clone)]
pub struct TransfiniteMap {
    edges: [EdgeCurve; 4],
    corners: [Vec2; 4],
}

/// `transfinite_map`: blends the four edges after checking they close up.
pub fn transfinite_map(edges: [EdgeCurve; 4]) -> Result<TransfiniteMap> {
    TransfiniteMap::new(edges)
}

impl TransfiniteMap {
    pub fn new(edges: [EdgeCurve; 4]) -> Result<Self> {
        let corners = [edges[2].point(0.0), edges[2].point(1.0), edges[3].point(0.0), edges[3].point(1.0)];
        let checks = [
            (0, edges[0].point(0.0)),
            (2, edges[0].point(1.0)),
            (1, edges[1].point(0.0)),
            (3, edges[1].point(1.0)),
        ];
        for (corner, p) in checks {
            let gap = (p - corners[corner]).norm();
            if !(gap <= CORNER_TOLERANCE) {
                return Err(Error::CornerMismatch { corner, gap });
            }
        }
        Ok(Self { edges, corners })
    }

    /// Straight-sided quadrilateral through the corners `c00, c10, c01, c11`.
    pub fn bilinear(corners: [Vec2; 4]) -> Self {
        let [c00, c10, c01, c11] = corners;
        Self {
            edges: [
                EdgeCurve::line(c00, c01),
                EdgeCurve::line(c10, c11),
                EdgeCurve::line(c00, c10),
                EdgeCurve::line(c01, c11),
            ],
            corners,
        }
    }

    pub fn edges(&self) -> &[EdgeCurve; 4] {
        &self.edges
    }

    pub fn corners(&self) -> [Vec2; 4] {
        self.corners
    }

    pub fn point(&self, xi: f64, eta: f64) -> Vec2 {
        self.eval(xi, eta).0
    }

    /// Physical point and Jacobian `[∂x/∂ξ | ∂x/∂η]`.
    pub fn eval(&self, xi: f64, eta: f64) -> (Vec2, Mat2) {
        let [c00, c10, c01, c11] = self.corners;
        let (e0, d0) = self.edges[0].eval(eta);
        let (e1, d1) = self.edges[1].eval(eta);
        let (e2, d2) = self.edges[2].eval(xi);
        let (e3, d3) = self.edges[3].eval(xi);
        let (a, b) = (1.0 - xi, 1.0 - eta);
        let corner_part = c00 * (a * b) + c10 * (xi * b) + c01 * (a * eta) + c11 * (xi * eta);
        let x = e0 * a + e1 * xi + e2 * b + e3 * eta - corner_part;
        let dxi = e1 - e0 + d2 * b + d3 * eta - ((c10 - c00) * b + (c11 - c01) * eta);
        let deta = d0 * a + d1 * xi + e3 - e2 - ((c01 - c00) * a + (c11 - c10) * xi);
        (x, Mat2::from_columns(&[dxi, deta]))
    }
}

/// An element map: a parent transfinite map restricted to the strip
/// `ξ ∈ [a, b]` by the affine map `ξ ↦ a + (b − a) ξ`.
#[derive(Debug, Clone)]
pub struct ElementMap {
    parent: Arc<TransfiniteMap>,
    xi_range: [f64; 2],
}

impl ElementMap {
    pub fn new(parent: Arc<TransfiniteMap>) -> Self {
        Self { parent, xi_range: [0.0, 1.0] }
    }

    pub fn restricted(parent: Arc<TransfiniteMap>, a: f64, b: f64) -> Self {
        debug_assert!(a < b);
        Self { parent, xi_range: [a, b] }
    }

    pub fn parent(&self) -> &Arc<TransfiniteMap> {
        &self.parent
    }

    pub fn xi_range(&self) -> [f64; 2] {
        self.xi_range
    }

    pub fn to_parent_xi(&self, xi: f64) -> f64 {
        let [a, b] = self.xi_range;
        a + (b - a) * xi
    }

    pub fn point(&self, xi: f64, eta: f64) -> Vec2 {
        self.parent.point(self.to_parent_xi(xi), eta)
    }

    pub fn eval(&self, xi: f64, eta: f64) -> (Vec2, Mat2) {
        let [a, b] = self.xi_range;
        let (x, mut jac) = self.parent.eval(a + (b - a) * xi, eta);
        jac.set_column(0, &(jac.column(0) * (b - a)));
        (x, jac)
    }

    pub fn corners(&self) -> [Vec2; 4] {
        [self.point(0.0, 0.0), self.point(1.0, 0.0), self.point(0.0, 1.0), self.point(1.0, 1.0)]
    }

    /// Point on side `side` at edge parameter `t`.
    pub fn side_point(&self, side: usize, t: f64) -> Vec2 {
        match side {
            0 => self.point(0.0, t),
            1 => self.point(1.0, t),
            2 => self.point(t, 0.0),
            _ => self.point(t, 1.0),
        }
    }
}

/// Why a point could not be mapped back to reference coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocateError {
    /// The point lies outside the element.
    Outside,
    /// Newton failed to converge inside the element after all restarts.
    NoConvergence,
}

enum Newton {
    Converged(f64, f64),
    Stalled(f64, f64),
}

fn newton(map: &ElementMap, x: Vec2, seed: (f64, f64), tol: f64) -> Newton {
    let (mut xi, mut eta) = seed;
    for _ in 0..NEWTON_MAX_ITER {
        let (y, jac) = map.eval(xi, eta);
        let Some(inv) = jac.try_inverse() else {
            return Newton::Stalled(xi, eta);
        };
        let step = inv * (y - x);
        xi = (xi - step.x).clamp(-0.5, 1.5);
        eta = (eta - step.y).clamp(-0.5, 1.5);
        if step.amax() <= 1e-15 {
            break;
        }
    }
    if (map.point(xi, eta) - x).norm() <= tol {
        Newton::Converged(xi, eta)
    } else {
        Newton::Stalled(xi, eta)
    }
}

fn inside(xi: f64, eta: f64) -> bool {
    let lo = -LOCATE_SLACK;
    let hi = 1.0 + LOCATE_SLACK;
    (lo..=hi).contains(&xi) && (lo..=hi).contains(&eta)
}

/// `inverse_map`: reference coordinates of `x` with `|map(ξ,η) − x| ≤ tol`.
///
/// Newton starts from the element center and restarts from a 5×5 grid of
/// seeds (best residual first). Results within [`LOCATE_SLACK`] of the
/// square are clamped into it.
pub fn inverse_map(map: &ElementMap, x: Vec2, tol: f64) -> Result<(f64, f64), LocateError> {
    let mut outside_seen = false;
    let mut try_seed = |seed: (f64, f64)| -> Option<Result<(f64, f64), LocateError>> {
        match newton(map, x, seed, tol) {
            Newton::Converged(xi, eta) if inside(xi, eta) => {
                Some(Ok((xi.clamp(0.0, 1.0), eta.clamp(0.0, 1.0))))
            }
            Newton::Converged(..) => Some(Err(LocateError::Outside)),
            Newton::Stalled(xi, eta) => {
                if !inside(xi, eta) {
                    outside_seen = true;
                }
                None
            }
        }
    };
    if let Some(r) = try_seed((0.5, 0.5)) {
        return r;
    }
    let mut seeds: Vec<(f64, (f64, f64))> = (0..25)
        .map(|k| {
            let s = ((k % 5) as f64 + 0.5) / 5.0;
            let t = ((k / 5) as f64 + 0.5) / 5.0;
            ((map.point(s, t) - x).norm(), (s, t))
        })
        .collect();
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (_, seed) in seeds {
        if let Some(r) = try_seed(seed) {
            return r;
        }
    }
    if outside_seen {
        Err(LocateError::Outside)
    } else {
        Err(LocateError::NoConvergence)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn unit_square() -> TransfiniteMap {
        TransfiniteMap::new([
            EdgeCurve::line(Vec2::new(0.0, 0.0), Vec2::new(0.0, 1.0)),
            EdgeCurve::line(Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0)),
            EdgeCurve::line(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)),
            EdgeCurve::line(Vec2::new(0.0, 1.0), Vec2::new(1.0, 1.0)),
        ])
        .unwrap()
    }

    /// Quarter of an annulus: ξ = 0 on the unit circle, ξ = 1 straight chord.
    fn circle_element() -> TransfiniteMap {
        let c = BoundaryCurve::unit_circle();
        let (t0, t1) = (PI / 4.0, -PI / 4.0);
        let q0 = 0.5 * Vec2::new(t0.cos(), t0.sin());
        let q1 = 0.5 * Vec2::new(t1.cos(), t1.sin());
        TransfiniteMap::new([
            EdgeCurve::arc(&c, t1, t0, 0.0),
            EdgeCurve::line(q1, q0),
            EdgeCurve::line(c.eval(t1), q1),
            EdgeCurve::line(c.eval(t0), q0),
        ])
        .unwrap()
    }

    #[test]
    fn straight_square_is_identity() {
        let m = unit_square();
        for i in 0..=10 {
            for j in 0..=10 {
                let (xi, eta) = (i as f64 / 10.0, j as f64 / 10.0);
                let (x, jac) = m.eval(xi, eta);
                assert!((x - Vec2::new(xi, eta)).norm() < 1e-15);
                assert!((jac.determinant() - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn curved_edge_is_interpolated() {
        let m = circle_element();
        for i in 0..=50 {
            let eta = i as f64 / 50.0;
            assert!((m.point(0.0, eta).norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let m = circle_element();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = 1e-6;
        for _ in 0..50 {
            let xi = rng.gen_range(0.05..0.95);
            let eta = rng.gen_range(0.05..0.95);
            let (_, jac) = m.eval(xi, eta);
            let dxi = (m.point(xi + h, eta) - m.point(xi - h, eta)) / (2.0 * h);
            let deta = (m.point(xi, eta + h) - m.point(xi, eta - h)) / (2.0 * h);
            assert!((dxi - jac.column(0)).norm() < 1e-6);
            assert!((deta - jac.column(1)).norm() < 1e-6);
        }
    }

    #[test]
    fn bilinear_reproduction() {
        let corners = [
            Vec2::new(0.1, -0.2),
            Vec2::new(1.3, 0.1),
            Vec2::new(-0.2, 0.9),
            Vec2::new(1.1, 1.4),
        ];
        let tf = TransfiniteMap::new([
            EdgeCurve::line(corners[0], corners[2]),
            EdgeCurve::line(corners[1], corners[3]),
            EdgeCurve::line(corners[0], corners[1]),
            EdgeCurve::line(corners[2], corners[3]),
        ])
        .unwrap();
        let nodes = crate::refspace::gll_nodes(6).unwrap();
        for &xi in nodes.nodes() {
            for &eta in nodes.nodes() {
                let bl = corners[0] * ((1.0 - xi) * (1.0 - eta))
                    + corners[1] * (xi * (1.0 - eta))
                    + corners[2] * ((1.0 - xi) * eta)
                    + corners[3] * (xi * eta);
                assert!((tf.point(xi, eta) - bl).norm() < 4.0 * f64::EPSILON);
            }
        }
    }

    #[test]
    fn corner_mismatch_is_rejected() {
        let r = TransfiniteMap::new([
            EdgeCurve::line(Vec2::new(0.0, 0.0), Vec2::new(0.0, 1.0)),
            EdgeCurve::line(Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0)),
            EdgeCurve::line(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)),
            EdgeCurve::line(Vec2::new(0.0, 1.0), Vec2::new(1.0, 1.0 + 1e-6)),
        ]);
        assert!(matches!(r, Err(Error::CornerMismatch { corner: 3, .. })));
    }

    #[test]
    fn inverse_of_identity_and_roundtrip() {
        let sq = ElementMap::new(Arc::new(unit_square()));
        let (xi, eta) = inverse_map(&sq, Vec2::new(0.25, 0.5), 1e-14).unwrap();
        assert!((xi - 0.25).abs() < 1e-15 && (eta - 0.5).abs() < 1e-15);

        let m = ElementMap::new(Arc::new(circle_element()));
        let x = m.point(0.3, 0.7);
        let (xi, eta) = inverse_map(&m, x, 1e-14).unwrap();
        assert!((xi - 0.3).abs() < 1e-10 && (eta - 0.7).abs() < 1e-10);
    }

    #[test]
    fn outside_points_are_reported() {
        let sq = ElementMap::new(Arc::new(unit_square()));
        for x in [Vec2::new(1.1, 0.5), Vec2::new(0.5, -0.1), Vec2::new(-0.1, -0.1)] {
            assert_eq!(inverse_map(&sq, x, 1e-13), Err(LocateError::Outside));
        }
        let m = ElementMap::new(Arc::new(circle_element()));
        assert_eq!(inverse_map(&m, Vec2::new(1.1, 0.0), 1e-13), Err(LocateError::Outside));
        assert_eq!(inverse_map(&m, Vec2::new(-0.9, 0.0), 1e-13), Err(LocateError::Outside));
    }

    #[test]
    fn restricted_map_scales_first_column() {
        let parent = Arc::new(circle_element());
        let sub = ElementMap::restricted(parent.clone(), 0.25, 0.5);
        let (x, jac) = sub.eval(0.4, 0.3);
        let (xp, jp) = parent.eval(0.35, 0.3);
        assert_eq!(x, xp);
        assert!((jac.determinant() - 0.25 * jp.determinant()).abs() < 1e-15);
    }
}
