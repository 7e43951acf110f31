//! Boundary curves, tubular offsets and curvilinear element maps.

mod curve;
mod map;

pub use curve::{BoundaryCurve, CurveFrame, CurveJet, CurveSpec, OffsetFrame, CURVE_SAMPLES};
pub use map::{
    inverse_map, transfinite_map, EdgeCurve, ElementMap, LocateError, TransfiniteMap,
    CORNER_TOLERANCE, LOCATE_SLACK,
};

pub type Vec2 = nalgebra::Vector2<f64>;
pub type Mat2 = nalgebra::Matrix2<f64>;

/// Counterclockwise rotation by a right angle.
#[inline]
pub fn rot90(v: Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}
