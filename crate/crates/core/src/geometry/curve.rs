//! Closed analytic boundary curves in their native parametrization.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{rot90, Vec2};
use crate::error::{Error, Result};

/// Number of samples used by every dense-sampling estimate on a curve.
pub const CURVE_SAMPLES: usize = 10_000;

/// Position and parametric derivatives `[γ, γ', γ'', γ''']` at one parameter value.
pub type CurveJet = [Vec2; 4];

/// Evaluator for a user supplied parametric curve.
pub type JetFn = dyn Fn(f64) -> CurveJet + Send + Sync;

#[derive(Clone)]
enum Shape {
    Circle { center: Vec2, radius: f64 },
    Cranioid,
    Parametric(Arc<JetFn>),
}

/// Serializable description of the built-in curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CurveSpec {
    Circle { radius: f64 },
    Cranioid,
}

impl CurveSpec {
    pub fn build(&self) -> Result<BoundaryCurve> {
        match *self {
            CurveSpec::Circle { radius } => BoundaryCurve::circle(Vec2::zeros(), radius),
            CurveSpec::Cranioid => Ok(BoundaryCurve::cranioid()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CurveSpec::Circle { .. } => "circle",
            CurveSpec::Cranioid => "cranioid",
        }
    }
}

/// A closed, regular, counterclockwise-oriented boundary curve.
#[derive(Clone)]
pub struct BoundaryCurve {
    shape: Shape,
    period: f64,
}

impl fmt::Debug for BoundaryCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.shape {
            Shape::Circle { center, radius } => {
                format!("circle(center=({}, {}), radius={radius})", center.x, center.y)
            }
            Shape::Cranioid => "cranioid".to_string(),
            Shape::Parametric(_) => "parametric".to_string(),
        };
        f.debug_struct("BoundaryCurve")
            .field("kind", &kind)
            .field("period", &self.period)
            .finish()
    }
}

/// Tangent, inward normal and signed curvature at a curve point.
#[derive(Debug, Clone, Copy)]
pub struct CurveFrame {
    pub tangent: Vec2,
    pub inward_normal: Vec2,
    pub curvature: f64,
}

/// A point of the tubular neighborhood in boundary-fitted coordinates.
#[derive(Debug, Clone, Copy)]
pub struct OffsetFrame {
    pub theta: f64,
    pub rho: f64,
    pub point: Vec2,
}

impl BoundaryCurve {
    pub fn circle(center: Vec2, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("circle radius {radius}")));
        }
        Ok(Self { shape: Shape::Circle { center, radius }, period: 2.0 * PI })
    }

    pub fn unit_circle() -> Self {
        Self::circle(Vec2::zeros(), 1.0).expect("unit radius is valid")
    }

    /// The cranioid `γ(θ) = r(θ)·(cos θ, sin θ)` with
    /// `r(θ) = ¼ sin θ + ½√(1 − 0.9 cos²θ) + ½√(1 − 0.7 cos²θ)`.
    pub fn cranioid() -> Self {
        Self { shape: Shape::Cranioid, period: 2.0 * PI }
    }

    /// A user supplied closed curve. `jet` must return position and the first
    /// three parametric derivatives, and the curve must be counterclockwise.
    pub fn parametric<F>(period: f64, jet: F) -> Result<Self>
    where
        F: Fn(f64) -> CurveJet + Send + Sync + 'static,
    {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidParameter(format!("curve period {period}")));
        }
        let curve = Self { shape: Shape::Parametric(Arc::new(jet)), period };
        let gap = (curve.eval(0.0) - curve.jet(period)[0]).norm();
        if gap > 1e-12 {
            return Err(Error::InvalidParameter(format!("curve is not closed (gap {gap:e})")));
        }
        Ok(curve)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Position and derivatives up to order three. The parameter is used as
    /// given; built-in curves are periodic so no wrapping is needed.
    pub fn jet(&self, theta: f64) -> CurveJet {
        match &self.shape {
            Shape::Circle { center, radius } => {
                let (s, c) = theta.sin_cos();
                let e = Vec2::new(c, s);
                let t = Vec2::new(-s, c);
                [center + *radius * e, *radius * t, -*radius * e, -*radius * t]
            }
            Shape::Cranioid => cranioid_jet(theta),
            Shape::Parametric(f) => f(theta),
        }
    }

    /// `curve_eval`: position at `theta`, wrapped into one period.
    pub fn eval(&self, theta: f64) -> Vec2 {
        self.jet(theta.rem_euclid(self.period))[0]
    }

    /// `curve_frame`: unit tangent, inward normal (tangent rotated by +90°,
    /// which points into the domain for a counterclockwise curve) and the
    /// signed curvature `(x'y'' − y'x'') / |γ'|³`.
    pub fn frame(&self, theta: f64) -> Result<CurveFrame> {
        let [_, d1, d2, _] = self.jet(theta);
        let speed = d1.norm();
        if speed < 1e-12 {
            return Err(Error::DegenerateTangent { theta });
        }
        let tangent = d1 / speed;
        let curvature = (d1.x * d2.y - d1.y * d2.x) / (speed * speed * speed);
        Ok(CurveFrame { tangent, inward_normal: rot90(tangent), curvature })
    }

    /// Minimum radius of curvature over a dense uniform sample. This is an
    /// estimate from sampling, not a certified bound.
    pub fn min_curvature_radius(&self) -> f64 {
        let mut max_k: f64 = 0.0;
        for i in 0..CURVE_SAMPLES {
            let theta = self.period * i as f64 / CURVE_SAMPLES as f64;
            if let Ok(frame) = self.frame(theta) {
                max_k = max_k.max(frame.curvature.abs());
            }
        }
        if max_k == 0.0 {
            f64::INFINITY
        } else {
            1.0 / max_k
        }
    }

    /// `offset_point`: the point at normal distance `rho` inside the domain.
    /// `rho_max` is the tubular neighborhood width the caller works with.
    pub fn offset_point(&self, theta: f64, rho: f64, rho_max: f64) -> Result<OffsetFrame> {
        if !(0.0..rho_max).contains(&rho) {
            return Err(Error::OutsideTubularNeighborhood { rho, limit: rho_max });
        }
        let frame = self.frame(theta)?;
        let point = self.eval(theta) + rho * frame.inward_normal;
        Ok(OffsetFrame { theta, rho, point })
    }

    /// Position of the offset curve at distance `rho` and its parametric
    /// derivative, `γ + ρ n` and `γ' + ρ n'`. No validity check.
    pub fn offset_jet(&self, theta: f64, rho: f64) -> (Vec2, Vec2) {
        let [p, d1, d2, _] = self.jet(theta);
        if rho == 0.0 {
            return (p, d1);
        }
        let speed = d1.norm();
        let n = rot90(d1) / speed;
        // derivative of the unit tangent, rotated
        let dt = d2 / speed - d1 * (d1.dot(&d2) / (speed * speed * speed));
        (p + rho * n, d1 + rho * rot90(dt))
    }

    /// Twice the enclosed area via a sampled `∮ (x dy − y dx)`, halved.
    pub fn enclosed_area(&self, samples: usize) -> f64 {
        // Periodic trapezoid rule is spectrally accurate for analytic curves.
        let h = self.period / samples as f64;
        let sum: f64 = (0..samples)
            .map(|i| {
                let [p, d, _, _] = self.jet(h * i as f64);
                p.x * d.y - p.y * d.x
            })
            .sum();
        0.5 * sum * h
    }

    /// Checks that the ray from the origin meets the curve once per
    /// direction, i.e. `γ × γ' > 0` everywhere on a dense sample.
    pub fn check_star_shaped(&self) -> Result<()> {
        for i in 0..CURVE_SAMPLES {
            let theta = self.period * i as f64 / CURVE_SAMPLES as f64;
            let [p, d, _, _] = self.jet(theta);
            if p.x * d.y - p.y * d.x <= 0.0 {
                return Err(Error::NotStarShaped { theta });
            }
        }
        Ok(())
    }

    /// Winding-number containment test against a dense polygonal sample.
    pub fn contains(&self, x: Vec2) -> bool {
        let n = CURVE_SAMPLES;
        let mut winding = 0.0;
        let mut prev = self.eval(0.0) - x;
        for i in 1..=n {
            let next = self.eval(self.period * i as f64 / n as f64) - x;
            winding += (prev.x * next.y - prev.y * next.x).atan2(prev.dot(&next));
            prev = next;
        }
        winding.abs() > PI
    }

    /// Distance from `x` to the sampled curve.
    pub fn sampled_distance(&self, x: Vec2) -> f64 {
        (0..CURVE_SAMPLES)
            .map(|i| (self.eval(self.period * i as f64 / CURVE_SAMPLES as f64) - x).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

/// `g = √(1 − a cos²θ)` and its first three derivatives.
fn sqrt_term(a: f64, theta: f64) -> [f64; 4] {
    let (s, c) = theta.sin_cos();
    let s2 = 2.0 * s * c;
    let c2 = c * c - s * s;
    let q = 1.0 - a * c * c;
    let q1 = a * s2;
    let q2 = 2.0 * a * c2;
    let q3 = -4.0 * a * s2;
    let g = q.sqrt();
    let g1 = q1 / (2.0 * g);
    let g2 = (0.5 * q2 - g1 * g1) / g;
    let g3 = (0.5 * q3 - 3.0 * g1 * g2) / g;
    [g, g1, g2, g3]
}

fn cranioid_jet(theta: f64) -> CurveJet {
    let (s, c) = theta.sin_cos();
    let a = sqrt_term(0.9, theta);
    let b = sqrt_term(0.7, theta);
    let r = 0.25 * s + 0.5 * (a[0] + b[0]);
    let r1 = 0.25 * c + 0.5 * (a[1] + b[1]);
    let r2 = -0.25 * s + 0.5 * (a[2] + b[2]);
    let r3 = -0.25 * c + 0.5 * (a[3] + b[3]);
    let e = Vec2::new(c, s);
    let t = Vec2::new(-s, c);
    [
        r * e,
        r1 * e + r * t,
        r2 * e + 2.0 * r1 * t - r * e,
        r3 * e + 3.0 * r2 * t - 3.0 * r1 * e - r * t,
    ]
}
