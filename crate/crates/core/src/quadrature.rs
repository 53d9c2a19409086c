//! Quadrature rules on triangles and segments.

use crate::geometry::{signed_area, Point};

/// Barycentric points and weights (weights sum to one).
pub struct TriangleRule {
    pub points: &'static [[f64; 3]],
    pub weights: &'static [f64],
}

/// Degree 2, three interior points.
pub const TRI_DEGREE2: TriangleRule = TriangleRule {
    points: &[
        [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
        [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
        [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
    ],
    weights: &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
};

const A1: f64 = 0.445_948_490_915_964_886_32;
const B1: f64 = 1.0 - 2.0 * A1;
const W1: f64 = 0.223_381_589_678_011_465_70;
const A2: f64 = 0.091_576_213_509_770_743_46;
const B2: f64 = 1.0 - 2.0 * A2;
const W2: f64 = 0.109_951_743_655_321_867_64;

/// Degree 4, six points (Dunavant).
pub const TRI_DEGREE4: TriangleRule = TriangleRule {
    points: &[
        [B1, A1, A1],
        [A1, B1, A1],
        [A1, A1, B1],
        [B2, A2, A2],
        [A2, B2, A2],
        [A2, A2, B2],
    ],
    weights: &[W1, W1, W1, W2, W2, W2],
};

impl TriangleRule {
    /// Physical points and area-scaled weights on `tri`.
    pub fn on(&self, tri: &[Point; 3]) -> impl Iterator<Item = (Point, f64)> + '_ {
        let area = signed_area(tri[0], tri[1], tri[2]).abs();
        let tri = *tri;
        self.points.iter().zip(self.weights).map(move |(b, &w)| {
            let p = Point::new(
                b[0] * tri[0].x + b[1] * tri[1].x + b[2] * tri[2].x,
                b[0] * tri[0].y + b[1] * tri[1].y + b[2] * tri[2].y,
            );
            (p, w * area)
        })
    }

    pub fn integrate(&self, tri: &[Point; 3], f: impl Fn(Point) -> f64) -> f64 {
        self.on(tri).map(|(p, w)| w * f(p)).sum()
    }
}

/// Gauss–Legendre points on `[0, 1]` with weights summing to one.
pub struct LineRule {
    pub points: &'static [f64],
    pub weights: &'static [f64],
}

const G2: f64 = 0.288_675_134_594_812_882_25; // 1 / (2√3)

pub const LINE_GAUSS2: LineRule = LineRule {
    points: &[0.5 - G2, 0.5 + G2],
    weights: &[0.5, 0.5],
};

const G4A: f64 = 0.5 * 0.339_981_043_584_856_264_80;
const G4B: f64 = 0.5 * 0.861_136_311_594_052_575_22;
const G4WA: f64 = 0.5 * 0.652_145_154_862_546_142_63;
const G4WB: f64 = 0.5 * 0.347_854_845_137_453_857_37;

pub const LINE_GAUSS4: LineRule = LineRule {
    points: &[0.5 - G4B, 0.5 - G4A, 0.5 + G4A, 0.5 + G4B],
    weights: &[G4WB, G4WA, G4WA, G4WB],
};

impl LineRule {
    /// Points on `a → b` with length-scaled weights.
    pub fn on(&self, a: Point, b: Point) -> impl Iterator<Item = (Point, f64)> + '_ {
        let len = a.dist(b);
        self.points
            .iter()
            .zip(self.weights)
            .map(move |(&t, &w)| (a.lerp(b, t), w * len))
    }

    pub fn integrate(&self, a: Point, b: Point, f: impl Fn(Point) -> f64) -> f64 {
        self.on(a, b).map(|(p, w)| w * f(p)).sum()
    }
}
