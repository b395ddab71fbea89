//! Geometric primitives and predicates.
//!
//! Topological decisions (`orient2d`, `in_circle`) are made with adaptive
//! exact arithmetic. Constructed quantities such as circumcenters and radii are
//! plain floating point.

use std::ops::{Add, Mul, Neg, Sub};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Seed used for the internal shuffle of [`min_covering_circle`].
const COVERING_CIRCLE_SEED: u64 = 0x1f2e_3d4c_5b6a_7988;

/// Relative slack used when testing containment in a constructed circle.
const CONTAINMENT_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum GeomError {
    #[error("points are collinear")]
    Collinear,
    #[error("points coincide")]
    CoincidentPoints,
    #[error("empty point set")]
    EmptyInput,
    #[error("degenerate segment")]
    DegenerateSegment,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn distance_squared(self, other: Self) -> f64 {
        (self - other).norm_squared()
    }

    pub fn distance(self, other: Self) -> f64 {
        self.distance_squared(other).sqrt()
    }

    pub fn midpoint(self, other: Self) -> Self {
        Self::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    /// Bit pattern of both coordinates, for exact identity comparisons.
    pub fn to_bits(self) -> (u64, u64) {
        (self.x.to_bits(), self.y.to_bits())
    }

    fn coord(self) -> robust::Coord<f64> {
        robust::Coord { x: self.x, y: self.y }
    }
}

impl Add for Point2 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Sign of an exact geometric determinant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Orientation {
    Negative,
    Zero,
    Positive,
}

impl Orientation {
    fn from_value(v: f64) -> Self {
        if v > 0.0 {
            Orientation::Positive
        } else if v < 0.0 {
            Orientation::Negative
        } else {
            Orientation::Zero
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Orientation::Negative => Orientation::Positive,
            Orientation::Zero => Orientation::Zero,
            Orientation::Positive => Orientation::Negative,
        }
    }
}

/// Circle stored by squared radius so membership needs no square roots.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Point2,
    pub radius_squared: f64,
}

impl Circle {
    pub fn radius(&self) -> f64 {
        self.radius_squared.sqrt()
    }

    /// Inside-or-on test with a small relative slack for constructed circles.
    pub fn contains(&self, p: Point2) -> bool {
        self.center.distance_squared(p) <= self.radius_squared * (1.0 + CONTAINMENT_SLACK)
    }

    /// Inside-or-on test without slack.
    pub fn contains_closed(&self, p: Point2) -> bool {
        self.center.distance_squared(p) <= self.radius_squared
    }
}

/// Exact sign of the signed area of `(a, b, c)`; positive for counterclockwise.
pub fn orient2d(a: Point2, b: Point2, c: Point2) -> Orientation {
    Orientation::from_value(orient2d_value(a, b, c))
}

#[inline]
pub(crate) fn orient2d_value(a: Point2, b: Point2, c: Point2) -> f64 {
    robust::orient2d(a.coord(), b.coord(), c.coord())
}

/// Exact in-circle determinant sign. For counterclockwise `(a, b, c)` the
/// result is positive iff `p` lies strictly inside the circumcircle.
pub fn in_circle(a: Point2, b: Point2, c: Point2, p: Point2) -> Result<Orientation, GeomError> {
    if orient2d(a, b, c) == Orientation::Zero {
        return Err(GeomError::Collinear);
    }
    Ok(Orientation::from_value(in_circle_value(a, b, c, p)))
}

#[inline]
pub(crate) fn in_circle_value(a: Point2, b: Point2, c: Point2, p: Point2) -> f64 {
    robust::incircle(a.coord(), b.coord(), c.coord(), p.coord())
}

pub fn circumcircle(a: Point2, b: Point2, c: Point2) -> Result<Circle, GeomError> {
    if orient2d(a, b, c) == Orientation::Zero {
        return Err(GeomError::Collinear);
    }
    Ok(circumcircle_unchecked(a, b, c))
}

pub(crate) fn circumcircle_unchecked(a: Point2, b: Point2, c: Point2) -> Circle {
    // Relative to `a` for better conditioning.
    let ba = b - a;
    let ca = c - a;
    let d = 2.0 * ba.cross(ca);
    let bl = ba.norm_squared();
    let cl = ca.norm_squared();
    let ux = (ca.y * bl - ba.y * cl) / d;
    let uy = (ba.x * cl - ca.x * bl) / d;
    let offset = Point2::new(ux, uy);
    Circle {
        center: a + offset,
        radius_squared: offset.norm_squared(),
    }
}

/// Smallest circle through both endpoints of a segment (its diametral circle).
pub fn gabriel_circle(a: Point2, b: Point2) -> Result<Circle, GeomError> {
    if a == b {
        return Err(GeomError::CoincidentPoints);
    }
    Ok(diametral(a, b))
}

fn diametral(a: Point2, b: Point2) -> Circle {
    Circle {
        center: a.midpoint(b),
        radius_squared: 0.25 * a.distance_squared(b),
    }
}

/// `p` inside or on the diametral circle of `(a, b)`, i.e. the angle `apb`
/// is at least a right angle.
pub fn in_diametral_circle(a: Point2, b: Point2, p: Point2) -> bool {
    (a - p).dot(b - p) <= 0.0
}

/// Minimum covering circle by the move-to-front randomized incremental
/// construction. The input order is shuffled with a fixed seed so repeated
/// calls give bitwise identical results.
pub fn min_covering_circle(points: &[Point2]) -> Result<Circle, GeomError> {
    if points.is_empty() {
        return Err(GeomError::EmptyInput);
    }
    let mut pts = points.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(COVERING_CIRCLE_SEED);
    pts.shuffle(&mut rng);

    let mut circle = Circle {
        center: pts[0],
        radius_squared: 0.0,
    };
    for i in 1..pts.len() {
        if circle.contains(pts[i]) {
            continue;
        }
        circle = Circle {
            center: pts[i],
            radius_squared: 0.0,
        };
        for j in 0..i {
            if circle.contains(pts[j]) {
                continue;
            }
            circle = diametral(pts[i], pts[j]);
            for k in 0..j {
                if circle.contains(pts[k]) {
                    continue;
                }
                circle = circle_through_three(pts[i], pts[j], pts[k]);
            }
        }
    }
    Ok(circle)
}

/// Circle with the three points on its boundary, or the diametral circle of the
/// farthest pair when they are (numerically) collinear.
fn circle_through_three(a: Point2, b: Point2, c: Point2) -> Circle {
    if orient2d(a, b, c) != Orientation::Zero {
        let circle = circumcircle_unchecked(a, b, c);
        if circle.radius_squared.is_finite() {
            return circle;
        }
    }
    let candidates = [diametral(a, b), diametral(a, c), diametral(b, c)];
    candidates
        .into_iter()
        .max_by(|x, y| x.radius_squared.total_cmp(&y.radius_squared))
        .unwrap_or_else(|| diametral(a, b))
}

/// Whether the closed segments `p1p2` and `q1q2` share a point, decided from
/// `orient2d` signs only. Touching at an endpoint counts as an intersection.
pub fn segments_properly_intersect(
    p1: Point2,
    p2: Point2,
    q1: Point2,
    q2: Point2,
) -> Result<bool, GeomError> {
    if p1 == p2 || q1 == q2 {
        return Err(GeomError::DegenerateSegment);
    }
    Ok(segments_intersect_unchecked(p1, p2, q1, q2))
}

pub(crate) fn segments_intersect_unchecked(p1: Point2, p2: Point2, q1: Point2, q2: Point2) -> bool {
    let d1 = orient2d(q1, q2, p1);
    let d2 = orient2d(q1, q2, p2);
    let d3 = orient2d(p1, p2, q1);
    let d4 = orient2d(p1, p2, q2);
    let straddles = |a: Orientation, b: Orientation| {
        matches!(
            (a, b),
            (Orientation::Positive, Orientation::Negative) | (Orientation::Negative, Orientation::Positive)
        )
    };
    if straddles(d1, d2) && straddles(d3, d4) {
        return true;
    }
    (d1 == Orientation::Zero && on_segment(q1, q2, p1))
        || (d2 == Orientation::Zero && on_segment(q1, q2, p2))
        || (d3 == Orientation::Zero && on_segment(p1, p2, q1))
        || (d4 == Orientation::Zero && on_segment(p1, p2, q2))
}

/// For `p` collinear with `a`, `b`: whether it lies within the closed segment.
fn on_segment(a: Point2, b: Point2, p: Point2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Diameter of the inscribed circle, `2 * area / semiperimeter`.
pub fn insphere_diameter(a: Point2, b: Point2, c: Point2) -> Result<f64, GeomError> {
    if orient2d(a, b, c) == Orientation::Zero {
        return Err(GeomError::Collinear);
    }
    Ok(insphere_diameter_unchecked(a, b, c))
}

pub(crate) fn insphere_diameter_unchecked(a: Point2, b: Point2, c: Point2) -> f64 {
    let s = 0.5 * (a.distance(b) + b.distance(c) + c.distance(a));
    2.0 * triangle_area(a, b, c).abs() / s
}

/// Signed area, positive for counterclockwise triangles.
pub fn triangle_area(a: Point2, b: Point2, c: Point2) -> f64 {
    0.5 * (b - a).cross(c - a)
}

pub fn centroid(tri: &[Point2; 3]) -> Point2 {
    Point2::new(
        (tri[0].x + tri[1].x + tri[2].x) / 3.0,
        (tri[0].y + tri[1].y + tri[2].y) / 3.0,
    )
}

/// Euclidean distance from `p` to the closed segment `ab`, and the segment
/// parameter of the closest point clamped to `[0, 1]`.
pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> (f64, f64) {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p.distance(a), 0.0);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    (p.distance(a + ab * t), t)
}

/// Shoelace area of a closed polygon, positive for counterclockwise order.
pub fn polygon_area(points: &[Point2]) -> f64 {
    let n = points.len();
    (0..n)
        .map(|i| points[i].cross(points[(i + 1) % n]))
        .sum::<f64>()
        * 0.5
}

pub fn polygon_perimeter(points: &[Point2]) -> f64 {
    let n = points.len();
    (0..n).map(|i| points[i].distance(points[(i + 1) % n])).sum()
}

/// Winding number of a closed polygon around `p`.
pub fn winding_number(points: &[Point2], p: Point2) -> i32 {
    let n = points.len();
    let mut wn = 0;
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        if a.y <= p.y {
            if b.y > p.y && orient2d(a, b, p) == Orientation::Positive {
                wn += 1;
            }
        } else if b.y <= p.y && orient2d(a, b, p) == Orientation::Negative {
            wn -= 1;
        }
    }
    wn
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn orient2d_examples() {
        assert_eq!(orient2d(p(0., 0.), p(1., 0.), p(0., 1.)), Orientation::Positive);
        assert_eq!(orient2d(p(0., 0.), p(1., 1.), p(2., 2.)), Orientation::Zero);
        assert_eq!(orient2d(p(0., 0.), p(0., 1.), p(1., 0.)), Orientation::Negative);
    }

    #[test]
    fn orient2d_is_exact_near_degeneracy() {
        // Classic failure case for naive evaluation: tiny offsets off a long line.
        let a = p(0.5, 0.5);
        let b = p(12.0, 12.0);
        let c = p(24.0, 24.0);
        for i in 0..64 {
            let q = p(0.5 + i as f64 * f64::EPSILON, 0.5);
            let o = orient2d(q, b, c);
            let expected = if i == 0 { Orientation::Zero } else { Orientation::Negative };
            assert_eq!(o, expected, "offset {i}");
        }
        assert_eq!(orient2d(a, b, c), Orientation::Zero);
    }

    #[test]
    fn in_circle_examples() {
        let a = p(1., 0.);
        let b = p(0., 1.);
        let c = p(-1., 0.);
        assert_eq!(in_circle(a, b, c, p(0., 0.)).unwrap(), Orientation::Positive);
        assert_eq!(in_circle(a, b, c, p(10., 0.)).unwrap(), Orientation::Negative);
        assert_eq!(in_circle(a, b, c, p(0., -1.)).unwrap(), Orientation::Zero);
        assert_eq!(
            in_circle(p(0., 0.), p(1., 1.), p(2., 2.), p(0., 1.)),
            Err(GeomError::Collinear)
        );
    }

    #[test]
    fn circumcircle_examples() {
        let s3 = 3f64.sqrt();
        let c = circumcircle(p(0., 0.), p(1., 0.), p(0.5, s3 / 2.)).unwrap();
        assert_relative_eq!(c.center.x, 0.5, epsilon = 1e-15);
        assert_relative_eq!(c.center.y, s3 / 6., epsilon = 1e-15);
        assert_relative_eq!(c.radius_squared, 1. / 3., epsilon = 1e-15);

        let c = circumcircle(p(0., 0.), p(2., 0.), p(0., 2.)).unwrap();
        assert_eq!(c.center, p(1., 1.));
        assert_eq!(c.radius_squared, 2.);

        assert_eq!(circumcircle(p(0., 0.), p(1., 1.), p(3., 3.)), Err(GeomError::Collinear));
    }

    #[test]
    fn circumcircle_passes_through_random_vertices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 100 {
            let a = p(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let b = p(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let c = p(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            // Skip slivers where the circumcenter itself is ill-conditioned.
            if triangle_area(a, b, c).abs() < 1e-3 {
                continue;
            }
            let circle = circumcircle(a, b, c).unwrap();
            for v in [a, b, c] {
                let d2 = circle.center.distance_squared(v);
                assert!((d2 - circle.radius_squared).abs() <= 1e-12 * circle.radius_squared);
            }
            checked += 1;
        }
    }

    #[test]
    fn gabriel_circle_examples() {
        let c = gabriel_circle(p(0., 0.), p(2., 0.)).unwrap();
        assert_eq!(c.center, p(1., 0.));
        assert_eq!(c.radius_squared, 1.);
        let c = gabriel_circle(p(-1., -1.), p(1., 1.)).unwrap();
        assert_eq!(c.center, p(0., 0.));
        assert_eq!(c.radius_squared, 2.);
        assert_eq!(gabriel_circle(p(1., 1.), p(1., 1.)), Err(GeomError::CoincidentPoints));
    }

    #[test]
    fn gabriel_circle_matches_two_point_covering_circle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let a = p(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let b = p(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let g = gabriel_circle(a, b).unwrap();
            let m = min_covering_circle(&[a, b]).unwrap();
            assert_relative_eq!(g.center.x, m.center.x, epsilon = 1e-14);
            assert_relative_eq!(g.center.y, m.center.y, epsilon = 1e-14);
            assert_relative_eq!(g.radius_squared, m.radius_squared, max_relative = 1e-14);
        }
    }

    #[test]
    fn gabriel_circle_is_smallest_circumscribing() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let a = p(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let b = p(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let c = p(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if orient2d(a, b, c) == Orientation::Zero {
                continue;
            }
            let g = gabriel_circle(a, b).unwrap();
            let cc = circumcircle(a, b, c).unwrap();
            assert!(g.radius_squared <= cc.radius_squared * (1.0 + 1e-12));
        }
    }

    #[test]
    fn covering_circle_examples() {
        let c = min_covering_circle(&[p(0., 0.)]).unwrap();
        assert_eq!(c.center, p(0., 0.));
        assert_eq!(c.radius_squared, 0.);
        let c = min_covering_circle(&[p(0., 0.), p(2., 0.), p(1., 0.5)]).unwrap();
        assert_relative_eq!(c.center.x, 1., epsilon = 1e-15);
        assert_relative_eq!(c.center.y, 0., epsilon = 1e-15);
        assert_relative_eq!(c.radius_squared, 1., epsilon = 1e-15);
        assert_eq!(min_covering_circle(&[]), Err(GeomError::EmptyInput));
    }

    #[test]
    fn covering_circle_handles_duplicates_and_collinear() {
        let pts = [p(0., 0.), p(1., 0.), p(2., 0.), p(1., 0.), p(0., 0.)];
        let c = min_covering_circle(&pts).unwrap();
        assert_relative_eq!(c.center.x, 1.0, epsilon = 1e-15);
        assert_relative_eq!(c.radius_squared, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn segment_intersection_examples() {
        assert!(segments_properly_intersect(p(0., 0.), p(1., 1.), p(0., 1.), p(1., 0.)).unwrap());
        assert!(!segments_properly_intersect(p(0., 0.), p(1., 0.), p(0., 1.), p(1., 1.)).unwrap());
        assert!(segments_properly_intersect(p(0., 0.), p(1., 0.), p(1., 0.), p(2., 0.)).unwrap());
        assert!(!segments_properly_intersect(p(0., 0.), p(1., 0.), p(2., 0.), p(3., 0.)).unwrap());
        assert_eq!(
            segments_properly_intersect(p(0., 0.), p(0., 0.), p(1., 0.), p(2., 0.)),
            Err(GeomError::DegenerateSegment)
        );
    }

    #[test]
    fn insphere_examples() {
        let s3 = 3f64.sqrt();
        let d = insphere_diameter(p(0., 0.), p(1., 0.), p(0.5, s3 / 2.)).unwrap();
        assert_relative_eq!(d, s3 / 3., epsilon = 1e-15);
        let d = insphere_diameter(p(0., 0.), p(1., 0.), p(0., 1.)).unwrap();
        assert_relative_eq!(d, 2. / (2. + 2f64.sqrt()), epsilon = 1e-15);
        assert_eq!(insphere_diameter(p(0., 0.), p(1., 0.), p(2., 0.)), Err(GeomError::Collinear));
    }

    #[test]
    fn polygon_measures() {
        let sq = [p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)];
        assert_eq!(polygon_area(&sq), 1.0);
        assert_eq!(polygon_perimeter(&sq), 4.0);
        assert_eq!(winding_number(&sq, p(0.5, 0.5)), 1);
        assert_eq!(winding_number(&sq, p(1.5, 0.5)), 0);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn coord() -> impl Strategy<Value = f64> {
            -100.0..100.0f64
        }

        fn point() -> impl Strategy<Value = Point2> {
            (coord(), coord()).prop_map(|(x, y)| Point2::new(x, y))
        }

        proptest! {
            #[test]
            fn orient2d_antisymmetric(a in point(), b in point(), c in point()) {
                let o = orient2d(a, b, c);
                prop_assert_eq!(orient2d(b, a, c), o.reversed());
                prop_assert_eq!(orient2d(a, c, b), o.reversed());
                prop_assert_eq!(orient2d(b, c, a), o);
            }

            #[test]
            fn in_circle_antisymmetric(a in point(), b in point(), c in point(), d in point()) {
                prop_assume!(orient2d(a, b, c) != Orientation::Zero);
                let s = in_circle(a, b, c, d).unwrap();
                prop_assert_eq!(in_circle(b, a, c, d).unwrap(), s.reversed());
                prop_assert_eq!(in_circle(c, a, b, d).unwrap(), s);
            }

            #[test]
            fn segment_test_symmetric(a in point(), b in point(), c in point(), d in point()) {
                prop_assume!(a != b && c != d);
                prop_assert_eq!(
                    segments_properly_intersect(a, b, c, d).unwrap(),
                    segments_properly_intersect(c, d, a, b).unwrap()
                );
            }

            #[test]
            fn insphere_bounded_by_shortest_edge(a in point(), b in point(), c in point()) {
                prop_assume!(orient2d(a, b, c) != Orientation::Zero);
                let d = insphere_diameter(a, b, c).unwrap();
                let shortest = a.distance(b).min(b.distance(c)).min(c.distance(a));
                prop_assert!(d >= 0.0);
                prop_assert!(d <= shortest * (1.0 + 1e-12));
            }

            #[test]
            fn covering_circle_contains_all(pts in proptest::collection::vec(point(), 1..40)) {
                let c = min_covering_circle(&pts).unwrap();
                for q in &pts {
                    let d2 = c.center.distance_squared(*q);
                    prop_assert!(d2 <= c.radius_squared * (1.0 + 1e-12) + 1e-12);
                }
                let on_boundary = pts
                    .iter()
                    .filter(|q| (c.center.distance_squared(**q) - c.radius_squared).abs()
                        <= 1e-9 * c.radius_squared.max(1e-300))
                    .count();
                if c.radius_squared > 0.0 {
                    prop_assert!(on_boundary >= 2);
                }
            }
        }
    }
}
