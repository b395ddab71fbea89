use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dmesh::{Triangulation, VertexKind};
use crate::geom::{min_covering_circle, Point2};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub trials: usize,
    pub passed: usize,
    pub failed: usize,
    /// Trials whose sample could not be triangulated (coincident or collinear points).
    pub skipped: usize,
}

/// Randomized check that a segment with both endpoints outside the minimum
/// covering circle of a point set, crossing the set's convex hull, is never a
/// Delaunay edge.
pub fn verify_theorem_minsphere(trials: usize, seed: u64) -> TheoremReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = TheoremReport {
        trials,
        ..Default::default()
    };
    for _ in 0..trials {
        match trial(&mut rng) {
            Some(true) => report.passed += 1,
            Some(false) => report.failed += 1,
            None => report.skipped += 1,
        }
    }
    report
}

fn trial(rng: &mut ChaCha8Rng) -> Option<bool> {
    let m = rng.gen_range(2..=8);
    let spread = 10f64.powf(rng.gen_range(-2.0..0.5));
    let verts: Vec<Point2> = (0..m)
        .map(|_| Point2::new(rng.gen_range(-spread..spread), rng.gen_range(-spread..spread)))
        .collect();
    let circle = min_covering_circle(&verts).ok()?;
    let (c, r2) = (circle.center, circle.radius_squared);
    let r = r2.sqrt();
    if !(r > 0.0) {
        return None;
    }

    // A point of the convex hull and a random line through it.
    let w: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
    let total: f64 = w.iter().sum();
    let q = verts
        .iter()
        .zip(&w)
        .fold(Point2::new(0.0, 0.0), |acc, (&v, &wi)| acc + v * (wi / total));
    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
    let d = Point2::new(theta.cos(), theta.sin());
    // |q + s d - c|^2 = r^2
    let f = q - c;
    let bq = f.dot(d);
    let disc = (bq * bq - (f.norm_squared() - r2)).max(0.0).sqrt();
    let (s_neg, s_pos) = (-bq - disc, -bq + disc);
    let mut gap = || r * 10f64.powf(rng.gen_range(-9.0..0.5));
    let p1 = q + d * (s_pos + gap());
    let p2 = q + d * (s_neg - gap());
    let outside = |p: Point2| p.distance_squared(c) > r2;
    if !outside(p1) || !outside(p2) {
        return None;
    }

    let mut pts: Vec<(Point2, VertexKind)> = verts.iter().map(|&v| (v, VertexKind::Bulk)).collect();
    pts.push((p1, VertexKind::Bulk));
    pts.push((p2, VertexKind::Bulk));
    let fillers = rng.gen_range(0..=10);
    let reach = 4.0 * r + p1.distance(c).max(p2.distance(c));
    for _ in 0..fillers {
        let p = c + Point2::new(rng.gen_range(-reach..reach), rng.gen_range(-reach..reach));
        if outside(p) {
            pts.push((p, VertexKind::Bulk));
        }
    }
    let t = Triangulation::build(&pts, 0).ok()?;
    let ids: Vec<_> = t.vertices().collect();
    let (a, b) = (ids[m], ids[m + 1]);
    Some(!t.is_edge(a, b).ok()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_suite_has_no_failures() {
        let r = verify_theorem_minsphere(300, 7);
        assert_eq!(r.failed, 0);
        assert!(r.passed > 250);
    }

    #[test]
    fn inside_point_can_form_an_edge() {
        // Without the precondition a segment through the hull may be an edge.
        let pts = [
            (Point2::new(-1.0, 0.0), VertexKind::Bulk),
            (Point2::new(1.0, 0.0), VertexKind::Bulk),
            (Point2::new(0.0, 0.5), VertexKind::Bulk),
            (Point2::new(0.0, -0.5), VertexKind::Bulk),
        ];
        let t = Triangulation::build(&pts, 0).unwrap();
        let ids: Vec<_> = t.vertices().collect();
        assert!(t.is_edge(ids[2], ids[3]).unwrap());
    }
}
