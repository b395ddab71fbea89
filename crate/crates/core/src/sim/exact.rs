//! Exact phase areas of polygons against the benchmark shapes.

use super::setup::{Benchmark, DISK_CENTER, DISK_RADIUS, SLOT_HALF_WIDTH, SLOT_TOP};
use crate::dmesh::Triangulation;
use crate::geom::Point2;

/// Signed area of triangle (0, a, b) intersected with the disk of radius
/// `r` around the origin.
fn wedge_area(a: Point2, b: Point2, r: f64) -> f64 {
    let d = b - a;
    let (qa, qb, qc) = (d.dot(d), 2.0 * a.dot(d), a.dot(a) - r * r);
    let mut cuts = vec![0.0];
    if qa > 0.0 {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc > 0.0 {
            let s = disc.sqrt();
            for t in [(-qb - s) / (2.0 * qa), (-qb + s) / (2.0 * qa)] {
                if t > 0.0 && t < 1.0 {
                    cuts.push(t);
                }
            }
        }
    }
    cuts.push(1.0);
    let mut area = 0.0;
    for w in cuts.windows(2) {
        let p = a + d * w[0];
        let q = a + d * w[1];
        let m = p.midpoint(q);
        area += if m.norm_squared() <= r * r {
            0.5 * p.cross(q)
        } else {
            0.5 * r * r * p.cross(q).atan2(p.dot(q))
        };
    }
    area
}

/// Area of a simple polygon intersected with a disk.
pub fn polygon_disk_area(poly: &[Point2], center: Point2, r: f64) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|k| wedge_area(poly[k] - center, poly[(k + 1) % n] - center, r))
        .sum::<f64>()
        .abs()
}

/// Clips a convex polygon to an axis-aligned rectangle.
pub fn clip_to_rect(poly: &[Point2], min: Point2, max: Point2) -> Vec<Point2> {
    let planes: [(Point2, f64); 4] = [
        (Point2::new(1.0, 0.0), min.x),
        (Point2::new(-1.0, 0.0), -max.x),
        (Point2::new(0.0, 1.0), min.y),
        (Point2::new(0.0, -1.0), -max.y),
    ];
    let mut out = poly.to_vec();
    for (n, off) in planes {
        if out.is_empty() {
            break;
        }
        let input = std::mem::take(&mut out);
        let side = |p: Point2| n.dot(p) - off;
        for k in 0..input.len() {
            let (p, q) = (input[k], input[(k + 1) % input.len()]);
            let (sp, sq) = (side(p), side(q));
            if sp >= 0.0 {
                out.push(p);
            }
            if (sp >= 0.0) != (sq >= 0.0) {
                out.push(p + (q - p) * (sp / (sp - sq)));
            }
        }
    }
    out
}

impl Benchmark {
    /// Area of the triangle covered by the exact inside phase at time `t`.
    pub fn inside_area(self, t: f64, tri: [Point2; 3]) -> f64 {
        match self {
            Benchmark::Circadv => {
                let (s, c) = t.sin_cos();
                let back = tri.map(|p| Point2::new(c * p.x + s * p.y, -s * p.x + c * p.y));
                let disk = polygon_disk_area(&back, DISK_CENTER, DISK_RADIUS);
                let slot = clip_to_rect(
                    &back,
                    Point2::new(-SLOT_HALF_WIDTH, DISK_CENTER.y - 2.0 * DISK_RADIUS),
                    Point2::new(SLOT_HALF_WIDTH, SLOT_TOP),
                );
                let cut = if slot.len() >= 3 {
                    polygon_disk_area(&slot, DISK_CENTER, DISK_RADIUS)
                } else {
                    0.0
                };
                (disk - cut).max(0.0)
            }
            _ => {
                let (c, r) = self.circle().expect("circle benchmark");
                polygon_disk_area(&tri, c, r)
            }
        }
    }
}

/// ∫ |u_h − χ| with χ the exact indicator of `benchmark` at time `t`,
/// integrated exactly per cell.
pub fn indicator_l1_error(tri: &Triangulation, benchmark: Benchmark, t: f64) -> f64 {
    tri.cells()
        .map(|c| {
            let corners = tri.cell_corners(c).expect("live cell");
            let u = tri.data(c).expect("live cell")[0];
            let area = tri.cell_area(c).expect("live cell");
            let inside = benchmark.inside_area(t, corners).min(area);
            (u - 1.0).abs() * inside + u.abs() * (area - inside)
        })
        .sum()
}

/// Sets the first data component to the exact inside fraction of each cell.
pub fn set_indicator_averages(tri: &mut Triangulation, benchmark: Benchmark, t: f64) {
    let cells: Vec<_> = tri.cells().collect();
    for c in cells {
        let corners = tri.cell_corners(c).expect("live cell");
        let area = tri.cell_area(c).expect("live cell");
        tri.data_mut(c).expect("live cell")[0] = (benchmark.inside_area(t, corners) / area).clamp(0.0, 1.0);
    }
}
