use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::InterfaceMesh;
use crate::dmesh::{Triangulation, VertexId, VertexKind};
use crate::geom::{circumcircle_unchecked, point_segment_distance, segments_intersect_unchecked, Point2};
use crate::grid::{BBox, BucketGrid};

#[derive(Clone, Debug, PartialEq)]
pub enum PreservationViolation {
    TooFewVertices(usize),
    /// Consecutive interface vertices without a mesh edge.
    MissingEdge(VertexId, VertexId),
    WrongKind(VertexId),
    /// Two non-adjacent interface edges touch.
    SelfIntersection { first: VertexId, second: VertexId },
    /// A mesh edge between non-interface vertices meets the interface edge
    /// starting at `edge`.
    Crossing { a: VertexId, b: VertexId, edge: VertexId },
}

impl InterfaceMesh {
    /// Empty iff the interface is a closed simple chain of mesh edges that no
    /// edge between two non-interface vertices crosses.
    pub fn check_preservation(&self) -> Vec<PreservationViolation> {
        use PreservationViolation::*;
        let t = &self.tri;
        let mut out = Vec::new();
        let cycle = self.iface.cycle();
        if cycle.len() < 3 || cycle.len() != self.iface.len() {
            out.push(TooFewVertices(cycle.len()));
            if cycle.is_empty() {
                return out;
            }
        }
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut longest: f64 = 0.0;
        for &v in &cycle {
            let w = self.iface.next(v);
            if t.vkind(v) != VertexKind::Interface {
                out.push(WrongKind(t.vid(v)));
            }
            if !t.has_edge(v, w) {
                out.push(MissingEdge(t.vid(v), t.vid(w)));
            }
            let p = t.pos(v);
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
            longest = longest.max(p.distance(t.pos(w)));
        }
        let mut grid = BucketGrid::new(BBox { min: lo, max: hi }, longest.max(f64::MIN_POSITIVE));
        for &v in &cycle {
            grid.insert(v, &BBox::of_segment(t.pos(v), t.pos(self.iface.next(v))));
        }
        let mut cand = Vec::new();
        for &v in &cycle {
            let w = self.iface.next(v);
            let (a, b) = (t.pos(v), t.pos(w));
            grid.query(&BBox::of_segment(a, b), &mut cand);
            for &u in &cand {
                let x = self.iface.next(u);
                if u <= v || u == w || x == v {
                    continue;
                }
                if segments_intersect_unchecked(a, b, t.pos(u), t.pos(x)) {
                    out.push(SelfIntersection {
                        first: t.vid(v),
                        second: t.vid(u),
                    });
                }
            }
        }
        for (a, b) in t.raw_edges() {
            if self.iface.contains(a) || self.iface.contains(b) {
                continue;
            }
            let (pa, pb) = (t.pos(a), t.pos(b));
            let bb = BBox::of_segment(pa, pb);
            if bb.max.x < lo.x || bb.min.x > hi.x || bb.max.y < lo.y || bb.min.y > hi.y {
                continue;
            }
            grid.query(&bb, &mut cand);
            for &u in &cand {
                if segments_intersect_unchecked(pa, pb, t.pos(u), t.pos(self.iface.next(u))) {
                    out.push(Crossing {
                        a: t.vid(a),
                        b: t.vid(b),
                        edge: t.vid(u),
                    });
                }
            }
        }
        out
    }
}

/// Order-independent bit pattern of a cell's corner positions.
pub type CellKey = [(u64, u64); 3];

pub fn cell_key(corners: &[Point2; 3]) -> CellKey {
    let mut k = corners.map(|p| p.to_bits());
    k.sort_unstable();
    k
}

/// Keys of every cell of `t`.
pub fn cell_keys(t: &Triangulation) -> HashSet<CellKey> {
    t.raw_cells().map(|c| cell_key(&t.corners(c))).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RestorationReport {
    /// Cells whose circumcircle is farther than `margin` from the interface.
    pub checked: usize,
    /// Checked cells that do not occur in the reference mesh.
    pub mismatched: usize,
    pub margin: f64,
}

impl InterfaceMesh {
    /// Compares cells far from the interface with a reference mesh. The
    /// margin is max(Δx_min, longest interface edge).
    pub fn check_restoration(&self, reference: &HashSet<CellKey>) -> RestorationReport {
        let t = &self.tri;
        let poly = self.polygon();
        let longest = (0..poly.len())
            .map(|i| poly[i].distance(poly[(i + 1) % poly.len()]))
            .fold(0.0f64, f64::max);
        let margin = self.thresholds.dx_min.max(longest);
        let mut report = RestorationReport {
            margin,
            ..Default::default()
        };
        for c in t.raw_cells() {
            let [a, b, d] = t.corners(c);
            let circle = circumcircle_unchecked(a, b, d);
            let reach = margin + circle.radius();
            let bb = BBox::around(circle.center, reach);
            let near = poly.iter().enumerate().any(|(i, &p)| {
                let q = poly[(i + 1) % poly.len()];
                let sb = BBox::of_segment(p, q);
                sb.max.x >= bb.min.x
                    && sb.min.x <= bb.max.x
                    && sb.max.y >= bb.min.y
                    && sb.min.y <= bb.max.y
                    && point_segment_distance(circle.center, p, q).0 <= reach
            });
            if near {
                continue;
            }
            report.checked += 1;
            if !reference.contains(&cell_key(&[a, b, d])) {
                report.mismatched += 1;
            }
        }
        report
    }
}
