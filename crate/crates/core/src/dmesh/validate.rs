use super::{CellId, Triangulation, VertexId, NONE};
use crate::geom::{in_circle_value, orient2d_value};

/// Relative tolerance of the area-sum check against the hull area.
const AREA_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Orientation { cell: CellId },
    NeighborAsymmetry { cell: CellId, side: usize },
    /// `vertex` lies strictly inside the circumcircle of `cell`.
    NotDelaunay { cell: CellId, vertex: VertexId },
    StaleVertexHint { vertex: VertexId },
    EulerRelation { cells: usize, expected: usize },
    AreaMismatch { total: f64, hull: f64 },
}

impl Triangulation {
    /// Structural and Delaunay checks. Empty iff the mesh is a valid
    /// Delaunay triangulation of its hull.
    ///
    /// The empty-circle test is local: each cell is checked against the apex
    /// of every neighbor. For a triangulation of a convex region this is
    /// equivalent to the global property.
    pub fn validate_delaunay(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut hull_edges = 0usize;
        let mut total = 0.0;
        for c in self.raw_cells() {
            let v = self.cverts(c);
            let n = self.cnbrs(c);
            let [a, b, d] = self.corners(c);
            if orient2d_value(a, b, d) <= 0.0 {
                out.push(Violation::Orientation { cell: self.cid(c) });
            }
            total += self.area(c);
            for i in 0..3 {
                let nb = n[i];
                if nb == NONE {
                    hull_edges += 1;
                    continue;
                }
                if !self.cell_alive(nb) {
                    out.push(Violation::NeighborAsymmetry { cell: self.cid(c), side: i });
                    continue;
                }
                let (ea, eb) = (v[(i + 1) % 3], v[(i + 2) % 3]);
                let nv = self.cverts(nb);
                let nn = self.cnbrs(nb);
                let back = (0..3).find(|&j| nv[(j + 1) % 3] == eb && nv[(j + 2) % 3] == ea);
                match back {
                    Some(j) if nn[j] == c => {
                        let apex = nv[j];
                        if in_circle_value(a, b, d, self.pos(apex)) > 0.0 {
                            out.push(Violation::NotDelaunay {
                                cell: self.cid(c),
                                vertex: self.vid(apex),
                            });
                        }
                    }
                    _ => out.push(Violation::NeighborAsymmetry { cell: self.cid(c), side: i }),
                }
            }
        }
        for v in self.raw_vertices() {
            let c = self.vertex_cell(v);
            if !self.cell_alive(c) || !self.cverts(c).contains(&v) {
                out.push(Violation::StaleVertexHint { vertex: self.vid(v) });
            }
        }
        // The hull is a single cycle, so it has as many vertices as edges.
        let expected = (2 * self.num_vertices()).saturating_sub(hull_edges + 2);
        if self.num_cells() != expected {
            out.push(Violation::EulerRelation {
                cells: self.num_cells(),
                expected,
            });
        }
        if (total - self.hull_area()).abs() > AREA_TOLERANCE * self.hull_area().abs() {
            out.push(Violation::AreaMismatch {
                total,
                hull: self.hull_area(),
            });
        }
        out
    }
}
