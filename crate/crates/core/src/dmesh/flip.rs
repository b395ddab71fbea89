use super::{Insertion, Removal, Triangulation, NONE};
use crate::dmesh::CellId;
use crate::geom::{in_circle_value, orient2d_value, Point2};
use crate::mmesh::Stencil;

impl Triangulation {
    /// Moves `v` in place when `target` lies strictly inside the kernel of its
    /// star, then restores the Delaunay property by edge flips. Returns `None`
    /// without touching the mesh when the star is open or the target is
    /// outside the kernel.
    ///
    /// Every cell whose geometry changes gets a fresh handle. Old cells are
    /// captured before they change and reported as destroyed; the final fresh
    /// cells are reported as created by the insertion.
    pub(crate) fn relocate_flip(
        &mut self,
        v: u32,
        target: Point2,
        mut capture: Option<&mut Stencil>,
    ) -> Option<(Removal, Insertion)> {
        let start = self.vertex_cell(v);
        let mut ring = Vec::with_capacity(8);
        let mut c = start;
        loop {
            let i = self.index_in_cell(c, v);
            let cv = self.cverts(c);
            if orient2d_value(target, self.pos(cv[(i + 1) % 3]), self.pos(cv[(i + 2) % 3])) <= 0.0 {
                return None;
            }
            ring.push(c);
            let next = self.cnbrs(c)[(i + 1) % 3];
            if next == NONE {
                return None;
            }
            if next == start {
                break;
            }
            c = next;
            if ring.len() > self.num_cells() {
                return None;
            }
        }

        let mut destroyed: Vec<CellId> = Vec::with_capacity(ring.len() + 4);
        let mut fresh: Vec<u32> = Vec::with_capacity(ring.len() + 4);
        for &c in &ring {
            if let Some(st) = capture.as_deref_mut() {
                self.snapshot_into(c, st);
            }
            destroyed.push(self.cid(c));
            self.renew_cell(c);
            fresh.push(c);
        }
        self.set_pos(v, target);
        let slot = &mut self.verts[v as usize];
        slot.generation = slot.generation.wrapping_add(1);

        // Lawson flips; each entry is a cell and the vertex opposite the edge.
        let mut stack: Vec<(u32, u32)> = Vec::with_capacity(3 * ring.len());
        for &c in &ring {
            for w in self.cverts(c) {
                stack.push((c, w));
            }
        }
        while let Some((c, w)) = stack.pop() {
            if !self.cell_alive(c) {
                continue;
            }
            let cv = self.cverts(c);
            let Some(side) = cv.iter().position(|&x| x == w) else {
                continue;
            };
            let d = self.cnbrs(c)[side];
            if d == NONE {
                continue;
            }
            let Some(j) = self.cnbrs(d).iter().position(|&x| x == c) else {
                continue;
            };
            let s = self.cverts(d)[j];
            let [a, b, e] = self.corners(c);
            if in_circle_value(a, b, e, self.pos(s)) <= 0.0 {
                continue;
            }
            for x in [c, d] {
                if !fresh.contains(&x) {
                    if let Some(st) = capture.as_deref_mut() {
                        self.snapshot_into(x, st);
                    }
                    destroyed.push(self.cid(x));
                    self.renew_cell(x);
                    fresh.push(x);
                }
            }
            self.flip_raw(c, side, d, j);
            for x in [c, d] {
                for w in self.cverts(x) {
                    stack.push((x, w));
                }
            }
        }

        for &c in &fresh {
            for w in self.cverts(c) {
                self.verts[w as usize].cell = c;
                self.touch(w);
            }
        }
        self.touch(v);
        self.set_last(fresh[0]);
        let created = fresh.iter().map(|&c| self.cid(c)).collect();
        Some((
            Removal {
                created: Vec::new(),
                destroyed,
            },
            Insertion {
                vertex: self.vid(v),
                created,
                destroyed: Vec::new(),
            },
        ))
    }
}
