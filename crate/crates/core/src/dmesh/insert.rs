use std::collections::HashSet;

use super::{triangle_contains, Insertion, MeshError, Removal, Triangulation, VertexId, VertexKind, NONE};
use crate::dmesh::CellId;
use crate::geom::{in_circle_value, orient2d_value, Point2};
use crate::mmesh::Stencil;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    Inside(CellId),
    OutsideHull,
}

/// Where a point sits relative to the located cell.
enum Hit {
    Cell(u32),
    Vertex(u32),
    HullEdge,
}

impl Triangulation {
    /// A cell containing `p`. Points on a shared edge resolve to the cell with
    /// the lower index.
    pub fn locate(&self, p: Point2) -> Location {
        let Some(c) = self.walk(p, self.last_cell()) else {
            return Location::OutsideHull;
        };
        self.set_last(c);
        let corners = self.corners(c);
        let mut best = c;
        for i in 0..3 {
            let nb = self.cnbrs(c)[i];
            if nb != NONE
                && nb < best
                && orient2d_value(corners[(i + 1) % 3], corners[(i + 2) % 3], p) == 0.0
            {
                best = nb;
            }
        }
        Location::Inside(self.cid(best))
    }

    /// Remembering visibility walk. `None` if `p` is outside the hull.
    pub(crate) fn walk(&self, p: Point2, start: u32) -> Option<u32> {
        if start == NONE {
            return None;
        }
        let mut c = if self.cell_alive(start) { start } else { self.last_cell() };
        let limit = 4 * self.num_cells() + 16;
        for step in 0..limit {
            let v = self.cverts(c);
            let n = self.cnbrs(c);
            let mut next = None;
            for k in 0..3 {
                // Rotating the first tested edge avoids cycling on degenerate input.
                let i = (k + step + c as usize) % 3;
                if orient2d_value(self.pos(v[(i + 1) % 3]), self.pos(v[(i + 2) % 3]), p) < 0.0 {
                    next = Some(n[i]);
                    break;
                }
            }
            match next {
                None => return Some(c),
                Some(NONE) => return None,
                Some(nb) => c = nb,
            }
        }
        self.raw_cells().find(|&c| triangle_contains(&self.corners(c), p))
    }

    fn classify(&self, p: Point2, start: u32) -> Result<Hit, MeshError> {
        if !p.is_finite() {
            return Err(MeshError::NonFinite);
        }
        let c = self.walk(p, start).ok_or(MeshError::OutsideHull)?;
        let v = self.cverts(c);
        let n = self.cnbrs(c);
        for &w in &v {
            if self.pos(w) == p {
                return Ok(Hit::Vertex(w));
            }
        }
        for i in 0..3 {
            if n[i] == NONE && orient2d_value(self.pos(v[(i + 1) % 3]), self.pos(v[(i + 2) % 3]), p) == 0.0 {
                return Ok(Hit::HullEdge);
            }
        }
        Ok(Hit::Cell(c))
    }

    /// All cells whose circumcircle contains `p` inside or on the boundary.
    pub fn conflict_zone(&self, p: Point2) -> Result<Vec<CellId>, MeshError> {
        if !p.is_finite() {
            return Err(MeshError::NonFinite);
        }
        let c = self.walk(p, self.last_cell()).ok_or(MeshError::OutsideHull)?;
        let mut seen = HashSet::new();
        seen.insert(c);
        let mut zone = vec![c];
        let mut k = 0;
        while k < zone.len() {
            let x = zone[k];
            k += 1;
            for nb in self.cnbrs(x) {
                if nb == NONE || !seen.insert(nb) {
                    continue;
                }
                if self.conflicts(nb, p) {
                    zone.push(nb);
                }
            }
        }
        Ok(zone.into_iter().map(|c| self.cid(c)).collect())
    }

    #[inline]
    pub(crate) fn conflicts(&self, c: u32, p: Point2) -> bool {
        let [a, b, d] = self.corners(c);
        in_circle_value(a, b, d, p) >= 0.0
    }

    /// Inserts `p` by re-triangulating its conflict zone.
    pub fn insert(&mut self, p: Point2, kind: VertexKind) -> Result<Insertion, MeshError> {
        let start = self.last_cell();
        self.insert_impl(p, kind, None, None, start)
    }

    pub(crate) fn insert_impl(
        &mut self,
        p: Point2,
        kind: VertexKind,
        slot: Option<u32>,
        capture: Option<&mut Stencil>,
        start: u32,
    ) -> Result<Insertion, MeshError> {
        let c0 = match self.classify(p, start)? {
            Hit::Cell(c) => c,
            Hit::Vertex(_) => return Err(MeshError::DuplicatePoint),
            Hit::HullEdge => return Err(MeshError::OnHullBoundary),
        };

        let epoch = self.next_epoch();
        let mut cavity = vec![c0];
        self.marks[c0 as usize] = epoch;
        let mut k = 0;
        while k < cavity.len() {
            let x = cavity[k];
            k += 1;
            for nb in self.cnbrs(x) {
                if nb == NONE || self.marks[nb as usize] == epoch {
                    continue;
                }
                if self.conflicts(nb, p) {
                    self.marks[nb as usize] = epoch;
                    cavity.push(nb);
                }
            }
        }

        // Cavity boundary: edge (a, b) ccw in the cavity cell, and the cell beyond.
        let mut boundary: Vec<(u32, u32, u32)> = Vec::with_capacity(cavity.len() + 2);
        for &x in &cavity {
            let v = self.cverts(x);
            let n = self.cnbrs(x);
            for i in 0..3 {
                if n[i] == NONE || self.marks[n[i] as usize] != epoch {
                    boundary.push((v[(i + 1) % 3], v[(i + 2) % 3], n[i]));
                }
            }
        }

        if let Some(st) = capture {
            for &x in &cavity {
                self.snapshot_into(x, st);
            }
        }
        let destroyed: Vec<CellId> = cavity.iter().map(|&x| self.cid(x)).collect();
        for &x in &cavity {
            self.free_cell(x);
        }

        let pv = self.alloc_vertex(p, kind, slot);
        let ids: Vec<u32> = boundary.iter().map(|_| self.alloc_cell([NONE; 3], [NONE; 3])).collect();
        // The cavity is star-shaped around p, so each boundary vertex starts
        // exactly one boundary edge.
        let mut by_start: Vec<(u32, u32)> = boundary.iter().zip(&ids).map(|(e, &c)| (e.0, c)).collect();
        let mut by_end: Vec<(u32, u32)> = boundary.iter().zip(&ids).map(|(e, &c)| (e.1, c)).collect();
        by_start.sort_unstable();
        by_end.sort_unstable();
        let find = |m: &[(u32, u32)], key: u32| m[m.binary_search_by_key(&key, |e| e.0).unwrap()].1;
        for (&(a, b, outer), &c) in boundary.iter().zip(&ids) {
            let n = [find(&by_start, b), find(&by_end, a), outer];
            {
                let s = &mut self.cells[c as usize];
                s.v = [a, b, pv];
                s.n = n;
            }
            if outer != NONE {
                self.set_neighbor_on_edge(outer, b, a, c);
            }
            self.verts[a as usize].cell = c;
            self.touch(a);
        }
        self.verts[pv as usize].cell = ids[0];
        self.touch(pv);
        self.set_last(ids[0]);

        Ok(Insertion {
            vertex: self.vid(pv),
            created: ids.iter().map(|&c| self.cid(c)).collect(),
            destroyed,
        })
    }

    /// Moves `v` to `target`. The vertex keeps its slot under a fresh
    /// generation. Small moves inside the star are done in place with edge
    /// flips; otherwise the vertex is removed and reinserted. All failure
    /// conditions are checked before the mesh is modified.
    pub fn relocate(&mut self, v: VertexId, target: Point2) -> Result<(VertexId, Removal, Insertion), MeshError> {
        let (r, ins) = self.relocate_impl(self.vertex_index(v)?, target, None, None)?;
        Ok((ins.vertex, r, ins))
    }

    pub(crate) fn relocate_impl(
        &mut self,
        v: u32,
        target: Point2,
        mut capture_removed: Option<&mut Stencil>,
        capture_inserted: Option<&mut Stencil>,
    ) -> Result<(Removal, Insertion), MeshError> {
        let kind = self.vkind(v);
        if kind == VertexKind::Boundary {
            return Err(MeshError::BoundaryVertex);
        }
        if let Some(done) = self.relocate_flip(v, target, capture_removed.as_deref_mut()) {
            return Ok(done);
        }
        match self.classify(target, self.vertex_cell(v))? {
            Hit::Vertex(w) if w != v => return Err(MeshError::DuplicatePoint),
            Hit::HullEdge => return Err(MeshError::OnHullBoundary),
            _ => {}
        }
        let removal = self.remove_impl(v, true, capture_removed)?;
        let start = removal
            .created
            .first()
            .map(|c| c.index() as u32)
            .unwrap_or_else(|| self.last_cell());
        let ins = self
            .insert_impl(target, kind, Some(v), capture_inserted, start)
            .expect("relocation target was validated before removal");
        Ok((removal, ins))
    }
}
