use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{IfaceError, InterfaceMesh};
use crate::dmesh::VertexKind;
use crate::geom::point_segment_distance;

const REPAIR_DEPTH: u32 = 4;

impl InterfaceMesh {
    fn edge_len(&self, a: u32) -> f64 {
        self.tri.pos(a).distance(self.tri.pos(self.iface.next(a)))
    }

    /// Splits interface edges longer than Δx_Γ,max at their midpoints.
    /// Returns the number of inserted vertices.
    pub fn refine_interface(&mut self) -> Result<usize, IfaceError> {
        let limit = self.thresholds.dx_gamma_max;
        let mut work: Vec<u32> = self.iface.cycle().into_iter().filter(|&a| self.edge_len(a) > limit).collect();
        let mut count = 0;
        while let Some(a) = work.pop() {
            if !self.iface.contains(a) || self.edge_len(a) <= limit {
                continue;
            }
            let b = self.iface.next(a);
            let m = self.tri.pos(a).midpoint(self.tri.pos(b));
            let s = self.insert_with_data(m, VertexKind::Interface, self.tri.vertex_cell(a))?;
            self.iface.insert_after(a, s);
            count += 1;
            count += self.ensure_edge(a, s, REPAIR_DEPTH)?;
            count += self.ensure_edge(s, b, REPAIR_DEPTH)?;
            work.push(a);
            work.push(s);
        }
        count += self.repair_all()?;
        Ok(count)
    }

    /// Restores every missing interface edge.
    pub(crate) fn repair_all(&mut self) -> Result<usize, IfaceError> {
        let mut count = 0;
        for a in self.iface.cycle() {
            if self.iface.contains(a) {
                let b = self.iface.next(a);
                count += self.ensure_edge(a, b, REPAIR_DEPTH)?;
            }
        }
        Ok(count)
    }

    fn coarsen_key(&self, v: u32) -> Option<(u64, u32)> {
        let l0 = self.edge_len(self.iface.prev(v));
        let l1 = self.edge_len(v);
        (l0.min(l1) < self.thresholds.dx_gamma_min).then(|| ((0.5 * (l0 + l1)).to_bits(), v))
    }

    /// Removes interface vertices with an incident edge shorter than
    /// Δx_Γ,min, shortest average edge first. Returns the number removed.
    pub fn coarsen_interface(&mut self) -> Result<usize, IfaceError> {
        let mut heap: BinaryHeap<Reverse<(u64, u32)>> = self
            .iface
            .cycle()
            .into_iter()
            .filter_map(|v| self.coarsen_key(v))
            .map(Reverse)
            .collect();
        let mut count = 0;
        let mut eps = 0.0f64;
        while let Some(Reverse((key, v))) = heap.pop() {
            if !self.iface.contains(v) {
                continue;
            }
            match self.coarsen_key(v) {
                Some(k) if k.0 == key => {}
                Some(k) => {
                    heap.push(Reverse(k));
                    continue;
                }
                None => continue,
            }
            if self.iface.len() <= 3 {
                return Err(IfaceError::TooFewVertices);
            }
            let (a, b) = (self.iface.prev(v), self.iface.next(v));
            let (pa, pb, pv) = (self.tri.pos(a), self.tri.pos(b), self.tri.pos(v));
            let inside = self.vertices_in_diametral(pa, pb, self.tri.vertex_cell(a))?;
            let blocked = inside
                .iter()
                .any(|&w| w != a && w != b && w != v && self.tri.vkind(w) != VertexKind::Bulk);
            if blocked {
                continue;
            }
            for w in inside {
                if self.tri.vertex_alive(w) && self.tri.vkind(w) == VertexKind::Bulk {
                    self.remove_bulk(w)?;
                }
            }
            self.remove_interface_vertex(v)?;
            self.ensure_edge(a, b, REPAIR_DEPTH)?;
            eps = eps.max(point_segment_distance(pv, pa, pb).0);
            count += 1;
            for u in [a, b] {
                if let Some(k) = self.coarsen_key(u) {
                    heap.push(Reverse(k));
                }
            }
        }
        if count > 0 {
            self.last_epsilon = self.last_epsilon.max(eps);
        }
        Ok(count)
    }
}
