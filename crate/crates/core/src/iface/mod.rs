//! Closed interface polygons tracked as chains of mesh edges.

mod adapt;
mod checks;
mod motion;
mod theorem;
mod thresholds;

use std::time::Duration;

use thiserror::Error;

use crate::dmesh::{CellId, MeshError, Triangulation, VertexId, VertexKind, NONE};
use crate::geom::{
    centroid, in_diametral_circle, orient2d_value, point_segment_distance, polygon_area, polygon_perimeter,
    winding_number, Point2,
};
use crate::mmesh::{self, MmeshError, OmegaCache, PhaseRule, ProjectionKind, Transfer};

pub use checks::{cell_key, cell_keys, CellKey, PreservationViolation, RestorationReport};
pub use motion::{MoveOptions, MoveReport};
pub use theorem::{verify_theorem_minsphere, TheoremReport};
pub use thresholds::{compute_thresholds, percentile, Thresholds};

/// Phase tag of cells enclosed by the interface.
pub const INSIDE: u8 = 1;
/// Phase tag of cells outside the interface.
pub const OUTSIDE: u8 = 2;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum IfaceError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Projection(MmeshError),
    #[error("boundary conflict")]
    BoundaryConflict,
    #[error("interface move of length {distance} exceeds half the mesh bound {bound}")]
    MoveTooFar { distance: f64, bound: f64 },
    #[error("interface is empty")]
    EmptyInterface,
    #[error("interface polygon self-intersects")]
    SelfIntersecting,
    #[error("interface polygon touches the hull")]
    TouchesHull,
    #[error("interface edge could not be recovered")]
    InterfaceLost,
    #[error("interface would drop below three vertices")]
    TooFewVertices,
    #[error("phase flood fill found {0} components")]
    PhaseComponents(usize),
}

impl From<MmeshError> for IfaceError {
    fn from(e: MmeshError) -> Self {
        match e {
            MmeshError::Mesh(m) => IfaceError::Mesh(m),
            other => IfaceError::Projection(other),
        }
    }
}

/// Cyclic doubly linked list over vertex slots, oriented counterclockwise.
#[derive(Clone, Debug, Default)]
pub struct Interface {
    prev: Vec<u32>,
    next: Vec<u32>,
    anchor: u32,
    count: usize,
}

impl Interface {
    pub(crate) fn from_cycle(cycle: &[u32]) -> Self {
        let mut g = Interface {
            anchor: cycle.first().copied().unwrap_or(NONE),
            count: cycle.len(),
            ..Default::default()
        };
        for (k, &v) in cycle.iter().enumerate() {
            let nx = cycle[(k + 1) % cycle.len()];
            g.grow(v.max(nx));
            g.next[v as usize] = nx;
            g.prev[nx as usize] = v;
        }
        g
    }

    fn grow(&mut self, v: u32) {
        if v as usize >= self.next.len() {
            self.next.resize(v as usize + 1, NONE);
            self.prev.resize(v as usize + 1, NONE);
        }
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    #[inline]
    pub(crate) fn contains(&self, v: u32) -> bool {
        self.next.get(v as usize).is_some_and(|&n| n != NONE)
    }

    #[inline]
    pub(crate) fn next(&self, v: u32) -> u32 {
        self.next[v as usize]
    }

    #[inline]
    pub(crate) fn prev(&self, v: u32) -> u32 {
        self.prev[v as usize]
    }

    /// Whether `a`–`b` is an interface edge in either direction.
    #[inline]
    pub(crate) fn is_edge(&self, a: u32, b: u32) -> bool {
        self.contains(a) && (self.next(a) == b || self.prev(a) == b)
    }

    /// Slots in cyclic order from the anchor.
    pub(crate) fn cycle(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.count);
        if self.count == 0 {
            return out;
        }
        let mut v = self.anchor;
        loop {
            out.push(v);
            v = self.next(v);
            if v == self.anchor || out.len() > self.count {
                break;
            }
        }
        out
    }

    /// Splices `m` between `a` and `next(a)`.
    pub(crate) fn insert_after(&mut self, a: u32, m: u32) {
        self.grow(m);
        let b = self.next(a);
        self.next[a as usize] = m;
        self.prev[m as usize] = a;
        self.next[m as usize] = b;
        self.prev[b as usize] = m;
        self.count += 1;
    }

    /// Removes `v`, joining its neighbors.
    pub(crate) fn unlink(&mut self, v: u32) {
        let a = self.prev(v);
        let b = self.next(v);
        self.next[a as usize] = b;
        self.prev[b as usize] = a;
        self.next[v as usize] = NONE;
        self.prev[v as usize] = NONE;
        self.count -= 1;
        if self.anchor == v {
            self.anchor = b;
        }
    }

    pub fn vertex_ids(&self, t: &Triangulation) -> Vec<VertexId> {
        self.cycle().into_iter().map(|v| t.vid(v)).collect()
    }

    pub fn polygon(&self, t: &Triangulation) -> Vec<Point2> {
        self.cycle().into_iter().map(|v| t.pos(v)).collect()
    }
}

/// Classifies new cells by the side of the nearest nearby interface edge.
pub(crate) struct SideRule<'a> {
    pub iface: &'a Interface,
}

impl SideRule<'_> {
    fn side(&self, t: &Triangulation, starts: &[u32], g: Point2) -> u8 {
        let mut best = (f64::INFINITY, NONE, 0.0);
        for &a in starts {
            let b = self.iface.next(a);
            let (d, s) = point_segment_distance(g, t.pos(a), t.pos(b));
            if d < best.0 {
                best = (d, a, s);
            }
        }
        let (_, a, s) = best;
        let b = self.iface.next(a);
        let inside = if s > 0.0 && s < 1.0 {
            orient2d_value(t.pos(a), t.pos(b), g) > 0.0
        } else {
            let u = if s <= 0.0 { a } else { b };
            let (p, n) = (self.iface.prev(u), self.iface.next(u));
            let (pp, pu, pn) = (t.pos(p), t.pos(u), t.pos(n));
            let left_in = orient2d_value(pp, pu, g) > 0.0;
            let left_out = orient2d_value(pu, pn, g) > 0.0;
            if orient2d_value(pp, pu, pn) > 0.0 {
                left_in && left_out
            } else {
                left_in || left_out
            }
        };
        if inside {
            INSIDE
        } else {
            OUTSIDE
        }
    }
}

impl PhaseRule for SideRule<'_> {
    fn classify(&self, t: &Triangulation, cells: &[CellId]) -> Option<Vec<u8>> {
        let mut seeds: Vec<u32> = Vec::new();
        for &c in cells {
            for v in t.cverts(c.index() as u32) {
                if self.iface.contains(v) && !seeds.contains(&v) {
                    seeds.push(v);
                }
            }
        }
        if seeds.is_empty() {
            return None;
        }
        // Edge start vertices within two chain steps of the seeds.
        let mut starts: Vec<u32> = Vec::with_capacity(seeds.len() * 5);
        for &s in &seeds {
            let mut v = s;
            for _ in 0..2 {
                v = self.iface.prev(v);
            }
            for _ in 0..5 {
                if !starts.contains(&v) {
                    starts.push(v);
                }
                v = self.iface.next(v);
            }
        }
        Some(
            cells
                .iter()
                .map(|&c| self.side(t, &starts, centroid(&t.corners(c.index() as u32))))
                .collect(),
        )
    }
}

/// Positions of bulk vertices removed near the interface.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BackgroundList {
    pub points: Vec<Point2>,
}

/// Wall time spent in each remeshing phase.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhaseTimes {
    pub ensure: Duration,
    pub moving: Duration,
    pub coarse_bulk: Duration,
    pub refine_bulk: Duration,
    pub refine_interface: Duration,
    pub coarsen_interface: Duration,
}

impl PhaseTimes {
    pub fn total(&self) -> Duration {
        self.ensure + self.moving + self.coarse_bulk + self.refine_bulk + self.refine_interface + self.coarsen_interface
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterfaceMeasures {
    pub length: f64,
    pub enclosed_area: f64,
    pub epsilon_last: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseSummary {
    pub inside_cells: usize,
    pub outside_cells: usize,
    pub inside_area: f64,
    pub outside_area: f64,
}

/// A triangulation with one tracked closed interface and its remeshing state.
#[derive(Clone, Debug)]
pub struct InterfaceMesh {
    pub tri: Triangulation,
    pub iface: Interface,
    pub background: BackgroundList,
    pub thresholds: Thresholds,
    pub projection: ProjectionKind,
    pub omega: OmegaCache,
    pub last_epsilon: f64,
    /// Interface moves and interface vertex removals keep per-phase mean
    /// values instead of per-phase mass, as for data carried by the phases.
    pub material_interface: bool,
    labeled: bool,
}

impl InterfaceMesh {
    pub fn interface_vertices(&self) -> Vec<VertexId> {
        self.iface.vertex_ids(&self.tri)
    }

    pub fn polygon(&self) -> Vec<Point2> {
        self.iface.polygon(&self.tri)
    }

    pub fn interface_measures(&self) -> InterfaceMeasures {
        let poly = self.polygon();
        InterfaceMeasures {
            length: polygon_perimeter(&poly),
            enclosed_area: polygon_area(&poly),
            epsilon_last: self.last_epsilon,
        }
    }

    /// Whether phase tags have been assigned.
    pub fn is_labeled(&self) -> bool {
        self.labeled
    }

    /// Whether the mesh edge `a`–`b` belongs to the interface.
    pub fn is_interface_edge(&self, a: VertexId, b: VertexId) -> bool {
        self.tri.contains_vertex(a)
            && self.tri.contains_vertex(b)
            && self.iface.is_edge(a.index() as u32, b.index() as u32)
    }

    /// Flood fill over cells without crossing interface edges; tags the two
    /// components by the winding number of the interface polygon.
    pub fn phase_labels(&mut self) -> Result<PhaseSummary, IfaceError> {
        let t = &self.tri;
        let mut comp = vec![NONE; t.cell_slots()];
        let mut reps = Vec::new();
        for c in t.raw_cells() {
            if comp[c as usize] != NONE {
                continue;
            }
            let id = reps.len() as u32;
            reps.push(c);
            comp[c as usize] = id;
            let mut stack = vec![c];
            while let Some(x) = stack.pop() {
                let v = t.cverts(x);
                let n = t.cnbrs(x);
                for i in 0..3 {
                    let nb = n[i];
                    if nb == NONE || comp[nb as usize] != NONE {
                        continue;
                    }
                    if self.iface.is_edge(v[(i + 1) % 3], v[(i + 2) % 3]) {
                        continue;
                    }
                    comp[nb as usize] = id;
                    stack.push(nb);
                }
            }
        }
        if reps.len() != 2 {
            return Err(IfaceError::PhaseComponents(reps.len()));
        }
        let poly = self.polygon();
        let tags: Vec<u8> = reps
            .iter()
            .map(|&c| {
                if winding_number(&poly, centroid(&t.corners(c))) != 0 {
                    INSIDE
                } else {
                    OUTSIDE
                }
            })
            .collect();
        if tags[0] == tags[1] {
            return Err(IfaceError::PhaseComponents(1));
        }
        let mut summary = PhaseSummary {
            inside_cells: 0,
            outside_cells: 0,
            inside_area: 0.0,
            outside_area: 0.0,
        };
        let cells: Vec<u32> = self.tri.raw_cells().collect();
        for c in cells {
            let tag = tags[comp[c as usize] as usize];
            let area = self.tri.area(c);
            if tag == INSIDE {
                summary.inside_cells += 1;
                summary.inside_area += area;
            } else {
                summary.outside_cells += 1;
                summary.outside_area += area;
            }
            self.tri.set_raw_tag(c, tag);
        }
        self.labeled = true;
        Ok(summary)
    }

    // Shared remeshing helpers.

    /// Removes a bulk vertex with data transfer and records its position.
    pub(crate) fn remove_bulk(&mut self, v: u32) -> Result<(), IfaceError> {
        debug_assert_eq!(self.tri.vkind(v), VertexKind::Bulk);
        let p = self.tri.pos(v);
        let rule = self.labeled.then_some(SideRule { iface: &self.iface });
        let transfer = Transfer {
            kind: self.projection,
            phase: rule.as_ref().map(|r| r as &dyn PhaseRule),
            phase_means: false,
        };
        mmesh::remove_raw(&mut self.tri, v, transfer)?;
        self.background.points.push(p);
        Ok(())
    }

    /// Inserts a vertex with data transfer, returning its slot.
    pub(crate) fn insert_with_data(&mut self, p: Point2, kind: VertexKind, hint: u32) -> Result<u32, IfaceError> {
        let rule = self.labeled.then_some(SideRule { iface: &self.iface });
        let transfer = Transfer {
            kind: self.projection,
            phase: rule.as_ref().map(|r| r as &dyn PhaseRule),
            phase_means: false,
        };
        let r = mmesh::insert_raw(&mut self.tri, p, kind, hint, transfer)?;
        Ok(r.vertex.expect("insertion yields a vertex").index() as u32)
    }

    pub(crate) fn move_with_data(&mut self, v: u32, target: Point2) -> Result<(), IfaceError> {
        let rule = self.labeled.then_some(SideRule { iface: &self.iface });
        let transfer = Transfer {
            kind: self.projection,
            phase: rule.as_ref().map(|r| r as &dyn PhaseRule),
            phase_means: self.material_interface,
        };
        mmesh::move_raw(&mut self.tri, v, target, transfer)?;
        Ok(())
    }

    pub(crate) fn remove_interface_vertex(&mut self, v: u32) -> Result<(), IfaceError> {
        self.iface.unlink(v);
        let rule = self.labeled.then_some(SideRule { iface: &self.iface });
        let transfer = Transfer {
            kind: self.projection,
            phase: rule.as_ref().map(|r| r as &dyn PhaseRule),
            phase_means: self.material_interface,
        };
        mmesh::remove_raw(&mut self.tri, v, transfer)?;
        Ok(())
    }

    /// Vertices inside or on the circle with diameter `a`–`b`.
    pub(crate) fn vertices_in_diametral(&self, a: Point2, b: Point2, hint: u32) -> Result<Vec<u32>, IfaceError> {
        let t = &self.tri;
        let m = a.midpoint(b);
        let r = 0.5 * a.distance(b);
        let start = t.walk(m, hint).ok_or(IfaceError::BoundaryConflict)?;
        // Floods stay a few cells wide, so a linear scan beats hashing.
        let mut seen: Vec<u32> = vec![start];
        let mut found: Vec<u32> = Vec::new();
        let mut stack = vec![start];
        // Slack keeps the flood conservative under rounding.
        let reach = r * (1.0 + 1e-9) + 1e-300;
        while let Some(c) = stack.pop() {
            let v = t.cverts(c);
            let p = v.map(|w| t.pos(w));
            for &w in &v {
                if in_diametral_circle(a, b, t.pos(w)) && !found.contains(&w) {
                    found.push(w);
                }
            }
            let n = t.cnbrs(c);
            for i in 0..3 {
                let nb = n[i];
                if nb == NONE || seen.contains(&nb) {
                    continue;
                }
                let (d, _) = point_segment_distance(m, p[(i + 1) % 3], p[(i + 2) % 3]);
                if d <= reach {
                    seen.push(nb);
                    stack.push(nb);
                }
            }
        }
        Ok(found)
    }

    /// Removes bulk vertices inside or on the circle with diameter `a`–`b`.
    /// Returns the number removed.
    pub(crate) fn clear_diametral(&mut self, a: Point2, b: Point2, hint: u32) -> Result<usize, IfaceError> {
        let found = self.vertices_in_diametral(a, b, hint)?;
        let mut removed = 0;
        for w in found {
            match self.tri.vkind(w) {
                VertexKind::Boundary => return Err(IfaceError::BoundaryConflict),
                VertexKind::Bulk => {
                    self.remove_bulk(w)?;
                    removed += 1;
                }
                VertexKind::Interface => {}
            }
        }
        Ok(removed)
    }

    /// Makes `a`–`b` a mesh edge: clear its diametral circle and, if it is
    /// still missing, split it at the midpoint. Returns inserted vertex count.
    pub(crate) fn ensure_edge(&mut self, a: u32, b: u32, depth: u32) -> Result<usize, IfaceError> {
        if self.tri.has_edge(a, b) {
            return Ok(0);
        }
        let (pa, pb) = (self.tri.pos(a), self.tri.pos(b));
        self.clear_diametral(pa, pb, self.tri.vertex_cell(a))?;
        if self.tri.has_edge(a, b) {
            return Ok(0);
        }
        if depth == 0 {
            return Err(IfaceError::InterfaceLost);
        }
        let m = pa.midpoint(pb);
        let slot = match self.insert_with_data(m, VertexKind::Interface, self.tri.vertex_cell(a)) {
            Ok(s) => s,
            Err(IfaceError::Mesh(MeshError::DuplicatePoint)) => return Err(IfaceError::InterfaceLost),
            Err(e) => return Err(e),
        };
        let first = if self.iface.next(a) == b { a } else { b };
        self.iface.insert_after(first, slot);
        Ok(1 + self.ensure_edge(a, slot, depth - 1)? + self.ensure_edge(slot, b, depth - 1)?)
    }
}
