//! Incremental 2D Delaunay triangulation over a mutable vertex set.
//!
//! Vertices and cells live in slot arenas. Handles carry a generation counter,
//! so a handle to a removed vertex or a destroyed cell is detected rather than
//! silently aliased to whatever reuses the slot.
//!
//! Each cell stores its vertices in counterclockwise order and, at position
//! `i`, the neighbor across the edge opposite vertex `i`.

mod build;
mod flip;
mod insert;
mod remove;
mod validate;

use std::sync::atomic::{AtomicU32, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{orient2d_value, triangle_area, Point2};
use crate::mmesh::Stencil;

pub use insert::Location;
pub use validate::Violation;

/// Marker for "no cell" in neighbor slots and "no vertex" in vertex slots.
pub(crate) const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexId {
    index: u32,
    generation: u32,
}

impl VertexId {
    pub fn index(self) -> usize {
        self.index as usize
    }

    pub fn generation(self) -> u32 {
        self.generation
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellId {
    index: u32,
    generation: u32,
}

impl CellId {
    pub fn index(self) -> usize {
        self.index as usize
    }

    pub fn generation(self) -> u32 {
        self.generation
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VertexKind {
    Bulk,
    Interface,
    Boundary,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VertexRecord {
    pub id: VertexId,
    pub position: Point2,
    pub kind: VertexKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellRecord {
    pub id: CellId,
    pub vertices: [VertexId; 3],
    pub neighbors: [Option<CellId>; 3],
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum MeshError {
    #[error("at least three points are required")]
    TooFewPoints,
    #[error("all points are collinear")]
    AllCollinear,
    #[error("duplicate point")]
    DuplicatePoint,
    #[error("point has non-finite coordinates")]
    NonFinite,
    #[error("point lies outside the hull")]
    OutsideHull,
    #[error("point lies on the hull boundary")]
    OnHullBoundary,
    #[error("unknown or stale vertex handle")]
    UnknownVertex,
    #[error("unknown or stale cell handle")]
    UnknownCell,
    #[error("boundary vertices cannot be removed or moved")]
    BoundaryVertex,
    #[error("edge cannot be flipped")]
    NotFlippable,
    #[error("hole retriangulation failed")]
    Retriangulation,
}

/// Result of a vertex insertion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Insertion {
    pub vertex: VertexId,
    pub created: Vec<CellId>,
    pub destroyed: Vec<CellId>,
}

/// Result of a vertex removal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Removal {
    pub created: Vec<CellId>,
    pub destroyed: Vec<CellId>,
}

#[derive(Clone, Debug)]
struct VertexSlot {
    pos: Point2,
    kind: VertexKind,
    generation: u32,
    alive: bool,
    // Some live cell incident to the vertex.
    cell: u32,
}

#[derive(Clone, Debug)]
struct CellSlot {
    v: [u32; 3],
    n: [u32; 3],
    generation: u32,
    alive: bool,
}

#[derive(Debug)]
pub struct Triangulation {
    verts: Vec<VertexSlot>,
    free_verts: Vec<u32>,
    cells: Vec<CellSlot>,
    free_cells: Vec<u32>,
    data: Vec<f64>,
    tags: Vec<u8>,
    dim: usize,
    hull_area: f64,
    live_vertices: usize,
    live_cells: usize,
    last: AtomicU32,
    marks: Vec<u32>,
    epoch: u32,
    track_touched: bool,
    touched: Vec<u32>,
}

impl Clone for Triangulation {
    fn clone(&self) -> Self {
        Self {
            verts: self.verts.clone(),
            free_verts: self.free_verts.clone(),
            cells: self.cells.clone(),
            free_cells: self.free_cells.clone(),
            data: self.data.clone(),
            tags: self.tags.clone(),
            dim: self.dim,
            hull_area: self.hull_area,
            live_vertices: self.live_vertices,
            live_cells: self.live_cells,
            last: AtomicU32::new(self.last.load(Ordering::Relaxed)),
            marks: self.marks.clone(),
            epoch: self.epoch,
            track_touched: self.track_touched,
            touched: self.touched.clone(),
        }
    }
}

impl Triangulation {
    pub fn data_dim(&self) -> usize {
        self.dim
    }

    pub fn num_vertices(&self) -> usize {
        self.live_vertices
    }

    pub fn num_cells(&self) -> usize {
        self.live_cells
    }

    /// Area of the convex hull fixed at build time.
    pub fn hull_area(&self) -> f64 {
        self.hull_area
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.verts
            .iter()
            .enumerate()
            .filter(|(_, s)| s.alive)
            .map(|(i, s)| VertexId {
                index: i as u32,
                generation: s.generation,
            })
    }

    pub fn cells(&self) -> impl Iterator<Item = CellId> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, s)| s.alive)
            .map(|(i, s)| CellId {
                index: i as u32,
                generation: s.generation,
            })
    }

    pub fn contains_vertex(&self, v: VertexId) -> bool {
        self.vertex_index(v).is_ok()
    }

    pub fn contains_cell(&self, c: CellId) -> bool {
        self.cell_index(c).is_ok()
    }

    pub fn vertex(&self, v: VertexId) -> Result<VertexRecord, MeshError> {
        let i = self.vertex_index(v)?;
        let s = &self.verts[i as usize];
        Ok(VertexRecord {
            id: v,
            position: s.pos,
            kind: s.kind,
        })
    }

    pub fn position(&self, v: VertexId) -> Result<Point2, MeshError> {
        Ok(self.verts[self.vertex_index(v)? as usize].pos)
    }

    pub fn kind(&self, v: VertexId) -> Result<VertexKind, MeshError> {
        Ok(self.verts[self.vertex_index(v)? as usize].kind)
    }

    /// Changes the kind of a non-boundary vertex. Boundary kind is fixed.
    pub fn set_kind(&mut self, v: VertexId, kind: VertexKind) -> Result<(), MeshError> {
        let i = self.vertex_index(v)? as usize;
        if self.verts[i].kind == VertexKind::Boundary || kind == VertexKind::Boundary {
            return Err(MeshError::BoundaryVertex);
        }
        self.verts[i].kind = kind;
        Ok(())
    }

    pub fn cell(&self, c: CellId) -> Result<CellRecord, MeshError> {
        let i = self.cell_index(c)?;
        let s = &self.cells[i as usize];
        Ok(CellRecord {
            id: c,
            vertices: s.v.map(|v| self.vid(v)),
            neighbors: s.n.map(|n| (n != NONE).then(|| self.cid(n))),
        })
    }

    pub fn cell_vertices(&self, c: CellId) -> Result<[VertexId; 3], MeshError> {
        let i = self.cell_index(c)?;
        Ok(self.cells[i as usize].v.map(|v| self.vid(v)))
    }

    pub fn cell_corners(&self, c: CellId) -> Result<[Point2; 3], MeshError> {
        Ok(self.corners(self.cell_index(c)?))
    }

    pub fn cell_area(&self, c: CellId) -> Result<f64, MeshError> {
        let [a, b, p] = self.cell_corners(c)?;
        Ok(triangle_area(a, b, p))
    }

    pub fn data(&self, c: CellId) -> Result<&[f64], MeshError> {
        let i = self.cell_index(c)? as usize;
        Ok(&self.data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn data_mut(&mut self, c: CellId) -> Result<&mut [f64], MeshError> {
        let i = self.cell_index(c)? as usize;
        Ok(&mut self.data[i * self.dim..(i + 1) * self.dim])
    }

    /// Phase tag of a cell; 0 means untagged.
    pub fn tag(&self, c: CellId) -> Result<u8, MeshError> {
        Ok(self.tags[self.cell_index(c)? as usize])
    }

    pub fn set_tag(&mut self, c: CellId, tag: u8) -> Result<(), MeshError> {
        let i = self.cell_index(c)? as usize;
        self.tags[i] = tag;
        Ok(())
    }

    /// Cells incident to `v` in counterclockwise order around it.
    pub fn incident_cells(&self, v: VertexId) -> Result<Vec<CellId>, MeshError> {
        let i = self.vertex_index(v)?;
        Ok(self.star(i).into_iter().map(|c| self.cid(c)).collect())
    }

    /// Vertices adjacent to `v`, without repetition.
    pub fn adjacent_vertices(&self, v: VertexId) -> Result<Vec<VertexId>, MeshError> {
        let i = self.vertex_index(v)?;
        Ok(self.adjacent(i).into_iter().map(|w| self.vid(w)).collect())
    }

    pub fn is_edge(&self, a: VertexId, b: VertexId) -> Result<bool, MeshError> {
        let ia = self.vertex_index(a)?;
        let ib = self.vertex_index(b)?;
        Ok(self.has_edge(ia, ib))
    }

    /// Every edge once, as a pair of vertex handles.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.raw_edges().map(|(a, b)| (self.vid(a), self.vid(b)))
    }

    /// Σ data·area over all cells, per data component.
    pub fn total_mass(&self) -> Vec<f64> {
        let mut mass = vec![0.0; self.dim];
        for (i, s) in self.cells.iter().enumerate() {
            if !s.alive {
                continue;
            }
            let area = self.area(i as u32);
            for (k, m) in mass.iter_mut().enumerate() {
                *m += self.data[i * self.dim + k] * area;
            }
        }
        mass
    }

    /// Enables recording of vertices whose incident cells change.
    pub fn set_track_touched(&mut self, on: bool) {
        self.track_touched = on;
        if !on {
            self.touched.clear();
        }
    }

    /// Vertices whose star changed since the last call, by slot index.
    pub(crate) fn drain_touched(&mut self) -> Vec<u32> {
        std::mem::take(&mut self.touched)
    }

    // Raw-index helpers shared across the crate.

    pub(crate) fn vertex_index(&self, v: VertexId) -> Result<u32, MeshError> {
        match self.verts.get(v.index as usize) {
            Some(s) if s.alive && s.generation == v.generation => Ok(v.index),
            _ => Err(MeshError::UnknownVertex),
        }
    }

    pub(crate) fn cell_index(&self, c: CellId) -> Result<u32, MeshError> {
        match self.cells.get(c.index as usize) {
            Some(s) if s.alive && s.generation == c.generation => Ok(c.index),
            _ => Err(MeshError::UnknownCell),
        }
    }

    pub(crate) fn vid(&self, v: u32) -> VertexId {
        VertexId {
            index: v,
            generation: self.verts[v as usize].generation,
        }
    }

    pub(crate) fn cid(&self, c: u32) -> CellId {
        CellId {
            index: c,
            generation: self.cells[c as usize].generation,
        }
    }

    pub(crate) fn vertex_slots(&self) -> usize {
        self.verts.len()
    }

    pub(crate) fn cell_slots(&self) -> usize {
        self.cells.len()
    }

    pub(crate) fn vertex_alive(&self, v: u32) -> bool {
        self.verts.get(v as usize).is_some_and(|s| s.alive)
    }

    pub(crate) fn cell_alive(&self, c: u32) -> bool {
        self.cells.get(c as usize).is_some_and(|s| s.alive)
    }

    #[inline]
    pub(crate) fn pos(&self, v: u32) -> Point2 {
        self.verts[v as usize].pos
    }

    #[inline]
    pub(crate) fn vkind(&self, v: u32) -> VertexKind {
        self.verts[v as usize].kind
    }

    #[inline]
    pub(crate) fn cverts(&self, c: u32) -> [u32; 3] {
        self.cells[c as usize].v
    }

    #[inline]
    pub(crate) fn cnbrs(&self, c: u32) -> [u32; 3] {
        self.cells[c as usize].n
    }

    #[inline]
    pub(crate) fn corners(&self, c: u32) -> [Point2; 3] {
        self.cells[c as usize].v.map(|v| self.pos(v))
    }

    #[inline]
    pub(crate) fn area(&self, c: u32) -> f64 {
        let [a, b, p] = self.corners(c);
        triangle_area(a, b, p)
    }

    pub(crate) fn raw_data(&self, c: u32) -> &[f64] {
        let i = c as usize;
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn raw_data_mut(&mut self, c: u32) -> &mut [f64] {
        let i = c as usize;
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn raw_tag(&self, c: u32) -> u8 {
        self.tags[c as usize]
    }

    pub(crate) fn set_raw_tag(&mut self, c: u32, tag: u8) {
        self.tags[c as usize] = tag;
    }

    pub(crate) fn vertex_cell(&self, v: u32) -> u32 {
        self.verts[v as usize].cell
    }

    /// Alive cell indices.
    pub(crate) fn raw_cells(&self) -> impl Iterator<Item = u32> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, s)| s.alive)
            .map(|(i, _)| i as u32)
    }

    pub(crate) fn raw_vertices(&self) -> impl Iterator<Item = u32> + '_ {
        self.verts
            .iter()
            .enumerate()
            .filter(|(_, s)| s.alive)
            .map(|(i, _)| i as u32)
    }

    /// Every edge once as raw vertex indices.
    pub(crate) fn raw_edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.raw_cells().flat_map(move |c| {
            let s = &self.cells[c as usize];
            (0..3).filter_map(move |i| {
                let nb = s.n[i];
                (nb == NONE || nb > c).then(|| (s.v[(i + 1) % 3], s.v[(i + 2) % 3]))
            })
        })
    }

    /// Edges with the two cells sharing them: `(a, b, left, right)` with
    /// `left` the cell seeing `a -> b` counterclockwise.
    pub(crate) fn raw_edges_with_cells(&self) -> impl Iterator<Item = (u32, u32, u32, u32)> + '_ {
        self.raw_cells().flat_map(move |c| {
            let s = &self.cells[c as usize];
            (0..3).filter_map(move |i| {
                let nb = s.n[i];
                (nb == NONE || nb > c).then(|| (s.v[(i + 1) % 3], s.v[(i + 2) % 3], c, nb))
            })
        })
    }

    #[inline]
    pub(crate) fn index_in_cell(&self, c: u32, v: u32) -> usize {
        let cv = self.cells[c as usize].v;
        if cv[0] == v {
            0
        } else if cv[1] == v {
            1
        } else {
            debug_assert_eq!(cv[2], v);
            2
        }
    }

    /// Cells around `v`, counterclockwise. For hull vertices the fan is
    /// returned from the clockwise-most cell.
    pub(crate) fn star(&self, v: u32) -> Vec<u32> {
        let start = self.verts[v as usize].cell;
        let mut out = Vec::with_capacity(8);
        let mut c = start;
        loop {
            out.push(c);
            let i = self.index_in_cell(c, v);
            let next = self.cells[c as usize].n[(i + 1) % 3];
            if next == NONE {
                break;
            }
            if next == start {
                return out;
            }
            c = next;
        }
        // Open fan: walk clockwise from the start.
        let mut back = Vec::new();
        let mut c = start;
        loop {
            let i = self.index_in_cell(c, v);
            let prev = self.cells[c as usize].n[(i + 2) % 3];
            if prev == NONE {
                break;
            }
            back.push(prev);
            c = prev;
        }
        back.reverse();
        back.extend(out);
        back
    }

    /// Neighboring vertices of `v`, counterclockwise.
    pub(crate) fn adjacent(&self, v: u32) -> Vec<u32> {
        let star = self.star(v);
        let mut out = Vec::with_capacity(star.len() + 1);
        for &c in &star {
            let i = self.index_in_cell(c, v);
            out.push(self.cells[c as usize].v[(i + 1) % 3]);
        }
        if let Some(&c) = star.last() {
            let i = self.index_in_cell(c, v);
            let w = self.cells[c as usize].v[(i + 2) % 3];
            if out.first() != Some(&w) {
                out.push(w);
            }
        }
        out
    }

    pub(crate) fn has_edge(&self, a: u32, b: u32) -> bool {
        self.edge_cell(a, b).is_some()
    }

    /// A cell containing edge `ab` (in either direction).
    pub(crate) fn edge_cell(&self, a: u32, b: u32) -> Option<u32> {
        if a == b {
            return None;
        }
        self.star(a)
            .into_iter()
            .find(|&c| self.cells[c as usize].v.contains(&b))
    }

    pub(crate) fn set_last(&self, c: u32) {
        self.last.store(c, Ordering::Relaxed);
    }

    pub(crate) fn last_cell(&self) -> u32 {
        let c = self.last.load(Ordering::Relaxed);
        if self.cell_alive(c) {
            c
        } else {
            self.raw_cells().next().unwrap_or(NONE)
        }
    }

    // Arena management.

    fn alloc_cell(&mut self, v: [u32; 3], n: [u32; 3]) -> u32 {
        let c = if let Some(c) = self.free_cells.pop() {
            let s = &mut self.cells[c as usize];
            s.v = v;
            s.n = n;
            s.alive = true;
            c
        } else {
            self.cells.push(CellSlot {
                v,
                n,
                generation: 0,
                alive: true,
            });
            self.data.extend(std::iter::repeat(0.0).take(self.dim));
            self.tags.push(0);
            self.marks.push(0);
            (self.cells.len() - 1) as u32
        };
        let i = c as usize;
        self.data[i * self.dim..(i + 1) * self.dim].fill(0.0);
        self.tags[i] = 0;
        self.live_cells += 1;
        c
    }

    fn free_cell(&mut self, c: u32) {
        let s = &mut self.cells[c as usize];
        debug_assert!(s.alive);
        s.alive = false;
        s.generation = s.generation.wrapping_add(1);
        self.free_cells.push(c);
        self.live_cells -= 1;
    }

    fn alloc_vertex(&mut self, pos: Point2, kind: VertexKind, slot: Option<u32>) -> u32 {
        let v = match slot {
            Some(v) => {
                let s = &mut self.verts[v as usize];
                debug_assert!(!s.alive);
                s.pos = pos;
                s.kind = kind;
                s.alive = true;
                v
            }
            None => {
                if let Some(v) = self.free_verts.pop() {
                    let s = &mut self.verts[v as usize];
                    s.pos = pos;
                    s.kind = kind;
                    s.alive = true;
                    v
                } else {
                    self.verts.push(VertexSlot {
                        pos,
                        kind,
                        generation: 0,
                        alive: true,
                        cell: NONE,
                    });
                    (self.verts.len() - 1) as u32
                }
            }
        };
        self.live_vertices += 1;
        v
    }

    /// Marks the vertex dead. With `keep_slot` the slot is not returned to the
    /// free list, so the caller can refill it.
    fn free_vertex(&mut self, v: u32, keep_slot: bool) {
        let s = &mut self.verts[v as usize];
        s.alive = false;
        s.generation = s.generation.wrapping_add(1);
        s.cell = NONE;
        if !keep_slot {
            self.free_verts.push(v);
        }
        self.live_vertices -= 1;
    }

    /// In cell `c`, points the neighbor slot of edge `a -> b` (ccw in `c`) at `nb`.
    fn set_neighbor_on_edge(&mut self, c: u32, a: u32, b: u32, nb: u32) {
        let s = &mut self.cells[c as usize];
        for j in 0..3 {
            if s.v[(j + 1) % 3] == a && s.v[(j + 2) % 3] == b {
                s.n[j] = nb;
                return;
            }
        }
        debug_assert!(false, "edge {a}->{b} not in cell {c}");
    }

    fn touch(&mut self, v: u32) {
        if self.track_touched {
            self.touched.push(v);
        }
    }

    fn next_epoch(&mut self) -> u32 {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.marks.fill(0);
            self.epoch = 1;
        }
        self.epoch
    }

    fn snapshot_into(&self, c: u32, stencil: &mut Stencil) {
        stencil.push(Some(self.cid(c)), self.corners(c), self.raw_tag(c), self.raw_data(c));
    }

    /// Flips the edge opposite vertex `side` of `cell`. The result is usually
    /// not Delaunay; this exists to construct invalid meshes for validators.
    pub fn flip_edge(&mut self, cell: CellId, side: usize) -> Result<(), MeshError> {
        let c = self.cell_index(cell)?;
        if side > 2 {
            return Err(MeshError::NotFlippable);
        }
        let cs = self.cells[c as usize].clone();
        let d = cs.n[side];
        if d == NONE {
            return Err(MeshError::NotFlippable);
        }
        let p = cs.v[side];
        let q = cs.v[(side + 1) % 3];
        let r = cs.v[(side + 2) % 3];
        let ds = self.cells[d as usize].clone();
        let j = (0..3).find(|&j| ds.n[j] == c).ok_or(MeshError::NotFlippable)?;
        let s = ds.v[j];
        let (pp, pq, pr, ps) = (self.pos(p), self.pos(q), self.pos(r), self.pos(s));
        if orient2d_value(pp, pq, ps) <= 0.0 || orient2d_value(pp, ps, pr) <= 0.0 {
            return Err(MeshError::NotFlippable);
        }
        self.flip_raw(c, side, d, j);
        Ok(())
    }

    /// Flips the edge between `c` (opposite its vertex `side`) and `d`
    /// (opposite its vertex `j`). The quadrilateral must be strictly convex.
    /// `c` keeps the first vertex of `c` and the far vertex of `d`.
    pub(crate) fn flip_raw(&mut self, c: u32, side: usize, d: u32, j: usize) {
        let cs = self.cells[c as usize].clone();
        let ds = self.cells[d as usize].clone();
        let p = cs.v[side];
        let q = cs.v[(side + 1) % 3];
        let r = cs.v[(side + 2) % 3];
        let s = ds.v[j];
        let across_qs = ds.n[(j + 1) % 3];
        let across_sr = ds.n[(j + 2) % 3];
        let across_pq = cs.n[(side + 2) % 3];
        let across_rp = cs.n[(side + 1) % 3];
        self.cells[c as usize].v = [p, q, s];
        self.cells[c as usize].n = [across_qs, d, across_pq];
        self.cells[d as usize].v = [p, s, r];
        self.cells[d as usize].n = [across_sr, across_rp, c];
        if across_qs != NONE {
            self.set_neighbor_on_edge(across_qs, s, q, c);
        }
        if across_rp != NONE {
            self.set_neighbor_on_edge(across_rp, p, r, d);
        }
        for v in [p, q, s] {
            self.verts[v as usize].cell = c;
        }
        self.verts[r as usize].cell = d;
        for v in [p, q, r, s] {
            self.touch(v);
        }
    }

    /// Gives a live cell a fresh handle and clears its data and tag.
    pub(crate) fn renew_cell(&mut self, c: u32) {
        let i = c as usize;
        self.cells[i].generation = self.cells[i].generation.wrapping_add(1);
        self.data[i * self.dim..(i + 1) * self.dim].fill(0.0);
        self.tags[i] = 0;
    }

    pub(crate) fn set_pos(&mut self, v: u32, p: Point2) {
        self.verts[v as usize].pos = p;
    }
}

/// Whether `p` lies in the closed triangle `(a, b, c)` given counterclockwise.
pub(crate) fn triangle_contains(tri: &[Point2; 3], p: Point2) -> bool {
    orient2d_value(tri[0], tri[1], p) >= 0.0
        && orient2d_value(tri[1], tri[2], p) >= 0.0
        && orient2d_value(tri[2], tri[0], p) >= 0.0
}
