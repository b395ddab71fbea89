//! Data-carrying mesh operations and motion bounds.
//!
//! Every topological change captures the old cells as a [`Stencil`], performs
//! the change, and projects the old piecewise-constant data onto the created
//! cells. Both stencils cover the same region, so the projections conserve
//! Σ data·area up to rounding.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dmesh::{CellId, MeshError, Triangulation, VertexId, VertexKind};
use crate::geom::{point_segment_distance, polygon_area, triangle_area, Point2};

/// Relative clipped-area mismatch that signals inconsistent stencils.
const CLIP_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum MmeshError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("move of length {distance} exceeds the admissible bound {bound}")]
    MoveTooFar { distance: f64, bound: f64 },
    #[error("stencil has zero area")]
    ZeroArea,
    #[error("clipped area {clipped} does not match cell area {area}")]
    ClipMismatch { clipped: f64, area: f64 },
    #[error("mesh has no interior vertex")]
    NoInteriorVertex,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionKind {
    #[default]
    LocalAverage,
    L2Projection,
}

/// Snapshot of cells taking part in one data transfer.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Stencil {
    pub ids: Vec<Option<CellId>>,
    pub corners: Vec<[Point2; 3]>,
    pub areas: Vec<f64>,
    pub tags: Vec<u8>,
    /// `dim` values per cell, row-major.
    pub data: Vec<f64>,
    pub dim: usize,
}

impl Stencil {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.corners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corners.is_empty()
    }

    pub fn push(&mut self, id: Option<CellId>, corners: [Point2; 3], tag: u8, data: &[f64]) {
        debug_assert_eq!(data.len(), self.dim);
        self.ids.push(id);
        self.areas.push(triangle_area(corners[0], corners[1], corners[2]));
        self.corners.push(corners);
        self.tags.push(tag);
        self.data.extend_from_slice(data);
    }

    fn push_from(&mut self, other: &Stencil, k: usize) {
        self.ids.push(other.ids[k]);
        self.corners.push(other.corners[k]);
        self.areas.push(other.areas[k]);
        self.tags.push(other.tags[k]);
        self.data.extend_from_slice(other.value(k));
    }

    pub fn value(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Σ data·area per component.
    pub fn mass(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for k in 0..self.len() {
            for (j, mj) in m.iter_mut().enumerate() {
                *mj += self.data[k * self.dim + j] * self.areas[k];
            }
        }
        m
    }

    /// Current cells of `t` as a stencil.
    pub fn capture(t: &Triangulation, cells: &[CellId]) -> Result<Self, MeshError> {
        let mut s = Stencil::new(t.data_dim());
        for &c in cells {
            s.push(Some(c), t.cell_corners(c)?, t.tag(c)?, t.data(c)?);
        }
        Ok(s)
    }
}

/// Assigns phase tags to freshly created cells.
pub trait PhaseRule {
    /// Tags for `cells` (all live in `t`), or `None` if the rule has no
    /// information about them.
    fn classify(&self, t: &Triangulation, cells: &[CellId]) -> Option<Vec<u8>>;
}

/// Projection settings for one data-carrying operation.
#[derive(Clone, Copy)]
pub struct Transfer<'a> {
    pub kind: ProjectionKind,
    pub phase: Option<&'a dyn PhaseRule>,
    /// With phases: every phase keeps the mean value it had in the old
    /// stencil instead of its mass. Not conservative when phase areas change.
    pub phase_means: bool,
}

impl<'a> Transfer<'a> {
    pub fn plain(kind: ProjectionKind) -> Self {
        Self {
            kind,
            phase: None,
            phase_means: false,
        }
    }
}

/// Outcome of a data-carrying operation.
#[derive(Clone, Debug, PartialEq)]
pub struct Remesh {
    pub vertex: Option<VertexId>,
    pub created: Vec<CellId>,
    pub old_area: f64,
    pub new_area: f64,
}

/// Local averaging: every new cell receives Σ u_j|C_j| / |dom|.
pub fn project_average(old: &Stencil, new_cells: &[[Point2; 3]]) -> Result<Vec<Vec<f64>>, MmeshError> {
    let areas: Vec<f64> = new_cells.iter().map(|c| triangle_area(c[0], c[1], c[2])).collect();
    let flat = average_flat(old, &areas)?;
    Ok(unflatten(&flat, old.dim))
}

/// L² projection onto piecewise constants on `new_cells` by exact
/// triangle–triangle clipping.
pub fn project_l2(old: &Stencil, new_cells: &[[Point2; 3]]) -> Result<Vec<Vec<f64>>, MmeshError> {
    let flat = l2_flat(old, new_cells, None)?;
    Ok(unflatten(&flat, old.dim))
}

fn unflatten(flat: &[f64], dim: usize) -> Vec<Vec<f64>> {
    if dim == 0 {
        return Vec::new();
    }
    flat.chunks(dim).map(|c| c.to_vec()).collect()
}

fn average_flat(old: &Stencil, new_areas: &[f64]) -> Result<Vec<f64>, MmeshError> {
    let area: f64 = new_areas.iter().sum();
    if !(area > 0.0) || !(old.area() > 0.0) {
        return Err(MmeshError::ZeroArea);
    }
    let mean: Vec<f64> = old.mass().into_iter().map(|m| m / area).collect();
    Ok(new_areas.iter().flat_map(|_| mean.iter().copied()).collect())
}

/// L² projection; with `phases = Some((old_tags, new_tags))` overlaps are
/// restricted to equal tags.
fn l2_flat(old: &Stencil, new_cells: &[[Point2; 3]], phases: Option<&[u8]>) -> Result<Vec<f64>, MmeshError> {
    let dim = old.dim;
    if !(old.area() > 0.0) {
        return Err(MmeshError::ZeroArea);
    }
    let boxes: Vec<_> = old.corners.iter().map(bbox).collect();
    let mut out = vec![0.0; new_cells.len() * dim];
    for (i, nc) in new_cells.iter().enumerate() {
        let area = triangle_area(nc[0], nc[1], nc[2]);
        if !(area > 0.0) {
            return Err(MmeshError::ZeroArea);
        }
        let nb = bbox(nc);
        let mut covered = 0.0;
        let mut same = 0.0;
        let mut acc = vec![0.0; dim];
        for k in 0..old.len() {
            if !overlaps(&nb, &boxes[k]) {
                continue;
            }
            let a = clip_area(nc, &old.corners[k]);
            if a <= 0.0 {
                continue;
            }
            covered += a;
            if let Some(tags) = phases {
                if tags[i] != old.tags[k] {
                    continue;
                }
            }
            same += a;
            for j in 0..dim {
                acc[j] += old.data[k * dim + j] * a;
            }
        }
        if (covered - area).abs() > CLIP_TOLERANCE * area {
            return Err(MmeshError::ClipMismatch { clipped: covered, area });
        }
        if same > 0.0 {
            for j in 0..dim {
                out[i * dim + j] = acc[j] / same;
            }
        } else if let Some(tags) = phases {
            // No same-phase overlap: use the phase mean of the old stencil.
            let (m, a) = phase_mass(old, tags[i]);
            for j in 0..dim {
                out[i * dim + j] = if a > 0.0 { m[j] / a } else { 0.0 };
            }
        }
    }
    Ok(out)
}

fn phase_mass(old: &Stencil, tag: u8) -> (Vec<f64>, f64) {
    let mut m = vec![0.0; old.dim];
    let mut a = 0.0;
    for k in 0..old.len() {
        if old.tags[k] == tag {
            a += old.areas[k];
            for (j, mj) in m.iter_mut().enumerate() {
                *mj += old.data[k * old.dim + j] * old.areas[k];
            }
        }
    }
    (m, a)
}

type BBox = (f64, f64, f64, f64);

fn bbox(c: &[Point2; 3]) -> BBox {
    (
        c[0].x.min(c[1].x).min(c[2].x),
        c[0].y.min(c[1].y).min(c[2].y),
        c[0].x.max(c[1].x).max(c[2].x),
        c[0].y.max(c[1].y).max(c[2].y),
    )
}

fn overlaps(a: &BBox, b: &BBox) -> bool {
    a.0 <= b.2 && b.0 <= a.2 && a.1 <= b.3 && b.1 <= a.3
}

/// Area of the intersection of two counterclockwise triangles
/// (Sutherland–Hodgman).
pub(crate) fn clip_area(subject: &[Point2; 3], clip: &[Point2; 3]) -> f64 {
    let mut poly: Vec<Point2> = subject.to_vec();
    let mut next = Vec::with_capacity(8);
    for e in 0..3 {
        let a = clip[e];
        let b = clip[(e + 1) % 3];
        let side = |p: Point2| (b - a).cross(p - a);
        next.clear();
        let m = poly.len();
        for i in 0..m {
            let p = poly[i];
            let q = poly[(i + 1) % m];
            let sp = side(p);
            let sq = side(q);
            if sp >= 0.0 {
                next.push(p);
            }
            if (sp >= 0.0) != (sq >= 0.0) {
                let t = sp / (sp - sq);
                next.push(p + (q - p) * t);
            }
        }
        std::mem::swap(&mut poly, &mut next);
        if poly.len() < 3 {
            return 0.0;
        }
    }
    polygon_area(&poly).max(0.0)
}

/// Projects `old` onto the live cells `new` of `t`, writing data and tags.
fn apply_transfer(
    t: &mut Triangulation,
    old: &Stencil,
    new: &[CellId],
    transfer: Transfer<'_>,
) -> Result<(f64, f64), MmeshError> {
    let corners: Vec<[Point2; 3]> = new.iter().map(|&c| t.cell_corners(c)).collect::<Result<_, _>>()?;
    let areas: Vec<f64> = corners.iter().map(|c| triangle_area(c[0], c[1], c[2])).collect();
    let old_area = old.area();
    let new_area: f64 = areas.iter().sum();

    let first = old.tags.first().copied().unwrap_or(0);
    let uniform_old = old.tags.iter().all(|&g| g == first);
    let classified = transfer.phase.and_then(|rule| rule.classify(t, new));
    let tags: Vec<u8> = match classified {
        Some(tags) => tags,
        None if uniform_old => vec![first; new.len()],
        None => vec![0; new.len()],
    };

    let phase_aware = !old.tags.contains(&0)
        && !tags.contains(&0)
        && !(uniform_old && tags.iter().all(|&g| g == first))
        && phase_sets_compatible(old, &tags);

    let values = if phase_aware {
        phase_projection(old, &corners, &areas, &tags, transfer.kind, transfer.phase_means)?
    } else {
        match transfer.kind {
            ProjectionKind::LocalAverage => average_flat(old, &areas)?,
            ProjectionKind::L2Projection => {
                let mut v = l2_flat(old, &corners, None)?;
                correct_mass(&mut v, &areas, &old.mass(), old.dim, None);
                v
            }
        }
    };

    let dim = old.dim;
    for (i, &c) in new.iter().enumerate() {
        t.data_mut(c)?.copy_from_slice(&values[i * dim..(i + 1) * dim]);
        t.set_tag(c, tags[i])?;
    }
    Ok((old_area, new_area))
}

/// Every old phase that carries data has a place to go.
fn phase_sets_compatible(old: &Stencil, new_tags: &[u8]) -> bool {
    (0..old.len()).all(|k| new_tags.contains(&old.tags[k]) || old.value(k).iter().all(|&x| x == 0.0))
}

fn phase_projection(
    old: &Stencil,
    corners: &[[Point2; 3]],
    areas: &[f64],
    tags: &[u8],
    kind: ProjectionKind,
    keep_means: bool,
) -> Result<Vec<f64>, MmeshError> {
    let dim = old.dim;
    let mut phases: Vec<u8> = tags.to_vec();
    phases.sort_unstable();
    phases.dedup();
    let mut out = match kind {
        ProjectionKind::L2Projection => l2_flat(old, corners, Some(tags))?,
        ProjectionKind::LocalAverage => vec![0.0; corners.len() * dim],
    };
    for &g in &phases {
        let (mut mass, old_area) = phase_mass(old, g);
        let new_area: f64 = (0..tags.len()).filter(|&i| tags[i] == g).map(|i| areas[i]).sum();
        if !(new_area > 0.0) {
            return Err(MmeshError::ZeroArea);
        }
        if keep_means && old_area > 0.0 {
            mass.iter_mut().for_each(|m| *m *= new_area / old_area);
        }
        match kind {
            ProjectionKind::LocalAverage => {
                for i in (0..tags.len()).filter(|&i| tags[i] == g) {
                    for j in 0..dim {
                        out[i * dim + j] = mass[j] / new_area;
                    }
                }
            }
            ProjectionKind::L2Projection => correct_mass(&mut out, areas, &mass, dim, Some((tags, g))),
        }
    }
    Ok(out)
}

/// Adds a constant to the selected cells so their Σ value·area equals `mass`.
fn correct_mass(values: &mut [f64], areas: &[f64], mass: &[f64], dim: usize, only: Option<(&[u8], u8)>) {
    let selected = |i: usize| only.map_or(true, |(tags, g)| tags[i] == g);
    let area: f64 = (0..areas.len()).filter(|&i| selected(i)).map(|i| areas[i]).sum();
    if !(area > 0.0) {
        return;
    }
    for j in 0..dim {
        let current: f64 = (0..areas.len())
            .filter(|&i| selected(i))
            .map(|i| values[i * dim + j] * areas[i])
            .sum();
        let shift = (mass[j] - current) / area;
        if shift != 0.0 {
            for i in (0..areas.len()).filter(|&i| selected(i)) {
                values[i * dim + j] += shift;
            }
        }
    }
}

/// Distance from `v` to the boundary of the union of its incident cells.
pub fn omega_vertex(t: &Triangulation, v: VertexId) -> Result<f64, MmeshError> {
    let i = t.vertex_index(v)?;
    if t.vkind(i) == VertexKind::Boundary {
        return Err(MeshError::BoundaryVertex.into());
    }
    Ok(omega_raw(t, i))
}

pub(crate) fn omega_raw(t: &Triangulation, v: u32) -> f64 {
    let p = t.pos(v);
    t.star(v)
        .into_iter()
        .map(|c| {
            let cv = t.cverts(c);
            let i = t.index_in_cell(c, v);
            point_segment_distance(p, t.pos(cv[(i + 1) % 3]), t.pos(cv[(i + 2) % 3])).0
        })
        .fold(f64::INFINITY, f64::min)
}

/// Minimum of [`omega_vertex`] over all non-boundary vertices.
pub fn omega_mesh(t: &Triangulation) -> Result<f64, MmeshError> {
    t.raw_vertices()
        .filter(|&v| t.vkind(v) != VertexKind::Boundary)
        .map(|v| omega_raw(t, v))
        .reduce(f64::min)
        .ok_or(MmeshError::NoInteriorVertex)
}

/// Incrementally maintained minimum of ω over non-boundary vertices.
#[derive(Clone, Debug, Default)]
pub struct OmegaCache {
    values: Vec<Option<u64>>,
    ordered: BTreeSet<(u64, u32)>,
}

impl OmegaCache {
    /// Computes all values and turns on change tracking in `t`.
    pub fn new(t: &mut Triangulation) -> Self {
        t.set_track_touched(true);
        t.drain_touched();
        let mut cache = Self::default();
        let all: Vec<u32> = t.raw_vertices().collect();
        cache.update(t, &all);
        cache
    }

    /// Recomputes values for vertices whose stars changed.
    pub fn refresh(&mut self, t: &mut Triangulation) {
        let mut touched = t.drain_touched();
        touched.sort_unstable();
        touched.dedup();
        self.update(t, &touched);
    }

    fn update(&mut self, t: &Triangulation, verts: &[u32]) {
        for &v in verts {
            let i = v as usize;
            if i >= self.values.len() {
                self.values.resize(t.vertex_slots().max(i + 1), None);
            }
            if let Some(old) = self.values[i].take() {
                self.ordered.remove(&(old, v));
            }
            if t.vertex_alive(v) && t.vkind(v) != VertexKind::Boundary {
                // Nonnegative finite doubles order like their bit patterns.
                let key = omega_raw(t, v).to_bits();
                self.values[i] = Some(key);
                self.ordered.insert((key, v));
            }
        }
    }

    pub fn min(&self) -> Option<f64> {
        self.ordered.first().map(|&(k, _)| f64::from_bits(k))
    }
}

/// Removes `v`, projecting the data of its hole onto the
/// retriangulation.
pub fn remove_vertex_with_data(t: &mut Triangulation, v: VertexId, transfer: Transfer<'_>) -> Result<Remesh, MmeshError> {
    let i = t.vertex_index(v)?;
    remove_raw(t, i, transfer)
}

pub(crate) fn remove_raw(t: &mut Triangulation, v: u32, transfer: Transfer<'_>) -> Result<Remesh, MmeshError> {
    let mut old = Stencil::new(t.data_dim());
    let removal = t.remove_impl(v, false, Some(&mut old))?;
    let (old_area, new_area) = apply_transfer(t, &old, &removal.created, transfer)?;
    Ok(Remesh {
        vertex: None,
        created: removal.created,
        old_area,
        new_area,
    })
}

/// Inserts `p`, projecting the data of its conflict zone.
pub fn insert_vertex_with_data(
    t: &mut Triangulation,
    p: Point2,
    kind: VertexKind,
    transfer: Transfer<'_>,
) -> Result<Remesh, MmeshError> {
    let start = t.last_cell();
    insert_raw(t, p, kind, start, transfer)
}

pub(crate) fn insert_raw(
    t: &mut Triangulation,
    p: Point2,
    kind: VertexKind,
    start: u32,
    transfer: Transfer<'_>,
) -> Result<Remesh, MmeshError> {
    let mut old = Stencil::new(t.data_dim());
    let ins = t.insert_impl(p, kind, None, Some(&mut old), start)?;
    let (old_area, new_area) = apply_transfer(t, &old, &ins.created, transfer)?;
    Ok(Remesh {
        vertex: Some(ins.vertex),
        created: ins.created,
        old_area,
        new_area,
    })
}

/// Moves `v` to `target` subject to ‖v − target‖ < ω(τ, v).
pub fn move_vertex_with_data(
    t: &mut Triangulation,
    v: VertexId,
    target: Point2,
    transfer: Transfer<'_>,
) -> Result<Remesh, MmeshError> {
    let i = t.vertex_index(v)?;
    if t.vkind(i) == VertexKind::Boundary {
        return Err(MeshError::BoundaryVertex.into());
    }
    let bound = omega_raw(t, i);
    let distance = t.pos(i).distance(target);
    if !(distance < bound) {
        return Err(MmeshError::MoveTooFar { distance, bound });
    }
    move_raw(t, i, target, transfer)
}

/// `move_vertex_with_data` without the motion bound check.
pub(crate) fn move_raw(t: &mut Triangulation, v: u32, target: Point2, transfer: Transfer<'_>) -> Result<Remesh, MmeshError> {
    let dim = t.data_dim();
    let mut old = Stencil::new(dim);
    let mut conflict = Stencil::new(dim);
    let (removal, ins) = t.relocate_impl(v, target, Some(&mut old), Some(&mut conflict))?;
    // Old stencil: the hole of v plus the conflict cells that predate the removal.
    for k in 0..conflict.len() {
        let id = conflict.ids[k].expect("captured cells carry ids");
        if !removal.created.contains(&id) {
            old.push_from(&conflict, k);
        }
    }
    // New stencil: the star of the new vertex plus surviving hole cells.
    let mut new = ins.created.clone();
    new.extend(removal.created.iter().filter(|c| !ins.destroyed.contains(c)));
    let (old_area, new_area) = apply_transfer(t, &old, &new, transfer)?;
    Ok(Remesh {
        vertex: Some(ins.vertex),
        created: new,
        old_area,
        new_area,
    })
}
