use std::collections::HashMap;
use web_time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{compute_thresholds, BackgroundList, IfaceError, Interface, InterfaceMesh, PhaseTimes};
use crate::dmesh::{MeshError, Triangulation, VertexId, VertexKind, NONE};
use crate::geom::{in_diametral_circle, orient2d_value, point_segment_distance, polygon_area, segments_intersect_unchecked, Point2};
use crate::grid::{BBox, BucketGrid};
use crate::mmesh::{OmegaCache, ProjectionKind};

/// Depth of midpoint splitting when an interface edge goes missing.
const REPAIR_DEPTH: u32 = 4;

/// Relative size of the deterministic perturbation applied to seed points.
const SEED_JITTER: f64 = 1e-9;

/// Switches for diagnostics; the defaults run every phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MoveOptions {
    #[doc(hidden)]
    pub skip_ensure: bool,
    #[doc(hidden)]
    pub skip_repair: bool,
    #[doc(hidden)]
    pub skip_bound: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MoveReport {
    /// Bulk vertices removed while clearing Gabriel circles.
    pub removed_ensure: usize,
    /// Bulk vertices removed for being too close to the interface.
    pub removed_coarse: usize,
    /// Background positions inserted back.
    pub reinserted: usize,
    /// Interface vertices added to recover lost edges.
    pub repaired: usize,
    /// Global motion bound ω(τ) before the move.
    pub omega: f64,
    /// Largest distance from a target sample to the remeshed interface.
    pub epsilon: f64,
    pub times: PhaseTimes,
}

impl InterfaceMesh {
    /// Inserts the closed polygon `polygon` into `tri` as an interface,
    /// clears its Gabriel circles and labels the two phases.
    pub fn seed(mut tri: Triangulation, polygon: &[Point2], projection: ProjectionKind) -> Result<Self, IfaceError> {
        if polygon.len() < 3 {
            return Err(IfaceError::TooFewVertices);
        }
        let mut poly = polygon.to_vec();
        if polygon_area(&poly) < 0.0 {
            poly.reverse();
        }
        if !is_simple(&poly) {
            return Err(IfaceError::SelfIntersecting);
        }
        let perimeter: f64 = (0..poly.len()).map(|i| poly[i].distance(poly[(i + 1) % poly.len()])).sum();
        let scale = perimeter / poly.len() as f64 * SEED_JITTER;
        let mut rng = ChaCha8Rng::seed_from_u64(poly.len() as u64);
        for p in &mut poly {
            p.x += scale * rng.gen_range(-1.0..1.0);
            p.y += scale * rng.gen_range(-1.0..1.0);
        }
        for &p in &poly {
            let c = tri.walk(p, tri.last_cell()).ok_or(IfaceError::TouchesHull)?;
            let v = tri.cverts(c);
            let n = tri.cnbrs(c);
            for i in 0..3 {
                if n[i] == NONE && orient2d_value(tri.pos(v[(i + 1) % 3]), tri.pos(v[(i + 2) % 3]), p) <= 0.0 {
                    return Err(IfaceError::TouchesHull);
                }
            }
        }
        let omega = OmegaCache::new(&mut tri);
        let mut m = InterfaceMesh {
            tri,
            iface: Interface::default(),
            background: BackgroundList::default(),
            thresholds: super::Thresholds::from_lengths(1.0, 1.0, 1.0),
            projection,
            omega,
            last_epsilon: 0.0,
            material_interface: false,
            labeled: false,
        };
        let k = poly.len();
        for i in 0..k {
            let hint = m.tri.last_cell();
            m.clear_diametral(poly[i], poly[(i + 1) % k], hint)
                .map_err(|e| if e == IfaceError::BoundaryConflict { IfaceError::TouchesHull } else { e })?;
        }
        let mut slots = Vec::with_capacity(k);
        for &p in &poly {
            let hint = m.tri.last_cell();
            let s = m.insert_with_data(p, VertexKind::Interface, hint).map_err(|e| match e {
                IfaceError::Mesh(MeshError::OnHullBoundary | MeshError::OutsideHull) => IfaceError::TouchesHull,
                e => e,
            })?;
            slots.push(s);
        }
        m.iface = Interface::from_cycle(&slots);
        for i in 0..k {
            m.ensure_edge(slots[i], slots[(i + 1) % k], REPAIR_DEPTH)?;
        }
        m.thresholds = compute_thresholds(&m.tri, &m.iface)?;
        m.move_interface(&HashMap::new())?;
        m.phase_labels()?;
        m.omega.refresh(&mut m.tri);
        Ok(m)
    }

    /// Moves interface vertices to `targets`; vertices without an entry stay.
    pub fn move_interface(&mut self, targets: &HashMap<VertexId, Point2>) -> Result<MoveReport, IfaceError> {
        self.move_interface_with(targets, MoveOptions::default())
    }

    /// Moves every interface vertex to `f(position)`.
    pub fn move_interface_by(&mut self, f: impl Fn(Point2) -> Point2) -> Result<MoveReport, IfaceError> {
        let targets = self
            .iface
            .cycle()
            .into_iter()
            .map(|v| (self.tri.vid(v), f(self.tri.pos(v))))
            .collect();
        self.move_interface(&targets)
    }

    pub fn move_interface_with(
        &mut self,
        targets: &HashMap<VertexId, Point2>,
        options: MoveOptions,
    ) -> Result<MoveReport, IfaceError> {
        if self.iface.is_empty() {
            return Err(IfaceError::EmptyInterface);
        }
        let mut report = MoveReport::default();
        let cycle = self.iface.cycle();
        let mut tgt: HashMap<u32, Point2> = HashMap::with_capacity(cycle.len());
        for &v in &cycle {
            let p = match targets.get(&self.tri.vid(v)) {
                Some(&p) => p,
                None => self.tri.pos(v),
            };
            tgt.insert(v, p);
        }
        for id in targets.keys() {
            let i = self.tri.vertex_index(*id)?;
            if !self.iface.contains(i) {
                return Err(MeshError::UnknownVertex.into());
            }
        }

        // Validate before mutating.
        for &v in &cycle {
            let p = tgt[&v];
            if !p.is_finite() || !self.strictly_inside_hull(p, self.tri.vertex_cell(v)) {
                return Err(IfaceError::BoundaryConflict);
            }
        }
        self.omega.refresh(&mut self.tri);
        let omega = self.omega.min().unwrap_or(f64::INFINITY);
        report.omega = omega;
        if !options.skip_bound {
            for &v in &cycle {
                let distance = self.tri.pos(v).distance(tgt[&v]);
                if distance > 0.0 && !(distance < 0.5 * omega) {
                    return Err(IfaceError::MoveTooFar {
                        distance,
                        bound: 0.5 * omega,
                    });
                }
            }
        }

        let clock = Instant::now();
        if !options.skip_ensure {
            for &a in &cycle {
                let b = self.iface.next(a);
                let hint = self.tri.vertex_cell(a);
                report.removed_ensure += self.clear_diametral(tgt[&a], tgt[&b], hint)?;
            }
        }
        report.times.ensure = clock.elapsed();

        let clock = Instant::now();
        for &v in &cycle {
            let p = tgt[&v];
            if self.tri.pos(v) != p {
                self.move_with_data(v, p)?;
            }
        }
        if !options.skip_repair {
            for &a in &cycle {
                // Repair splices vertices after `a`, so walk to the original successor.
                let mut x = a;
                loop {
                    let y = self.iface.next(x);
                    report.repaired += self.ensure_edge(x, y, REPAIR_DEPTH)?;
                    x = self.iface.next(x);
                    if tgt.contains_key(&x) {
                        break;
                    }
                }
            }
        }
        report.times.moving = clock.elapsed();

        let clock = Instant::now();
        report.removed_coarse = self.coarse_bulk()?;
        report.times.coarse_bulk = clock.elapsed();

        let clock = Instant::now();
        report.reinserted = self.refine_bulk()?;
        report.times.refine_bulk = clock.elapsed();

        report.epsilon = self.chain_epsilon(&cycle, &tgt);
        self.last_epsilon = report.epsilon;
        self.omega.refresh(&mut self.tri);
        Ok(report)
    }

    fn strictly_inside_hull(&self, p: Point2, hint: u32) -> bool {
        let Some(c) = self.tri.walk(p, hint) else {
            return false;
        };
        let v = self.tri.cverts(c);
        let n = self.tri.cnbrs(c);
        (0..3).all(|i| n[i] != NONE || orient2d_value(self.tri.pos(v[(i + 1) % 3]), self.tri.pos(v[(i + 2) % 3]), p) > 0.0)
    }

    /// Removes bulk neighbors of interface vertices closer than Δx_min.
    fn coarse_bulk(&mut self) -> Result<usize, IfaceError> {
        let dx = self.thresholds.dx_min;
        let mut removed = 0;
        for v in self.iface.cycle() {
            let p = self.tri.pos(v);
            let close: Vec<u32> = self
                .tri
                .adjacent(v)
                .into_iter()
                .filter(|&w| self.tri.vkind(w) == VertexKind::Bulk && self.tri.pos(w).distance(p) < dx)
                .collect();
            for w in close {
                if self.tri.vertex_alive(w) && self.tri.vkind(w) == VertexKind::Bulk {
                    self.remove_bulk(w)?;
                    removed += 1;
                }
            }
        }
        Ok(removed)
    }

    /// Reinserts background positions outside every Gabriel circle and at
    /// least Δx_min from every interface vertex.
    fn refine_bulk(&mut self) -> Result<usize, IfaceError> {
        if self.background.points.is_empty() {
            return Ok(0);
        }
        let dx = self.thresholds.dx_min;
        let cycle = self.iface.cycle();
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut longest: f64 = 0.0;
        for &v in &cycle {
            let p = self.tri.pos(v);
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
            longest = longest.max(p.distance(self.tri.pos(self.iface.next(v))));
        }
        let domain = BBox { min: lo, max: hi }.expanded(longest + dx);
        let mut grid = BucketGrid::new(domain, longest.max(dx));
        for &v in &cycle {
            let (a, b) = (self.tri.pos(v), self.tri.pos(self.iface.next(v)));
            grid.insert(v, &BBox::of_segment(a, b).expanded(dx.max(0.5 * a.distance(b))));
        }

        let mut inserted = 0;
        let mut keep = Vec::new();
        let mut cand = Vec::new();
        let points = std::mem::take(&mut self.background.points);
        for p in points {
            grid.query(&BBox::around(p, 0.0), &mut cand);
            let blocked = cand.iter().any(|&v| {
                let (a, b) = (self.tri.pos(v), self.tri.pos(self.iface.next(v)));
                in_diametral_circle(a, b, p) || a.distance(p) < dx || b.distance(p) < dx
            });
            if blocked || self.cavity_cuts_interface(p) {
                keep.push(p);
                continue;
            }
            let hint = self.tri.last_cell();
            match self.insert_with_data(p, VertexKind::Bulk, hint) {
                Ok(_) => inserted += 1,
                Err(IfaceError::Mesh(MeshError::DuplicatePoint)) => {}
                Err(IfaceError::Mesh(MeshError::OutsideHull | MeshError::OnHullBoundary)) => keep.push(p),
                Err(e) => {
                    keep.extend(self.background.points.drain(..));
                    self.background.points = keep;
                    return Err(e);
                }
            }
        }
        keep.append(&mut self.background.points);
        self.background.points = keep;
        Ok(inserted)
    }

    /// Whether inserting `p` would destroy an interface edge.
    fn cavity_cuts_interface(&self, p: Point2) -> bool {
        let Ok(zone) = self.tri.conflict_zone(p) else {
            return true;
        };
        let cells: Vec<u32> = zone.iter().map(|c| c.index() as u32).collect();
        cells.iter().any(|&c| {
            let v = self.tri.cverts(c);
            let n = self.tri.cnbrs(c);
            (0..3).any(|i| cells.contains(&n[i]) && self.iface.is_edge(v[(i + 1) % 3], v[(i + 2) % 3]))
        })
    }

    /// Largest distance from the target vertices and edge midpoints to the
    /// remeshed chain between the same endpoints.
    fn chain_epsilon(&self, cycle: &[u32], tgt: &HashMap<u32, Point2>) -> f64 {
        let mut eps: f64 = 0.0;
        for (k, &a) in cycle.iter().enumerate() {
            let b = cycle[(k + 1) % cycle.len()];
            let (ta, tb) = (tgt[&a], tgt[&b]);
            let mut chain = vec![self.tri.pos(a)];
            let mut x = self.iface.next(a);
            while x != b && chain.len() <= self.iface.len() {
                chain.push(self.tri.pos(x));
                x = self.iface.next(x);
            }
            chain.push(self.tri.pos(b));
            if chain.len() == 2 && chain[0] == ta && chain[1] == tb {
                continue;
            }
            for s in [ta, ta.midpoint(tb), tb] {
                let d = chain
                    .windows(2)
                    .map(|w| point_segment_distance(s, w[0], w[1]).0)
                    .fold(f64::INFINITY, f64::min);
                eps = eps.max(d);
            }
        }
        eps
    }
}

/// Whether the closed polygon has no touching non-adjacent edges.
pub(crate) fn is_simple(poly: &[Point2]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let mut lo = poly[0];
    let mut hi = poly[0];
    let mut longest: f64 = 0.0;
    for i in 0..n {
        let p = poly[i];
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        longest = longest.max(p.distance(poly[(i + 1) % n]));
    }
    if !(longest > 0.0) {
        return false;
    }
    let mut grid = BucketGrid::new(BBox { min: lo, max: hi }, longest);
    for i in 0..n {
        grid.insert(i as u32, &BBox::of_segment(poly[i], poly[(i + 1) % n]));
    }
    let mut cand = Vec::new();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if a == b {
            return false;
        }
        grid.query(&BBox::of_segment(a, b), &mut cand);
        for &j in &cand {
            let j = j as usize;
            if j <= i || j == (i + 1) % n || (j + 1) % n == i {
                continue;
            }
            if segments_intersect_unchecked(a, b, poly[j], poly[(j + 1) % n]) {
                return false;
            }
        }
    }
    // Adjacent edges may only share their common vertex.
    (0..n).all(|i| {
        let (a, b, c) = (poly[i], poly[(i + 1) % n], poly[(i + 2) % n]);
        n == 3 || orient2d_value(a, b, c) != 0.0 || (a - b).dot(c - b) < 0.0
    })
}
