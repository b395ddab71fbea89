//! Bowyer–Watson construction with ghost cells.
//!
//! During construction every hull edge `(x, y)` is closed off by a ghost cell
//! `[y, x, GHOST]`, so points outside the current hull are inserted by the
//! same cavity procedure as interior points. Ghosts are stripped at the end.

use std::collections::HashMap;
use std::sync::atomic::AtomicU32;

use super::{CellSlot, MeshError, Triangulation, VertexKind, VertexSlot, NONE};
use crate::geom::{in_circle_value, orient2d_value, Point2};

const GHOST: u32 = u32::MAX - 1;

struct Builder<'a> {
    pts: &'a [Point2],
    v: Vec<[u32; 3]>,
    n: Vec<[u32; 3]>,
    alive: Vec<bool>,
    mark: Vec<u32>,
    epoch: u32,
    free: Vec<u32>,
    last: u32,
}

impl<'a> Builder<'a> {
    fn is_ghost(&self, c: u32) -> bool {
        self.v[c as usize][2] == GHOST
    }

    fn alloc(&mut self, v: [u32; 3], n: [u32; 3]) -> u32 {
        if let Some(c) = self.free.pop() {
            self.v[c as usize] = v;
            self.n[c as usize] = n;
            self.alive[c as usize] = true;
            c
        } else {
            self.v.push(v);
            self.n.push(n);
            self.alive.push(true);
            self.mark.push(0);
            (self.v.len() - 1) as u32
        }
    }

    fn in_conflict(&self, c: u32, p: Point2) -> bool {
        let [a, b, g] = self.v[c as usize];
        let pa = self.pts[a as usize];
        let pb = self.pts[b as usize];
        if g == GHOST {
            let o = orient2d_value(pa, pb, p);
            o > 0.0
                || (o == 0.0
                    && p.x >= pa.x.min(pb.x)
                    && p.x <= pa.x.max(pb.x)
                    && p.y >= pa.y.min(pb.y)
                    && p.y <= pa.y.max(pb.y))
        } else {
            in_circle_value(pa, pb, self.pts[g as usize], p) >= 0.0
        }
    }

    /// A cell in conflict with `p`, found by walking real cells from `last`.
    fn find_conflict(&self, p: Point2) -> u32 {
        let mut c = self.last;
        let limit = 4 * self.v.len() + 16;
        for step in 0..limit {
            let cv = self.v[c as usize];
            let mut moved = false;
            for k in 0..3 {
                let i = (k + step) % 3;
                let a = self.pts[cv[(i + 1) % 3] as usize];
                let b = self.pts[cv[(i + 2) % 3] as usize];
                if orient2d_value(a, b, p) < 0.0 {
                    c = self.n[c as usize][i];
                    moved = true;
                    break;
                }
            }
            if !moved || self.is_ghost(c) {
                return c;
            }
        }
        (0..self.v.len() as u32)
            .find(|&c| self.alive[c as usize] && self.in_conflict(c, p))
            .expect("some cell conflicts with every new point")
    }

    fn insert(&mut self, pv: u32) {
        let p = self.pts[pv as usize];
        let start = self.find_conflict(p);
        self.epoch += 1;
        let epoch = self.epoch;
        let mut cavity = vec![start];
        self.mark[start as usize] = epoch;
        let mut k = 0;
        while k < cavity.len() {
            let c = cavity[k];
            k += 1;
            for i in 0..3 {
                let nb = self.n[c as usize][i];
                if self.mark[nb as usize] == epoch {
                    continue;
                }
                if self.in_conflict(nb, p) {
                    self.mark[nb as usize] = epoch;
                    cavity.push(nb);
                }
            }
        }

        // Boundary edges (a, b) with the outer cell and its back-pointer slot.
        let mut boundary = Vec::with_capacity(cavity.len() + 2);
        for &c in &cavity {
            let cv = self.v[c as usize];
            for i in 0..3 {
                let nb = self.n[c as usize][i];
                if self.mark[nb as usize] != epoch {
                    let j = (0..3).find(|&j| self.n[nb as usize][j] == c).unwrap();
                    boundary.push((cv[(i + 1) % 3], cv[(i + 2) % 3], nb, j));
                }
            }
        }
        for &c in &cavity {
            self.alive[c as usize] = false;
            self.free.push(c);
        }
        let ids: Vec<u32> = boundary
            .iter()
            .map(|_| self.alloc([NONE; 3], [NONE; 3]))
            .collect();
        let by_start: HashMap<u32, u32> = boundary
            .iter()
            .zip(&ids)
            .map(|(&(a, _, _, _), &c)| (a, c))
            .collect();
        let by_end: HashMap<u32, u32> = boundary
            .iter()
            .zip(&ids)
            .map(|(&(_, b, _, _), &c)| (b, c))
            .collect();
        for (&(a, b, outer, j), &c) in boundary.iter().zip(&ids) {
            let mut v = [a, b, pv];
            let mut n = [by_start[&b], by_end[&a], outer];
            if a == GHOST {
                v = [v[1], v[2], v[0]];
                n = [n[1], n[2], n[0]];
            } else if b == GHOST {
                v = [v[2], v[0], v[1]];
                n = [n[2], n[0], n[1]];
            } else {
                self.last = c;
            }
            self.v[c as usize] = v;
            self.n[c as usize] = n;
            self.n[outer as usize][j] = c;
        }
    }
}

impl Triangulation {
    /// Delaunay triangulation of the given points with `dim` data values per
    /// cell. Hull vertices are marked [`VertexKind::Boundary`].
    pub fn build(points: &[(Point2, VertexKind)], dim: usize) -> Result<Self, MeshError> {
        if points.len() < 3 {
            return Err(MeshError::TooFewPoints);
        }
        if points.iter().any(|(p, _)| !p.is_finite()) {
            return Err(MeshError::NonFinite);
        }
        let pts: Vec<Point2> = points.iter().map(|&(p, _)| p).collect();
        let mut order: Vec<u32> = (0..pts.len() as u32).collect();
        order.sort_by(|&i, &j| {
            let (a, b) = (pts[i as usize], pts[j as usize]);
            a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y))
        });
        if order.windows(2).any(|w| pts[w[0] as usize] == pts[w[1] as usize]) {
            return Err(MeshError::DuplicatePoint);
        }
        let (p0, p1) = (order[0], order[1]);
        let k = (2..order.len())
            .find(|&k| orient2d_value(pts[p0 as usize], pts[p1 as usize], pts[order[k] as usize]) != 0.0)
            .ok_or(MeshError::AllCollinear)?;
        let p2 = order[k];

        let mut b = Builder {
            pts: &pts,
            v: Vec::new(),
            n: Vec::new(),
            alive: Vec::new(),
            mark: Vec::new(),
            epoch: 0,
            free: Vec::new(),
            last: 0,
        };
        let [x, y, z] = if orient2d_value(pts[p0 as usize], pts[p1 as usize], pts[p2 as usize]) > 0.0 {
            [p0, p1, p2]
        } else {
            [p0, p2, p1]
        };
        // Real cell 0 and ghosts across its edges (y,z), (z,x), (x,y).
        b.alloc([x, y, z], [1, 2, 3]);
        b.alloc([z, y, GHOST], [3, 2, 0]);
        b.alloc([x, z, GHOST], [1, 3, 0]);
        b.alloc([y, x, GHOST], [2, 1, 0]);

        for (pos, &pv) in order.iter().enumerate() {
            if pos == 0 || pos == 1 || pos == k {
                continue;
            }
            b.insert(pv);
        }

        // Compact real cells, dropping ghosts.
        let mut remap = vec![NONE; b.v.len()];
        let mut count = 0u32;
        for c in 0..b.v.len() {
            if b.alive[c] && b.v[c][2] != GHOST {
                remap[c] = count;
                count += 1;
            }
        }
        let mut kinds: Vec<VertexKind> = points.iter().map(|&(_, k)| k).collect();
        let mut cells = Vec::with_capacity(count as usize);
        for c in 0..b.v.len() {
            if remap[c] == NONE {
                if b.alive[c] {
                    let [gx, gy, _] = b.v[c];
                    kinds[gx as usize] = VertexKind::Boundary;
                    kinds[gy as usize] = VertexKind::Boundary;
                }
                continue;
            }
            cells.push(CellSlot {
                v: b.v[c],
                n: b.n[c].map(|nb| remap[nb as usize]),
                generation: 0,
                alive: true,
            });
        }
        let mut verts: Vec<VertexSlot> = pts
            .iter()
            .zip(kinds)
            .map(|(&pos, kind)| VertexSlot {
                pos,
                kind,
                generation: 0,
                alive: true,
                cell: NONE,
            })
            .collect();
        let mut hull_area = 0.0;
        for (c, s) in cells.iter().enumerate() {
            for &v in &s.v {
                verts[v as usize].cell = c as u32;
            }
            let [a, bb, cc] = s.v.map(|v| pts[v as usize]);
            hull_area += crate::geom::triangle_area(a, bb, cc);
        }
        let ncells = cells.len();
        Ok(Triangulation {
            live_vertices: verts.len(),
            verts,
            free_verts: Vec::new(),
            cells,
            free_cells: Vec::new(),
            data: vec![0.0; ncells * dim],
            tags: vec![0; ncells],
            dim,
            hull_area,
            live_cells: ncells,
            last: AtomicU32::new(0),
            marks: vec![0; ncells],
            epoch: 0,
            track_touched: false,
            touched: Vec::new(),
        })
    }
}
