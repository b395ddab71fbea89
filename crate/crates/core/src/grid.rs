//! Uniform bucket grid over axis-aligned boxes.

use crate::geom::Point2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox {
    pub min: Point2,
    pub max: Point2,
}

impl BBox {
    pub fn of_segment(a: Point2, b: Point2) -> Self {
        Self {
            min: Point2::new(a.x.min(b.x), a.y.min(b.y)),
            max: Point2::new(a.x.max(b.x), a.y.max(b.y)),
        }
    }

    pub fn around(p: Point2, r: f64) -> Self {
        Self {
            min: Point2::new(p.x - r, p.y - r),
            max: Point2::new(p.x + r, p.y + r),
        }
    }

    pub fn expanded(self, r: f64) -> Self {
        Self {
            min: Point2::new(self.min.x - r, self.min.y - r),
            max: Point2::new(self.max.x + r, self.max.y + r),
        }
    }
}

/// Items are registered in every bucket their box overlaps; queries return
/// each candidate id once.
#[derive(Clone, Debug)]
pub struct BucketGrid {
    origin: Point2,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
    stamp: Vec<u32>,
    epoch: u32,
}

impl BucketGrid {
    /// Grid covering `domain` with roughly square buckets of size `cell`.
    pub fn new(domain: BBox, cell: f64) -> Self {
        let w = (domain.max.x - domain.min.x).max(cell);
        let h = (domain.max.y - domain.min.y).max(cell);
        // Cap the bucket count for tiny cells on large domains.
        let cell = cell.max((w * h / 4.0e6).sqrt());
        let nx = ((w / cell).ceil() as usize).max(1);
        let ny = ((h / cell).ceil() as usize).max(1);
        Self {
            origin: domain.min,
            cell,
            nx,
            ny,
            buckets: vec![Vec::new(); nx * ny],
            stamp: Vec::new(),
            epoch: 0,
        }
    }

    fn range(&self, b: &BBox) -> (usize, usize, usize, usize) {
        let clamp = |v: f64, n: usize| -> usize {
            if v <= 0.0 {
                0
            } else {
                (v as usize).min(n - 1)
            }
        };
        (
            clamp((b.min.x - self.origin.x) / self.cell, self.nx),
            clamp((b.min.y - self.origin.y) / self.cell, self.ny),
            clamp((b.max.x - self.origin.x) / self.cell, self.nx),
            clamp((b.max.y - self.origin.y) / self.cell, self.ny),
        )
    }

    pub fn insert(&mut self, id: u32, b: &BBox) {
        let (x0, y0, x1, y1) = self.range(b);
        for j in y0..=y1 {
            for i in x0..=x1 {
                self.buckets[j * self.nx + i].push(id);
            }
        }
        if id as usize >= self.stamp.len() {
            self.stamp.resize(id as usize + 1, 0);
        }
    }

    pub fn clear(&mut self) {
        for b in &mut self.buckets {
            b.clear();
        }
    }

    /// Ids whose registered boxes may overlap `b`.
    pub fn query(&mut self, b: &BBox, out: &mut Vec<u32>) {
        out.clear();
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
        let (x0, y0, x1, y1) = self.range(b);
        for j in y0..=y1 {
            for i in x0..=x1 {
                for &id in &self.buckets[j * self.nx + i] {
                    let s = &mut self.stamp[id as usize];
                    if *s != self.epoch {
                        *s = self.epoch;
                        out.push(id);
                    }
                }
            }
        }
    }
}
