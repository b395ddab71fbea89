//! Initial meshes on axis-aligned boxes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dmesh::{MeshError, Triangulation, VertexKind};
use crate::geom::Point2;
use crate::grid::BBox;

/// Interior jitter relative to the lattice spacing.
const JITTER: f64 = 1e-6;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum MeshgenError {
    #[error("dx {dx} must be positive and at most a quarter of the smallest box extent")]
    SpacingTooLarge { dx: f64 },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Points of a hexagonal lattice with spacing at most `dx` filling `domain`,
/// plus boundary points on the box edges. Interior points get a
/// deterministic jitter of relative size 1e-6.
pub fn lattice_points(domain: BBox, dx: f64, seed: u64) -> Result<Vec<Point2>, MeshgenError> {
    let (w, h) = (domain.max.x - domain.min.x, domain.max.y - domain.min.y);
    if !(dx > 0.0) || !(dx <= w.min(h) / 4.0) {
        return Err(MeshgenError::SpacingTooLarge { dx });
    }
    let nx = (w / dx).ceil() as usize;
    // An even row count staggers the rows next to both horizontal edges.
    let ny = (h / (dx * 3f64.sqrt() / 2.0)).ceil() as usize;
    let ny = ny + ny % 2;
    let (sx, sy) = (w / nx as f64, h / ny as f64);
    let (x0, y0) = (domain.min.x, domain.min.y);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity((nx + 1) * (ny + 1));
    for i in 0..=nx {
        let x = if i == nx { domain.max.x } else { x0 + i as f64 * sx };
        pts.push(Point2::new(x, y0));
        pts.push(Point2::new(x, domain.max.y));
    }
    for j in 1..ny {
        let y = y0 + j as f64 * sy;
        pts.push(Point2::new(x0, y));
        pts.push(Point2::new(domain.max.x, y));
        let odd = j % 2 == 1;
        let count = if odd { nx } else { nx - 1 };
        for i in 0..count {
            let x = if odd { x0 + (i as f64 + 0.5) * sx } else { x0 + (i + 1) as f64 * sx };
            let jx = JITTER * dx * rng.gen_range(-1.0..1.0);
            let jy = JITTER * dx * rng.gen_range(-1.0..1.0);
            pts.push(Point2::new(x + jx, y + jy));
        }
    }
    Ok(pts)
}

/// Delaunay mesh of [`lattice_points`] with `dim` data values per cell.
pub fn generate_initial_mesh(domain: BBox, dx: f64, seed: u64, dim: usize) -> Result<Triangulation, MeshgenError> {
    let pts: Vec<(Point2, VertexKind)> = lattice_points(domain, dx, seed)?
        .into_iter()
        .map(|p| (p, VertexKind::Bulk))
        .collect();
    Ok(Triangulation::build(&pts, dim)?)
}
