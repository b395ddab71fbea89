use super::SimError;
use crate::dmesh::Triangulation;
use crate::geom::Point2;
use crate::iface::Interface;

/// Face list for the first-order upwind scheme.
#[derive(Clone, Debug, Default)]
pub struct Faces {
    /// Cell slot on the left of the directed edge `a -> b`.
    left: Vec<u32>,
    /// Cell slot on the right, or `u32::MAX` on the hull and on interface
    /// walls.
    right: Vec<u32>,
    /// One side of an interface edge.
    wall: Vec<bool>,
    /// Edge normal (pointing from left to right) scaled by the edge length.
    normal: Vec<Point2>,
    mid: Vec<Point2>,
}

impl Faces {
    /// All edges of `t`. Edges of `walls` are split into two one-sided faces
    /// that see only their own cell's value, so nothing crosses them.
    pub(crate) fn collect(t: &Triangulation, walls: Option<&Interface>) -> Self {
        let mut f = Faces::default();
        for (a, b, l, r) in t.raw_edges_with_cells() {
            let (pa, pb) = (t.pos(a), t.pos(b));
            // Cell `l` lists the edge as a -> b, so it lies on the left.
            let d = pb - pa;
            let n = Point2::new(d.y, -d.x);
            let mid = pa.midpoint(pb);
            if r != u32::MAX && walls.is_some_and(|g| g.is_edge(a, b)) {
                f.push(l, u32::MAX, n, mid, true);
                f.push(r, u32::MAX, Point2::new(-n.x, -n.y), mid, true);
            } else {
                f.push(l, r, n, mid, false);
            }
        }
        f
    }

    fn push(&mut self, l: u32, r: u32, normal: Point2, mid: Point2, wall: bool) {
        self.left.push(l);
        self.right.push(r);
        self.normal.push(normal);
        self.mid.push(mid);
        self.wall.push(wall);
    }

    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }
}

/// Largest local Courant number dt·Σ max(0, a·n)|e| / |C| over all cells.
pub(crate) fn courant(t: &Triangulation, faces: &Faces, dt: f64, velocity: impl Fn(Point2) -> Point2) -> f64 {
    let mut out = vec![0.0f64; t.cell_slots()];
    for k in 0..faces.len() {
        let q = velocity(faces.mid[k]).dot(faces.normal[k]);
        out[faces.left[k] as usize] += q.max(0.0);
        if faces.right[k] != u32::MAX {
            out[faces.right[k] as usize] += (-q).max(0.0);
        }
    }
    t.raw_cells().map(|c| dt * out[c as usize] / t.area(c)).fold(0.0, f64::max)
}

/// One upwind step for ∂u/∂t + ∇·(a u) = 0 on the first data component.
/// Hull edges and walls use the cell's own value on both sides. Returns the
/// mass that left through the hull, by phase tag of the cell it left.
pub(crate) fn upwind_step(
    t: &mut Triangulation,
    faces: &Faces,
    dt: f64,
    velocity: impl Fn(Point2) -> Point2,
) -> Result<[f64; 3], SimError> {
    let cfl = courant(t, faces, dt, &velocity);
    if !(cfl <= 1.0) {
        return Err(SimError::Cfl(cfl));
    }
    let dim = t.data_dim();
    let mut delta = vec![0.0f64; t.cell_slots()];
    let mut outflow = [0.0; 3];
    for k in 0..faces.len() {
        let (l, r) = (faces.left[k], faces.right[k]);
        let q = velocity(faces.mid[k]).dot(faces.normal[k]);
        let ul = t.raw_data(l)[0];
        if r == u32::MAX {
            let flux = q * ul;
            delta[l as usize] -= flux;
            if !faces.wall[k] {
                outflow[usize::from(t.raw_tag(l)).min(2)] += flux;
            }
            continue;
        }
        let ur = t.raw_data(r)[0];
        let flux = if q >= 0.0 { q * ul } else { q * ur };
        delta[l as usize] -= flux;
        delta[r as usize] += flux;
    }
    debug_assert!(dim >= 1);
    let cells: Vec<u32> = t.raw_cells().collect();
    for c in cells {
        let a = t.area(c);
        t.raw_data_mut(c)[0] += dt * delta[c as usize] / a;
    }
    Ok(outflow.map(|o| dt * o))
}
