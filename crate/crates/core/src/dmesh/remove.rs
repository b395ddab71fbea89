use super::{MeshError, Removal, Triangulation, VertexId, VertexKind, NONE};
use crate::dmesh::CellId;
use crate::geom::{in_circle_value, orient2d_value};
use crate::mmesh::Stencil;

impl Triangulation {
    /// Removes an interior vertex and retriangulates its hole.
    pub fn remove(&mut self, v: VertexId) -> Result<Removal, MeshError> {
        let i = self.vertex_index(v)?;
        self.remove_impl(i, false, None)
    }

    pub(crate) fn remove_impl(
        &mut self,
        v: u32,
        keep_slot: bool,
        capture: Option<&mut Stencil>,
    ) -> Result<Removal, MeshError> {
        if self.vkind(v) == VertexKind::Boundary {
            return Err(MeshError::BoundaryVertex);
        }
        // Link polygon (ccw) and the cell beyond each link edge.
        let start = self.vertex_cell(v);
        let mut ring = Vec::with_capacity(8);
        let mut poly = Vec::with_capacity(8);
        let mut outer = Vec::with_capacity(8);
        let mut c = start;
        loop {
            let i = self.index_in_cell(c, v);
            let cv = self.cverts(c);
            let cn = self.cnbrs(c);
            ring.push(c);
            poly.push(cv[(i + 1) % 3]);
            outer.push(cn[i]);
            let next = cn[(i + 1) % 3];
            if next == NONE {
                return Err(MeshError::BoundaryVertex);
            }
            if next == start {
                break;
            }
            c = next;
            if ring.len() > self.num_cells() {
                return Err(MeshError::Retriangulation);
            }
        }

        if let Some(st) = capture {
            for &x in &ring {
                self.snapshot_into(x, st);
            }
        }
        let destroyed: Vec<CellId> = ring.iter().map(|&x| self.cid(x)).collect();
        let triangles = ear_clip(self, &poly)?;
        for &x in &ring {
            self.free_cell(x);
        }
        self.free_vertex(v, keep_slot);

        // edge_nb[k]: cell beyond polygon edge (poly[k], poly[k+1]) in the
        // current, shrinking polygon.
        let mut live: Vec<usize> = (0..poly.len()).collect();
        let mut edge_nb = outer;
        let mut created = Vec::with_capacity(poly.len().saturating_sub(2));
        for &(ia, ib, ic) in &triangles {
            let (a, b, cc) = (poly[ia], poly[ib], poly[ic]);
            let j = live.iter().position(|&x| x == ib).unwrap();
            let m = live.len();
            let jp = (j + m - 1) % m;
            let nb_bc = edge_nb[j];
            let nb_ab = edge_nb[jp];
            let nb_ca = if m == 3 { edge_nb[(j + 1) % m] } else { NONE };
            let cell = self.alloc_cell([a, b, cc], [nb_bc, nb_ca, nb_ab]);
            if nb_bc != NONE {
                self.set_neighbor_on_edge(nb_bc, cc, b, cell);
            }
            if nb_ab != NONE {
                self.set_neighbor_on_edge(nb_ab, b, a, cell);
            }
            if nb_ca != NONE {
                self.set_neighbor_on_edge(nb_ca, a, cc, cell);
            }
            for w in [a, b, cc] {
                self.verts[w as usize].cell = cell;
            }
            created.push(self.cid(cell));
            live.remove(j);
            edge_nb.remove(j);
            let jp = if j == 0 { live.len() - 1 } else { j - 1 };
            edge_nb[jp] = cell;
        }
        for &w in &poly {
            self.touch(w);
        }
        self.touch(v);
        if let Some(c) = created.first() {
            self.set_last(c.index() as u32);
        }
        Ok(Removal { created, destroyed })
    }
}

/// Delaunay ear clipping of a star-shaped hole. Returns triangles as index
/// triples into `poly`, each counterclockwise with the clipped ear in the
/// middle position.
fn ear_clip(t: &Triangulation, poly: &[u32]) -> Result<Vec<(usize, usize, usize)>, MeshError> {
    let pts: Vec<_> = poly.iter().map(|&w| t.pos(w)).collect();
    let mut live: Vec<usize> = (0..poly.len()).collect();
    let mut out = Vec::with_capacity(poly.len().saturating_sub(2));
    while live.len() > 3 {
        let m = live.len();
        let mut found = None;
        'ears: for j in 0..m {
            let ia = live[(j + m - 1) % m];
            let ib = live[j];
            let ic = live[(j + 1) % m];
            let (a, b, c) = (pts[ia], pts[ib], pts[ic]);
            if orient2d_value(a, b, c) <= 0.0 {
                continue;
            }
            for &id in &live {
                if id != ia && id != ib && id != ic && in_circle_value(a, b, c, pts[id]) > 0.0 {
                    continue 'ears;
                }
            }
            found = Some((ia, ib, ic, j));
            break;
        }
        let (ia, ib, ic, j) = found.ok_or(MeshError::Retriangulation)?;
        out.push((ia, ib, ic));
        live.remove(j);
    }
    if live.len() == 3 {
        out.push((live[0], live[1], live[2]));
    }
    Ok(out)
}
