//! Legacy ASCII VTK output.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::dmesh::{Triangulation, NONE};
use crate::iface::{Interface, InterfaceMesh};

/// Unstructured grid of triangles with cell arrays `u` (first data
/// component), `phase` and `is_interface_edge` (cells touching the interface
/// along an edge).
pub fn write_mesh<W: Write>(t: &Triangulation, iface: Option<&Interface>, title: &str, w: &mut W) -> io::Result<()> {
    let mut index = vec![NONE; t.vertex_slots()];
    let verts: Vec<u32> = t.raw_vertices().collect();
    for (k, &v) in verts.iter().enumerate() {
        index[v as usize] = k as u32;
    }
    let cells: Vec<u32> = t.raw_cells().collect();
    writeln!(w, "# vtk DataFile Version 4.2")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", verts.len())?;
    for &v in &verts {
        let p = t.pos(v);
        writeln!(w, "{} {} 0", p.x, p.y)?;
    }
    writeln!(w, "CELLS {} {}", cells.len(), 4 * cells.len())?;
    for &c in &cells {
        let [a, b, d] = t.cverts(c).map(|v| index[v as usize]);
        writeln!(w, "3 {a} {b} {d}")?;
    }
    writeln!(w, "CELL_TYPES {}", cells.len())?;
    for _ in &cells {
        writeln!(w, "5")?;
    }
    writeln!(w, "CELL_DATA {}", cells.len())?;
    writeln!(w, "SCALARS u double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for &c in &cells {
        let u = t.raw_data(c).first().copied().unwrap_or(0.0);
        writeln!(w, "{u}")?;
    }
    writeln!(w, "SCALARS phase int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for &c in &cells {
        writeln!(w, "{}", t.raw_tag(c))?;
    }
    writeln!(w, "SCALARS is_interface_edge int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for &c in &cells {
        let v = t.cverts(c);
        let on = iface.is_some_and(|g| (0..3).any(|i| g.is_edge(v[i], v[(i + 1) % 3])));
        writeln!(w, "{}", u8::from(on))?;
    }
    Ok(())
}

/// Closed polyline through the interface vertices.
pub fn write_interface<W: Write>(t: &Triangulation, iface: &Interface, title: &str, w: &mut W) -> io::Result<()> {
    let poly = iface.polygon(t);
    writeln!(w, "# vtk DataFile Version 4.2")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET POLYDATA")?;
    writeln!(w, "POINTS {} double", poly.len())?;
    for p in &poly {
        writeln!(w, "{} {} 0", p.x, p.y)?;
    }
    writeln!(w, "LINES 1 {}", poly.len() + 2)?;
    write!(w, "{}", poly.len() + 1)?;
    for k in 0..poly.len() {
        write!(w, " {k}")?;
    }
    writeln!(w, " 0")?;
    Ok(())
}

/// Writes `snap_{step:06}.vtk` and `iface_{step:06}.vtk` into `dir`.
pub fn write_snapshot(m: &InterfaceMesh, dir: &Path, step: u64, t: f64) -> io::Result<()> {
    let title = format!("ipmm t={t}");
    let mut f = BufWriter::new(File::create(dir.join(format!("snap_{step:06}.vtk")))?);
    write_mesh(&m.tri, Some(&m.iface), &title, &mut f)?;
    f.flush()?;
    let mut f = BufWriter::new(File::create(dir.join(format!("iface_{step:06}.vtk")))?);
    write_interface(&m.tri, &m.iface, &title, &mut f)?;
    f.flush()
}
