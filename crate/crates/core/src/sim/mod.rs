//! Time stepping for the benchmarks and the finite-volume solvers.

mod exact;
mod fv;
mod setup;

use std::collections::HashMap;
use std::f64::consts::PI;
use web_time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dmesh::Triangulation;
use crate::geom::Point2;
use crate::iface::{IfaceError, InterfaceMesh, INSIDE};
use crate::meshgen::{generate_initial_mesh, MeshgenError};
use crate::mmesh::ProjectionKind;

pub use exact::{clip_to_rect, indicator_l1_error, polygon_disk_area, set_indicator_averages};
pub use fv::Faces;
pub use setup::{circle_polygon, sliced_disk_contains, sliced_disk_polygon, Benchmark};

/// Most halvings of the step when an interface move is too far.
pub const MAX_HALVINGS: u32 = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Iface(#[from] IfaceError),
    #[error(transparent)]
    Meshgen(#[from] MeshgenError),
    #[error("Courant number {0} exceeds 1")]
    Cfl(f64),
    #[error("validation failed at step {step}: {what}")]
    Validation { step: u64, what: String },
    #[error("simulation already reached its end time")]
    Finished,
}

/// Prescribed velocity fields.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MotionField {
    Zero,
    Star2d,
    /// Single vortex, reversed at half time so the shape returns at `t_end`.
    Vortex2d { t_end: f64 },
    /// Rigid rotation about the origin.
    Circadv,
}

impl MotionField {
    pub fn velocity(&self, t: f64, p: Point2) -> Point2 {
        match *self {
            MotionField::Zero => Point2::new(0.0, 0.0),
            MotionField::Star2d => {
                let s = -(2.0 * PI * t).sin() * (2.0 * t.ceil() * p.y.atan2(p.x)).cos();
                p * s
            }
            MotionField::Vortex2d { t_end } => {
                let f = (PI * t / t_end).cos();
                let (sx, cx) = (PI * p.x).sin_cos();
                let (sy, cy) = (PI * p.y).sin_cos();
                Point2::new(-2.0 * sx * sx * sy * cy, 2.0 * sy * sy * sx * cx) * f
            }
            MotionField::Circadv => Point2::new(-p.y, p.x),
        }
    }
}

/// Step counter with t = t0 + k·dt.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeStepper {
    pub t0: f64,
    pub dt: f64,
    pub t_end: f64,
    pub k: u64,
}

impl TimeStepper {
    pub fn new(t0: f64, dt: f64, t_end: f64) -> Self {
        Self { t0, dt, t_end, k: 0 }
    }

    pub fn t(&self) -> f64 {
        self.t0 + self.k as f64 * self.dt
    }

    pub fn total_steps(&self) -> u64 {
        ((self.t_end - self.t0) / self.dt - 1e-9).ceil().max(0.0) as u64
    }

    pub fn finished(&self) -> bool {
        self.k >= self.total_steps()
    }

    /// Length of the next step, clipped to the end time.
    pub fn step_length(&self) -> f64 {
        (self.t_end - self.t()).min(self.dt)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ValidationMode {
    #[default]
    Off,
    /// Every 100 steps.
    Sparse,
    EveryStep,
}

/// Wall-clock seconds per phase of one step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepTimes {
    pub ensure: f64,
    pub moving: f64,
    pub coarse_bulk: f64,
    pub refine_bulk: f64,
    pub refine_interface: f64,
    pub coarsen_interface: f64,
    pub fv: f64,
}

impl StepTimes {
    pub fn remeshing(&self) -> f64 {
        self.ensure + self.moving + self.coarse_bulk + self.refine_bulk + self.refine_interface + self.coarsen_interface
    }

    pub fn add(&mut self, o: &StepTimes) {
        self.ensure += o.ensure;
        self.moving += o.moving;
        self.coarse_bulk += o.coarse_bulk;
        self.refine_bulk += o.refine_bulk;
        self.refine_interface += o.refine_interface;
        self.coarsen_interface += o.coarsen_interface;
        self.fv += o.fv;
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub step: u64,
    pub t: f64,
    pub cells: usize,
    pub interface_vertices: usize,
    pub times: StepTimes,
    pub length: f64,
    pub area: f64,
    pub epsilon: f64,
    /// Interface moves the step was split into.
    pub substeps: u32,
    /// |Δ mass| caused by remeshing in this step.
    pub remesh_mass_change: f64,
    /// Σ |Δ mass| of the per-phase restoration (IPMM-FV only).
    pub phase_mass_fix: f64,
    pub l1: Option<f64>,
}

/// Mesh, interface and motion field advanced in time.
#[derive(Clone, Debug)]
pub struct SimulationState {
    pub mesh: InterfaceMesh,
    pub field: MotionField,
    pub stepper: TimeStepper,
    pub validation: ValidationMode,
    /// Initial Σ u|C|.
    pub mass0: f64,
    /// Accumulated |Δ mass| not accounted for by hull outflow.
    pub mass_drift: f64,
    /// Mass that left through the hull in FV updates.
    pub boundary_outflow: f64,
}

impl SimulationState {
    /// Builds the lattice mesh, seeds the benchmark interface with spacing
    /// `dx` and sets indicator data (1 inside, 0 outside).
    pub fn new(
        benchmark: Benchmark,
        dx: f64,
        dt: f64,
        t_end: f64,
        projection: ProjectionKind,
        seed: u64,
    ) -> Result<Self, SimError> {
        let tri = generate_initial_mesh(benchmark.domain(), dx, seed, 1)?;
        let poly = benchmark.initial_polygon(dx);
        let mesh = InterfaceMesh::seed(tri, &poly, projection)?;
        Ok(Self::from_mesh(mesh, benchmark.field(t_end), TimeStepper::new(0.0, dt, t_end)))
    }

    pub fn from_mesh(mut mesh: InterfaceMesh, field: MotionField, stepper: TimeStepper) -> Self {
        set_indicator(&mut mesh.tri);
        let mass0 = mesh.tri.total_mass()[0];
        Self {
            mesh,
            field,
            stepper,
            validation: ValidationMode::Off,
            mass0,
            mass_drift: 0.0,
            boundary_outflow: 0.0,
        }
    }

    pub fn t(&self) -> f64 {
        self.stepper.t()
    }

    /// Relative mass drift so far.
    pub fn relative_drift(&self) -> f64 {
        if self.mass0 == 0.0 {
            self.mass_drift
        } else {
            self.mass_drift / self.mass0.abs()
        }
    }

    /// Moves the interface by forward Euler over `[t, t + h]`, splitting the
    /// interval while the move is too far.
    fn advance_interface(&mut self, t: f64, h: f64, depth: u32, m: &mut StepMetrics) -> Result<(), SimError> {
        let field = self.field;
        let targets: HashMap<_, _> = self
            .mesh
            .interface_vertices()
            .into_iter()
            .map(|v| {
                let p = self.mesh.tri.position(v).expect("live interface vertex");
                (v, p + field.velocity(t, p) * h)
            })
            .collect();
        match self.mesh.move_interface(&targets) {
            Ok(r) => {
                m.substeps += 1;
                m.epsilon = m.epsilon.max(r.epsilon);
                m.times.ensure += r.times.ensure.as_secs_f64();
                m.times.moving += r.times.moving.as_secs_f64();
                m.times.coarse_bulk += r.times.coarse_bulk.as_secs_f64();
                m.times.refine_bulk += r.times.refine_bulk.as_secs_f64();
                Ok(())
            }
            Err(IfaceError::MoveTooFar { distance, bound }) if depth < MAX_HALVINGS => {
                log::debug!("move of {distance} exceeds {bound} at t = {t}; halving");
                self.advance_interface(t, 0.5 * h, depth + 1, m)?;
                self.advance_interface(t + 0.5 * h, 0.5 * h, depth + 1, m)
            }
            Err(e) => Err(e.into()),
        }
    }

    /// Interface move plus interface refinement and coarsening, with mass
    /// bookkeeping.
    fn remesh_step(&mut self, m: &mut StepMetrics) -> Result<(), SimError> {
        let before = self.mesh.tri.total_mass()[0];
        let (t, h) = (self.t(), self.stepper.step_length());
        self.advance_interface(t, h, 0, m)?;
        let clock = Instant::now();
        self.mesh.refine_interface()?;
        m.times.refine_interface = clock.elapsed().as_secs_f64();
        let clock = Instant::now();
        self.mesh.coarsen_interface()?;
        m.times.coarsen_interface = clock.elapsed().as_secs_f64();
        m.remesh_mass_change = (self.mesh.tri.total_mass()[0] - before).abs();
        Ok(())
    }

    fn finish_step(&mut self, mut m: StepMetrics) -> Result<StepMetrics, SimError> {
        self.stepper.k += 1;
        let meas = self.mesh.interface_measures();
        m.step = self.stepper.k;
        m.t = self.t();
        m.cells = self.mesh.tri.num_cells();
        m.interface_vertices = self.mesh.iface.len();
        m.length = meas.length;
        m.area = meas.enclosed_area;
        self.validate(m.step)?;
        Ok(m)
    }

    fn validate(&self, step: u64) -> Result<(), SimError> {
        let due = match self.validation {
            ValidationMode::Off => false,
            ValidationMode::Sparse => step % 100 == 0,
            ValidationMode::EveryStep => true,
        };
        if !due {
            return Ok(());
        }
        let d = self.mesh.tri.validate_delaunay();
        if let Some(v) = d.first() {
            return Err(SimError::Validation {
                step,
                what: format!("{} Delaunay violations, first {v:?}", d.len()),
            });
        }
        let p = self.mesh.check_preservation();
        if let Some(v) = p.first() {
            return Err(SimError::Validation {
                step,
                what: format!("{} preservation violations, first {v:?}", p.len()),
            });
        }
        Ok(())
    }

    /// One step of the prescribed interface motion followed by interface
    /// refinement and coarsening.
    pub fn step_interface_only(&mut self) -> Result<StepMetrics, SimError> {
        if self.stepper.finished() {
            return Err(SimError::Finished);
        }
        let mut m = StepMetrics::default();
        self.remesh_step(&mut m)?;
        self.mass_drift += m.remesh_mass_change;
        self.finish_step(m)
    }

    /// One IPMM-FV step. The interface is a material boundary: the upwind
    /// update treats interface edges as walls, interface moves keep the phase
    /// means, and afterwards every phase gets back the mass it had before the
    /// step less what left through the hull.
    pub fn fv_step_ipmm(&mut self) -> Result<StepMetrics, SimError> {
        if self.stepper.finished() {
            return Err(SimError::Finished);
        }
        let mut m = StepMetrics::default();
        let (t, h) = (self.t(), self.stepper.step_length());
        self.mesh.material_interface = true;
        let start = phase_masses(&self.mesh.tri);
        let clock = Instant::now();
        let field = self.field;
        let faces = Faces::collect(&self.mesh.tri, Some(&self.mesh.iface));
        let outflow = fv::upwind_step(&mut self.mesh.tri, &faces, h, |p| field.velocity(t, p))?;
        m.times.fv = clock.elapsed().as_secs_f64();
        self.remesh_step(&mut m)?;
        let clock = Instant::now();
        let target: [f64; 3] = std::array::from_fn(|g| start[g] - outflow[g]);
        m.phase_mass_fix = restore_phase_masses(&mut self.mesh.tri, &target);
        m.times.fv += clock.elapsed().as_secs_f64();
        let out: f64 = outflow.iter().sum();
        self.boundary_outflow += out;
        let total_start: f64 = start.iter().sum();
        let change = (self.mesh.tri.total_mass()[0] - (total_start - out)).abs();
        self.mass_drift += change;
        self.finish_step(m)
    }

    /// Signed distances |v − center| − radius of the interface vertices:
    /// (min, max, mean).
    pub fn circle_deviation(&self, center: Point2, radius: f64) -> (f64, f64, f64) {
        circle_deviation(&self.mesh.polygon(), center, radius)
    }
}

/// Static-mesh FV solver for the same transport problem.
#[derive(Clone, Debug)]
pub struct StaticFv {
    pub tri: Triangulation,
    pub field: MotionField,
    pub stepper: TimeStepper,
    faces: Faces,
    pub boundary_outflow: f64,
}

impl StaticFv {
    /// `tri` must carry at least one data component.
    pub fn new(tri: Triangulation, field: MotionField, stepper: TimeStepper) -> Self {
        let faces = Faces::collect(&tri, None);
        Self {
            tri,
            field,
            stepper,
            faces,
            boundary_outflow: 0.0,
        }
    }

    /// Largest local Courant number for the next step.
    pub fn courant(&self) -> f64 {
        let (t, field) = (self.stepper.t(), self.field);
        fv::courant(&self.tri, &self.faces, self.stepper.step_length(), |p| field.velocity(t, p))
    }

    pub fn step(&mut self) -> Result<f64, SimError> {
        if self.stepper.finished() {
            return Err(SimError::Finished);
        }
        let clock = Instant::now();
        let (t, h, field) = (self.stepper.t(), self.stepper.step_length(), self.field);
        let outflow = fv::upwind_step(&mut self.tri, &self.faces, h, |p| field.velocity(t, p))?;
        self.boundary_outflow += outflow.iter().sum::<f64>();
        self.stepper.k += 1;
        Ok(clock.elapsed().as_secs_f64())
    }
}

/// Σ u|C| of the first data component per phase tag.
fn phase_masses(t: &Triangulation) -> [f64; 3] {
    let mut m = [0.0; 3];
    for c in t.cells() {
        let g = usize::from(t.tag(c).expect("live cell")).min(2);
        m[g] += t.data(c).expect("live cell")[0] * t.cell_area(c).expect("live cell");
    }
    m
}

/// Rescales every phase to the given mass (shifts it when its mass is zero).
/// Returns Σ |correction|.
fn restore_phase_masses(t: &mut Triangulation, target: &[f64; 3]) -> f64 {
    let current = phase_masses(t);
    let mut area = [0.0; 3];
    let cells: Vec<_> = t.cells().collect();
    for &c in &cells {
        area[usize::from(t.tag(c).expect("live cell")).min(2)] += t.cell_area(c).expect("live cell");
    }
    let mut fix = 0.0;
    let mut scale = [1.0; 3];
    let mut shift = [0.0; 3];
    for g in 0..3 {
        let d = target[g] - current[g];
        if d == 0.0 || area[g] == 0.0 {
            continue;
        }
        fix += d.abs();
        if current[g] != 0.0 {
            scale[g] = target[g] / current[g];
        } else {
            shift[g] = d / area[g];
        }
    }
    if fix > 0.0 {
        for c in cells {
            let g = usize::from(t.tag(c).expect("live cell")).min(2);
            let u = &mut t.data_mut(c).expect("live cell")[0];
            *u = *u * scale[g] + shift[g];
        }
    }
    fix
}

/// Sets the first data component to 1 on inside cells and 0 elsewhere.
pub fn set_indicator(t: &mut Triangulation) {
    let cells: Vec<_> = t.cells().collect();
    for c in cells {
        let u = if t.tag(c) == Ok(INSIDE) { 1.0 } else { 0.0 };
        t.data_mut(c).expect("live cell")[0] = u;
    }
}

/// Sets the first data component to the cell average of `f`.
pub fn set_cell_averages(t: &mut Triangulation, f: impl Fn(Point2) -> f64) {
    let cells: Vec<_> = t.cells().collect();
    for c in cells {
        let corners = t.cell_corners(c).expect("live cell");
        let mut sum = 0.0;
        let mut n = 0usize;
        subdivide(&corners, SUBDIVISION_DEPTH, &mut |g| {
            sum += f(g);
            n += 1;
        });
        t.data_mut(c).expect("live cell")[0] = sum / n as f64;
    }
}

/// Levels of midpoint subdivision used by the quadrature (4^4 = 256 triangles).
pub const SUBDIVISION_DEPTH: u32 = 4;

/// Calls `f` with the centroid of each of the 4^depth congruent subtriangles.
fn subdivide(tri: &[Point2; 3], depth: u32, f: &mut impl FnMut(Point2)) {
    if depth == 0 {
        f(crate::geom::centroid(tri));
        return;
    }
    let [a, b, c] = *tri;
    let (ab, bc, ca) = (a.midpoint(b), b.midpoint(c), c.midpoint(a));
    subdivide(&[a, ab, ca], depth - 1, f);
    subdivide(&[ab, b, bc], depth - 1, f);
    subdivide(&[ca, bc, c], depth - 1, f);
    subdivide(&[ab, bc, ca], depth - 1, f);
}

/// ∫ |u_h − exact| over the mesh, evaluated on 256 subtriangles per cell.
pub fn l1_error(t: &Triangulation, exact: impl Fn(Point2) -> f64) -> f64 {
    let n = 4f64.powi(SUBDIVISION_DEPTH as i32);
    t.cells()
        .map(|c| {
            let corners = t.cell_corners(c).expect("live cell");
            let u = t.data(c).expect("live cell")[0];
            let area = t.cell_area(c).expect("live cell");
            let mut sum = 0.0;
            subdivide(&corners, SUBDIVISION_DEPTH, &mut |g| sum += (u - exact(g)).abs());
            sum * area / n
        })
        .sum()
}

/// (min, max, mean) of |p − center| − radius over `points`.
pub fn circle_deviation(points: &[Point2], center: Point2, radius: f64) -> (f64, f64, f64) {
    let devs: Vec<f64> = points.iter().map(|p| p.distance(center) - radius).collect();
    let min = devs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = devs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = devs.iter().sum::<f64>() / devs.len().max(1) as f64;
    (min, max, mean)
}
