//! Benchmark orchestration and randomized verification suites.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use web_time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dmesh::{MeshError, Triangulation, VertexKind};
use crate::geom::Point2;
use crate::iface::{verify_theorem_minsphere, InterfaceMesh};
use crate::meshgen::generate_initial_mesh;
use crate::mmesh::{self, ProjectionKind, Transfer};
use crate::sim::{
    indicator_l1_error, set_indicator_averages, Benchmark, SimError, SimulationState, StaticFv, StepMetrics, StepTimes,
    TimeStepper, ValidationMode,
};
use crate::vtk;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    IpmmFv,
    Fv,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub benchmark: Benchmark,
    /// Target lattice spacing; also the initial interface spacing.
    pub dx: f64,
    pub dt: f64,
    pub t_end: f64,
    pub method: Method,
    pub projection: ProjectionKind,
    pub out: PathBuf,
    /// Snapshot every this many steps.
    pub snapshot_every: u64,
    pub validate: ValidationMode,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::for_benchmark(Benchmark::Star2d)
    }
}

impl RunConfig {
    pub fn for_benchmark(benchmark: Benchmark) -> Self {
        let dx = match benchmark {
            Benchmark::Star2d => 0.1,
            Benchmark::Vortex2d => 0.0145,
            Benchmark::Circadv => 0.5,
        };
        Self {
            benchmark,
            dx,
            dt: benchmark.default_dt(),
            t_end: benchmark.default_t_end(),
            method: Method::default(),
            projection: ProjectionKind::LocalAverage,
            out: PathBuf::from("out"),
            snapshot_every: 1000,
            validate: ValidationMode::Off,
            seed: 1,
        }
    }

    pub fn check(&self) -> Result<(), HarnessError> {
        if !(self.dx > 0.0) || !(self.dt > 0.0) || !(self.t_end >= 0.0) {
            return Err(HarnessError::Config("dx and dt must be positive and t_end nonnegative".into()));
        }
        if self.snapshot_every == 0 {
            return Err(HarnessError::Config("snapshot interval must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// One line of `metrics.csv`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub step: u64,
    pub t: f64,
    pub cells: usize,
    pub interface_vertices: usize,
    pub time_ensure: f64,
    pub time_move: f64,
    pub time_coarse_bulk: f64,
    pub time_refine_bulk: f64,
    pub time_refine_interface: f64,
    pub time_coarsen_interface: f64,
    pub time_fv: f64,
    pub length: f64,
    pub area: f64,
    pub epsilon: f64,
    pub substeps: u32,
    pub remesh_mass_change: f64,
    pub phase_mass_fix: f64,
    pub l1: Option<f64>,
}

impl MetricsRow {
    fn from_step(m: &StepMetrics) -> Self {
        Self {
            step: m.step,
            t: m.t,
            cells: m.cells,
            interface_vertices: m.interface_vertices,
            time_ensure: m.times.ensure,
            time_move: m.times.moving,
            time_coarse_bulk: m.times.coarse_bulk,
            time_refine_bulk: m.times.refine_bulk,
            time_refine_interface: m.times.refine_interface,
            time_coarsen_interface: m.times.coarsen_interface,
            time_fv: m.times.fv,
            length: m.length,
            area: m.area,
            epsilon: m.epsilon,
            substeps: m.substeps,
            remesh_mass_change: m.remesh_mass_change,
            phase_mass_fix: m.phase_mass_fix,
            l1: m.l1,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: Option<RunConfig>,
    pub steps: u64,
    pub cells_initial: usize,
    pub cells_final: usize,
    pub interface_vertices_final: usize,
    pub length_initial: f64,
    pub length_min: f64,
    pub length_max: f64,
    pub length_final: f64,
    pub area_initial: f64,
    pub area_final: f64,
    pub epsilon_max: f64,
    pub substeps: u64,
    /// (min, max, mean) signed distance of the final interface from the
    /// initial circle.
    pub circle_deviation: Option<(f64, f64, f64)>,
    pub l1_initial: Option<f64>,
    pub l1_final: Option<f64>,
    pub fv_l1_initial: Option<f64>,
    pub fv_l1_final: Option<f64>,
    pub fv_time: f64,
    /// Σ |Δ mass| not accounted for by hull outflow, relative to the initial
    /// mass.
    pub mass_drift: f64,
    pub boundary_outflow: f64,
    pub total_times: StepTimes,
    pub mean_times: StepTimes,
    pub wall_seconds: f64,
}

impl RunSummary {
    fn absorb(&mut self, m: &StepMetrics) {
        self.steps = m.step;
        self.length_min = self.length_min.min(m.length);
        self.length_max = self.length_max.max(m.length);
        self.epsilon_max = self.epsilon_max.max(m.epsilon);
        self.substeps += u64::from(m.substeps);
        self.total_times.add(&m.times);
    }
}

/// Runs one benchmark and writes `metrics.csv`, `summary.json` and
/// snapshots into `config.out`.
pub fn run(config: &RunConfig) -> Result<RunSummary, HarnessError> {
    config.check()?;
    fs::create_dir_all(&config.out)?;
    let clock = Instant::now();
    let mut summary = RunSummary {
        config: Some(config.clone()),
        length_min: f64::INFINITY,
        ..Default::default()
    };
    let b = config.benchmark;
    let ipmm = b != Benchmark::Circadv || config.method != Method::Fv;
    let fv = b == Benchmark::Circadv && config.method != Method::IpmmFv;

    if ipmm {
        run_ipmm(config, &mut summary)?;
    }
    if fv {
        run_static_fv(config, &mut summary)?;
    }
    if summary.steps > 0 {
        let n = summary.steps as f64;
        let t = summary.total_times;
        summary.mean_times = StepTimes {
            ensure: t.ensure / n,
            moving: t.moving / n,
            coarse_bulk: t.coarse_bulk / n,
            refine_bulk: t.refine_bulk / n,
            refine_interface: t.refine_interface / n,
            coarsen_interface: t.coarsen_interface / n,
            fv: t.fv / n,
        };
    }
    if !summary.length_min.is_finite() {
        summary.length_min = 0.0;
    }
    summary.wall_seconds = clock.elapsed().as_secs_f64();
    let f = BufWriter::new(File::create(config.out.join("summary.json"))?);
    serde_json::to_writer_pretty(f, &summary)?;
    Ok(summary)
}

fn run_ipmm(config: &RunConfig, summary: &mut RunSummary) -> Result<(), HarnessError> {
    let b = config.benchmark;
    let mut state = SimulationState::new(b, config.dx, config.dt, config.t_end, config.projection, config.seed)?;
    state.validation = config.validate;
    let measures = state.mesh.interface_measures();
    summary.cells_initial = state.mesh.tri.num_cells();
    summary.length_initial = measures.length;
    summary.length_min = measures.length;
    summary.length_max = measures.length;
    summary.area_initial = measures.enclosed_area;
    if b == Benchmark::Circadv {
        summary.l1_initial = Some(indicator_l1_error(&state.mesh.tri, b, 0.0));
    }
    let mut csv = csv::Writer::from_path(config.out.join("metrics.csv"))?;
    let snap = |state: &SimulationState| -> std::io::Result<()> {
        if state.stepper.k % config.snapshot_every == 0 {
            vtk::write_snapshot(&state.mesh, &config.out, state.stepper.k, state.t())?;
        }
        Ok(())
    };
    snap(&state)?;
    while !state.stepper.finished() {
        let mut m = if b == Benchmark::Circadv {
            state.fv_step_ipmm()?
        } else {
            state.step_interface_only()?
        };
        if b == Benchmark::Circadv && state.stepper.finished() {
            m.l1 = Some(indicator_l1_error(&state.mesh.tri, b, state.t()));
        }
        summary.absorb(&m);
        csv.serialize(MetricsRow::from_step(&m))?;
        snap(&state)?;
    }
    csv.flush()?;
    let measures = state.mesh.interface_measures();
    summary.cells_final = state.mesh.tri.num_cells();
    summary.interface_vertices_final = state.mesh.iface.len();
    summary.length_final = measures.length;
    summary.area_final = measures.enclosed_area;
    if let Some((c, r)) = b.circle() {
        summary.circle_deviation = Some(state.circle_deviation(c, r));
    }
    if b == Benchmark::Circadv {
        summary.l1_final = Some(indicator_l1_error(&state.mesh.tri, b, state.t()));
    }
    summary.mass_drift = state.relative_drift();
    summary.boundary_outflow = state.boundary_outflow;
    Ok(())
}

fn run_static_fv(config: &RunConfig, summary: &mut RunSummary) -> Result<(), HarnessError> {
    let b = config.benchmark;
    let mut tri = generate_initial_mesh(b.domain(), config.dx, config.seed, 1).map_err(SimError::from)?;
    set_indicator_averages(&mut tri, b, 0.0);
    summary.fv_l1_initial = Some(indicator_l1_error(&tri, b, 0.0));
    let mut fv = StaticFv::new(tri, b.field(config.t_end), TimeStepper::new(0.0, config.dt, config.t_end));
    let mut csv = csv::Writer::from_path(config.out.join("metrics_fv.csv"))?;
    csv.write_record(["step", "t", "time_fv"])?;
    while !fv.stepper.finished() {
        let secs = fv.step()?;
        summary.fv_time += secs;
        csv.write_record([fv.stepper.k.to_string(), fv.stepper.t().to_string(), secs.to_string()])?;
    }
    csv.flush()?;
    let t = fv.stepper.t();
    summary.fv_l1_final = Some(indicator_l1_error(&fv.tri, b, t));
    if summary.steps == 0 {
        summary.steps = fv.stepper.k;
    }
    Ok(())
}

/// Runs several configurations in parallel and merges their metrics into
/// `sweep.csv` under `out`.
pub fn sweep(configs: &[RunConfig], out: &Path) -> Result<Vec<RunSummary>, HarnessError> {
    fs::create_dir_all(out)?;
    let results: Vec<Result<RunSummary, HarnessError>> = configs.par_iter().map(run).collect();
    let summaries = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut w = csv::Writer::from_path(out.join("sweep.csv"))?;
    for (k, cfg) in configs.iter().enumerate() {
        let path = cfg.out.join("metrics.csv");
        if !path.exists() {
            continue;
        }
        let mut r = csv::Reader::from_path(&path)?;
        if k == 0 {
            let mut header = vec!["run".to_string(), "dx".to_string()];
            header.extend(r.headers()?.iter().map(str::to_string));
            w.write_record(&header)?;
        }
        for rec in r.records() {
            let rec = rec?;
            let mut row = vec![k.to_string(), cfg.dx.to_string()];
            row.extend(rec.iter().map(str::to_string));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    let mut f = BufWriter::new(File::create(out.join("sweep_summary.json"))?);
    serde_json::to_writer_pretty(&mut f, &summaries)?;
    f.flush()?;
    Ok(summaries)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Delaunay,
    Preservation,
    Theorem,
    Conservation,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub trials: usize,
    pub failures: usize,
    pub skipped: usize,
    /// Largest relative mass drift (conservation suite).
    pub max_drift: f64,
    pub first_failure: Option<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Tolerated relative mass drift in the conservation suite.
pub const DRIFT_TOLERANCE: f64 = 1e-8;

pub fn verify(suite: Suite, trials: usize, seed: u64) -> VerifyReport {
    match suite {
        Suite::Theorem => {
            let r = verify_theorem_minsphere(trials, seed);
            VerifyReport {
                trials,
                failures: r.failed,
                skipped: r.skipped,
                ..Default::default()
            }
        }
        Suite::Delaunay => collect(trials, seed, |rng| delaunay_trial(rng, 200)),
        Suite::Preservation => collect(trials, seed, |rng| preservation_trial(rng, 20)),
        Suite::Conservation => {
            let drifts: Vec<Result<f64, String>> = (0..trials)
                .into_par_iter()
                .map(|k| conservation_trial(&mut trial_rng(seed, k), 50))
                .collect();
            let mut report = VerifyReport {
                trials,
                ..Default::default()
            };
            for d in drifts {
                match d {
                    Ok(d) => {
                        report.max_drift = report.max_drift.max(d);
                        if !(d <= DRIFT_TOLERANCE) {
                            report.failures += 1;
                            report.first_failure.get_or_insert(format!("drift {d}"));
                        }
                    }
                    Err(e) => {
                        report.failures += 1;
                        report.first_failure.get_or_insert(e);
                    }
                }
            }
            report
        }
    }
}

fn trial_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng
}

fn collect(trials: usize, seed: u64, f: impl Fn(&mut ChaCha8Rng) -> Result<(), String> + Sync) -> VerifyReport {
    let results: Vec<Result<(), String>> = (0..trials).into_par_iter().map(|k| f(&mut trial_rng(seed, k))).collect();
    let mut report = VerifyReport {
        trials,
        ..Default::default()
    };
    for (k, r) in results.into_iter().enumerate() {
        if let Err(e) = r {
            report.failures += 1;
            report.first_failure.get_or_insert(format!("trial {k}: {e}"));
        }
    }
    report
}

/// Unit square corners plus random interior points.
fn random_mesh(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Triangulation {
    let mut pts: Vec<(Point2, VertexKind)> = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
        .iter()
        .map(|&(x, y)| (Point2::new(x, y), VertexKind::Boundary))
        .collect();
    for _ in 0..n {
        pts.push((Point2::new(rng.gen_range(0.01..0.99), rng.gen_range(0.01..0.99)), VertexKind::Bulk));
    }
    Triangulation::build(&pts, dim).expect("random points in general position")
}

/// `ops` random insertions, removals and moves, validating after each.
pub fn delaunay_trial(rng: &mut ChaCha8Rng, ops: usize) -> Result<(), String> {
    let n = rng.gen_range(20..120);
    let mut t = random_mesh(rng, n, 0);
    let check = |t: &Triangulation, k: usize, what: &str| {
        let v = t.validate_delaunay();
        if v.is_empty() {
            Ok(())
        } else {
            Err(format!("op {k} ({what}): {:?}", v[0]))
        }
    };
    check(&t, 0, "build")?;
    for k in 1..=ops {
        let interior: Vec<_> = t.vertices().filter(|&v| t.kind(v) == Ok(VertexKind::Bulk)).collect();
        match rng.gen_range(0..3) {
            0 => {
                let p = Point2::new(rng.gen_range(0.001..0.999), rng.gen_range(0.001..0.999));
                match t.insert(p, VertexKind::Bulk) {
                    Ok(_) | Err(MeshError::DuplicatePoint) => {}
                    Err(e) => return Err(format!("op {k} insert: {e}")),
                }
                check(&t, k, "insert")?;
            }
            1 if interior.len() > 3 => {
                let v = interior[rng.gen_range(0..interior.len())];
                t.remove(v).map_err(|e| format!("op {k} remove: {e}"))?;
                check(&t, k, "remove")?;
            }
            _ if !interior.is_empty() => {
                let v = interior[rng.gen_range(0..interior.len())];
                let p = t.position(v).map_err(|e| e.to_string())?;
                let r = 10f64.powf(rng.gen_range(-4.0..-0.5));
                let q = Point2::new(
                    (p.x + rng.gen_range(-r..r)).clamp(0.001, 0.999),
                    (p.y + rng.gen_range(-r..r)).clamp(0.001, 0.999),
                );
                match t.relocate(v, q) {
                    Ok(_) | Err(MeshError::DuplicatePoint) => {}
                    Err(e) => return Err(format!("op {k} move: {e}")),
                }
                check(&t, k, "move")?;
            }
            _ => {}
        }
    }
    Ok(())
}

/// Random smooth interface motions with refinement and coarsening.
pub fn preservation_trial(rng: &mut ChaCha8Rng, steps: usize) -> Result<(), String> {
    let dom = crate::grid::BBox {
        min: Point2::new(-1.0, -1.0),
        max: Point2::new(1.0, 1.0),
    };
    let dx = rng.gen_range(0.06..0.15);
    let t = generate_initial_mesh(dom, dx, rng.gen(), 1).map_err(|e| e.to_string())?;
    let c = Point2::new(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2));
    let r = rng.gen_range(0.25..0.5);
    let spacing = dx * rng.gen_range(0.5..1.5);
    let poly = crate::sim::circle_polygon(c, r, spacing);
    let mut m = InterfaceMesh::seed(t, &poly, ProjectionKind::LocalAverage).map_err(|e| e.to_string())?;
    let check = |m: &InterfaceMesh, k: usize| {
        let v = m.check_preservation();
        if !v.is_empty() {
            return Err(format!("step {k}: {:?}", v[0]));
        }
        let d = m.tri.validate_delaunay();
        if !d.is_empty() {
            return Err(format!("step {k}: {:?}", d[0]));
        }
        Ok(())
    };
    check(&m, 0)?;
    for k in 1..=steps {
        let (a, b, s) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let f = move |p: Point2| {
            let d = p - c;
            Point2::new(-a * d.y + b * (3.0 * d.y).sin() + s * d.x, a * d.x + b * (3.0 * d.x).cos() + s * d.y)
        };
        let vmax = m.polygon().into_iter().map(|p| f(p).norm()).fold(0.0f64, f64::max);
        let omega = mmesh::omega_mesh(&m.tri).map_err(|e| e.to_string())?;
        let h = rng.gen_range(0.05..0.45) * omega / vmax.max(1e-12);
        m.move_interface_by(|p| p + f(p) * h).map_err(|e| format!("step {k}: {e}"))?;
        m.refine_interface().map_err(|e| format!("step {k}: {e}"))?;
        m.coarsen_interface().map_err(|e| format!("step {k}: {e}"))?;
        check(&m, k)?;
    }
    Ok(())
}

/// Random data-carrying operations; returns Σ|Δ mass| / |mass|.
pub fn conservation_trial(rng: &mut ChaCha8Rng, ops: usize) -> Result<f64, String> {
    let n = rng.gen_range(20..80);
    let mut t = random_mesh(rng, n, 2);
    let cells: Vec<_> = t.cells().collect();
    for c in cells {
        let d = t.data_mut(c).map_err(|e| e.to_string())?;
        d[0] = rng.gen_range(0.0..1.0);
        d[1] = rng.gen_range(-1.0..1.0);
    }
    let mass0 = t.total_mass();
    let mut drift = 0.0f64;
    for _ in 0..ops {
        let kind = if rng.gen_bool(0.5) {
            ProjectionKind::LocalAverage
        } else {
            ProjectionKind::L2Projection
        };
        let before = t.total_mass();
        let interior: Vec<_> = t.vertices().filter(|&v| t.kind(v) == Ok(VertexKind::Bulk)).collect();
        let res = match rng.gen_range(0..3) {
            0 => {
                let p = Point2::new(rng.gen_range(0.001..0.999), rng.gen_range(0.001..0.999));
                mmesh::insert_vertex_with_data(&mut t, p, VertexKind::Bulk, Transfer::plain(kind)).map(|_| ())
            }
            1 if interior.len() > 3 => {
                let v = interior[rng.gen_range(0..interior.len())];
                mmesh::remove_vertex_with_data(&mut t, v, Transfer::plain(kind)).map(|_| ())
            }
            _ if !interior.is_empty() => {
                let v = interior[rng.gen_range(0..interior.len())];
                let w = mmesh::omega_vertex(&t, v).map_err(|e| e.to_string())?;
                let p = t.position(v).map_err(|e| e.to_string())?;
                let a = rng.gen_range(0.0..std::f64::consts::TAU);
                let q = p + Point2::new(a.cos(), a.sin()) * (0.9 * w);
                mmesh::move_vertex_with_data(&mut t, v, q, Transfer::plain(kind)).map(|_| ())
            }
            _ => Ok(()),
        };
        res.map_err(|e| e.to_string())?;
        let after = t.total_mass();
        for j in 0..2 {
            drift = drift.max((after[j] - before[j]).abs() / mass0[j].abs().max(1e-300));
        }
    }
    let fin = t.total_mass();
    let total = (0..2)
        .map(|j| (fin[j] - mass0[j]).abs() / mass0[j].abs().max(1e-300))
        .fold(0.0, f64::max);
    Ok(drift.max(total))
}

/// Writes one metrics row per line to `w` as CSV.
pub fn write_rows<W: Write>(rows: &[MetricsRow], w: W) -> Result<(), HarnessError> {
    let mut csv = csv::Writer::from_writer(w);
    for r in rows {
        csv.serialize(r)?;
    }
    csv.flush()?;
    Ok(())
}
