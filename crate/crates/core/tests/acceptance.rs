//! End-to-end acceptance checks. Runs without the libtest harness and prints
//! one PASS/FAIL line per criterion.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::process::{Command, ExitCode};

use ipmm::dmesh::{MeshError, Triangulation, VertexKind};
use ipmm::geom::{min_covering_circle, Point2};
use ipmm::harness::{self, Method, RunConfig};
use ipmm::mmesh::{project_l2, ProjectionKind, Stencil};
use ipmm::sim::{Benchmark, SimulationState, StepTimes, ValidationMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
    /// Reported only: a failure is printed but does not fail the suite.
    reported: bool,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome {
        pass,
        detail,
        reported: false,
    }
}

fn incircle(a: Point2, b: Point2, c: Point2, p: Point2) -> f64 {
    let q = |p: Point2| robust::Coord { x: p.x, y: p.y };
    robust::incircle(q(a), q(b), q(c), q(p))
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    let q = |p: Point2| robust::Coord { x: p.x, y: p.y };
    robust::orient2d(q(a), q(b), q(c))
}

/// Empty circumcircle test of every cell against every vertex.
fn brute_force_delaunay(t: &Triangulation) -> bool {
    let pts: Vec<Point2> = t.vertices().map(|v| t.position(v).unwrap()).collect();
    t.cells().all(|c| {
        let [a, b, d] = t.cell_corners(c).unwrap();
        pts.iter().all(|&p| p == a || p == b || p == d || incircle(a, b, d, p) <= 0.0)
    })
}

fn segments_cross(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let (d1, d2) = (orient(a, b, c), orient(a, b, d));
    let (d3, d4) = (orient(c, d, a), orient(c, d, b));
    d1 * d2 <= 0.0 && d3 * d4 <= 0.0 && !(d1 == 0.0 && d2 == 0.0)
}

/// Closed polygon with distinct vertices and no crossings between
/// non-adjacent edges.
fn is_simple(poly: &[Point2]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let distinct: HashSet<(u64, u64)> = poly.iter().map(|p| (p.x.to_bits(), p.y.to_bits())).collect();
    if distinct.len() != n {
        return false;
    }
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_cross(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

fn perimeter(poly: &[Point2]) -> f64 {
    (0..poly.len()).map(|i| poly[i].distance(poly[(i + 1) % poly.len()])).sum()
}

fn shoelace(poly: &[Point2]) -> f64 {
    0.5 * (0..poly.len()).map(|i| poly[i].cross(poly[(i + 1) % poly.len()])).sum::<f64>()
}

type Key = [(u64, u64); 3];

fn key(c: [Point2; 3]) -> Key {
    let mut k = c.map(|p| (p.x.to_bits(), p.y.to_bits()));
    k.sort_unstable();
    k
}

fn keys(t: &Triangulation) -> HashSet<Key> {
    t.cells().map(|c| key(t.cell_corners(c).unwrap())).collect()
}

fn circumcircle(a: Point2, b: Point2, c: Point2) -> (Point2, f64) {
    let (b, c) = (b - a, c - a);
    let d = 2.0 * b.cross(c);
    let ux = (c.y * b.norm_squared() - b.y * c.norm_squared()) / d;
    let uy = (b.x * c.norm_squared() - c.x * b.norm_squared()) / d;
    (a + Point2::new(ux, uy), (ux * ux + uy * uy).sqrt())
}

fn segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let d = b - a;
    let s = ((p - a).dot(d) / d.norm_squared()).clamp(0.0, 1.0);
    p.distance(a + d * s)
}

/// (checked, mismatched) cells whose circumcircle stays farther than
/// `margin` from the polygon.
fn restoration(t: &Triangulation, poly: &[Point2], margin: f64, reference: &HashSet<Key>) -> (usize, usize) {
    let mut checked = 0;
    let mut bad = 0;
    for c in t.cells() {
        let [a, b, d] = t.cell_corners(c).unwrap();
        let (m, r) = circumcircle(a, b, d);
        let gap = (0..poly.len())
            .map(|i| segment_distance(m, poly[i], poly[(i + 1) % poly.len()]))
            .fold(f64::INFINITY, f64::min)
            - r;
        if gap > margin {
            checked += 1;
            if !reference.contains(&key([a, b, d])) {
                bad += 1;
            }
        }
    }
    (checked, bad)
}

fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<(Point2, VertexKind)> {
    let mut pts: Vec<_> = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
        .iter()
        .map(|&(x, y)| (Point2::new(x, y), VertexKind::Boundary))
        .collect();
    for _ in 0..n {
        pts.push((Point2::new(rng.gen_range(0.01..0.99), rng.gen_range(0.01..0.99)), VertexKind::Bulk));
    }
    pts
}

fn criterion_1() -> Outcome {
    let failures: Vec<String> = (0..500u64)
        .into_par_iter()
        .filter_map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial);
            let n = rng.gen_range(20..100);
            let mut t = Triangulation::build(&random_points(&mut rng, n), 0).ok()?;
            let mut ops = 0;
            while ops < 200 {
                let bulk: Vec<_> = t.vertices().filter(|&v| t.kind(v) == Ok(VertexKind::Bulk)).collect();
                let done = match rng.gen_range(0..3) {
                    0 => {
                        let p = Point2::new(rng.gen_range(0.001..0.999), rng.gen_range(0.001..0.999));
                        t.insert(p, VertexKind::Bulk).is_ok()
                    }
                    1 if bulk.len() > 3 => t.remove(bulk[rng.gen_range(0..bulk.len())]).is_ok(),
                    _ if !bulk.is_empty() => {
                        let v = bulk[rng.gen_range(0..bulk.len())];
                        let p = t.position(v).unwrap();
                        let r = 10f64.powf(rng.gen_range(-4.0..-0.5));
                        let q = Point2::new(
                            (p.x + rng.gen_range(-r..r)).clamp(0.001, 0.999),
                            (p.y + rng.gen_range(-r..r)).clamp(0.001, 0.999),
                        );
                        match t.relocate(v, q) {
                            Ok(_) => true,
                            Err(MeshError::DuplicatePoint) => false,
                            Err(e) => return Some(format!("trial {trial}: move failed: {e}")),
                        }
                    }
                    _ => false,
                };
                if done {
                    ops += 1;
                    if !t.validate_delaunay().is_empty() {
                        return Some(format!("trial {trial}: violation after op {ops}"));
                    }
                }
            }
            (!brute_force_delaunay(&t)).then(|| format!("trial {trial}: brute force disagrees"))
        })
        .collect();
    outcome(
        failures.is_empty(),
        format!("500 sequences x 200 ops, {} failing {:?}", failures.len(), failures.first()),
    )
}

fn criterion_2() -> Outcome {
    let out = Command::new(env!("CARGO_BIN_EXE_ipmm"))
        .args(["verify", "theorem", "--trials", "10000"])
        .output()
        .expect("run ipmm");
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap_or_default();
    let failures = report["failures"].as_u64();
    outcome(
        out.status.success() && failures == Some(0),
        format!("10000 trials, failures {failures:?}, skipped {}", report["skipped"]),
    )
}

struct StarRun {
    preserved: bool,
    simple: bool,
    length_min: f64,
    length_max: f64,
    length_final: f64,
    restoration: Vec<(usize, usize)>,
    background_ok: bool,
    final_restoration: (usize, usize),
    drift: f64,
    error: Option<String>,
}

fn star_run() -> StarRun {
    let mut s = SimulationState::new(Benchmark::Star2d, 0.1, 2e-4, 3.0, ProjectionKind::LocalAverage, 1).unwrap();
    s.validation = ValidationMode::EveryStep;
    let initial = keys(&s.mesh.tri);
    // Away from the interface the mesh is the Delaunay mesh of the bulk and
    // boundary vertices alone, including lattice points that seeding cleared
    // around the interface.
    let t0 = &s.mesh.tri;
    let mut bg: Vec<_> = t0
        .vertices()
        .filter(|&v| t0.kind(v) != Ok(VertexKind::Interface))
        .map(|v| (t0.position(v).unwrap(), t0.kind(v).unwrap()))
        .collect();
    bg.extend(s.mesh.background.points.iter().map(|&p| (p, VertexKind::Bulk)));
    let background = Triangulation::build(&bg, 0).unwrap();
    let background_ok = brute_force_delaunay(&background);
    let reference = keys(&background);
    let poly = s.mesh.polygon();
    let mut r = StarRun {
        preserved: true,
        simple: is_simple(&poly),
        length_min: perimeter(&poly),
        length_max: perimeter(&poly),
        length_final: perimeter(&poly),
        restoration: Vec::new(),
        background_ok,
        final_restoration: (0, 0),
        drift: 0.0,
        error: None,
    };
    let total = s.stepper.total_steps();
    while !s.stepper.finished() {
        if let Err(e) = s.step_interface_only() {
            r.error = Some(e.to_string());
            break;
        }
        r.preserved &= s.mesh.check_preservation().is_empty();
        let poly = s.mesh.polygon();
        r.simple &= is_simple(&poly);
        let len = perimeter(&poly);
        r.length_min = r.length_min.min(len);
        r.length_max = r.length_max.max(len);
        r.length_final = len;
        if s.stepper.k % (total / 10) == 0 {
            let longest = (0..poly.len()).map(|i| poly[i].distance(poly[(i + 1) % poly.len()])).fold(0.0, f64::max);
            let margin = s.mesh.thresholds.dx_min.max(longest);
            r.restoration.push(restoration(&s.mesh.tri, &poly, margin, &reference));
            if s.stepper.finished() {
                r.final_restoration = restoration(&s.mesh.tri, &poly, margin, &initial);
            }
        }
    }
    r.drift = s.relative_drift();
    r
}

fn criterion_3(r: &StarRun) -> Outcome {
    outcome(
        r.error.is_none() && r.preserved && r.simple,
        format!("preserved {}, simple {}, error {:?}", r.preserved, r.simple, r.error),
    )
}

fn criterion_4(r: &StarRun) -> Outcome {
    let target = PI;
    let pass = r.error.is_none()
        && (3.0..=3.3).contains(&r.length_min)
        && (4.7..=5.7).contains(&r.length_max)
        && (r.length_final - target).abs() <= 0.02 * target;
    outcome(
        pass,
        format!("length min {:.4}, max {:.4}, final {:.4}", r.length_min, r.length_max, r.length_final),
    )
}

fn criterion_5(r: &StarRun) -> Outcome {
    let checked: usize = r.restoration.iter().map(|x| x.0).sum();
    let bad: usize = r.restoration.iter().map(|x| x.1).sum();
    let last = r.restoration.last().copied().unwrap_or_default();
    let (fin, fin_bad) = r.final_restoration;
    outcome(
        r.error.is_none()
            && r.background_ok
            && r.restoration.len() == 10
            && bad == 0
            && last.0 > 0
            && fin > 0
            && fin_bad == 0,
        format!(
            "{} samples, {checked} far cells checked, {bad} not from the background mesh; \
             at t_end {fin} checked, {fin_bad} not from the initial mesh",
            r.restoration.len()
        ),
    )
}

struct VortexRun {
    cells_mean: f64,
    area: f64,
    mean_deviation: f64,
    intact: bool,
    drift: f64,
    error: Option<String>,
}

fn vortex_run() -> VortexRun {
    let mut s = SimulationState::new(Benchmark::Vortex2d, 0.0065, 1e-4, 8.0, ProjectionKind::LocalAverage, 1).unwrap();
    let mut cells = 0.0;
    let mut steps = 0.0f64;
    let mut intact = true;
    let mut error = None;
    while !s.stepper.finished() {
        match s.step_interface_only() {
            Ok(m) => {
                cells += m.cells as f64;
                steps += 1.0;
            }
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        }
        // Interface edges are mesh edges, so preservation rules out
        // crossings; the full simplicity check runs periodically.
        intact &= s.mesh.check_preservation().is_empty();
        if s.stepper.k % 500 == 0 {
            intact &= is_simple(&s.mesh.polygon());
        }
    }
    let poly = s.mesh.polygon();
    intact &= is_simple(&poly);
    let center = Point2::new(0.5, 0.75);
    let mean_deviation = poly.iter().map(|p| p.distance(center) - 0.15).sum::<f64>() / poly.len() as f64;
    VortexRun {
        cells_mean: cells / steps.max(1.0),
        area: shoelace(&poly).abs(),
        mean_deviation,
        intact,
        drift: s.relative_drift(),
        error,
    }
}

fn criterion_6(r: &VortexRun) -> Outcome {
    let exact = PI * 0.15 * 0.15;
    let pass = r.error.is_none()
        && r.cells_mean >= 5e4
        && (r.area - exact).abs() <= 0.02 * exact
        && r.mean_deviation.abs() <= 5e-3
        && r.intact;
    outcome(
        pass,
        format!(
            "mean cells {:.0}, area {:.5e} (exact {exact:.5e}), mean deviation {:.3e}, intact {}, error {:?}",
            r.cells_mean, r.area, r.mean_deviation, r.intact, r.error
        ),
    )
}

fn circadv_runs() -> Result<Vec<harness::RunSummary>, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let configs: Vec<RunConfig> = [0.5, 0.25, 0.125]
        .iter()
        .enumerate()
        .map(|(k, &dx)| RunConfig {
            dx,
            method: Method::Both,
            out: dir.path().join(format!("run_{k}")),
            snapshot_every: u64::MAX,
            ..RunConfig::for_benchmark(Benchmark::Circadv)
        })
        .collect();
    harness::sweep(&configs, dir.path()).map_err(|e| e.to_string())
}

fn criterion_7(runs: &Result<Vec<harness::RunSummary>, String>) -> Outcome {
    let runs = match runs {
        Ok(r) => r,
        Err(e) => return outcome(false, e.clone()),
    };
    let mut detail = Vec::new();
    let mut pass = true;
    let mut prev = f64::INFINITY;
    for s in runs {
        let (l0, l1, fv) = (s.l1_initial.unwrap(), s.l1_final.unwrap(), s.fv_l1_final.unwrap());
        pass &= l1 <= 2.0 * l0 && fv >= 10.0 * l1 && l1 < prev;
        prev = l1;
        detail.push(format!("dx {}: {l0:.3e} -> {l1:.3e}, FV {fv:.3e}", s.config.as_ref().map_or(0.0, |c| c.dx)));
    }
    outcome(pass, detail.join("; "))
}

fn criterion_8(star: f64, vortex: f64, circadv: &Result<Vec<harness::RunSummary>, String>) -> Outcome {
    let mut drifts = vec![("star2d".to_string(), star), ("vortex2d".to_string(), vortex)];
    if let Ok(runs) = circadv {
        drifts.extend(runs.iter().map(|s| (format!("circadv {}", s.config.as_ref().map_or(0.0, |c| c.dx)), s.mass_drift)));
    }
    let pass = circadv.is_ok() && drifts.iter().all(|(_, d)| *d <= 1e-8);
    let worst = drifts.iter().map(|x| x.1).fold(0.0, f64::max);
    outcome(pass, format!("{} runs, worst relative drift {worst:.2e}", drifts.len()))
}

/// Smallest enclosing circle by trying every pair and triple.
fn brute_force_circle(pts: &[Point2]) -> (Point2, f64) {
    let covers = |c: Point2, r: f64| pts.iter().all(|p| p.distance(c) <= r * (1.0 + 1e-12) + 1e-15);
    let mut best = (pts[0], 0.0);
    let mut best_r = if pts.len() == 1 { 0.0 } else { f64::INFINITY };
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let c = pts[i].midpoint(pts[j]);
            let r = 0.5 * pts[i].distance(pts[j]);
            if r < best_r && covers(c, r) {
                best = (c, r);
                best_r = r;
            }
            for k in j + 1..pts.len() {
                if orient(pts[i], pts[j], pts[k]) == 0.0 {
                    continue;
                }
                let (c, r) = circumcircle(pts[i], pts[j], pts[k]);
                if r < best_r && covers(c, r) {
                    best = (c, r);
                    best_r = r;
                }
            }
        }
    }
    best
}

fn support(pts: &[Point2], c: Point2, r: f64) -> Vec<usize> {
    (0..pts.len()).filter(|&i| (pts[i].distance(c) - r).abs() <= 1e-9 * r.max(1e-300)).collect()
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut circle_bad = 0;
    for _ in 0..200 {
        let n = rng.gen_range(1..=30);
        let pts: Vec<Point2> = (0..n).map(|_| Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let c = min_covering_circle(&pts).unwrap();
        let (bc, br) = brute_force_circle(&pts);
        if support(&pts, c.center, c.radius()) != support(&pts, bc, br) {
            circle_bad += 1;
        }
    }

    let mut zone_bad = 0;
    for _ in 0..100 {
        let n = rng.gen_range(10..200);
        let t = Triangulation::build(&random_points(&mut rng, n), 0).unwrap();
        let p = Point2::new(rng.gen_range(0.01..0.99), rng.gen_range(0.01..0.99));
        let zone: HashSet<_> = t.conflict_zone(p).unwrap().into_iter().collect();
        let scan: HashSet<_> = t
            .cells()
            .filter(|&c| {
                let [a, b, d] = t.cell_corners(c).unwrap();
                incircle(a, b, d, p) >= 0.0
            })
            .collect();
        if zone != scan {
            zone_bad += 1;
        }
    }

    // Old cells: a random mesh; new cells: the same mesh with one vertex moved.
    let (mut l2_cells, mut l2_bad) = (0, 0);
    for _ in 0..50 {
        let n = rng.gen_range(5..20);
        let pts = random_points(&mut rng, n);
        let old_mesh = Triangulation::build(&pts, 0).unwrap();
        let mut moved = pts.clone();
        let k = rng.gen_range(4..moved.len());
        moved[k].0 = Point2::new(rng.gen_range(0.01..0.99), rng.gen_range(0.01..0.99));
        let new_mesh = Triangulation::build(&moved, 0).unwrap();
        let mut old = Stencil::new(1);
        let mut old_cells = Vec::new();
        for c in old_mesh.cells() {
            let corners = old_mesh.cell_corners(c).unwrap();
            let u = rng.gen_range(-2.0..2.0);
            old.push(None, corners, 0, &[u]);
            old_cells.push((corners, u));
        }
        let new: Vec<[Point2; 3]> = new_mesh.cells().map(|c| new_mesh.cell_corners(c).unwrap()).collect();
        let projected = project_l2(&old, &new).unwrap();
        let value_at = |p: Point2| {
            old_cells
                .iter()
                .find(|(c, _)| (0..3).all(|i| orient(c[i], c[(i + 1) % 3], p) >= 0.0))
                .map(|x| x.1)
                .unwrap()
        };
        for (cell, v) in new.iter().zip(&projected) {
            let samples = 4000;
            let mut sum = 0.0;
            let mut sq = 0.0;
            for _ in 0..samples {
                let (mut a, mut b): (f64, f64) = (rng.gen(), rng.gen());
                if a + b > 1.0 {
                    (a, b) = (1.0 - a, 1.0 - b);
                }
                let p = cell[0] + (cell[1] - cell[0]) * a + (cell[2] - cell[0]) * b;
                let u = value_at(p);
                sum += u;
                sq += u * u;
            }
            let mean = sum / samples as f64;
            let var = (sq / samples as f64 - mean * mean).max(0.0);
            let sigma = (var / samples as f64).sqrt();
            l2_cells += 1;
            if (v[0] - mean).abs() > 3.0 * sigma + 1e-9 {
                l2_bad += 1;
            }
        }
    }
    // Expected share outside 3 sigma is 0.27%.
    let allowed = (0.01 * l2_cells as f64).ceil() as usize;
    outcome(
        circle_bad == 0 && zone_bad == 0 && l2_bad <= allowed,
        format!(
            "covering circle {circle_bad}/200, conflict zone {zone_bad}/100, L2 cells outside 3 sigma {l2_bad}/{l2_cells}"
        ),
    )
}

fn criterion_10() -> Outcome {
    let mut shares = Vec::new();
    let mut last = 0.0;
    for dx in [0.1, 0.05] {
        let mut s = SimulationState::new(Benchmark::Star2d, dx, 2e-4, 3.0, ProjectionKind::LocalAverage, 1).unwrap();
        let mut total = StepTimes::default();
        while let Ok(m) = s.step_interface_only() {
            total.add(&m.times);
        }
        last = (total.coarse_bulk + total.refine_bulk) / total.remeshing();
        shares.push(format!(
            "dx {dx}: bulk {:.1}%, ensure {:.1}%, move {:.1}%",
            100.0 * last,
            100.0 * total.ensure / total.remeshing(),
            100.0 * total.moving / total.remeshing()
        ));
    }
    Outcome {
        pass: last >= 0.4,
        detail: format!("{} (reported)", shares.join("; ")),
        reported: true,
    }
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    let ((star, vortex), (circadv, mut quick)) = rayon::join(
        || rayon::join(star_run, vortex_run),
        || {
            rayon::join(circadv_runs, || {
                vec![(1, criterion_1()), (2, criterion_2()), (9, criterion_9()), (10, criterion_10())]
            })
        },
    );
    results.append(&mut quick);
    results.push((3, criterion_3(&star)));
    results.push((4, criterion_4(&star)));
    results.push((5, criterion_5(&star)));
    results.push((6, criterion_6(&vortex)));
    results.push((7, criterion_7(&circadv)));
    results.push((8, criterion_8(star.drift, vortex.drift, &circadv)));
    results.sort_by_key(|r| r.0);

    let mut failed = false;
    for (k, o) in &results {
        println!("criterion {k:2}: {} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed |= !o.pass && !o.reported;
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
