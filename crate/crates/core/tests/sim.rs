use ipmm::geom::Point2;
use ipmm::meshgen::generate_initial_mesh;
use ipmm::mmesh::ProjectionKind;
use ipmm::sim::{
    circle_deviation, indicator_l1_error, l1_error, set_cell_averages, set_indicator_averages, Benchmark, MotionField,
    SimulationState, StaticFv, TimeStepper,
};
use proptest::prelude::*;
use std::f64::consts::PI;

fn divergence(f: &MotionField, t: f64, p: Point2) -> f64 {
    let h = 1e-6;
    let dx = f.velocity(t, p + Point2::new(h, 0.0)).x - f.velocity(t, p - Point2::new(h, 0.0)).x;
    let dy = f.velocity(t, p + Point2::new(0.0, h)).y - f.velocity(t, p - Point2::new(0.0, h)).y;
    (dx + dy) / (2.0 * h)
}

#[test]
fn star_field_is_radial_and_rests_at_whole_times() {
    let f = Benchmark::Star2d.field(3.0);
    for t in [0.0, 1.0, 2.0, 3.0] {
        assert!(f.velocity(t, Point2::new(0.3, -0.2)).norm() < 1e-15);
    }
    let p = Point2::new(0.4, 0.1);
    let v = f.velocity(0.3, p);
    assert!(v.cross(p).abs() < 1e-15);
    // t = 0.25: -sin(pi/2) cos(2 atan2) x with atan2 = 0 on the x axis.
    let v = f.velocity(0.25, Point2::new(0.5, 0.0));
    assert!((v.x + 0.5).abs() < 1e-15 && v.y == 0.0);
}

#[test]
fn vortex_field_reverses() {
    let f = Benchmark::Vortex2d.field(8.0);
    let p = Point2::new(0.3, 0.6);
    assert!(f.velocity(4.0, p).norm() < 1e-15);
    for t in [0.0, 1.0, 2.5] {
        let (a, b) = (f.velocity(t, p), f.velocity(8.0 - t, p));
        assert!((a + b).norm() < 1e-14);
    }
    // Walls of the unit square are impermeable.
    assert!(f.velocity(0.0, Point2::new(0.0, 0.4)).x.abs() < 1e-15);
    assert!(f.velocity(0.0, Point2::new(0.7, 1.0)).y.abs() < 1e-15);
}

proptest! {
    #[test]
    fn fields_are_divergence_free(x in 0.05f64..0.95, y in 0.05f64..0.95, t in 0.0f64..8.0) {
        for f in [Benchmark::Vortex2d.field(8.0), Benchmark::Circadv.field(1.0)] {
            prop_assert!(divergence(&f, t, Point2::new(x, y)).abs() < 1e-6);
        }
    }

    #[test]
    fn rotation_is_tangential(x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let p = Point2::new(x, y);
        let v = Benchmark::Circadv.field(1.0).velocity(0.0, p);
        prop_assert!(v.dot(p).abs() < 1e-12);
        prop_assert!((v.norm() - p.norm()).abs() < 1e-12);
    }
}

fn static_fv(dx: f64, steps: u64) -> StaticFv {
    let tri = generate_initial_mesh(Benchmark::Circadv.domain(), dx, 1, 1).unwrap();
    StaticFv::new(tri, Benchmark::Circadv.field(1.0), TimeStepper::new(0.0, 1e-3, steps as f64 * 1e-3))
}

#[test]
fn fv_preserves_constants() {
    let mut s = static_fv(0.5, 50);
    set_cell_averages(&mut s.tri, |_| 2.5);
    assert!(s.courant() <= 1.0);
    while s.step().is_ok() {}
    for c in s.tri.cells() {
        assert!((s.tri.data(c).unwrap()[0] - 2.5).abs() < 1e-11);
    }
}

#[test]
fn fv_conserves_mass_and_bounds() {
    let mut s = static_fv(0.5, 200);
    set_indicator_averages(&mut s.tri, Benchmark::Circadv, 0.0);
    let m0 = s.tri.total_mass()[0];
    while s.step().is_ok() {}
    let m1 = s.tri.total_mass()[0];
    assert!((m1 + s.boundary_outflow - m0).abs() <= 1e-12 * m0);
    for c in s.tri.cells() {
        let u = s.tri.data(c).unwrap()[0];
        assert!((-1e-12..=1.0 + 1e-12).contains(&u), "{u}");
    }
}

#[test]
fn l1_of_exact_data() {
    let mut t = generate_initial_mesh(Benchmark::Star2d.domain(), 0.2, 1, 1).unwrap();
    set_cell_averages(&mut t, |_| 1.0);
    assert!(l1_error(&t, |_| 1.0) < 1e-12);
    let area: f64 = t.cells().map(|c| t.cell_area(c).unwrap()).sum();
    assert!((l1_error(&t, |_| 0.0) - area).abs() < 1e-10);
    // The disk of radius 0.5 has area pi/4.
    set_cell_averages(&mut t, |_| 0.0);
    assert!((indicator_l1_error(&t, Benchmark::Star2d, 0.0) - PI / 4.0).abs() < 1e-12);
}

#[test]
fn deviation_of_exact_circle() {
    let pts: Vec<_> = (0..12)
        .map(|k| {
            let a = k as f64 * PI / 6.0;
            Point2::new(1.0 + 2.0 * a.cos(), 2.0 * a.sin())
        })
        .collect();
    let (lo, hi, mean) = circle_deviation(&pts, Point2::new(1.0, 0.0), 1.5);
    for d in [lo, hi, mean] {
        assert!((d - 0.5).abs() < 1e-14);
    }
}

#[test]
fn interface_only_run_conserves_mass() {
    let mut s = SimulationState::new(Benchmark::Star2d, 0.1, 2e-3, 0.2, ProjectionKind::LocalAverage, 1).unwrap();
    while s.step_interface_only().is_ok() {}
    assert!(s.relative_drift() <= 1e-8, "{}", s.relative_drift());
    assert!(s.mesh.check_preservation().is_empty());
}

#[test]
fn ipmm_fv_keeps_indicator_sharp() {
    let mut s = SimulationState::new(Benchmark::Circadv, 0.5, 1e-3, 0.2, ProjectionKind::LocalAverage, 1).unwrap();
    let m0 = s.mass0;
    while s.fv_step_ipmm().is_ok() {}
    assert!(s.relative_drift() <= 1e-8);
    let m1 = s.mesh.tri.total_mass()[0];
    assert!((m1 - m0).abs() <= 1e-10 * m0);
    // Outside cells stay empty and inside cells share one value near 1.
    let inside: Vec<f64> = s
        .mesh
        .tri
        .cells()
        .filter(|&c| s.mesh.tri.tag(c) == Ok(ipmm::iface::INSIDE))
        .map(|c| s.mesh.tri.data(c).unwrap()[0])
        .collect();
    for c in s.mesh.tri.cells() {
        if s.mesh.tri.tag(c) != Ok(ipmm::iface::INSIDE) {
            assert!(s.mesh.tri.data(c).unwrap()[0].abs() < 1e-12);
        }
    }
    let (lo, hi) = inside.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &u| (a.min(u), b.max(u)));
    assert!(hi - lo < 1e-9 && (lo - 1.0).abs() < 1e-2, "{lo} {hi}");
}
