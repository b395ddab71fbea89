use std::collections::HashSet;

use ipmm::dmesh::{Location, MeshError, Triangulation, VertexKind, Violation};
use ipmm::geom::{in_circle, orient2d, triangle_area, Orientation, Point2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<(Point2, VertexKind)> {
    (0..n)
        .map(|_| (Point2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)), VertexKind::Bulk))
        .collect()
}

/// Unit square corners plus random interior points.
fn boxed_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<(Point2, VertexKind)> {
    let mut pts = vec![
        (Point2::new(0., 0.), VertexKind::Boundary),
        (Point2::new(1., 0.), VertexKind::Boundary),
        (Point2::new(1., 1.), VertexKind::Boundary),
        (Point2::new(0., 1.), VertexKind::Boundary),
    ];
    for _ in 0..n {
        pts.push((Point2::new(rng.gen_range(0.01..0.99), rng.gen_range(0.01..0.99)), VertexKind::Bulk));
    }
    pts
}

/// O(n·cells) empty-circumcircle check over all vertices.
fn brute_force_delaunay(t: &Triangulation) -> bool {
    let pts: Vec<Point2> = t.vertices().map(|v| t.position(v).unwrap()).collect();
    t.cells().all(|c| {
        let [a, b, d] = t.cell_corners(c).unwrap();
        pts.iter()
            .all(|&p| in_circle(a, b, d, p).unwrap() != Orientation::Positive)
    })
}

fn cell_set(t: &Triangulation) -> HashSet<Vec<(u64, u64)>> {
    t.cells()
        .map(|c| {
            let mut k: Vec<(u64, u64)> = t.cell_corners(c).unwrap().iter().map(|p| p.to_bits()).collect();
            k.sort();
            k
        })
        .collect()
}

#[test]
fn build_random_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let pts = random_points(&mut rng, 200);
        let t = Triangulation::build(&pts, 1).unwrap();
        assert!(t.validate_delaunay().is_empty());
        assert!(brute_force_delaunay(&t));
        let b = t
            .vertices()
            .filter(|&v| t.kind(v).unwrap() == VertexKind::Boundary)
            .count();
        assert_eq!(t.num_cells(), 2 * 200 - b - 2);
    }
}

#[test]
fn build_lattice_with_cocircular_points() {
    let mut pts = Vec::new();
    for i in 0..12 {
        for j in 0..12 {
            pts.push((Point2::new(i as f64, j as f64), VertexKind::Bulk));
        }
    }
    let t = Triangulation::build(&pts, 0).unwrap();
    assert!(t.validate_delaunay().is_empty());
    assert!(brute_force_delaunay(&t));
    assert_eq!(t.num_cells(), 2 * 11 * 11);
}

#[test]
fn locate_contains_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let t = Triangulation::build(&boxed_points(&mut rng, 300), 1).unwrap();
    for _ in 0..1000 {
        let p = Point2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
        let Location::Inside(c) = t.locate(p) else {
            panic!("interior point reported outside");
        };
        let [a, b, d] = t.cell_corners(c).unwrap();
        assert_ne!(orient2d(a, b, p), Orientation::Negative);
        assert_ne!(orient2d(b, d, p), Orientation::Negative);
        assert_ne!(orient2d(d, a, p), Orientation::Negative);
    }
    assert_eq!(t.locate(Point2::new(-0.5, 0.5)), Location::OutsideHull);
}

#[test]
fn conflict_zone_matches_full_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let t = Triangulation::build(&boxed_points(&mut rng, 60), 1).unwrap();
        for _ in 0..5 {
            let p = Point2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            let mut zone: Vec<_> = t.conflict_zone(p).unwrap();
            let mut scan: Vec<_> = t
                .cells()
                .filter(|&c| {
                    let [a, b, d] = t.cell_corners(c).unwrap();
                    in_circle(a, b, d, p).unwrap() != Orientation::Negative
                })
                .collect();
            zone.sort();
            scan.sort();
            assert_eq!(zone, scan);
        }
    }
}

#[test]
fn conflict_zone_includes_cocircular_cells() {
    // Both inner cells share the circumcircle x² + y² = 25, which passes through (3, 4).
    let pts: Vec<_> = [(-5., 0.), (0., -5.), (5., 0.), (0., 5.), (0., -10.), (0., 10.), (10.5, 0.), (-10.5, 0.)]
        .iter()
        .map(|&(x, y)| (Point2::new(x, y), VertexKind::Bulk))
        .collect();
    let t = Triangulation::build(&pts, 0).unwrap();
    let p = Point2::new(3., 4.);
    let zone = t.conflict_zone(p).unwrap();
    let inner: Vec<_> = t
        .cells()
        .filter(|&c| {
            t.cell_corners(c)
                .unwrap()
                .iter()
                .all(|q| q.norm_squared() == 25.0)
        })
        .collect();
    assert_eq!(inner.len(), 2);
    for c in inner {
        assert!(zone.contains(&c));
    }
    assert_eq!(t.conflict_zone(Point2::new(90., 90.)), Err(MeshError::OutsideHull));
}

#[test]
fn sequential_insertions_stay_delaunay() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut t = Triangulation::build(&boxed_points(&mut rng, 0), 1).unwrap();
    for _ in 0..500 {
        let p = Point2::new(rng.gen_range(0.001..0.999), rng.gen_range(0.001..0.999));
        let area_before: f64 = t.cells().map(|c| t.cell_area(c).unwrap()).sum();
        let before: Vec<_> = t.conflict_zone(p).unwrap();
        let before_area: f64 = before.iter().map(|&c| t.cell_area(c).unwrap()).sum();
        let ins = t.insert(p, VertexKind::Bulk).unwrap();
        let mut destroyed = ins.destroyed.clone();
        let mut zone = before.clone();
        destroyed.sort();
        zone.sort();
        assert_eq!(destroyed, zone);
        let created_area: f64 = ins.created.iter().map(|&c| t.cell_area(c).unwrap()).sum();
        assert!((created_area - before_area).abs() <= 1e-10 * before_area);
        let area_after: f64 = t.cells().map(|c| t.cell_area(c).unwrap()).sum();
        assert!((area_after - area_before).abs() <= 1e-10);
        assert!(t.validate_delaunay().is_empty());
    }
    assert!(brute_force_delaunay(&t));
}

#[test]
fn remove_fan_matches_rebuild() {
    let outer = [(0., 0.), (1.1, 0.1), (1.0, 1.2), (-0.1, 0.9)];
    let mut pts: Vec<_> = outer.iter().map(|&(x, y)| (Point2::new(x, y), VertexKind::Bulk)).collect();
    pts.push((Point2::new(0.5, 0.5), VertexKind::Bulk));
    let mut t = Triangulation::build(&pts, 0).unwrap();
    let v = t
        .vertices()
        .find(|&v| t.kind(v).unwrap() == VertexKind::Bulk)
        .unwrap();
    t.remove(v).unwrap();
    let rebuilt = Triangulation::build(&pts[..4], 0).unwrap();
    assert_eq!(cell_set(&t), cell_set(&rebuilt));
}

#[test]
fn remove_then_reinsert_restores_cells() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut t = Triangulation::build(&boxed_points(&mut rng, 150), 1).unwrap();
    let original = cell_set(&t);
    let bulk: Vec<_> = t
        .vertices()
        .filter(|&v| t.kind(v).unwrap() == VertexKind::Bulk)
        .collect();
    for &v in bulk.iter().take(50) {
        let p = t.position(v).unwrap();
        let r = t.remove(v).unwrap();
        let hole: f64 = r.created.iter().map(|&c| t.cell_area(c).unwrap()).sum();
        assert!(hole > 0.0);
        assert!(t.validate_delaunay().is_empty());
        let ins = t.insert(p, VertexKind::Bulk).unwrap();
        assert_ne!(ins.vertex, v);
        assert_eq!(cell_set(&t), original);
    }
}

#[test]
fn random_mixed_operations() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut t = Triangulation::build(&boxed_points(&mut rng, 80), 1).unwrap();
    let hull = t.hull_area();
    for _ in 0..2000 {
        let bulk: Vec<_> = t
            .vertices()
            .filter(|&v| t.kind(v).unwrap() == VertexKind::Bulk)
            .collect();
        match rng.gen_range(0..3) {
            0 => {
                let p = Point2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
                match t.insert(p, VertexKind::Bulk) {
                    Ok(_) | Err(MeshError::OnHullBoundary) => {}
                    Err(e) => panic!("{e}"),
                }
            }
            1 if !bulk.is_empty() => {
                let v = bulk[rng.gen_range(0..bulk.len())];
                t.remove(v).unwrap();
            }
            _ if !bulk.is_empty() => {
                let v = bulk[rng.gen_range(0..bulk.len())];
                let p = t.position(v).unwrap();
                let q = Point2::new(
                    (p.x + rng.gen_range(-0.05..0.05)).clamp(0.001, 0.999),
                    (p.y + rng.gen_range(-0.05..0.05)).clamp(0.001, 0.999),
                );
                t.relocate(v, q).unwrap();
            }
            _ => {}
        }
        let v = t.validate_delaunay();
        assert!(v.is_empty(), "{v:?}");
        let area: f64 = t.cells().map(|c| triangle_area_of(&t, c)).sum();
        assert!((area - hull).abs() <= 1e-10 * hull);
    }
    assert!(brute_force_delaunay(&t));
}

fn triangle_area_of(t: &Triangulation, c: ipmm::dmesh::CellId) -> f64 {
    let [a, b, d] = t.cell_corners(c).unwrap();
    triangle_area(a, b, d)
}

#[test]
fn flipped_diagonal_reports_exactly_two_cells() {
    let pts: Vec<_> = [(0., 0.), (1., 0.), (1.2, 1.0), (0., 0.8)]
        .iter()
        .map(|&(x, y)| (Point2::new(x, y), VertexKind::Bulk))
        .collect();
    let mut t = Triangulation::build(&pts, 0).unwrap();
    let c = t.cells().next().unwrap();
    let side = (0..3).find(|&i| t.cell(c).unwrap().neighbors[i].is_some()).unwrap();
    t.flip_edge(c, side).unwrap();
    let v = t.validate_delaunay();
    let cells: HashSet<_> = v
        .iter()
        .map(|x| match x {
            Violation::NotDelaunay { cell, .. } => *cell,
            other => panic!("unexpected {other:?}"),
        })
        .collect();
    assert_eq!(v.len(), 2);
    assert_eq!(cells.len(), 2);
    assert!(!brute_force_delaunay(&t));
}

#[test]
fn stale_handles_are_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut t = Triangulation::build(&boxed_points(&mut rng, 20), 1).unwrap();
    let v = t
        .vertices()
        .find(|&v| t.kind(v).unwrap() == VertexKind::Bulk)
        .unwrap();
    let cells = t.incident_cells(v).unwrap();
    t.remove(v).unwrap();
    assert_eq!(t.position(v), Err(MeshError::UnknownVertex));
    for c in cells {
        assert_eq!(t.cell(c), Err(MeshError::UnknownCell));
    }
    let b = t
        .vertices()
        .find(|&v| t.kind(v).unwrap() == VertexKind::Boundary)
        .unwrap();
    assert_eq!(t.remove(b), Err(MeshError::BoundaryVertex));
    assert_eq!(t.relocate(b, Point2::new(0.5, 0.5)).unwrap_err(), MeshError::BoundaryVertex);
}
