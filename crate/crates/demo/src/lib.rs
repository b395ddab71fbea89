//! wasm-bindgen wrapper around a benchmark simulation for the browser page
//! in `www/`.

use ipmm::geom::Point2;
use ipmm::iface::IfaceError;
use ipmm::mmesh::ProjectionKind;
use ipmm::sim::{Benchmark, SimulationState};
use wasm_bindgen::prelude::*;

const MAX_SPLITS: u32 = 8;

#[wasm_bindgen]
pub struct Demo {
    state: SimulationState,
    dx: f64,
}

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
impl Demo {
    /// `benchmark` is `star2d` or `vortex2d`.
    #[wasm_bindgen(constructor)]
    pub fn new(benchmark: &str, dx: f64) -> Result<Demo, JsError> {
        let b = match benchmark {
            "star2d" => Benchmark::Star2d,
            "vortex2d" => Benchmark::Vortex2d,
            other => return Err(JsError::new(&format!("unknown benchmark {other}"))),
        };
        if !(dx >= 0.01 && dx <= 0.5) {
            return Err(JsError::new("dx must lie in [0.01, 0.5]"));
        }
        let dt = if b == Benchmark::Star2d { 2e-3 } else { 1e-3 };
        let state =
            SimulationState::new(b, dx, dt, b.default_t_end(), ProjectionKind::LocalAverage, 1).map_err(js)?;
        Ok(Demo { state, dx })
    }

    /// Advances up to `n` steps; returns the number taken.
    pub fn step(&mut self, n: u32) -> Result<u32, JsError> {
        let mut k = 0;
        while k < n && !self.state.stepper.finished() {
            self.state.step_interface_only().map_err(js)?;
            k += 1;
        }
        Ok(k)
    }

    /// Pushes the interface away from `(x, y)` with a Gaussian bump of
    /// radius `3·dx`. Large pushes are split until each move is admissible.
    pub fn push(&mut self, x: f64, y: f64, strength: f64) -> Result<u32, JsError> {
        let c = Point2::new(x, y);
        let r = 3.0 * self.dx;
        let bump = move |p: Point2, s: f64| {
            let d = p - c;
            let n = d.norm();
            if n == 0.0 {
                return p;
            }
            p + d * (s * (-(n * n) / (r * r)).exp() / n)
        };
        let mut parts = 1u32;
        loop {
            let before = self.state.mesh.clone();
            let s = strength * self.dx / f64::from(parts);
            let mut result = Ok(());
            for _ in 0..parts {
                result = self.state.mesh.move_interface_by(|p| bump(p, s)).map(|_| ());
                if result.is_err() {
                    break;
                }
            }
            match result {
                Ok(()) => break,
                Err(IfaceError::MoveTooFar { .. }) if parts < 1 << MAX_SPLITS => {
                    self.state.mesh = before;
                    parts *= 2;
                }
                Err(e) => {
                    self.state.mesh = before;
                    return Err(js(e));
                }
            }
        }
        self.state.mesh.refine_interface().map_err(js)?;
        self.state.mesh.coarsen_interface().map_err(js)?;
        Ok(parts)
    }

    /// Cell corners, six numbers per cell.
    pub fn triangles(&self) -> Vec<f64> {
        let t = &self.state.mesh.tri;
        t.cells()
            .flat_map(|c| t.cell_corners(c).expect("live cell"))
            .flat_map(|p| [p.x, p.y])
            .collect()
    }

    /// Phase tag per cell, in the order of `triangles`.
    pub fn phases(&self) -> Vec<u8> {
        let t = &self.state.mesh.tri;
        t.cells().map(|c| t.tag(c).expect("live cell")).collect()
    }

    /// Interface polygon, two numbers per vertex.
    pub fn interface(&self) -> Vec<f64> {
        self.state.mesh.polygon().into_iter().flat_map(|p| [p.x, p.y]).collect()
    }

    /// Domain as `[min_x, min_y, max_x, max_y]`.
    pub fn bounds(&self) -> Vec<f64> {
        let t = &self.state.mesh.tri;
        let (mut lo, mut hi) = (Point2::new(f64::INFINITY, f64::INFINITY), Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for v in t.vertices() {
            let p = t.position(v).expect("live vertex");
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        vec![lo.x, lo.y, hi.x, hi.y]
    }

    pub fn time(&self) -> f64 {
        self.state.t()
    }

    pub fn finished(&self) -> bool {
        self.state.stepper.finished()
    }

    pub fn cells(&self) -> usize {
        self.state.mesh.tri.num_cells()
    }

    pub fn length(&self) -> f64 {
        self.state.mesh.interface_measures().length
    }

    pub fn area(&self) -> f64 {
        self.state.mesh.interface_measures().enclosed_area
    }
}
