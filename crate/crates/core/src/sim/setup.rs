use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use super::MotionField;
use crate::geom::Point2;
use crate::grid::BBox;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Benchmark {
    Star2d,
    Vortex2d,
    Circadv,
}

/// Sliced disk: radius 1 around (0, 2) with a slot of width 0.3 opening
/// downward and reaching up to y = 2.2.
pub const DISK_CENTER: Point2 = Point2::new(0.0, 2.0);
pub const DISK_RADIUS: f64 = 1.0;
pub const SLOT_HALF_WIDTH: f64 = 0.15;
pub const SLOT_TOP: f64 = 2.2;

impl Benchmark {
    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Star2d => "star2d",
            Benchmark::Vortex2d => "vortex2d",
            Benchmark::Circadv => "circadv",
        }
    }

    pub fn domain(self) -> BBox {
        let (lo, hi) = match self {
            Benchmark::Star2d => (-1.0, 1.0),
            Benchmark::Vortex2d => (0.0, 1.0),
            Benchmark::Circadv => (-4.0, 4.0),
        };
        BBox {
            min: Point2::new(lo, lo),
            max: Point2::new(hi, hi),
        }
    }

    pub fn default_t_end(self) -> f64 {
        match self {
            Benchmark::Star2d => 3.0,
            Benchmark::Vortex2d => 8.0,
            Benchmark::Circadv => FRAC_PI_2,
        }
    }

    pub fn default_dt(self) -> f64 {
        match self {
            Benchmark::Star2d => 2e-4,
            Benchmark::Vortex2d | Benchmark::Circadv => 1e-4,
        }
    }

    pub fn field(self, t_end: f64) -> MotionField {
        match self {
            Benchmark::Star2d => MotionField::Star2d,
            Benchmark::Vortex2d => MotionField::Vortex2d { t_end },
            Benchmark::Circadv => MotionField::Circadv,
        }
    }

    /// The initial circle, if the benchmark starts from one.
    pub fn circle(self) -> Option<(Point2, f64)> {
        match self {
            Benchmark::Star2d => Some((Point2::new(0.0, 0.0), 0.5)),
            Benchmark::Vortex2d => Some((Point2::new(0.5, 0.75), 0.15)),
            Benchmark::Circadv => None,
        }
    }

    /// Initial interface polygon with edges no longer than `spacing`.
    pub fn initial_polygon(self, spacing: f64) -> Vec<Point2> {
        match self.circle() {
            Some((c, r)) => circle_polygon(c, r, spacing),
            None => sliced_disk_polygon(spacing),
        }
    }

    /// Exact indicator of the inside phase at time `t`.
    pub fn exact(self, t: f64, p: Point2) -> f64 {
        let inside = match self {
            Benchmark::Circadv => {
                // Undo the counterclockwise rotation by t.
                let (s, c) = t.sin_cos();
                sliced_disk_contains(Point2::new(c * p.x + s * p.y, -s * p.x + c * p.y))
            }
            _ => {
                let (c, r) = self.circle().expect("circle benchmark");
                p.distance_squared(c) <= r * r
            }
        };
        if inside {
            1.0
        } else {
            0.0
        }
    }
}

/// Regular polygon inscribed in the circle with edges of length at most `spacing`.
pub fn circle_polygon(center: Point2, radius: f64, spacing: f64) -> Vec<Point2> {
    let n = ((TAU * radius / spacing).ceil() as usize).max(3);
    (0..n)
        .map(|k| {
            let a = TAU * k as f64 / n as f64;
            Point2::new(center.x + radius * a.cos(), center.y + radius * a.sin())
        })
        .collect()
}

pub fn sliced_disk_contains(p: Point2) -> bool {
    p.distance_squared(DISK_CENTER) <= DISK_RADIUS * DISK_RADIUS && !(p.x.abs() < SLOT_HALF_WIDTH && p.y < SLOT_TOP)
}

fn push_segment(out: &mut Vec<Point2>, a: Point2, b: Point2, spacing: f64) {
    let n = ((a.distance(b) / spacing).ceil() as usize).max(1);
    for k in 0..n {
        let s = k as f64 / n as f64;
        out.push(a + (b - a) * s);
    }
}

/// Counterclockwise boundary of the sliced disk.
pub fn sliced_disk_polygon(spacing: f64) -> Vec<Point2> {
    let half = SLOT_HALF_WIDTH / DISK_RADIUS;
    let start = -FRAC_PI_2 + half.asin();
    let sweep = 2.0 * PI - 2.0 * half.asin();
    let n = ((sweep * DISK_RADIUS / spacing).ceil() as usize).max(2);
    let mut out = Vec::new();
    for k in 0..=n {
        let a = start + sweep * k as f64 / n as f64;
        out.push(DISK_CENTER + Point2::new(a.cos(), a.sin()) * DISK_RADIUS);
    }
    // The arc ends at the left slot corner; walk up, across and down.
    let left = *out.last().expect("arc");
    let right = out[0];
    out.pop();
    let tl = Point2::new(-SLOT_HALF_WIDTH, SLOT_TOP);
    let tr = Point2::new(SLOT_HALF_WIDTH, SLOT_TOP);
    push_segment(&mut out, left, tl, spacing);
    push_segment(&mut out, tl, tr, spacing);
    push_segment(&mut out, tr, right, spacing);
    out
}
