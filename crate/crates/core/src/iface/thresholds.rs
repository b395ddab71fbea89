use serde::{Deserialize, Serialize};

use super::{IfaceError, Interface};
use crate::dmesh::Triangulation;

/// Edge-length bounds steering bulk and interface adaptivity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub dx_min: f64,
    pub dx_gamma_min: f64,
    pub dx_gamma_max: f64,
    pub p: f64,
}

/// Nearest-rank percentile of `values` (`q` in percent). Sorts in place.
pub fn percentile(values: &mut [f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable_by(f64::total_cmp);
    let rank = ((q / 100.0) * values.len() as f64).ceil() as usize;
    Some(values[rank.clamp(1, values.len()) - 1])
}

impl Thresholds {
    /// Thresholds from the edge-length statistics `h_min`, `h_gamma_min`,
    /// `h_gamma_max`.
    pub fn from_lengths(h_min: f64, h_gamma_min: f64, h_gamma_max: f64) -> Self {
        // Smallest p with (1 + p) hmax >= 3 (1 - p) hmin.
        let solve = (3.0 * h_gamma_min - h_gamma_max) / (3.0 * h_gamma_min + h_gamma_max);
        let p = solve.max(0.1);
        Self {
            dx_min: 0.9 * h_min,
            dx_gamma_min: (1.0 - p) * h_gamma_min,
            dx_gamma_max: (1.0 + p) * h_gamma_max,
            p,
        }
    }
}

/// Thresholds for the current mesh: `h_min` is the 1% percentile of edges
/// with no interface endpoint, the interface bounds are the 1% and 99%
/// percentiles of interface edges.
pub fn compute_thresholds(t: &Triangulation, g: &Interface) -> Result<Thresholds, IfaceError> {
    if g.is_empty() {
        return Err(IfaceError::EmptyInterface);
    }
    let cycle = g.cycle();
    let mut gamma: Vec<f64> = cycle.iter().map(|&v| t.pos(v).distance(t.pos(g.next(v)))).collect();
    let mut bulk: Vec<f64> = t
        .raw_edges()
        .filter(|&(a, b)| !g.contains(a) && !g.contains(b))
        .map(|(a, b)| t.pos(a).distance(t.pos(b)))
        .collect();
    let gmin = percentile(&mut gamma, 1.0).expect("nonempty");
    let gmax = percentile(&mut gamma, 99.0).expect("nonempty");
    let hmin = percentile(&mut bulk, 1.0).unwrap_or(gmin);
    Ok(Thresholds::from_lengths(hmin, gmin, gmax))
}
