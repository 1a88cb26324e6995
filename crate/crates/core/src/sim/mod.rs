//! Path simulation: drifted Brownian motion, conditioned segments and their welding.

mod brownian;
mod factorization;
mod minimum;
mod oned;
mod segment;

pub use brownian::*;
pub use factorization::*;
pub use minimum::*;
pub use oned::*;
pub use segment::*;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    /// Step reduction factor near forbidden walls.
    pub wall_refine: f64,
    pub t_max: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub bridge_correction: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-3,
            wall_refine: 10.0,
            t_max: 10.0,
            n_samples: 10_000,
            seed: 0,
            bridge_correction: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_max > 0.0) || self.n_samples == 0 || !(self.wall_refine >= 1.0)
        {
            return Err(Error::precondition(
                "config needs dt > 0, t_max > 0, n_samples >= 1 and wall_refine >= 1",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WallEvent {
    pub wall: usize,
    pub time: f64,
    pub location: Vector,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub positions: Vec<Vector>,
    pub events: Vec<WallEvent>,
    /// Index of the welded piece each recorded point belongs to.
    pub segment_labels: Vec<usize>,
    /// Segment still active at the horizon.
    pub truncated: bool,
    /// Forced reflections at forbidden walls (step floor reached).
    pub reflections: usize,
}

impl PathSample {
    pub fn push(&mut self, t: f64, x: &[f64], label: usize) {
        self.times.push(t);
        self.positions.push(x.to_vec());
        self.segment_labels.push(label);
    }

    pub fn last(&self) -> Option<&Vector> {
        self.positions.last()
    }

    /// Position at time t by linear interpolation on the grid.
    pub fn at(&self, t: f64) -> Option<Vector> {
        let k = self.times.partition_point(|&s| s < t);
        if k == 0 {
            return self.positions.first().cloned();
        }
        if k >= self.times.len() {
            return None;
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 1.0 };
        Some(
            self.positions[k - 1]
                .iter()
                .zip(&self.positions[k])
                .map(|(a, b)| a + w * (b - a))
                .collect(),
        )
    }

    /// CSV rows (t, x_1..x_r, segment_label).
    pub fn to_csv_rows(&self) -> Vec<Vec<String>> {
        self.times
            .iter()
            .zip(&self.positions)
            .zip(&self.segment_labels)
            .map(|((t, x), l)| {
                let mut row = vec![format!("{t}")];
                row.extend(x.iter().map(|v| format!("{v}")));
                row.push(l.to_string());
                row
            })
            .collect()
    }
}

pub(crate) fn normal_vec<R: Rng + ?Sized>(rng: &mut R, n: usize, sd: f64) -> Vector {
    (0..n).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Integral over one step of the conditional mean of exp(-B) given the endpoints of a
/// Brownian bridge with variance rate v: three-point Gauss-Legendre in time.
pub fn bridge_exp_integral(a: f64, b: f64, h: f64, v: f64) -> f64 {
    const NODES: [f64; 3] = [0.112_701_665_379_258_3, 0.5, 0.887_298_334_620_741_7];
    const WEIGHTS: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
    let mut s = 0.0;
    for k in 0..3 {
        let u = NODES[k];
        s += WEIGHTS[k] * (-(a + (b - a) * u) + 0.5 * v * h * u * (1.0 - u)).exp();
    }
    s * h
}
