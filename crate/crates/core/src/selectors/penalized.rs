//! Coordinate descent for L1, SCAD and MCP penalized least squares.
//!
//! The objective is `(1/2n)||y - X b||^2 + sum_j P(|b_j|)`. Updates run on
//! the Gram form `G = X'X/n`, `c = X'y/n` so a sweep costs O(p^2) regardless
//! of n.

use ndarray::{Array1, Array2};

use crate::data::Dataset;
use crate::error::{McbError, Result};

pub const MAX_SWEEPS: usize = 10_000;
pub const TOLERANCE: f64 = 1e-7;
pub const GRID_SIZE: usize = 100;
pub const GRID_RATIO: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalty {
    L1,
    Scad { a: f64 },
    Mcp { gamma: f64 },
}

pub fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

/// Minimizer of `(v/2) b^2 - z b + SCAD_{lambda,a}(|b|)`.
pub fn scad_threshold(z: f64, v: f64, lambda: f64, a: f64) -> f64 {
    let az = z.abs();
    if az <= lambda * (1.0 + v) {
        soft_threshold(z, lambda) / v
    } else if az <= a * lambda * v {
        let b = (az * (a - 1.0) - a * lambda) / ((a - 1.0) * v - 1.0);
        b.copysign(z)
    } else {
        z / v
    }
}

/// Minimizer of `(v/2) b^2 - z b + MCP_{lambda,gamma}(|b|)`.
pub fn mcp_threshold(z: f64, v: f64, lambda: f64, gamma: f64) -> f64 {
    if z.abs() <= gamma * lambda * v {
        soft_threshold(z, lambda) / (v - 1.0 / gamma)
    } else {
        z / v
    }
}

impl Penalty {
    fn update(self, z: f64, v: f64, lambda: f64) -> f64 {
        match self {
            Penalty::L1 => soft_threshold(z, lambda) / v,
            Penalty::Scad { a } => scad_threshold(z, v, lambda, a),
            Penalty::Mcp { gamma } => mcp_threshold(z, v, lambda, gamma),
        }
    }

    /// Penalty value at `|b| = t`.
    pub fn value(self, t: f64, lambda: f64) -> f64 {
        let t = t.abs();
        match self {
            Penalty::L1 => lambda * t,
            Penalty::Scad { a } => {
                if t <= lambda {
                    lambda * t
                } else if t <= a * lambda {
                    (2.0 * a * lambda * t - t * t - lambda * lambda) / (2.0 * (a - 1.0))
                } else {
                    lambda * lambda * (a + 1.0) / 2.0
                }
            }
            Penalty::Mcp { gamma } => {
                if t <= gamma * lambda {
                    lambda * t - t * t / (2.0 * gamma)
                } else {
                    gamma * lambda * lambda / 2.0
                }
            }
        }
    }
}

/// Sufficient statistics of a (centered) least-squares problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub gram: Array2<f64>,
    pub xty: Array1<f64>,
    pub n: usize,
}

impl Problem {
    pub fn new(x: &Array2<f64>, y: &Array1<f64>) -> Self {
        let n = x.nrows();
        let nf = n as f64;
        Self {
            gram: x.t().dot(x) / nf,
            xty: x.t().dot(y) / nf,
            n,
        }
    }

    pub fn from_dataset(data: &Dataset) -> Self {
        Self::new(&data.x, &data.y)
    }

    pub fn p(&self) -> usize {
        self.xty.len()
    }

    /// Smallest lambda at which every coefficient is zero. Weights scale the
    /// per-coordinate penalty; infinite weights drop the coordinate.
    pub fn lambda_max(&self, weights: &[f64]) -> f64 {
        self.xty
            .iter()
            .zip(weights)
            .filter(|(_, w)| w.is_finite() && **w > 0.0)
            .map(|(c, w)| c.abs() / w)
            .fold(0.0, f64::max)
    }
}

/// Log-spaced descending grid from `lambda_max` to `GRID_RATIO * lambda_max`.
pub fn lambda_grid(lambda_max: f64) -> Vec<f64> {
    if lambda_max <= 0.0 {
        return vec![0.0];
    }
    let lo = (lambda_max * GRID_RATIO).ln();
    let hi = lambda_max.ln();
    (0..GRID_SIZE)
        .map(|i| {
            if i == 0 {
                lambda_max
            } else {
                (hi + (lo - hi) * i as f64 / (GRID_SIZE - 1) as f64).exp()
            }
        })
        .collect()
}

/// Runs coordinate descent in place from the warm start `beta`. Returns the
/// number of sweeps used.
pub fn coordinate_descent(
    problem: &Problem,
    penalty: Penalty,
    lambda: f64,
    weights: &[f64],
    beta: &mut Array1<f64>,
) -> Result<usize> {
    let p = problem.p();
    let g = &problem.gram;
    // gradient of the smooth part: c - G b
    let mut grad = &problem.xty - &g.dot(&*beta);
    for j in 0..p {
        if !weights[j].is_finite() && beta[j] != 0.0 {
            let old = beta[j];
            beta[j] = 0.0;
            for k in 0..p {
                grad[k] += old * g[[k, j]];
            }
        }
    }
    for sweep in 1..=MAX_SWEEPS {
        let mut max_change = 0.0f64;
        for j in 0..p {
            let w = weights[j];
            if !w.is_finite() {
                continue;
            }
            let v = g[[j, j]];
            if v <= 0.0 {
                continue;
            }
            let old = beta[j];
            let z = grad[j] + v * old;
            let new = penalty.update(z, v, lambda * w);
            if new != old {
                let delta = new - old;
                for k in 0..p {
                    grad[k] -= delta * g[[k, j]];
                }
                beta[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < TOLERANCE {
            return Ok(sweep);
        }
    }
    Err(McbError::NoConvergence(MAX_SWEEPS))
}

/// Coefficients at each grid value, warm-starting down the path.
pub fn solve_path(
    problem: &Problem,
    penalty: Penalty,
    weights: &[f64],
    grid: &[f64],
) -> Result<Vec<Array1<f64>>> {
    let mut beta = Array1::zeros(problem.p());
    let mut out = Vec::with_capacity(grid.len());
    for &lambda in grid {
        coordinate_descent(problem, penalty, lambda, weights, &mut beta)?;
        out.push(beta.clone());
    }
    Ok(out)
}

/// Coefficients at `lambda`, approached along the grid values above it.
pub fn solve_at(
    problem: &Problem,
    penalty: Penalty,
    weights: &[f64],
    grid: &[f64],
    lambda: f64,
) -> Result<Array1<f64>> {
    let mut beta = Array1::zeros(problem.p());
    for &l in grid.iter().filter(|&&l| l > lambda) {
        coordinate_descent(problem, penalty, l, weights, &mut beta)?;
    }
    coordinate_descent(problem, penalty, lambda, weights, &mut beta)?;
    Ok(beta)
}
