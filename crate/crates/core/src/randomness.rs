//! Seeded Brownian increments on uniform time grids.
//!
//! Paths are drawn from ChaCha8 keyed by a 64-bit seed. Path `k` of a batch
//! uses ChaCha stream `k`, so any subset of a batch can be regenerated in any
//! order, on any thread, and comes out bit-identical.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{Vector, MAX_DIM};

/// One realization of `d`-dimensional Brownian increments on
/// `t_k = k·T/n_steps`, `k = 0..=n_steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    dim: usize,
    horizon: f64,
    n_steps: usize,
    /// Row-major `n_steps × dim`; row `k` is `B_{t_{k+1}} − B_{t_k}`.
    increments: Vec<f64>,
    seed: u64,
    stream: u64,
}

impl BrownianPath {
    /// Builds a path from explicit increments (row-major `n_steps × dim`).
    pub fn from_increments(dim: usize, horizon: f64, increments: Vec<f64>, seed: u64) -> Result<Self> {
        validate(horizon, 1, dim)?;
        if increments.is_empty() || increments.len() % dim != 0 {
            return Err(Error::config("increment count must be a positive multiple of the dimension"));
        }
        let n_steps = increments.len() / dim;
        Ok(BrownianPath { dim, horizon, n_steps, increments, seed, stream: 0 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Index of this path within its seeded batch.
    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.horizon * k as f64 / self.n_steps as f64
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// Increment over `[t_k, t_{k+1}]`.
    #[inline]
    pub fn increment(&self, k: usize) -> Vector {
        Vector::from_slice(&self.increments[k * self.dim..(k + 1) * self.dim])
    }

    /// `B_{t_k}`; the zero vector at `k = 0`.
    pub fn cumulative(&self, k: usize) -> Vector {
        let mut acc = Vector::zeros(self.dim);
        for j in 0..k {
            acc += self.increment(j);
        }
        acc
    }

    /// `B_T`.
    pub fn terminal(&self) -> Vector {
        self.cumulative(self.n_steps)
    }

    /// Grid index of time `t`, or a configuration error if `t` is off-grid.
    pub fn step_index(&self, t: f64) -> Result<usize> {
        let x = t / self.dt();
        let k = libm::round(x);
        if !(k >= 0.0 && k <= self.n_steps as f64) || (x - k).abs() > 1e-9 * (1.0 + k) {
            return Err(Error::config(alloc::format!(
                "time {t} is not on the path grid (dt = {})",
                self.dt()
            )));
        }
        Ok(k as usize)
    }

    /// The same trajectory on a grid `factor` times coarser: each coarse
    /// increment is the sum of `factor` consecutive fine increments.
    pub fn coarsen(&self, factor: usize) -> Result<BrownianPath> {
        if factor == 0 || self.n_steps % factor != 0 {
            return Err(Error::config(alloc::format!(
                "coarsening factor {factor} does not divide n_steps = {}",
                self.n_steps
            )));
        }
        let n = self.n_steps / factor;
        let mut increments = alloc::vec![0.0; n * self.dim];
        for j in 0..n {
            for i in 0..factor {
                let fine = (j * factor + i) * self.dim;
                for c in 0..self.dim {
                    increments[j * self.dim + c] += self.increments[fine + c];
                }
            }
        }
        Ok(BrownianPath { n_steps: n, increments, ..self.clone() })
    }

    /// Scales all increments, e.g. by zero for the deterministic comparison.
    pub fn scaled(&self, amplitude: f64) -> BrownianPath {
        BrownianPath {
            increments: self.increments.iter().map(|v| v * amplitude).collect(),
            ..self.clone()
        }
    }
}

fn validate(horizon: f64, n_steps: usize, dim: usize) -> Result<()> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::config(alloc::format!("horizon T must be positive, got {horizon}")));
    }
    if n_steps == 0 {
        return Err(Error::config("n_steps must be at least 1"));
    }
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::config(alloc::format!("dimension must be in 1..={MAX_DIM}, got {dim}")));
    }
    Ok(())
}

/// Path 0 of the batch keyed by `seed`.
pub fn sample_path(seed: u64, horizon: f64, n_steps: usize, dim: usize) -> Result<BrownianPath> {
    sample_batch_path(seed, 0, horizon, n_steps, dim)
}

/// Path `index` of the batch keyed by `seed`. Independent of batch size.
pub fn sample_batch_path(
    seed: u64,
    index: u64,
    horizon: f64,
    n_steps: usize,
    dim: usize,
) -> Result<BrownianPath> {
    validate(horizon, n_steps, dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let scale = libm::sqrt(horizon / n_steps as f64);
    let increments = (0..n_steps * dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * scale
        })
        .collect();
    Ok(BrownianPath { dim, horizon, n_steps, increments, seed, stream: index })
}
