//! Uniform box grids `[−L, L]^d` and scalar fields sampled on them.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{Vector, MAX_DIM};

/// Scalar function evaluable at arbitrary points.
pub trait ScalarField: Sync {
    fn eval(&self, x: &Vector) -> f64;
}

impl<F: Fn(&Vector) -> f64 + Sync> ScalarField for F {
    fn eval(&self, x: &Vector) -> f64 {
        self(x)
    }
}

/// Node set `{−L + i·h : i = 0..=2L/h}^d`; axis 0 varies fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    half_width: f64,
    step: f64,
    per_axis: usize,
}

impl Grid {
    /// Fails unless `L > 0`, `h > 0` and `L/h` is an integer.
    pub fn new(dim: usize, half_width: f64, step: f64) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::config(alloc::format!("dimension must be in 1..={MAX_DIM}, got {dim}")));
        }
        if !(half_width > 0.0 && step > 0.0) || !half_width.is_finite() || !step.is_finite() {
            return Err(Error::config("box half-width and grid step must be positive"));
        }
        let ratio = half_width / step;
        let cells = libm::round(ratio);
        if (ratio - cells).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::config(alloc::format!("L/h not integral (L = {half_width}, h = {step})")));
        }
        Ok(Grid { dim, half_width, step, per_axis: 2 * cells as usize + 1 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of one node (midpoint rule on the dual cells).
    pub fn cell_volume(&self) -> f64 {
        libm::pow(self.step, self.dim as f64)
    }

    #[inline]
    pub fn coordinate(&self, axis_index: usize) -> f64 {
        -self.half_width + axis_index as f64 * self.step
    }

    #[inline]
    pub fn multi_index(&self, mut i: usize) -> [usize; MAX_DIM] {
        let mut m = [0usize; MAX_DIM];
        for c in m.iter_mut().take(self.dim) {
            *c = i % self.per_axis;
            i /= self.per_axis;
        }
        m
    }

    #[inline]
    pub fn flat_index(&self, m: &[usize]) -> usize {
        let mut i = 0;
        for c in (0..self.dim).rev() {
            i = i * self.per_axis + m[c];
        }
        i
    }

    #[inline]
    pub fn point(&self, i: usize) -> Vector {
        let m = self.multi_index(i);
        let mut x = Vector::zeros(self.dim);
        for c in 0..self.dim {
            x[c] = self.coordinate(m[c]);
        }
        x
    }

    pub fn points(&self) -> impl Iterator<Item = Vector> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    pub fn contains(&self, x: &Vector) -> bool {
        x.as_slice().iter().all(|c| c.abs() <= self.half_width)
    }

    /// Calls `f(i, j, |x_i − x_j|)` once for every unordered node pair with
    /// `0 < |x_i − x_j| ≤ radius`.
    pub fn for_each_pair_within(&self, radius: f64, mut f: impl FnMut(usize, usize, f64)) {
        let reach = libm::floor(radius / self.step + 1e-9) as isize;
        let n = self.per_axis as isize;
        let mut offsets: Vec<([isize; MAX_DIM], f64)> = Vec::new();
        let mut off = [-reach; MAX_DIM];
        for c in self.dim..MAX_DIM {
            off[c] = 0;
        }
        loop {
            // Lexicographically positive offsets, compared from the slowest axis.
            let mut positive = false;
            for c in (0..self.dim).rev() {
                if off[c] != 0 {
                    positive = off[c] > 0;
                    break;
                }
            }
            if positive {
                let d2: f64 = (0..self.dim).map(|c| { let d = off[c] as f64 * self.step; d * d }).sum();
                let dist = libm::sqrt(d2);
                if dist <= radius * (1.0 + 1e-12) {
                    offsets.push((off, dist));
                }
            }
            let mut c = 0;
            loop {
                off[c] += 1;
                if off[c] <= reach {
                    break;
                }
                off[c] = -reach;
                c += 1;
                if c == self.dim {
                    break;
                }
            }
            if c == self.dim {
                break;
            }
        }
        for i in 0..self.len() {
            let m = self.multi_index(i);
            'offsets: for (o, dist) in &offsets {
                let mut mj = [0usize; MAX_DIM];
                for c in 0..self.dim {
                    let v = m[c] as isize + o[c];
                    if v < 0 || v >= n {
                        continue 'offsets;
                    }
                    mj[c] = v as usize;
                }
                f(i, self.flat_index(&mj), *dist);
            }
        }
    }
}

/// A scalar field sampled at every node of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::config(alloc::format!(
                "expected {} node values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::config(alloc::format!("non-finite value at node {i}")));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        GridFunction { grid, values: alloc::vec![0.0; grid.len()] }
    }

    /// Samples `f` at every node.
    pub fn sample(grid: Grid, f: &(impl ScalarField + ?Sized)) -> Self {
        GridFunction { grid, values: grid.points().map(|x| f.eval(&x)).collect() }
    }

    pub(crate) fn from_values_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        GridFunction { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction { grid: self.grid, values: self.values.iter().map(|v| f(*v)).collect() }
    }

    /// Pointwise `self − other` on the same grid.
    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        debug_assert_eq!(self.grid, other.grid);
        GridFunction {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Partial derivative along `axis` at node `i`: central differences at
    /// interior nodes, one-sided on the box faces.
    pub fn partial(&self, i: usize, axis: usize) -> f64 {
        let g = &self.grid;
        let mut m = g.multi_index(i);
        let k = m[axis];
        let h = g.step;
        let last = g.per_axis - 1;
        let at = |m: &[usize; MAX_DIM]| self.values[g.flat_index(m)];
        if k > 0 && k < last {
            m[axis] = k + 1;
            let up = at(&m);
            m[axis] = k - 1;
            (up - at(&m)) / (2.0 * h)
        } else if k == 0 {
            let here = self.values[i];
            m[axis] = 1;
            (at(&m) - here) / h
        } else {
            let here = self.values[i];
            m[axis] = last - 1;
            (here - at(&m)) / h
        }
    }

    pub fn gradient(&self, i: usize) -> Vector {
        let mut v = Vector::zeros(self.grid.dim);
        for axis in 0..self.grid.dim {
            v[axis] = self.partial(i, axis);
        }
        v
    }

    /// Multilinear interpolation; points outside the box are an error.
    pub fn interpolate(&self, x: &Vector) -> Result<f64> {
        let g = &self.grid;
        if !g.contains(x) || !x.is_finite() {
            let mut point = [0.0; MAX_DIM];
            point[..g.dim].copy_from_slice(x.as_slice());
            return Err(Error::OutOfBox { point, dim: g.dim });
        }
        let mut base = [0usize; MAX_DIM];
        let mut frac = [0.0f64; MAX_DIM];
        for c in 0..g.dim {
            let s = (x[c] + g.half_width) / g.step;
            let k = (libm::floor(s) as usize).min(g.per_axis - 2);
            base[c] = k;
            frac[c] = s - k as f64;
        }
        let mut total = 0.0;
        for corner in 0..(1usize << g.dim) {
            let mut m = base;
            let mut w = 1.0;
            for c in 0..g.dim {
                if corner >> c & 1 == 1 {
                    m[c] += 1;
                    w *= frac[c];
                } else {
                    w *= 1.0 - frac[c];
                }
            }
            if w != 0.0 {
                total += w * self.values[g.flat_index(&m)];
            }
        }
        Ok(total)
    }

    /// `∫ f w dx` by the midpoint rule.
    pub fn integrate_weighted(&self, weight: impl Fn(&Vector) -> f64) -> f64 {
        let vol = self.grid.cell_volume();
        self.values.iter().enumerate().map(|(i, v)| v * weight(&self.grid.point(i))).sum::<f64>() * vol
    }

    pub fn integrate(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Grid Hölder seminorm `max |f(x)−f(y)| / |x−y|^θ` over node pairs with `|x−y| ≤ 1`.
    pub fn holder_seminorm(&self, theta: f64) -> f64 {
        let mut best = 0.0f64;
        self.grid.for_each_pair_within(1.0, |i, j, dist| {
            let r = (self.values[i] - self.values[j]).abs() / libm::pow(dist, theta);
            if r > best {
                best = r;
            }
        });
        best
    }
}
