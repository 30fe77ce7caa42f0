//! Drift fields `b: ℝ^d → ℝ^d` with linear growth and Hölder regularity.
//!
//! The catalog covers smooth fields (zero, constant, linear), a lacunary
//! sine ladder with tunable Hölder exponent, a stagnation-point cusp field,
//! and Gaussian mollifications of any of these.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::{Matrix, Vector};

/// Finite-difference step used when a drift has no closed-form derivative.
pub const DEFAULT_FD_STEP: f64 = 1e-4;
/// Mollifier quadrature half-width in units of the kernel standard deviation.
pub const MOLLIFIER_SPAN: f64 = 4.0;
/// Mollifier quadrature nodes per axis.
pub const MOLLIFIER_NODES: usize = 33;

/// Anything that can be evaluated as a vector field.
pub trait VectorField: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &Vector) -> Vector;
}

/// Pointwise difference `a − b` of two fields of equal dimension.
#[derive(Debug, Clone, Copy)]
pub struct Difference<'a, A: ?Sized, B: ?Sized> {
    pub a: &'a A,
    pub b: &'a B,
}

impl<A: VectorField + ?Sized, B: VectorField + ?Sized> VectorField for Difference<'_, A, B> {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn eval(&self, x: &Vector) -> Vector {
        self.a.eval(x) - self.b.eval(x)
    }
}

/// Lacunary sine ladder, per coordinate:
///
/// `b_i(x) = a · Σ_{k<K} 2^{−kθ} sin(2^k x_i + φ_{k,i}) + s · x_i`
///
/// Each term has `θ`-Hölder seminorm at most `2^{1−θ} a` on `|x−y| ≤ 1`, so
/// the whole ladder is `C^θ` with a constant that is linear in `K`; the slope
/// `s` supplies linear growth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoughLadder {
    pub theta: f64,
    pub amplitude: f64,
    pub levels: u32,
    pub tail_slope: f64,
}

impl RoughLadder {
    fn phase(k: u32, coord: usize) -> f64 {
        k as f64 + 0.5 * coord as f64
    }

    /// `(2^k, 2^{−kθ} e^{−4^k σ²/2})` for `k < K`, by recurrence.
    fn levels_iter(&self, sigma: f64) -> impl Iterator<Item = (f64, f64)> {
        let ratio = libm::pow(2.0, -self.theta);
        let mut damp = libm::exp(-0.5 * sigma * sigma);
        let mut freq = 1.0;
        let mut coef = 1.0;
        (0..self.levels).map(move |_| {
            let out = (freq, coef * damp);
            freq *= 2.0;
            coef *= ratio;
            damp = (damp * damp) * (damp * damp);
            out
        })
    }

    /// Coordinate `i` of the ladder convolved with `N(0, σ²)`; `σ = 0` is the raw ladder.
    fn component(&self, xi: f64, coord: usize, sigma: f64) -> f64 {
        let mut s = 0.0;
        for (k, (freq, c)) in self.levels_iter(sigma).enumerate() {
            s += c * libm::sin(freq * xi + Self::phase(k as u32, coord));
        }
        self.amplitude * s + self.tail_slope * xi
    }

    fn component_derivative(&self, xi: f64, coord: usize, sigma: f64) -> f64 {
        let mut s = 0.0;
        for (k, (freq, c)) in self.levels_iter(sigma).enumerate() {
            s += c * freq * libm::cos(freq * xi + Self::phase(k as u32, coord));
        }
        self.amplitude * s + self.tail_slope
    }

    /// Upper bound for the per-coordinate `θ`-seminorm over `|x−y| ≤ 1`.
    pub fn seminorm_bound(&self) -> f64 {
        self.amplitude.abs() * self.levels as f64 * libm::pow(2.0, 1.0 - self.theta)
            + self.tail_slope.abs()
    }

    fn sup_amplitude(&self) -> f64 {
        (0..self.levels).map(|k| libm::pow(2.0, -(k as f64) * self.theta)).sum::<f64>()
            * self.amplitude.abs()
    }
}

/// Stagnation-point field `b_i(x) = −a · sign(x_i) · |x_i|^θ`.
///
/// Every coordinate hyperplane `x_i = 0` attracts the flow and is reached in
/// finite time by deterministic characteristics, so the noiseless inverse
/// flow tears continuous data apart there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cusp {
    pub theta: f64,
    pub amplitude: f64,
}

impl Cusp {
    fn component(&self, xi: f64) -> f64 {
        let m = libm::pow(xi.abs(), self.theta);
        if xi >= 0.0 {
            -self.amplitude * m
        } else {
            self.amplitude * m
        }
    }

    /// Coordinate `i` convolved with the Gaussian of standard deviation `sigma`.
    fn mollified_component(&self, xi: f64, sigma: f64) -> f64 {
        -self.amplitude * (self.half_line(xi, sigma) - self.half_line(-xi, sigma))
    }

    /// `∫_0^∞ y^θ ρ_σ(x − y) dy` by Simpson's rule on `x ± 8σ`, in the
    /// variable `s = √y` when the window reaches the origin.
    fn half_line(&self, x: f64, sigma: f64) -> f64 {
        let hi = x + 8.0 * sigma;
        if hi <= 0.0 {
            return 0.0;
        }
        let lo = x - 8.0 * sigma;
        let rho = |z: f64| libm::exp(-0.5 * (z / sigma) * (z / sigma)) / (sigma * libm::sqrt(2.0 * core::f64::consts::PI));
        if lo > 0.0 {
            simpson(lo, hi, 128, |y| libm::pow(y, self.theta) * rho(x - y))
        } else {
            simpson(0.0, libm::sqrt(hi), 256, |s| 2.0 * libm::pow(s, 2.0 * self.theta + 1.0) * rho(x - s * s))
        }
    }
}

fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|j| (if j % 2 == 1 { 4.0 } else { 2.0 }) * f(a + j as f64 * h)).sum();
    (f(a) + inner + f(b)) * h / 3.0
}

#[derive(Debug, Clone, PartialEq)]
pub enum DriftKind {
    Zero,
    Constant(Vector),
    Linear(Matrix),
    Rough(RoughLadder),
    Cusp(Cusp),
    /// Base field convolved with a Gaussian of standard deviation `epsilon`.
    Mollified { base: Box<DriftSpec>, epsilon: f64 },
}

/// A drift field together with its regularity metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftSpec {
    dim: usize,
    kind: DriftKind,
    theta: f64,
    growth_constant: f64,
}

impl DriftSpec {
    pub fn zero(dim: usize) -> Self {
        let _ = Vector::zeros(dim);
        DriftSpec { dim, kind: DriftKind::Zero, theta: 1.0, growth_constant: 0.0 }
    }

    pub fn constant(c: Vector) -> Self {
        DriftSpec { dim: c.dim(), growth_constant: c.norm(), kind: DriftKind::Constant(c), theta: 1.0 }
    }

    pub fn linear(a: Matrix) -> Self {
        DriftSpec {
            dim: a.dim(),
            growth_constant: a.frobenius_norm(),
            kind: DriftKind::Linear(a),
            theta: 1.0,
        }
    }

    /// Ornstein–Uhlenbeck drift `b(x) = −rate · x`.
    pub fn ornstein_uhlenbeck(dim: usize, rate: f64) -> Self {
        DriftSpec::linear(Matrix::scaled_identity(dim, -rate))
    }

    pub fn rough(dim: usize, ladder: RoughLadder) -> Result<Self> {
        let _ = Vector::zeros(dim);
        if !(ladder.theta > 0.0 && ladder.theta < 1.0) {
            return Err(Error::config("rough drift needs a Hölder exponent in (0, 1)"));
        }
        if ladder.levels == 0 {
            return Err(Error::config("rough drift needs at least one ladder level"));
        }
        let growth = libm::sqrt(dim as f64) * ladder.sup_amplitude().max(ladder.tail_slope.abs());
        Ok(DriftSpec { dim, theta: ladder.theta, growth_constant: growth, kind: DriftKind::Rough(ladder) })
    }

    pub fn cusp(dim: usize, cusp: Cusp) -> Result<Self> {
        let _ = Vector::zeros(dim);
        if !(cusp.theta > 0.0 && cusp.theta < 1.0) {
            return Err(Error::config("cusp drift needs a Hölder exponent in (0, 1)"));
        }
        let growth = libm::sqrt(dim as f64) * cusp.amplitude.abs();
        Ok(DriftSpec { dim, theta: cusp.theta, growth_constant: growth, kind: DriftKind::Cusp(cusp) })
    }

    /// `b ∗ ρ_ε` with `ρ_ε` the Gaussian of standard deviation `ε`.
    ///
    /// Mollifying a mollified field composes the kernels, so the base is
    /// kept and the widths add in quadrature.
    pub fn mollify(&self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::config(alloc::format!("mollification width must be positive, got {epsilon}")));
        }
        let (base, eps) = match &self.kind {
            DriftKind::Mollified { base, epsilon: e0 } => ((**base).clone(), libm::hypot(*e0, epsilon)),
            _ => (self.clone(), epsilon),
        };
        let spread = 1.0 + eps * libm::sqrt(self.dim as f64);
        Ok(DriftSpec {
            dim: self.dim,
            theta: 1.0,
            growth_constant: base.growth_constant * spread,
            kind: DriftKind::Mollified { base: Box::new(base), epsilon: eps },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &DriftKind {
        &self.kind
    }

    /// Hölder exponent of the field (1 for Lipschitz fields).
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `C` in `|b(x)| ≤ C (1 + |x|)`.
    pub fn growth_constant(&self) -> f64 {
        self.growth_constant
    }

    /// Mollification width, if this is a mollified field.
    pub fn epsilon(&self) -> Option<f64> {
        match &self.kind {
            DriftKind::Mollified { epsilon, .. } => Some(*epsilon),
            _ => None,
        }
    }

    /// Smooth enough for flow Jacobians: closed-form smooth fields and any mollification.
    pub fn is_smooth(&self) -> bool {
        !matches!(self.kind, DriftKind::Rough(_) | DriftKind::Cusp(_))
    }

    pub fn has_closed_divergence(&self) -> bool {
        match &self.kind {
            DriftKind::Cusp(_) => false,
            DriftKind::Mollified { base, .. } => !matches!(base.kind, DriftKind::Cusp(_)),
            _ => true,
        }
    }

    /// Upper bound on `[b]_θ` over `|x−y| ≤ 1` (Euclidean norm on values),
    /// where one is known in closed form.
    pub fn holder_seminorm_bound(&self) -> Option<f64> {
        let root_d = libm::sqrt(self.dim as f64);
        match &self.kind {
            DriftKind::Zero | DriftKind::Constant(_) => Some(0.0),
            DriftKind::Linear(a) => Some(a.frobenius_norm()),
            DriftKind::Rough(l) => Some(root_d * l.seminorm_bound()),
            // |a|^θ − |b|^θ ≤ |a−b|^θ, and opposite signs add at most 2^{1−θ}.
            DriftKind::Cusp(c) => Some(root_d * c.amplitude.abs() * libm::pow(2.0, 1.0 - c.theta)),
            DriftKind::Mollified { .. } => None,
        }
    }

    /// Step for central-difference derivatives of this field.
    pub fn jacobian_step(&self) -> f64 {
        match self.epsilon() {
            Some(eps) => DEFAULT_FD_STEP.max(eps / 10.0),
            None => DEFAULT_FD_STEP,
        }
    }

    /// `b(x)`.
    pub fn eval(&self, x: &Vector) -> Vector {
        debug_assert_eq!(x.dim(), self.dim);
        match &self.kind {
            DriftKind::Zero => Vector::zeros(self.dim),
            DriftKind::Constant(c) => *c,
            DriftKind::Linear(a) => a.mul_vec(x),
            DriftKind::Rough(l) => {
                let mut out = *x;
                for i in 0..self.dim {
                    out[i] = l.component(x[i], i, 0.0);
                }
                out
            }
            DriftKind::Cusp(c) => x.map(|xi| c.component(xi)),
            DriftKind::Mollified { base, epsilon } => base.eval_mollified(x, *epsilon),
        }
    }

    fn eval_mollified(&self, x: &Vector, eps: f64) -> Vector {
        match &self.kind {
            // Symmetric kernels reproduce affine fields exactly.
            DriftKind::Zero | DriftKind::Constant(_) | DriftKind::Linear(_) => self.eval(x),
            DriftKind::Rough(l) => {
                let mut out = *x;
                for i in 0..self.dim {
                    out[i] = l.component(x[i], i, eps);
                }
                out
            }
            DriftKind::Cusp(c) => x.map(|xi| c.mollified_component(xi, eps)),
            DriftKind::Mollified { .. } => unreachable!("mollifications are flattened on construction"),
        }
    }

    /// `div b(x)`: closed form where available, otherwise central differences
    /// with `fd_step`.
    pub fn divergence(&self, x: &Vector, fd_step: Option<f64>) -> Result<f64> {
        if let Some(v) = self.closed_divergence(x) {
            return Ok(v);
        }
        match fd_step {
            Some(h) if h > 0.0 => Ok(divergence_fd(self, x, h)),
            Some(h) => Err(Error::config(alloc::format!("finite-difference step must be positive, got {h}"))),
            None => Err(Error::DivergenceUnavailable),
        }
    }

    fn closed_divergence(&self, x: &Vector) -> Option<f64> {
        let sigma = self.epsilon().unwrap_or(0.0);
        let kind = match &self.kind {
            DriftKind::Mollified { base, .. } => &base.kind,
            k => k,
        };
        match kind {
            DriftKind::Zero | DriftKind::Constant(_) => Some(0.0),
            DriftKind::Linear(a) => Some(a.trace()),
            DriftKind::Rough(l) => Some((0..self.dim).map(|i| l.component_derivative(x[i], i, sigma)).sum()),
            DriftKind::Cusp(_) | DriftKind::Mollified { .. } => None,
        }
    }

    /// `Db(x)` by central differences with this field's [`jacobian_step`](Self::jacobian_step).
    pub fn jacobian(&self, x: &Vector) -> Matrix {
        jacobian_fd(self, x, self.jacobian_step())
    }
}

impl VectorField for DriftSpec {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &Vector) -> Vector {
        DriftSpec::eval(self, x)
    }
}

/// Central-difference divergence.
pub fn divergence_fd<F: VectorField + ?Sized>(field: &F, x: &Vector, step: f64) -> f64 {
    (0..field.dim())
        .map(|i| {
            let e = Vector::axis(field.dim(), i, step);
            (field.eval(&(*x + e))[i] - field.eval(&(*x - e))[i]) / (2.0 * step)
        })
        .sum()
}

/// Central-difference Jacobian `J_{ij} = ∂_j b_i`.
pub fn jacobian_fd<F: VectorField + ?Sized>(field: &F, x: &Vector, step: f64) -> Matrix {
    let d = field.dim();
    let mut m = Matrix::zeros(d);
    for j in 0..d {
        let e = Vector::axis(d, j, step);
        let diff = (field.eval(&(*x + e)) - field.eval(&(*x - e))) * (0.5 / step);
        for i in 0..d {
            m.set(i, j, diff[i]);
        }
    }
    m
}

/// Normalized one-dimensional Gaussian quadrature: `MOLLIFIER_NODES` uniform
/// nodes on `±MOLLIFIER_SPAN·σ`, weights proportional to the density.
#[derive(Debug, Clone)]
pub struct MollifierRule {
    nodes: [f64; MOLLIFIER_NODES],
    weights: [f64; MOLLIFIER_NODES],
}

impl MollifierRule {
    pub fn new(sigma: f64) -> Self {
        let mut nodes = [0.0; MOLLIFIER_NODES];
        let mut weights = [0.0; MOLLIFIER_NODES];
        let spacing = 2.0 * MOLLIFIER_SPAN * sigma / (MOLLIFIER_NODES - 1) as f64;
        let mut total = 0.0;
        for j in 0..MOLLIFIER_NODES {
            let z = -MOLLIFIER_SPAN * sigma + j as f64 * spacing;
            let w = libm::exp(-0.5 * (z / sigma) * (z / sigma));
            nodes[j] = z;
            weights[j] = w;
            total += w;
        }
        for w in &mut weights {
            *w /= total;
        }
        MollifierRule { nodes, weights }
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

/// `(f ∗ ρ_σ)(x)` for a scalar function on `ℝ^d` by the tensor-product
/// mollifier rule (`MOLLIFIER_NODES^d` evaluations).
pub fn mollify_scalar_at(f: &(impl Fn(&Vector) -> f64 + ?Sized), x: &Vector, sigma: f64) -> f64 {
    let rule = MollifierRule::new(sigma);
    let d = x.dim();
    let mut idx = [0usize; crate::linalg::MAX_DIM];
    let mut total = 0.0;
    loop {
        let mut y = *x;
        let mut w = 1.0;
        for c in 0..d {
            y[c] -= rule.nodes[idx[c]];
            w *= rule.weights[idx[c]];
        }
        total += w * f(&y);
        let mut c = 0;
        loop {
            idx[c] += 1;
            if idx[c] < MOLLIFIER_NODES {
                break;
            }
            idx[c] = 0;
            c += 1;
            if c == d {
                return total;
            }
        }
    }
}

/// Grid estimate of `‖f‖_θ = ‖(1+|·|)^{−1} f‖_∞ + [f]_θ`, with the seminorm
/// scanned over node pairs at distance at most 1.
///
/// Returns `(weighted_sup, seminorm)`; their sum is the norm estimate. Both
/// are lower bounds of the continuum quantities restricted to the box.
pub fn holder_norm_parts<F: VectorField + ?Sized>(field: &F, grid: &Grid, theta: f64) -> (f64, f64) {
    let values: Vec<Vector> = (0..grid.len()).map(|i| field.eval(&grid.point(i))).collect();
    let mut sup = 0.0f64;
    for (i, v) in values.iter().enumerate() {
        sup = sup.max(v.norm() / (1.0 + grid.point(i).norm()));
    }
    let mut semi = 0.0f64;
    grid.for_each_pair_within(1.0, |i, j, dist| {
        let r = (values[i] - values[j]).norm() / libm::pow(dist, theta);
        if r > semi {
            semi = r;
        }
    });
    (sup, semi)
}

/// Sum of [`holder_norm_parts`].
pub fn holder_norm_estimate<F: VectorField + ?Sized>(field: &F, grid: &Grid, theta: f64) -> f64 {
    let (sup, semi) = holder_norm_parts(field, grid, theta);
    sup + semi
}
