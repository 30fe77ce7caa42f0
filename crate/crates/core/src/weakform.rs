//! Weak-form checks for pathwise solutions.
//!
//! For a test function `φ` the Itô form of the equation reads
//!
//! ```text
//! ∫u(t)φ = ∫u₀φ − ∫₀ᵗ∫ b·∇u φ dx ds + ∫₀ᵗ∫ u ∂ᵢφ dx dBⁱ + ½∫₀ᵗ∫ u Δφ dx ds
//! ```
//!
//! [`ito_residual`] evaluates the difference of both sides on one path with
//! left-endpoint time sums; [`duality_pairing`] evaluates `∫u(t, X_t(x)) φ(x) dx`.

use alloc::vec::Vec;

use crate::drift::DriftSpec;
use crate::error::{Error, Result};
use crate::flow::{integrate_steps, Direction, FlowOptions};
use crate::grid::{Grid, ScalarField};
use crate::linalg::{Vector, MAX_DIM};
use crate::randomness::BrownianPath;
use crate::stats;
use crate::exec::{map_paths, Executor, Sequential};
use crate::randomness::sample_batch_path;
use crate::transport::{all_grid_times, solve_characteristics, PathSolution};

/// `∫_{−1}^{1} exp(1 − 1/(1 − r²)) dr`.
pub const BUMP_INTEGRAL: f64 = 1.206_900_322_437_876_2;

/// Minimum distance, in units of the scale, between the support and the box faces.
pub const SUPPORT_MARGIN: f64 = 0.25;

fn bump(r: f64) -> (f64, f64, f64) {
    if r.abs() >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let s = 1.0 - r * r;
    let psi = libm::exp(1.0 - 1.0 / s);
    let g1 = -2.0 * r / (s * s);
    let g2 = -2.0 / (s * s) - 8.0 * r * r / (s * s * s);
    (psi, psi * g1, psi * (g1 * g1 + g2))
}

/// `φ(x) = Π_i ψ((x_i − c_i)/σ)` with `ψ(r) = exp(1 − 1/(1 − r²))` on `|r| < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    pub center: Vector,
    pub scale: f64,
}

/// `φ`, `∇φ` and `Δφ` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestValues {
    pub value: f64,
    pub gradient: Vector,
    pub laplacian: f64,
}

impl TestFunction {
    pub fn new(center: Vector, scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::config("test function scale must be positive"));
        }
        Ok(TestFunction { center, scale })
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn values(&self, x: &Vector) -> TestValues {
        let d = self.dim();
        let mut parts = [(0.0, 0.0, 0.0); MAX_DIM];
        for i in 0..d {
            parts[i] = bump((x[i] - self.center[i]) / self.scale);
        }
        let others = |skip: usize| (0..d).filter(|j| *j != skip).map(|j| parts[j].0).product::<f64>();
        let value = (0..d).map(|j| parts[j].0).product();
        let mut gradient = Vector::zeros(d);
        let mut laplacian = 0.0;
        for i in 0..d {
            let rest = others(i);
            gradient[i] = parts[i].1 / self.scale * rest;
            laplacian += parts[i].2 / (self.scale * self.scale) * rest;
        }
        TestValues { value, gradient, laplacian }
    }

    /// `∫ φ dx`.
    pub fn integral(&self) -> f64 {
        libm::pow(self.scale * BUMP_INTEGRAL, self.dim() as f64)
    }

    /// Fails unless the support sits inside the box with the required margin.
    pub fn check_support(&self, grid: &Grid) -> Result<()> {
        let reach = (1.0 + SUPPORT_MARGIN) * self.scale;
        for i in 0..self.dim() {
            if self.center[i].abs() + reach > grid.half_width() * (1.0 + 1e-12) {
                return Err(Error::config(alloc::format!(
                    "test function support (centre {:?}, scale {}) escapes the box [-{}, {}]^d with margin {}·scale",
                    self.center,
                    self.scale,
                    grid.half_width(),
                    grid.half_width(),
                    SUPPORT_MARGIN
                )));
            }
        }
        Ok(())
    }

    fn in_support(&self, x: &Vector) -> bool {
        (0..self.dim()).all(|i| ((x[i] - self.center[i]) / self.scale).abs() < 1.0)
    }
}

impl ScalarField for TestFunction {
    fn eval(&self, x: &Vector) -> f64 {
        self.values(x).value
    }
}

/// Component breakdown of the Itô-form residual on one path.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residual {
    /// `∫u(t)φ − ∫u₀φ`.
    pub endpoint_term: f64,
    /// `∫₀ᵗ∫ b·∇u φ dx ds`.
    pub drift_term: f64,
    /// `∫₀ᵗ∫ u ∂ᵢφ dx dBⁱ` (left-endpoint sum).
    pub martingale_term: f64,
    /// `½∫₀ᵗ∫ u Δφ dx ds`.
    pub laplacian_term: f64,
}

impl Residual {
    /// `R = endpoint + drift − martingale − laplacian`.
    pub fn total(&self) -> f64 {
        self.endpoint_term + self.drift_term - self.martingale_term - self.laplacian_term
    }

    /// The residual with the `½Δφ` correction removed.
    pub fn without_laplacian(&self) -> f64 {
        self.endpoint_term + self.drift_term - self.martingale_term
    }
}

/// Itô-form residual of `sol` against `φ` at time `t`.
///
/// `sol` must hold `u` at every path step from 0 to `t`.
pub fn ito_residual(sol: &PathSolution, b: &DriftSpec, phi: &TestFunction, t: f64) -> Result<Residual> {
    let grid = *sol.grid();
    phi.check_support(&grid)?;
    let path = sol.path();
    let k_end = path.step_index(t)?;
    let fields = (0..=k_end)
        .map(|k| {
            sol.field_at_step(k)
                .ok_or_else(|| Error::config(alloc::format!("solution lacks the field at step {k}")))
        })
        .collect::<Result<Vec<_>>>()?;

    struct Node {
        index: usize,
        value: f64,
        gradient: Vector,
        laplacian: f64,
        drift: Vector,
    }
    let nodes: Vec<Node> = (0..grid.len())
        .filter_map(|i| {
            let x = grid.point(i);
            if !phi.in_support(&x) {
                return None;
            }
            let tv = phi.values(&x);
            Some(Node { index: i, value: tv.value, gradient: tv.gradient, laplacian: tv.laplacian, drift: b.eval(&x) })
        })
        .collect();

    let vol = grid.cell_volume();
    let dt = path.dt();
    let pair = |k: usize| -> f64 { nodes.iter().map(|n| fields[k].values()[n.index] * n.value).sum::<f64>() * vol };
    let mut r = Residual { endpoint_term: pair(k_end) - pair(0), ..Residual::default() };
    for (k, u) in fields.iter().enumerate().take(k_end) {
        let db = path.increment(k);
        let mut drift = 0.0;
        let mut mart = 0.0;
        let mut lap = 0.0;
        for n in &nodes {
            let uv = u.values()[n.index];
            drift += n.drift.dot(&u.gradient(n.index)) * n.value;
            mart += uv * n.gradient.dot(&db);
            lap += uv * n.laplacian;
        }
        r.drift_term += drift * vol * dt;
        r.martingale_term += mart * vol;
        r.laplacian_term += 0.5 * lap * vol * dt;
    }
    Ok(r)
}

/// Per-path residuals with their Monte Carlo summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub t: f64,
    pub residuals: Vec<Residual>,
}

impl ResidualReport {
    pub fn totals(&self) -> Vec<f64> {
        self.residuals.iter().map(Residual::total).collect()
    }

    pub fn ablated(&self) -> Vec<f64> {
        self.residuals.iter().map(Residual::without_laplacian).collect()
    }

    pub fn mean(&self) -> f64 {
        stats::mean(&self.totals())
    }

    pub fn std_error(&self) -> f64 {
        stats::std_error(&self.totals())
    }

    pub fn ablated_mean(&self) -> f64 {
        stats::mean(&self.ablated())
    }

    pub fn ablated_std_error(&self) -> f64 {
        stats::std_error(&self.ablated())
    }
}

/// Residuals at the horizon for each test function over a batch of paths.
/// One solution, on every path step, serves all test functions of a path.
#[allow(clippy::too_many_arguments)]
pub fn residual_reports<U: ScalarField + ?Sized>(
    b: &DriftSpec,
    u0: &U,
    phis: &[TestFunction],
    grid: Grid,
    seed: u64,
    horizon: f64,
    n_steps: usize,
    n_paths: usize,
    exec: &impl Executor,
) -> Result<Vec<ResidualReport>> {
    for phi in phis {
        phi.check_support(&grid)?;
    }
    let per_path = map_paths(exec, n_paths, |i| {
        let path = sample_batch_path(seed, i as u64, horizon, n_steps, grid.dim())?;
        let times = all_grid_times(&path, horizon)?;
        let sol = solve_characteristics(b, u0, &path, &times, grid, &Sequential)?;
        phis.iter().map(|phi| ito_residual(&sol, b, phi, horizon)).collect::<Result<Vec<_>>>()
    })?;
    Ok((0..phis.len())
        .map(|j| ResidualReport { t: horizon, residuals: per_path.iter().map(|r| r[j]).collect() })
        .collect())
}

/// `∫ u(t, X_{0,t}(x)) φ(x) dx`, forward-flowing each node in the support of
/// `φ` and interpolating `u(t, ·)`.
pub fn duality_pairing(
    sol: &PathSolution,
    b: &DriftSpec,
    phi: &(impl ScalarField + ?Sized),
    path: &BrownianPath,
    t: f64,
) -> Result<f64> {
    let k = path.step_index(t)?;
    let u = sol
        .field_at_step(k)
        .ok_or_else(|| Error::config(alloc::format!("solution lacks the field at t = {t}")))?;
    let grid = *sol.grid();
    let opts = FlowOptions::default();
    let mut total = 0.0;
    for i in 0..grid.len() {
        let x = grid.point(i);
        let w = phi.eval(&x);
        if w == 0.0 {
            continue;
        }
        let (xt, _, _) = integrate_steps(Direction::Forward, b, path, 0, k, x, &opts)?;
        total += w * u.interpolate(&xt)?;
    }
    Ok(total * grid.cell_volume())
}

/// `∫ u₀ φ dx` on the solution's own grid, the reference value of the pairing.
pub fn initial_pairing(sol: &PathSolution, phi: &(impl ScalarField + ?Sized)) -> f64 {
    let f = sol.field(0);
    let grid = f.grid();
    f.values().iter().enumerate().map(|(i, v)| v * phi.eval(&grid.point(i))).sum::<f64>() * grid.cell_volume()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::initial::InitialData;
    use crate::randomness::sample_path;
    use crate::transport::{all_grid_times, solve_characteristics};

    #[test]
    fn bump_derivatives_match_finite_differences() {
        let phi = TestFunction::new(Vector::from_slice(&[0.1, -0.2]), 0.7).unwrap();
        let x = Vector::from_slice(&[0.3, 0.05]);
        let h = 1e-4;
        let tv = phi.values(&x);
        let mut lap = 0.0;
        for i in 0..2 {
            let e = Vector::axis(2, i, h);
            let up = phi.eval(&(x + e));
            let dn = phi.eval(&(x - e));
            assert!((tv.gradient[i] - (up - dn) / (2.0 * h)).abs() < 1e-7);
            lap += (up - 2.0 * tv.value + dn) / (h * h);
        }
        assert!((tv.laplacian - lap).abs() < 1e-5);
    }

    #[test]
    fn bump_integral_matches_grid_quadrature() {
        let phi = TestFunction::new(Vector::from_slice(&[0.0]), 0.5).unwrap();
        let grid = Grid::new(1, 1.0, 1e-3).unwrap();
        let q = crate::grid::GridFunction::sample(grid, &phi).integrate();
        assert!((q - phi.integral()).abs() < 1e-10);
    }

    #[test]
    fn support_must_fit_with_margin() {
        let grid = Grid::new(1, 2.0, 0.1).unwrap();
        assert!(TestFunction::new(Vector::from_slice(&[0.0]), 0.5).unwrap().check_support(&grid).is_ok());
        assert!(TestFunction::new(Vector::from_slice(&[1.5]), 0.5).unwrap().check_support(&grid).is_err());
    }

    #[test]
    fn zero_data_has_zero_residual_and_pairing() {
        let path = sample_path(1, 0.5, 16, 1).unwrap();
        let grid = Grid::new(1, 3.0, 0.1).unwrap();
        let b = DriftSpec::ornstein_uhlenbeck(1, 1.0);
        let times = all_grid_times(&path, 0.5).unwrap();
        let sol = solve_characteristics(&b, &InitialData::Zero, &path, &times, grid, &Sequential).unwrap();
        let phi = TestFunction::new(Vector::from_slice(&[0.2]), 0.5).unwrap();
        assert_eq!(ito_residual(&sol, &b, &phi, 0.5).unwrap().total(), 0.0);
        assert_eq!(duality_pairing(&sol, &b, &phi, &path, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn missing_time_levels_are_rejected() {
        let path = sample_path(1, 0.5, 16, 1).unwrap();
        let grid = Grid::new(1, 3.0, 0.1).unwrap();
        let b = DriftSpec::zero(1);
        let sol = solve_characteristics(&b, &InitialData::Zero, &path, &[0.0, 0.5], grid, &Sequential).unwrap();
        let phi = TestFunction::new(Vector::from_slice(&[0.0]), 0.5).unwrap();
        assert!(matches!(ito_residual(&sol, &b, &phi, 0.5), Err(Error::Config(_))));
    }

    #[test]
    fn residual_is_linear_in_data() {
        let path = sample_path(3, 0.25, 8, 1).unwrap();
        let grid = Grid::new(1, 3.0, 0.1).unwrap();
        let b = DriftSpec::ornstein_uhlenbeck(1, 0.5);
        let times = all_grid_times(&path, 0.25).unwrap();
        let f = InitialData::gaussian(Vector::from_slice(&[0.0]), 0.6, 1.0);
        let g = InitialData::gaussian(Vector::from_slice(&[0.5]), 0.3, -2.0);
        let fg = |x: &Vector| 2.0 * f.eval(x) + g.eval(x);
        let phi = TestFunction::new(Vector::from_slice(&[0.1]), 0.6).unwrap();
        let res = |u0: &(dyn Fn(&Vector) -> f64 + Sync)| {
            let u0 = |x: &Vector| u0(x);
            let sol = solve_characteristics(&b, &u0, &path, &times, grid, &Sequential).unwrap();
            ito_residual(&sol, &b, &phi, 0.25).unwrap().total()
        };
        let lhs = res(&fg);
        let rhs = 2.0 * res(&|x| f.eval(x)) + res(&|x| g.eval(x));
        assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn zero_drift_pairing_cancels_translation() {
        let path = sample_path(8, 1.0, 16, 1).unwrap();
        let grid = Grid::new(1, 6.0, 0.05).unwrap();
        let b = DriftSpec::zero(1);
        let u0 = InitialData::gaussian(Vector::from_slice(&[0.0]), 0.8, 1.0);
        let sol = solve_characteristics(&b, &u0, &path, &[1.0], grid, &Sequential).unwrap();
        let phi = TestFunction::new(Vector::from_slice(&[0.3]), 0.6).unwrap();
        let pairing = duality_pairing(&sol, &b, &phi, &path, 1.0).unwrap();
        let direct = GridFunction::sample(grid, &|x: &Vector| u0.eval(x) * phi.eval(x)).integrate();
        // Interpolation at X_t(x) = x + B_t is the only error source.
        assert!((pairing - direct).abs() < 2e-3, "{pairing} vs {direct}");
    }

    #[test]
    fn zero_drift_pairing_is_exact_for_grid_aligned_noise() {
        let h = 0.05;
        let path = BrownianPath::from_increments(1, 1.0, alloc::vec![3.0 * h, -7.0 * h, 2.0 * h, 11.0 * h], 0).unwrap();
        let grid = Grid::new(1, 4.0, h).unwrap();
        let b = DriftSpec::zero(1);
        let u0 = InitialData::gaussian(Vector::from_slice(&[0.0]), 0.8, 1.0);
        let sol = solve_characteristics(&b, &u0, &path, &[1.0], grid, &Sequential).unwrap();
        let phi = TestFunction::new(Vector::from_slice(&[0.3]), 0.6).unwrap();
        let pairing = duality_pairing(&sol, &b, &phi, &path, 1.0).unwrap();
        let direct = GridFunction::sample(grid, &|x: &Vector| u0.eval(x) * phi.eval(x)).integrate();
        assert!((pairing - direct).abs() < 1e-12, "{pairing} vs {direct}");
    }

    use crate::grid::GridFunction;
}
