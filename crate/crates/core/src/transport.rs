//! Pathwise solutions `u(t, x) = u₀(Y_{0,t}(x))` of the stochastic transport
//! equation and the dual continuity-equation density `v = JY_t · φ(Y_t)`.

use alloc::vec::Vec;

use crate::drift::DriftSpec;
use crate::error::{Error, Result};
use crate::exec::{collect_results, Executor};
use crate::flow::{integrate_steps, Direction, FlowOptions};
use crate::grid::{Grid, GridFunction, ScalarField};
use crate::linalg::Vector;
use crate::randomness::BrownianPath;

/// Backward characteristic endpoints `Y_{0,t}(x)` for every output time and node.
///
/// The endpoints depend only on the drift and the path, so one set can be
/// reused to evaluate any number of initial data.
#[derive(Debug, Clone)]
pub struct CharacteristicEndpoints {
    grid: Grid,
    path: BrownianPath,
    steps: Vec<usize>,
    /// Time-major: entry `j * grid.len() + i` is `Y_{0, t_j}(x_i)`.
    points: Vec<Vector>,
}

impl CharacteristicEndpoints {
    pub fn compute(
        b: &DriftSpec,
        path: &BrownianPath,
        times: &[f64],
        grid: Grid,
        exec: &impl Executor,
    ) -> Result<Self> {
        if grid.dim() != path.dim() {
            return Err(Error::config("grid and path dimensions differ"));
        }
        let steps = times.iter().map(|t| path.step_index(*t)).collect::<Result<Vec<_>>>()?;
        let n = grid.len();
        let opts = FlowOptions::default();
        let points = collect_results(exec.map_indexed(steps.len() * n, |idx| {
            let k = steps[idx / n];
            let x = grid.point(idx % n);
            integrate_steps(Direction::Backward, b, path, 0, k, x, &opts).map(|r| r.0)
        }))?;
        Ok(CharacteristicEndpoints { grid, path: path.clone(), steps, points })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn steps(&self) -> &[usize] {
        &self.steps
    }

    pub fn endpoint(&self, time_slot: usize, node: usize) -> &Vector {
        &self.points[time_slot * self.grid.len() + node]
    }

    /// `u(t_j, x_i) = u₀(Y_{0,t_j}(x_i))`.
    pub fn evaluate(&self, u0: &(impl ScalarField + ?Sized)) -> PathSolution {
        let n = self.grid.len();
        let fields = (0..self.steps.len())
            .map(|j| {
                let values = self.points[j * n..(j + 1) * n].iter().map(|y| u0.eval(y)).collect();
                GridFunction::from_values_unchecked(self.grid, values)
            })
            .collect();
        PathSolution {
            path: self.path.clone(),
            steps: self.steps.clone(),
            times: self.steps.iter().map(|k| self.path.time(*k)).collect(),
            fields,
        }
    }
}

/// A solution realized on one Brownian path at a list of output times.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSolution {
    path: BrownianPath,
    steps: Vec<usize>,
    times: Vec<f64>,
    fields: Vec<GridFunction>,
}

impl PathSolution {
    pub fn path(&self) -> &BrownianPath {
        &self.path
    }

    pub fn grid(&self) -> &Grid {
        self.fields[0].grid()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Path-grid step index of each output time.
    pub fn steps(&self) -> &[usize] {
        &self.steps
    }

    pub fn fields(&self) -> &[GridFunction] {
        &self.fields
    }

    /// Field at output slot `j`.
    pub fn field(&self, j: usize) -> &GridFunction {
        &self.fields[j]
    }

    /// Field at path step `k`, if `k` is one of the output times.
    pub fn field_at_step(&self, k: usize) -> Option<&GridFunction> {
        self.steps.iter().position(|s| *s == k).map(|j| &self.fields[j])
    }
}

/// Solves by characteristics: one backward solve per (output time, node).
pub fn solve_characteristics(
    b: &DriftSpec,
    u0: &(impl ScalarField + ?Sized),
    path: &BrownianPath,
    times: &[f64],
    grid: Grid,
    exec: &impl Executor,
) -> Result<PathSolution> {
    if times.is_empty() {
        return Err(Error::config("at least one output time is required"));
    }
    Ok(CharacteristicEndpoints::compute(b, path, times, grid, exec)?.evaluate(u0))
}

/// Every time on the path grid from 0 to `t`, inclusive.
pub fn all_grid_times(path: &BrownianPath, t: f64) -> Result<Vec<f64>> {
    let k = path.step_index(t)?;
    Ok((0..=k).map(|j| path.time(j)).collect())
}

/// `β(u)` node by node.
pub fn renormalize(sol: &PathSolution, beta: impl Fn(f64) -> f64) -> PathSolution {
    PathSolution {
        path: sol.path.clone(),
        steps: sol.steps.clone(),
        times: sol.times.clone(),
        fields: sol.fields.iter().map(|f| f.map(&beta)).collect(),
    }
}

/// `v(t, x) = det DY_{0,t}(x) · φ(Y_{0,t}(x))`, which solves the stochastic
/// continuity equation with `v(0) = φ` for smooth drifts.
pub fn dual_density(
    b: &DriftSpec,
    phi: &(impl ScalarField + ?Sized),
    path: &BrownianPath,
    t: f64,
    grid: Grid,
    exec: &impl Executor,
) -> Result<GridFunction> {
    if !b.is_smooth() {
        return Err(Error::SmoothnessRequired("dual density needs a mollified or smooth drift".into()));
    }
    let k = path.step_index(t)?;
    let opts = FlowOptions::default().with_jacobian(true);
    let values = collect_results(exec.map_indexed(grid.len(), |i| {
        let (y, jac, _) = integrate_steps(Direction::Backward, b, path, 0, k, grid.point(i), &opts)?;
        let det = jac.map(|j| j.determinant()).unwrap_or(1.0);
        Ok(det * phi.eval(&y))
    }))?;
    GridFunction::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::RoughLadder;
    use crate::exec::Sequential;
    use crate::initial::InitialData;
    use crate::linalg::Matrix;
    use crate::randomness::sample_path;

    fn bump() -> InitialData {
        InitialData::gaussian(Vector::from_slice(&[0.2]), 0.5, 1.0)
    }

    #[test]
    fn zero_drift_translates_data() {
        let path = sample_path(4, 1.0, 20, 1).unwrap();
        let grid = Grid::new(1, 3.0, 0.1).unwrap();
        let u0 = bump();
        let sol = solve_characteristics(&DriftSpec::zero(1), &u0, &path, &[0.0, 0.5, 1.0], grid, &Sequential)
            .unwrap();
        assert_eq!(sol.field(0), &GridFunction::sample(grid, &u0));
        for (j, k) in [0usize, 10, 20].iter().enumerate() {
            let bt = path.cumulative(*k);
            for i in 0..grid.len() {
                let x = grid.point(i);
                assert!((sol.field(j).values()[i] - u0.eval(&(x - bt))).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn constant_drift_shifts_and_translates() {
        let path = sample_path(4, 1.0, 20, 1).unwrap();
        let grid = Grid::new(1, 3.0, 0.1).unwrap();
        let c = Vector::from_slice(&[0.8]);
        let u0 = bump();
        let sol = solve_characteristics(&DriftSpec::constant(c), &u0, &path, &[1.0], grid, &Sequential).unwrap();
        let shift = c + path.terminal();
        for i in 0..grid.len() {
            let x = grid.point(i);
            assert!((sol.field(0).values()[i] - u0.eval(&(x - shift))).abs() < 1e-12);
        }
    }

    #[test]
    fn range_is_preserved_under_rough_drift() {
        let path = sample_path(9, 1.0, 40, 1).unwrap();
        let grid = Grid::new(1, 2.0, 0.05).unwrap();
        let b = DriftSpec::rough(1, RoughLadder { theta: 0.5, amplitude: 1.0, levels: 8, tail_slope: -0.5 })
            .unwrap();
        let u0 = InitialData::SmoothedIndicator { half_width: 0.5, edge: 0.1 };
        let sol = solve_characteristics(&b, &u0, &path, &[0.5, 1.0], grid, &Sequential).unwrap();
        let lo = 0.0;
        let hi = 1.0;
        for f in sol.fields() {
            assert!(f.min() >= lo && f.max() <= hi);
        }
    }

    #[test]
    fn renormalize_identity_and_square() {
        let path = sample_path(4, 1.0, 20, 1).unwrap();
        let grid = Grid::new(1, 2.0, 0.1).unwrap();
        let u0 = bump();
        let sol = solve_characteristics(&DriftSpec::zero(1), &u0, &path, &[1.0], grid, &Sequential).unwrap();
        assert_eq!(renormalize(&sol, |u| u), sol);
        let sq = renormalize(&sol, |u| u * u);
        let bt = path.terminal();
        for i in 0..grid.len() {
            let expected = u0.eval(&(grid.point(i) - bt));
            assert!((sq.field(0).values()[i] - expected * expected).abs() < 1e-14);
        }
    }

    #[test]
    fn dual_density_requires_smooth_drift() {
        let path = sample_path(4, 1.0, 20, 1).unwrap();
        let grid = Grid::new(1, 2.0, 0.1).unwrap();
        let rough = DriftSpec::rough(1, RoughLadder { theta: 0.5, amplitude: 1.0, levels: 8, tail_slope: 0.0 })
            .unwrap();
        let phi = |x: &Vector| libm::exp(-x.norm_squared());
        assert!(matches!(
            dual_density(&rough, &phi, &path, 1.0, grid, &Sequential),
            Err(Error::SmoothnessRequired(_))
        ));
        assert!(dual_density(&rough.mollify(0.1).unwrap(), &phi, &path, 1.0, grid, &Sequential).is_ok());
    }

    #[test]
    fn dual_density_zero_drift_and_initial_time() {
        let path = sample_path(4, 1.0, 20, 1).unwrap();
        let grid = Grid::new(1, 4.0, 0.05).unwrap();
        let phi = |x: &Vector| libm::exp(-4.0 * x.norm_squared());
        let v0 = dual_density(&DriftSpec::zero(1), &phi, &path, 0.0, grid, &Sequential).unwrap();
        assert_eq!(v0, GridFunction::sample(grid, &phi));
        let v = dual_density(&DriftSpec::zero(1), &phi, &path, 1.0, grid, &Sequential).unwrap();
        let bt = path.terminal();
        for i in 0..grid.len() {
            assert!((v.values()[i] - phi(&(grid.point(i) - bt))).abs() < 1e-14);
        }
        assert!((v.integrate() - v0.integrate()).abs() < 1e-10);
    }

    #[test]
    fn dual_density_linear_drift_has_constant_jacobian() {
        let path = sample_path(4, 1.0, 400, 2).unwrap();
        let grid = Grid::new(2, 3.0, 0.25).unwrap();
        let a = Matrix::from_rows(&[&[0.4, 0.3], &[0.0, 0.2]]);
        let b = DriftSpec::linear(a);
        let one = |_: &Vector| 1.0;
        let v = dual_density(&b, &one, &path, 1.0, grid, &Sequential).unwrap();
        let expected = libm::exp(-a.trace());
        for val in v.values() {
            assert!((val - expected).abs() < 5e-3 * expected, "{val} vs {expected}");
        }
    }
}
