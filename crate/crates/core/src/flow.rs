//! Euler–Maruyama integration of the characteristics
//!
//! ```text
//! X_{s,t}(x) = x + ∫_s^t b(X_{s,r}(x)) dr + B_t − B_s          (forward)
//! Y_{s,t}(x) = x − ∫_s^t b(Y_{r,t}(x)) dr − (B_t − B_s)        (backward)
//! ```
//!
//! on the time grid of a [`BrownianPath`]. The noise is additive, so Itô and
//! Stratonovich readings coincide and no correction term appears. Jacobians
//! are propagated as the exact derivative of the discrete map,
//! `J ← (I ± Db·Δt) J`, with `Db` by central differences.

use alloc::vec::Vec;

use crate::drift::DriftSpec;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::randomness::BrownianPath;

/// Default bound on `|X|` before the integrator reports divergence.
pub const DEFAULT_EXCURSION_GUARD: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    pub want_jacobian: bool,
    pub record_trajectory: bool,
    pub excursion_guard: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { want_jacobian: false, record_trajectory: false, excursion_guard: DEFAULT_EXCURSION_GUARD }
    }
}

impl FlowOptions {
    pub fn with_jacobian(mut self, on: bool) -> Self {
        self.want_jacobian = on;
        self
    }

    pub fn with_trajectory(mut self, on: bool) -> Self {
        self.record_trajectory = on;
        self
    }
}

/// One sample along a recorded trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSample {
    /// The time the state refers to: `r` for `X_{s,r}`, or `r` for `Y_{r,t}`.
    pub time: f64,
    pub point: Vector,
    pub jacobian: Option<Matrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    pub start_time: f64,
    pub end_time: f64,
    pub initial_point: Vector,
    pub terminal_point: Vector,
    pub jacobian: Option<Matrix>,
    pub jacobian_det: Option<f64>,
    /// Samples in integration order, starting with the initial state.
    pub trajectory: Option<Vec<FlowSample>>,
}

/// `X_{s,t}(x)`.
pub fn forward_flow(
    b: &DriftSpec,
    path: &BrownianPath,
    s: f64,
    t: f64,
    x: &Vector,
    want_jacobian: bool,
) -> Result<FlowResult> {
    integrate(Direction::Forward, b, path, s, t, x, &FlowOptions::default().with_jacobian(want_jacobian))
}

/// `Y_{s,t}(x) = X_{s,t}^{-1}(x)`, stepping from `t` down to `s`.
pub fn backward_flow(
    b: &DriftSpec,
    path: &BrownianPath,
    s: f64,
    t: f64,
    x: &Vector,
    want_jacobian: bool,
) -> Result<FlowResult> {
    integrate(Direction::Backward, b, path, s, t, x, &FlowOptions::default().with_jacobian(want_jacobian))
}

pub fn integrate(
    direction: Direction,
    b: &DriftSpec,
    path: &BrownianPath,
    s: f64,
    t: f64,
    x: &Vector,
    opts: &FlowOptions,
) -> Result<FlowResult> {
    if x.dim() != path.dim() || b.dim() != path.dim() {
        return Err(Error::config("drift, path and point dimensions differ"));
    }
    let k0 = path.step_index(s)?;
    let k1 = path.step_index(t)?;
    if k0 > k1 {
        return Err(Error::config(alloc::format!("start time {s} exceeds end time {t}")));
    }
    let (terminal, jacobian, trajectory) = integrate_steps(direction, b, path, k0, k1, *x, opts)?;
    Ok(FlowResult {
        start_time: s,
        end_time: t,
        initial_point: *x,
        terminal_point: terminal,
        jacobian_det: jacobian.map(|j| j.determinant()),
        jacobian,
        trajectory,
    })
}

type StepOutput = (Vector, Option<Matrix>, Option<Vec<FlowSample>>);

/// Integrates over grid steps `k0..k1` (forward) or `k1` down to `k0` (backward).
pub(crate) fn integrate_steps(
    direction: Direction,
    b: &DriftSpec,
    path: &BrownianPath,
    k0: usize,
    k1: usize,
    x: Vector,
    opts: &FlowOptions,
) -> Result<StepOutput> {
    let dt = path.dt();
    let d = x.dim();
    let mut state = x;
    let mut jac = opts.want_jacobian.then(|| Matrix::identity(d));
    let mut traj = opts.record_trajectory.then(|| {
        let mut v = Vec::with_capacity(k1 - k0 + 1);
        let k = if direction == Direction::Forward { k0 } else { k1 };
        v.push(FlowSample { time: path.time(k), point: state, jacobian: jac });
        v
    });
    let sign = match direction {
        Direction::Forward => 1.0,
        Direction::Backward => -1.0,
    };
    for n in 0..(k1 - k0) {
        let k = match direction {
            Direction::Forward => k0 + n,
            Direction::Backward => k1 - 1 - n,
        };
        if let Some(j) = jac.as_mut() {
            let step = Matrix::identity(d) + b.jacobian(&state) * (sign * dt);
            *j = step.mul_mat(j);
        }
        state += (b.eval(&state) * dt + path.increment(k)) * sign;
        if !state.is_finite() {
            return Err(Error::Divergence { step: k, reason: "non-finite state".into() });
        }
        if state.norm() > opts.excursion_guard {
            return Err(Error::Divergence {
                step: k,
                reason: alloc::format!("|X| exceeded the excursion guard {}", opts.excursion_guard),
            });
        }
        if let Some(tr) = traj.as_mut() {
            let time = match direction {
                Direction::Forward => path.time(k + 1),
                Direction::Backward => path.time(k),
            };
            tr.push(FlowSample { time, point: state, jacobian: jac });
        }
    }
    Ok((state, jac, traj))
}

/// `max_x |X_{0,t}(Y_{0,t}(x)) − x|` over `points`, on one path.
pub fn inverse_check(b: &DriftSpec, path: &BrownianPath, t: f64, points: &[Vector]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::config("inverse_check needs at least one point"));
    }
    let mut worst = 0.0f64;
    for x in points {
        let y = backward_flow(b, path, 0.0, t, x, false)?.terminal_point;
        let back = forward_flow(b, path, 0.0, t, &y, false)?.terminal_point;
        worst = worst.max((back - *x).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::RoughLadder;
    use crate::randomness::sample_path;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_slice(xs)
    }

    #[test]
    fn zero_drift_is_brownian_translation() {
        let p = sample_path(5, 1.0, 64, 2).unwrap();
        let b = DriftSpec::zero(2);
        let x = v(&[0.3, -1.0]);
        let f = forward_flow(&b, &p, 0.25, 0.75, &x, true).unwrap();
        let db = p.cumulative(48) - p.cumulative(16);
        assert!((f.terminal_point - (x + db)).norm() < 1e-14);
        assert_eq!(f.jacobian.unwrap(), Matrix::identity(2));
        let y = backward_flow(&b, &p, 0.25, 0.75, &x, false).unwrap();
        assert!((y.terminal_point - (x - db)).norm() < 1e-14);
    }

    #[test]
    fn constant_drift_is_exact() {
        let p = sample_path(6, 1.0, 32, 1).unwrap();
        let c = 0.7;
        let b = DriftSpec::constant(v(&[c]));
        let x = v(&[0.2]);
        let f = forward_flow(&b, &p, 0.0, 1.0, &x, true).unwrap();
        assert!((f.terminal_point[0] - (0.2 + c + p.terminal()[0])).abs() < 1e-13);
        assert_eq!(f.jacobian_det, Some(1.0));
        let y = backward_flow(&b, &p, 0.0, 1.0, &x, false).unwrap();
        assert!((y.terminal_point[0] - (0.2 - c - p.terminal()[0])).abs() < 1e-13);
        assert!(inverse_check(&b, &p, 1.0, &[x, v(&[-3.0])]).unwrap() < 1e-13);
    }

    #[test]
    fn zero_length_flow_is_identity() {
        let p = sample_path(1, 1.0, 8, 2).unwrap();
        let b = DriftSpec::rough(2, RoughLadder { theta: 0.5, amplitude: 1.0, levels: 8, tail_slope: -0.5 })
            .unwrap()
            .mollify(0.1)
            .unwrap();
        let x = v(&[0.5, 0.5]);
        let f = forward_flow(&b, &p, 0.5, 0.5, &x, true).unwrap();
        assert_eq!(f.terminal_point, x);
        assert_eq!(f.jacobian, Some(Matrix::identity(2)));
        assert_eq!(f.jacobian_det, Some(1.0));
    }

    #[test]
    fn off_grid_times_are_rejected() {
        let p = sample_path(1, 1.0, 8, 1).unwrap();
        let b = DriftSpec::zero(1);
        assert!(matches!(forward_flow(&b, &p, 0.1, 0.5, &v(&[0.0]), false), Err(Error::Config(_))));
        assert!(matches!(forward_flow(&b, &p, 0.75, 0.5, &v(&[0.0]), false), Err(Error::Config(_))));
    }

    #[test]
    fn excursion_guard_reports_step() {
        let p = sample_path(1, 1.0, 100, 1).unwrap();
        let b = DriftSpec::linear(Matrix::scaled_identity(1, 40.0));
        let err = forward_flow(&b, &p, 0.0, 1.0, &v(&[1.0]), false).unwrap_err();
        match err {
            Error::Divergence { step, .. } => assert!(step < 100),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn linear_backward_jacobian_is_discrete_exponential() {
        let p = sample_path(2, 1.0, 50, 2).unwrap();
        let a = Matrix::from_rows(&[&[0.3, 1.0], &[-0.5, 0.2]]);
        let b = DriftSpec::linear(a);
        let y = backward_flow(&b, &p, 0.0, 1.0, &v(&[1.0, 1.0]), true).unwrap();
        let step = Matrix::identity(2) - a * p.dt();
        let expected = libm::pow(step.determinant(), 50.0);
        let det = y.jacobian_det.unwrap();
        assert!((det - expected).abs() < 1e-8 * expected, "{det} vs {expected}");
        assert!((det - y.jacobian.unwrap().determinant()).abs() <= 1e-12 * det.abs());
        // Continuum limit e^{-tr(A) t}.
        assert!((det - libm::exp(-a.trace())).abs() < 0.02);
    }

    #[test]
    fn divergence_free_flow_preserves_volume() {
        let p = sample_path(9, 1.0, 1000, 2).unwrap();
        let a = Matrix::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        let f = forward_flow(&DriftSpec::linear(a), &p, 0.0, 1.0, &v(&[0.4, 0.1]), true).unwrap();
        // det(I + A dt)^n = (1 + dt²)^n ≈ 1 + dt.
        assert!((f.jacobian_det.unwrap() - 1.0).abs() < 2.0 * p.dt());
    }

    #[test]
    fn trajectory_records_every_step() {
        let p = sample_path(3, 1.0, 16, 1).unwrap();
        let b = DriftSpec::ornstein_uhlenbeck(1, 1.0);
        let opts = FlowOptions::default().with_trajectory(true).with_jacobian(true);
        let r = integrate(Direction::Forward, &b, &p, 0.25, 1.0, &v(&[1.0]), &opts).unwrap();
        let tr = r.trajectory.unwrap();
        assert_eq!(tr.len(), 13);
        assert_eq!(tr[0].time, 0.25);
        assert_eq!(tr[0].point, v(&[1.0]));
        assert_eq!(tr.last().unwrap().point, r.terminal_point);
    }
}
