//! Coupled-path stability experiments for the solution map, and the
//! persistence-of-continuity comparison between noisy and noiseless transport.
//!
//! Every sequence entry is solved on the same Brownian paths as the
//! reference, so identical inputs give identical (zero) distances.

use alloc::vec::Vec;

use crate::drift::{holder_norm_estimate, Difference, DriftSpec};
use crate::error::{Error, Result};
use crate::exec::{map_paths, Executor};
use crate::grid::{Grid, GridFunction, ScalarField};
use crate::norms::{gradient_integral, lp_integral, sobolev_norm, Weight};
use crate::randomness::{sample_batch_path, BrownianPath};
use crate::stats;
use crate::transport::{CharacteristicEndpoints, PathSolution};

/// Shared Monte Carlo and discretization parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityConfig {
    pub p: f64,
    pub grid: Grid,
    pub horizon: f64,
    pub n_steps: usize,
    /// Solutions are stored every `output_stride` steps (0 and T included).
    pub output_stride: usize,
    pub n_paths: usize,
    pub seed: u64,
}

impl StabilityConfig {
    fn validate(&self) -> Result<()> {
        if !(self.p > 1.0) {
            return Err(Error::config("p must exceed 1"));
        }
        if self.output_stride == 0 || self.n_steps % self.output_stride != 0 {
            return Err(Error::config("output stride must divide n_steps"));
        }
        if self.n_paths == 0 {
            return Err(Error::config("n_paths must be at least 1"));
        }
        Ok(())
    }

    fn path(&self, index: usize) -> Result<BrownianPath> {
        sample_batch_path(self.seed, index as u64, self.horizon, self.n_steps, self.grid.dim())
    }

    fn output_times(&self, path: &BrownianPath) -> Vec<f64> {
        (0..=self.n_steps).step_by(self.output_stride).map(|k| path.time(k)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRecord {
    pub index: usize,
    /// `‖u₀ⁿ − u₀‖_{W^{1,2p}}` or the Hölder-norm estimate of `bₙ − b`.
    pub input_distance: f64,
    /// `(E ∫₀ᵀ∫ |uⁿ − u|^{2p} dx dt)^{1/(2p)}`.
    pub l2p_distance: f64,
    pub l2p_std_error: f64,
    /// `(E ∫₀ᵀ∫ (|uⁿ − u|^p + |∇(uⁿ − u)|^p) e^{−|x|²} dx dt)^{1/p}`.
    pub sobolev_distance: f64,
    pub sobolev_std_error: f64,
    /// `E∫₀ᵀ∫|uⁿ−u|^{2p} / (T ∫|u₀ⁿ−u₀|^{2p})`, for initial-data sequences.
    pub ratio: Option<f64>,
    pub ratio_std_error: Option<f64>,
}

/// Per-path time integrals of the distance between two solutions on the
/// same output times: `(∫₀ᵀ∫|Δu|^{2p}, ∫₀ᵀ∫(|Δu|^p + |∇Δu|^p) μ)`, trapezoidal in time.
pub fn solution_distance_integrals(a: &PathSolution, b: &PathSolution, p: f64) -> (f64, f64) {
    let times = a.times();
    let per_time: Vec<(f64, f64)> = a
        .fields()
        .iter()
        .zip(b.fields())
        .map(|(fa, fb)| {
            let diff = fa.sub(fb);
            (
                lp_integral(&diff, 2.0 * p, Weight::Lebesgue),
                lp_integral(&diff, p, Weight::Gaussian) + gradient_integral(&diff, p, Weight::Gaussian),
            )
        })
        .collect();
    let mut acc = (0.0, 0.0);
    for j in 1..times.len() {
        let dt = times[j] - times[j - 1];
        acc.0 += 0.5 * dt * (per_time[j].0 + per_time[j - 1].0);
        acc.1 += 0.5 * dt * (per_time[j].1 + per_time[j - 1].1);
    }
    acc
}

/// Root of a Monte Carlo mean with a delta-method standard error.
fn root_of_mean(samples: &[f64], exponent: f64) -> (f64, f64) {
    let m = stats::mean(samples);
    let se = stats::std_error(samples);
    let root = libm::pow(m, 1.0 / exponent);
    let root_se = if m > 0.0 { root / (exponent * m) * se } else { 0.0 };
    (root, root_se)
}

fn summarize(index: usize, input_distance: f64, samples: &[(f64, f64)], p: f64) -> StabilityRecord {
    let l2p: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let w1p: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let (l2p_distance, l2p_std_error) = root_of_mean(&l2p, 2.0 * p);
    let (sobolev_distance, sobolev_std_error) = root_of_mean(&w1p, p);
    StabilityRecord {
        index,
        input_distance,
        l2p_distance,
        l2p_std_error,
        sobolev_distance,
        sobolev_std_error,
        ratio: None,
        ratio_std_error: None,
    }
}

/// Solutions from `u₀` and each `u₀ⁿ`, with drift `b`, on coupled paths.
pub fn initial_data_stability<U: ScalarField + ?Sized, S: ScalarField>(
    b: &DriftSpec,
    u0: &U,
    sequence: &[S],
    cfg: &StabilityConfig,
    exec: &impl Executor,
) -> Result<Vec<StabilityRecord>> {
    cfg.validate()?;
    let p = cfg.p;
    let per_path = map_paths(exec, cfg.n_paths, |i| -> Result<Vec<(f64, f64)>> {
        let path = cfg.path(i)?;
        let ends = CharacteristicEndpoints::compute(b, &path, &cfg.output_times(&path), cfg.grid, &crate::exec::Sequential)?;
        let base = ends.evaluate(u0);
        Ok(sequence.iter().map(|un| solution_distance_integrals(&ends.evaluate(un), &base, p)).collect())
    })?;

    let base0 = GridFunction::sample(cfg.grid, u0);
    Ok(sequence
        .iter()
        .enumerate()
        .map(|(n, un)| {
            let diff0 = GridFunction::sample(cfg.grid, un).sub(&base0);
            let input = sobolev_norm(&diff0, 2.0 * p, Weight::Lebesgue);
            let samples: Vec<(f64, f64)> = per_path.iter().map(|v| v[n]).collect();
            let mut rec = summarize(n, input, &samples, p);
            let denom = cfg.horizon * lp_integral(&diff0, 2.0 * p, Weight::Lebesgue);
            if denom > 0.0 {
                let ratios: Vec<f64> = samples.iter().map(|s| s.0 / denom).collect();
                rec.ratio = Some(stats::mean(&ratios));
                rec.ratio_std_error = Some(stats::std_error(&ratios));
            }
            rec
        })
        .collect())
}

/// Where and at which exponent the drift distances `‖bₙ − b‖_θ` are estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderProbe {
    pub grid: Grid,
    pub theta: f64,
}

/// Solutions from `u₀` with the reference drift and each `bₙ`, on coupled paths.
pub fn drift_stability<U: ScalarField + ?Sized>(
    reference: &DriftSpec,
    sequence: &[DriftSpec],
    u0: &U,
    probe: &HolderProbe,
    cfg: &StabilityConfig,
    exec: &impl Executor,
) -> Result<Vec<StabilityRecord>> {
    cfg.validate()?;
    let p = cfg.p;
    let seq = crate::exec::Sequential;
    let per_path = map_paths(exec, cfg.n_paths, |i| -> Result<Vec<(f64, f64)>> {
        let path = cfg.path(i)?;
        let times = cfg.output_times(&path);
        let base = CharacteristicEndpoints::compute(reference, &path, &times, cfg.grid, &seq)?.evaluate(u0);
        sequence
            .iter()
            .map(|bn| {
                let sol = CharacteristicEndpoints::compute(bn, &path, &times, cfg.grid, &seq)?.evaluate(u0);
                Ok(solution_distance_integrals(&sol, &base, p))
            })
            .collect()
    })?;
    Ok(sequence
        .iter()
        .enumerate()
        .map(|(n, bn)| {
            let input = holder_norm_estimate(&Difference { a: bn, b: reference }, &probe.grid, probe.theta);
            let samples: Vec<(f64, f64)> = per_path.iter().map(|v| v[n]).collect();
            summarize(n, input, &samples, p)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoConfig {
    pub grid: Grid,
    pub horizon: f64,
    pub n_steps: usize,
    pub output_stride: usize,
    pub n_paths: usize,
    pub seed: u64,
    /// Exponent of the grid Hölder seminorm used as the continuity statistic.
    pub theta_prime: f64,
    /// Multiplier on the Brownian increments of the "stochastic" run.
    pub noise_amplitude: f64,
}

/// Hölder-seminorm trajectories of noisy (path-averaged) and noiseless solutions.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoReport {
    pub times: Vec<f64>,
    pub stochastic: Vec<f64>,
    pub stochastic_std_error: Vec<f64>,
    pub deterministic: Vec<f64>,
}

impl DemoReport {
    pub fn stochastic_growth(&self) -> f64 {
        self.stochastic[self.stochastic.len() - 1] / self.stochastic[0]
    }

    pub fn deterministic_growth(&self) -> f64 {
        self.deterministic[self.deterministic.len() - 1] / self.deterministic[0]
    }
}

pub fn regularization_demo<U: ScalarField + ?Sized>(
    b: &DriftSpec,
    u0: &U,
    cfg: &DemoConfig,
    exec: &impl Executor,
) -> Result<DemoReport> {
    if cfg.output_stride == 0 || cfg.n_steps % cfg.output_stride != 0 {
        return Err(Error::config("output stride must divide n_steps"));
    }
    if cfg.n_paths == 0 {
        return Err(Error::config("n_paths must be at least 1"));
    }
    let dim = cfg.grid.dim();
    let seminorms = |path: &BrownianPath| -> Result<Vec<f64>> {
        let times: Vec<f64> = (0..=cfg.n_steps).step_by(cfg.output_stride).map(|k| path.time(k)).collect();
        let sol = CharacteristicEndpoints::compute(b, path, &times, cfg.grid, &crate::exec::Sequential)?.evaluate(u0);
        Ok(sol.fields().iter().map(|f| f.holder_seminorm(cfg.theta_prime)).collect())
    };
    let still = BrownianPath::from_increments(dim, cfg.horizon, alloc::vec![0.0; cfg.n_steps * dim], cfg.seed)?;
    let deterministic = seminorms(&still)?;
    let per_path = map_paths(exec, cfg.n_paths, |i| {
        let path = sample_batch_path(cfg.seed, i as u64, cfg.horizon, cfg.n_steps, dim)?;
        let path = if cfg.noise_amplitude == 0.0 {
            BrownianPath::from_increments(dim, cfg.horizon, alloc::vec![0.0; cfg.n_steps * dim], cfg.seed)?
        } else {
            path.scaled(cfg.noise_amplitude)
        };
        seminorms(&path)
    })?;
    let n_out = deterministic.len();
    let mut stochastic = Vec::with_capacity(n_out);
    let mut stochastic_std_error = Vec::with_capacity(n_out);
    for j in 0..n_out {
        let samples: Vec<f64> = per_path.iter().map(|v| v[j]).collect();
        stochastic.push(stats::mean(&samples));
        stochastic_std_error.push(stats::std_error(&samples));
    }
    let times = (0..=cfg.n_steps).step_by(cfg.output_stride).map(|k| still.time(k)).collect();
    Ok(DemoReport { times, stochastic, stochastic_std_error, deterministic })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::initial::InitialData;
    use crate::linalg::Vector;
    use crate::transport::solve_characteristics;

    fn cfg(grid: Grid) -> StabilityConfig {
        StabilityConfig { p: 2.0, grid, horizon: 1.0, n_steps: 16, output_stride: 4, n_paths: 6, seed: 3 }
    }

    fn bump() -> InitialData {
        InitialData::gaussian(Vector::from_slice(&[0.0]), 0.6, 1.0)
    }

    #[test]
    fn identical_inputs_give_zero_distances() {
        let grid = Grid::new(1, 3.0, 0.1).unwrap();
        let b = DriftSpec::ornstein_uhlenbeck(1, 0.5);
        let recs = initial_data_stability(&b, &bump(), &[bump(), bump()], &cfg(grid), &Sequential).unwrap();
        for r in &recs {
            assert_eq!((r.input_distance, r.l2p_distance, r.sobolev_distance), (0.0, 0.0, 0.0));
            assert_eq!(r.ratio, None);
        }
        let probe = HolderProbe { grid, theta: 0.5 };
        let recs = drift_stability(&b, &[b.clone()], &bump(), &probe, &cfg(grid), &Sequential).unwrap();
        assert_eq!((recs[0].input_distance, recs[0].l2p_distance, recs[0].sobolev_distance), (0.0, 0.0, 0.0));
    }

    #[test]
    fn zero_drift_is_an_isometry_per_path() {
        // Grid-aligned increments keep the translated data on the nodes.
        let h = 0.05;
        let path = BrownianPath::from_increments(1, 1.0, alloc::vec![4.0 * h, -6.0 * h, 3.0 * h, 1.0 * h], 0).unwrap();
        let grid = Grid::new(1, 5.0, h).unwrap();
        let b = DriftSpec::zero(1);
        let u0 = bump();
        let un = InitialData::gaussian(Vector::from_slice(&[0.2]), 0.5, 1.1);
        let times = [0.0, 0.25, 0.5, 0.75, 1.0];
        let a = solve_characteristics(&b, &u0, &path, &times, grid, &Sequential).unwrap();
        let c = solve_characteristics(&b, &un, &path, &times, grid, &Sequential).unwrap();
        let initial = lp_integral(&GridFunction::sample(grid, &un).sub(&GridFunction::sample(grid, &u0)), 4.0, Weight::Lebesgue);
        for j in 0..times.len() {
            let at_t = lp_integral(&c.field(j).sub(a.field(j)), 4.0, Weight::Lebesgue);
            assert!((at_t - initial).abs() < 1e-12 * initial, "{at_t} vs {initial}");
        }
    }

    #[test]
    fn shifted_constant_drift_distance_is_linear() {
        // u₀(x − ct − B_t) vs u₀(x − (c + δ)t − B_t): for small δ the L^{2p}
        // distance is ≈ δ·(∫₀ᵀ t^{2p} dt ∫|u₀'|^{2p})^{1/2p}, linear in δ.
        let grid = Grid::new(1, 5.0, 0.02).unwrap();
        let base = DriftSpec::constant(Vector::from_slice(&[0.5]));
        let seq: Vec<DriftSpec> =
            [1.0, 2.0, 4.0, 8.0].iter().map(|n| DriftSpec::constant(Vector::from_slice(&[0.5 + 1.0 / n]))).collect();
        let probe = HolderProbe { grid: Grid::new(1, 2.0, 0.1).unwrap(), theta: 0.5 };
        let mut c = cfg(grid);
        c.n_paths = 3;
        let recs = drift_stability(&base, &seq, &bump(), &probe, &c, &Sequential).unwrap();
        let slopes: Vec<f64> = recs
            .iter()
            .zip([1.0, 2.0, 4.0, 8.0])
            .map(|(r, n)| r.l2p_distance * n)
            .collect();
        // Linear to within the curvature of u₀ at shift 1/n.
        assert!((slopes[3] - slopes[2]).abs() < 0.05 * slopes[3], "{slopes:?}");
        assert!((slopes[2] - slopes[1]).abs() < 0.15 * slopes[3], "{slopes:?}");
        for (r, n) in recs.iter().zip([1.0, 2.0, 4.0, 8.0]) {
            // ‖(1/n, 0)‖_θ = weighted sup 1/n at the origin, zero seminorm.
            assert!((r.input_distance - 1.0 / n).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_drift_demo_keeps_the_seminorm() {
        let grid = Grid::new(1, 2.0, 0.05).unwrap();
        let demo = DemoConfig {
            grid,
            horizon: 1.0,
            n_steps: 8,
            output_stride: 4,
            n_paths: 3,
            seed: 1,
            theta_prime: 0.5,
            noise_amplitude: 1.0,
        };
        let u0 = InitialData::gaussian(Vector::from_slice(&[0.0]), 0.5, 1.0);
        let r = regularization_demo(&DriftSpec::zero(1), &u0, &demo, &Sequential).unwrap();
        assert_eq!(r.deterministic[0], r.deterministic[2]);
        assert_eq!(r.stochastic[0], r.deterministic[0]);
    }

    #[test]
    fn zero_noise_demo_is_the_deterministic_method() {
        let grid = Grid::new(1, 2.0, 0.05).unwrap();
        let demo = DemoConfig {
            grid,
            horizon: 1.0,
            n_steps: 20,
            output_stride: 5,
            n_paths: 2,
            seed: 1,
            theta_prime: 0.5,
            noise_amplitude: 0.0,
        };
        let b = DriftSpec::cusp(1, crate::drift::Cusp { theta: 0.5, amplitude: 1.0 }).unwrap();
        let u0 = InitialData::gaussian(Vector::from_slice(&[0.3]), 0.5, 1.0);
        let r = regularization_demo(&b, &u0, &demo, &Sequential).unwrap();
        assert_eq!(r.stochastic, r.deterministic);
        assert!(r.stochastic_std_error.iter().all(|e| *e == 0.0));
    }
}
