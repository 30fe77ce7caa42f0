//! Lebesgue and Gaussian-weighted Sobolev norms on grids, and Monte Carlo
//! estimators of flow-convergence moments along a mollification sequence.

use alloc::string::String;
use alloc::vec::Vec;

use crate::drift::DriftSpec;
use crate::error::{Error, Result};
use crate::exec::{map_paths, Executor};
use crate::flow::{integrate, Direction, FlowOptions, FlowSample};
use crate::grid::GridFunction;
use crate::linalg::Vector;
use crate::randomness::sample_batch_path;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    Lebesgue,
    /// `μ(x) = e^{−|x|²}`.
    Gaussian,
}

impl Weight {
    #[inline]
    pub fn at(&self, x: &Vector) -> f64 {
        match self {
            Weight::Lebesgue => 1.0,
            Weight::Gaussian => libm::exp(-x.norm_squared()),
        }
    }
}

/// Integrability exponents: `p > 1` and its conjugate `q`, `1/p + 1/q = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormConfig {
    p: f64,
    q: f64,
    weight: Weight,
}

impl NormConfig {
    /// `q` is inferred from `p` when omitted.
    pub fn new(p: f64, q: Option<f64>, weight: Weight) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::config(alloc::format!("p must exceed 1, got {p}")));
        }
        let conj = p / (p - 1.0);
        let q = match q {
            None => conj,
            Some(q) if (1.0 / p + 1.0 / q - 1.0).abs() <= 1e-12 => q,
            Some(q) => {
                return Err(Error::config(alloc::format!("1/p + 1/q must equal 1 (p = {p}, q = {q})")))
            }
        };
        Ok(NormConfig { p, q, weight })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn weight(&self) -> Weight {
        self.weight
    }
}

/// `∫ |f|^p w dx`.
pub fn lp_integral(f: &GridFunction, p: f64, weight: Weight) -> f64 {
    let grid = f.grid();
    f.values()
        .iter()
        .enumerate()
        .map(|(i, v)| libm::pow(v.abs(), p) * weight.at(&grid.point(i)))
        .sum::<f64>()
        * grid.cell_volume()
}

/// `(∫ |f|^p w dx)^{1/p}`, `p ≥ 1`.
pub fn lp_norm(f: &GridFunction, p: f64, weight: Weight) -> f64 {
    assert!(p >= 1.0, "p must be at least 1");
    libm::pow(lp_integral(f, p, weight), 1.0 / p)
}

/// `∫ |∇f|^p w dx` with grid gradients.
pub fn gradient_integral(f: &GridFunction, p: f64, weight: Weight) -> f64 {
    let grid = f.grid();
    (0..grid.len())
        .map(|i| libm::pow(f.gradient(i).norm(), p) * weight.at(&grid.point(i)))
        .sum::<f64>()
        * grid.cell_volume()
}

/// `(∫ |∇f|^p e^{−|x|²} dx)^{1/p}`.
pub fn weighted_sobolev_seminorm(f: &GridFunction, p: f64) -> f64 {
    libm::pow(gradient_integral(f, p, Weight::Gaussian), 1.0 / p)
}

/// `(∫ (|f|^p + |∇f|^p) w dx)^{1/p}`.
pub fn sobolev_norm(f: &GridFunction, p: f64, weight: Weight) -> f64 {
    libm::pow(lp_integral(f, p, weight) + gradient_integral(f, p, weight), 1.0 / p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentStatistic {
    /// `sup_x sup_s E[sup_t |Dφⁿ − Dφ|^p]`.
    JacobianGap,
    /// `sup_x sup_s E[sup_t |φⁿ − φ|^p / (1+|x|)^p]`.
    FlowGap,
    /// `sup_x sup_s E[sup_t |Dφⁿ|^p]`.
    JacobianMoment,
}

impl MomentStatistic {
    pub const ALL: [MomentStatistic; 3] =
        [MomentStatistic::JacobianGap, MomentStatistic::FlowGap, MomentStatistic::JacobianMoment];

    pub fn name(&self) -> &'static str {
        match self {
            MomentStatistic::JacobianGap => "jacobian_gap",
            MomentStatistic::FlowGap => "flow_gap",
            MomentStatistic::JacobianMoment => "jacobian_moment",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentRow {
    /// Position in the input sequence.
    pub index: usize,
    /// Mollification width of the sequence entry (0 for unmollified smooth drifts).
    pub epsilon: f64,
    pub statistic: MomentStatistic,
    pub value: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub grid_id: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MomentTable {
    pub rows: Vec<MomentRow>,
}

impl MomentTable {
    /// Values of one statistic in sequence order.
    pub fn series(&self, statistic: MomentStatistic) -> Vec<f64> {
        self.rows.iter().filter(|r| r.statistic == statistic).map(|r| r.value).collect()
    }

    pub fn errors(&self, statistic: MomentStatistic) -> Vec<f64> {
        self.rows.iter().filter(|r| r.statistic == statistic).map(|r| r.std_error).collect()
    }
}

/// Finite grids replacing the suprema, plus Monte Carlo parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSetup {
    pub p: f64,
    pub points: Vec<Vector>,
    pub start_times: Vec<f64>,
    pub horizon: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    /// Free-form label recorded on every row.
    pub grid_id: String,
}

fn trajectory(b: &DriftSpec, path: &crate::randomness::BrownianPath, s: f64, x: &Vector) -> Result<Vec<FlowSample>> {
    let opts = FlowOptions::default().with_jacobian(true).with_trajectory(true);
    let r = integrate(Direction::Forward, b, path, s, path.horizon(), x, &opts)?;
    Ok(r.trajectory.unwrap_or_default())
}

/// Estimates the three moment statistics for every drift in `sequence`
/// against the finest mollification in it, on coupled paths.
pub fn flow_moment_estimates(
    sequence: &[DriftSpec],
    setup: &MomentSetup,
    exec: &impl Executor,
) -> Result<MomentTable> {
    if sequence.is_empty() || setup.points.is_empty() || setup.start_times.is_empty() || setup.n_paths == 0 {
        return Err(Error::config("moment estimation needs drifts, points, start times and paths"));
    }
    if let Some(b) = sequence.iter().find(|b| !b.is_smooth()) {
        return Err(Error::SmoothnessRequired(alloc::format!("moment estimates need mollified drifts, got {:?}", b.kind())));
    }
    let width = |b: &DriftSpec| b.epsilon().unwrap_or(0.0);
    let reference = (0..sequence.len())
        .min_by(|a, b| width(&sequence[*a]).total_cmp(&width(&sequence[*b])))
        .unwrap_or(0);
    let n_cells = setup.points.len() * setup.start_times.len();
    let dim = sequence[0].dim();
    let p = setup.p;

    // Per path: [n][cell] → (a, b, c).
    let per_path = map_paths(exec, setup.n_paths, |path_index| -> Result<Vec<[f64; 3]>> {
        let path = sample_batch_path(setup.seed, path_index as u64, setup.horizon, setup.n_steps, dim)?;
        let mut out = alloc::vec![[0.0; 3]; sequence.len() * n_cells];
        for (xi, x) in setup.points.iter().enumerate() {
            for (si, s) in setup.start_times.iter().enumerate() {
                let cell = xi * setup.start_times.len() + si;
                let reference_traj = trajectory(&sequence[reference], &path, *s, x)?;
                let weight = libm::pow(1.0 + x.norm(), p);
                for (n, b) in sequence.iter().enumerate() {
                    let traj = if n == reference { reference_traj.clone() } else { trajectory(b, &path, *s, x)? };
                    let mut stat = [0.0f64; 3];
                    for (a, r) in traj.iter().zip(&reference_traj) {
                        let (ja, jr) = (a.jacobian.unwrap(), r.jacobian.unwrap());
                        stat[0] = stat[0].max(libm::pow((ja - jr).frobenius_norm(), p));
                        stat[1] = stat[1].max(libm::pow((a.point - r.point).norm(), p) / weight);
                        stat[2] = stat[2].max(libm::pow(ja.frobenius_norm(), p));
                    }
                    out[n * n_cells + cell] = stat;
                }
            }
        }
        Ok(out)
    })?;

    let mut table = MomentTable::default();
    for (n, b) in sequence.iter().enumerate() {
        for (k, statistic) in MomentStatistic::ALL.iter().enumerate() {
            let mut best = (f64::NEG_INFINITY, 0.0);
            for cell in 0..n_cells {
                let samples: Vec<f64> = per_path.iter().map(|v| v[n * n_cells + cell][k]).collect();
                let m = stats::mean(&samples);
                if m > best.0 {
                    best = (m, stats::std_error(&samples));
                }
            }
            table.rows.push(MomentRow {
                index: n,
                epsilon: width(b),
                statistic: *statistic,
                value: best.0,
                std_error: best.1,
                n_paths: setup.n_paths,
                grid_id: setup.grid_id.clone(),
            });
        }
    }
    Ok(table)
}
