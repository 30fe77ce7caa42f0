//! The eight experiments and their data tables.

use stochtrans_core::exec::{map_paths, Sequential};
use stochtrans_core::norms::{gradient_integral, lp_integral};
use stochtrans_core::stability::{self, DemoConfig, HolderProbe, StabilityConfig};
use stochtrans_core::transport::solve_characteristics;
use stochtrans_core::weakform::{duality_pairing, initial_pairing, residual_reports};
use stochtrans_core::{
    flow_moment_estimates, inverse_check, sample_batch_path, DriftSpec, Executor, InitialData, MomentSetup, Result,
    TestFunction, Weight,
};

use crate::config::ExperimentConfig;
use crate::output::{self, format_f64, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    FlowCheck,
    Existence,
    Weakform,
    Duality,
    StabilityData,
    StabilityDrift,
    Moments,
    Regularization,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::FlowCheck,
        Experiment::Existence,
        Experiment::Weakform,
        Experiment::Duality,
        Experiment::StabilityData,
        Experiment::StabilityDrift,
        Experiment::Moments,
        Experiment::Regularization,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::FlowCheck => "flow-check",
            Experiment::Existence => "existence",
            Experiment::Weakform => "weakform",
            Experiment::Duality => "duality",
            Experiment::StabilityData => "stability-data",
            Experiment::StabilityDrift => "stability-drift",
            Experiment::Moments => "moments",
            Experiment::Regularization => "regularization",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }

    pub fn description(&self) -> &'static str {
        match self {
            Experiment::FlowCheck => "max |X(Y(x)) - x| over the grid per path and output time",
            Experiment::Existence => "L^2p and weighted W^1,p integrals of u per path; field of path 0 at T",
            Experiment::Weakform => "Ito-form residual per path against one bump test function",
            Experiment::Duality => "pairing of u(T, X_T) with a test function against the initial pairing",
            Experiment::StabilityData => "solution distances for u0 mollified at each width in `epsilons`",
            Experiment::StabilityDrift => "solution distances for drifts mollified at 2^-n, n = 1..levels",
            Experiment::Moments => "flow moment statistics along the mollification widths `epsilons`",
            Experiment::Regularization => "Holder seminorm of u over time, noisy (path mean) vs noiseless",
        }
    }

    /// Header of the data CSV.
    pub fn header(&self) -> &'static [&'static str] {
        match self {
            Experiment::FlowCheck => &FLOW_HEADER,
            Experiment::Existence => &EXISTENCE_HEADER,
            Experiment::Weakform => &output::RESIDUAL_HEADER,
            Experiment::Duality => &DUALITY_HEADER,
            Experiment::StabilityData | Experiment::StabilityDrift => &output::STABILITY_HEADER,
            Experiment::Moments => &output::MOMENT_HEADER,
            Experiment::Regularization => &output::DEMO_HEADER,
        }
    }
}

pub const FLOW_HEADER: [&str; 3] = ["path_index", "t", "inverse_error"];
pub const EXISTENCE_HEADER: [&str; 6] = ["path_index", "t", "l2p_integral", "sobolev_integral", "min", "max"];
pub const DUALITY_HEADER: [&str; 5] = ["path_index", "t", "pairing", "initial_pairing", "difference"];

/// The data table plus any extra files, keyed by file-name suffix.
pub struct Outputs {
    pub data: Table,
    pub extra: Vec<(String, Vec<u8>)>,
}

impl From<Table> for Outputs {
    fn from(data: Table) -> Self {
        Outputs { data, extra: Vec::new() }
    }
}

pub fn execute(cfg: &ExperimentConfig, exec: &impl Executor) -> Result<Outputs> {
    match cfg.experiment {
        Experiment::FlowCheck => flow_check(cfg, exec).map(Into::into),
        Experiment::Existence => existence(cfg, exec),
        Experiment::Weakform => weakform(cfg, exec).map(Into::into),
        Experiment::Duality => duality(cfg, exec).map(Into::into),
        Experiment::StabilityData => stability_data(cfg, exec).map(Into::into),
        Experiment::StabilityDrift => stability_drift(cfg, exec).map(Into::into),
        Experiment::Moments => moments(cfg, exec).map(Into::into),
        Experiment::Regularization => regularization(cfg, exec).map(Into::into),
    }
}

fn path(cfg: &ExperimentConfig, i: usize) -> Result<stochtrans_core::BrownianPath> {
    sample_batch_path(cfg.seed, i as u64, cfg.horizon, cfg.n_steps, cfg.dim)
}

fn stability_config(cfg: &ExperimentConfig) -> StabilityConfig {
    StabilityConfig {
        p: cfg.p(),
        grid: cfg.grid,
        horizon: cfg.horizon,
        n_steps: cfg.n_steps,
        output_stride: cfg.output_stride,
        n_paths: cfg.n_paths,
        seed: cfg.seed,
    }
}

fn test_function(cfg: &ExperimentConfig) -> Result<TestFunction> {
    TestFunction::new(cfg.phi_center, cfg.phi_scale)
}

fn flow_check(cfg: &ExperimentConfig, exec: &impl Executor) -> Result<Table> {
    let points: Vec<_> = cfg.grid.points().collect();
    let times = cfg.output_times();
    let per_path = map_paths(exec, cfg.n_paths, |i| {
        let path = path(cfg, i)?;
        times.iter().map(|t| inverse_check(&cfg.drift, &path, *t, &points)).collect::<Result<Vec<_>>>()
    })?;
    let mut table = Table::new(&FLOW_HEADER);
    for (i, errs) in per_path.iter().enumerate() {
        for (t, e) in times.iter().zip(errs) {
            table.push(vec![i.to_string(), format_f64(*t), format_f64(*e)]);
        }
    }
    Ok(table)
}

fn existence(cfg: &ExperimentConfig, exec: &impl Executor) -> Result<Outputs> {
    let times = cfg.output_times();
    let p = cfg.p();
    let per_path = map_paths(exec, cfg.n_paths, |i| {
        let sol = solve_characteristics(&cfg.drift, &cfg.u0, &path(cfg, i)?, &times, cfg.grid, &Sequential)?;
        let rows: Vec<[f64; 4]> = sol
            .fields()
            .iter()
            .map(|f| {
                let weighted = lp_integral(f, p, Weight::Gaussian) + gradient_integral(f, p, Weight::Gaussian);
                [lp_integral(f, 2.0 * p, Weight::Lebesgue), weighted, f.min(), f.max()]
            })
            .collect();
        let last = (i == 0).then(|| sol.fields().last().cloned()).flatten();
        Ok((rows, last))
    })?;
    let mut table = Table::new(&EXISTENCE_HEADER);
    for (i, (rows, _)) in per_path.iter().enumerate() {
        for (t, r) in times.iter().zip(rows) {
            let mut row = vec![i.to_string(), format_f64(*t)];
            row.extend(r.iter().map(|v| format_f64(*v)));
            table.push(row);
        }
    }
    let field = per_path[0].1.as_ref().expect("path 0 keeps its terminal field");
    let mut bin = Vec::new();
    output::write_grid_function(field, &mut bin).expect("in-memory write");
    Ok(Outputs {
        data: table,
        extra: vec![("field.csv".into(), output::grid_function_table(field).to_bytes()), ("field.bin".into(), bin)],
    })
}

fn weakform(cfg: &ExperimentConfig, exec: &impl Executor) -> Result<Table> {
    let phi = test_function(cfg)?;
    let reports = residual_reports(
        &cfg.drift,
        &cfg.u0,
        &[phi],
        cfg.grid,
        cfg.seed,
        cfg.horizon,
        cfg.n_steps,
        cfg.n_paths,
        exec,
    )?;
    Ok(output::residual_table(&reports[0]))
}

fn duality(cfg: &ExperimentConfig, exec: &impl Executor) -> Result<Table> {
    let phi = test_function(cfg)?;
    phi.check_support(&cfg.grid)?;
    let per_path = map_paths(exec, cfg.n_paths, |i| {
        let path = path(cfg, i)?;
        let sol = solve_characteristics(&cfg.drift, &cfg.u0, &path, &[0.0, cfg.horizon], cfg.grid, &Sequential)?;
        Ok((duality_pairing(&sol, &cfg.drift, &phi, &path, cfg.horizon)?, initial_pairing(&sol, &phi)))
    })?;
    let mut table = Table::new(&DUALITY_HEADER);
    for (i, (pair, init)) in per_path.iter().enumerate() {
        table.push(vec![
            i.to_string(),
            format_f64(cfg.horizon),
            format_f64(*pair),
            format_f64(*init),
            format_f64(pair - init),
        ]);
    }
    Ok(table)
}

fn stability_data(cfg: &ExperimentConfig, exec: &impl Executor) -> Result<Table> {
    let sequence = cfg
        .epsilons
        .iter()
        .map(|e| if *e == 0.0 { Ok(cfg.u0.clone()) } else { cfg.u0.mollify(*e) })
        .collect::<Result<Vec<InitialData>>>()?;
    let records = stability::initial_data_stability(&cfg.drift, &cfg.u0, &sequence, &stability_config(cfg), exec)?;
    Ok(output::stability_table(&records))
}

fn stability_drift(cfg: &ExperimentConfig, exec: &impl Executor) -> Result<Table> {
    let reference = cfg.drift.mollify(cfg.reference_eps)?;
    let sequence =
        (1..=cfg.levels).map(|n| cfg.drift.mollify(0.5f64.powi(n as i32))).collect::<Result<Vec<DriftSpec>>>()?;
    let probe = HolderProbe { grid: cfg.holder_grid, theta: cfg.holder_theta };
    let records = stability::drift_stability(&reference, &sequence, &cfg.u0, &probe, &stability_config(cfg), exec)?;
    Ok(output::stability_table(&records))
}

fn moments(cfg: &ExperimentConfig, exec: &impl Executor) -> Result<Table> {
    let sequence = cfg.epsilons.iter().map(|e| cfg.drift.mollify(*e)).collect::<Result<Vec<_>>>()?;
    let setup = MomentSetup {
        p: cfg.p(),
        points: cfg.moment_grid.points().collect(),
        start_times: cfg.start_times.clone(),
        horizon: cfg.horizon,
        n_steps: cfg.n_steps,
        n_paths: cfg.n_paths,
        seed: cfg.seed,
        grid_id: format!("L{}h{}", cfg.moment_grid.half_width(), cfg.moment_grid.step()),
    };
    Ok(output::moment_table(&flow_moment_estimates(&sequence, &setup, exec)?))
}

fn regularization(cfg: &ExperimentConfig, exec: &impl Executor) -> Result<Table> {
    let demo = DemoConfig {
        grid: cfg.grid,
        horizon: cfg.horizon,
        n_steps: cfg.n_steps,
        output_stride: cfg.output_stride,
        n_paths: cfg.n_paths,
        seed: cfg.seed,
        theta_prime: cfg.theta_prime,
        noise_amplitude: cfg.noise_amplitude,
    };
    Ok(output::demo_table(&stability::regularization_demo(&cfg.drift, &cfg.u0, &demo, exec)?))
}
