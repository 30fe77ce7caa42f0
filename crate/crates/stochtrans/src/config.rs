//! Flat `key = value` experiment configuration.
//!
//! A config file holds one `key = value` pair per line; `#` starts a
//! comment. Command-line overrides `--key=value` replace file entries.
//! Parsing keeps the raw strings (echoed verbatim into metadata) and
//! [`resolve`] turns them into typed settings, collecting every violation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use stochtrans_core::drift::{Cusp, RoughLadder};
use stochtrans_core::{DriftSpec, Grid, InitialData, NormConfig, Vector, Weight, MAX_DIM};

use crate::Experiment;

/// Raw entries in key order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}: expected `key = value`, found {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: duplicate key {key:?}")]
    Duplicate { line: usize, key: String },
    #[error("override {0:?} is not of the form --key=value")]
    Override(String),
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut entries = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .filter(|(k, _)| !k.is_empty())
                .ok_or_else(|| ParseError::Syntax { line: n + 1, text: line.to_string() })?;
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(ParseError::Duplicate { line: n + 1, key: key.to_string() });
            }
        }
        Ok(RawConfig { entries })
    }

    /// Applies one `--key=value` argument.
    pub fn apply_override(&mut self, arg: &str) -> Result<(), ParseError> {
        let (key, value) = arg
            .strip_prefix("--")
            .and_then(|a| a.split_once('='))
            .filter(|(k, _)| !k.trim().is_empty())
            .ok_or_else(|| ParseError::Override(arg.to_string()))?;
        self.entries.insert(key.trim().to_string(), value.trim().to_string());
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    /// SHA-256 over the entries that affect data, as lowercase hex.
    ///
    /// `output` and `threads` are excluded: they change where results go
    /// and how they are scheduled, not what they are.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.entries {
            if NON_DATA_KEYS.contains(&k.as_str()) {
                continue;
            }
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }
}

const NON_DATA_KEYS: [&str; 2] = ["output", "threads"];

/// Every key the resolver understands.
pub const KNOWN_KEYS: &[&str] = &[
    "experiment", "dim", "p", "q", "T", "n_steps", "L", "h", "n_paths", "seed", "output", "threads",
    "output_stride", "drift", "theta", "amplitude", "K", "tail_slope", "rate", "drift_value", "drift_eps", "u0",
    "u0_center", "u0_width", "u0_amplitude", "u0_half_width", "u0_edge", "u0_alpha", "u0_radius", "u0_eps",
    "phi_center", "phi_scale", "epsilons", "levels", "reference_eps", "holder_theta", "holder_L", "holder_h",
    "moment_L", "moment_h", "start_times", "theta_prime", "noise_amplitude",
];

/// A failed constraint on one field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub constraint: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.constraint)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub dim: usize,
    pub norms: NormConfig,
    pub horizon: f64,
    pub n_steps: usize,
    pub half_width: f64,
    pub step: f64,
    pub grid: Grid,
    pub n_paths: usize,
    pub seed: u64,
    pub threads: usize,
    pub output_stride: usize,
    pub drift: DriftSpec,
    pub u0: InitialData,
    pub phi_center: Vector,
    pub phi_scale: f64,
    pub epsilons: Vec<f64>,
    pub levels: usize,
    pub reference_eps: f64,
    pub holder_theta: f64,
    pub holder_grid: Grid,
    pub moment_grid: Grid,
    pub start_times: Vec<f64>,
    pub theta_prime: f64,
    pub noise_amplitude: f64,
}

impl ExperimentConfig {
    pub fn p(&self) -> f64 {
        self.norms.p()
    }

    /// Output step indices `0, stride, 2·stride, …, n_steps` as times.
    pub fn output_times(&self) -> Vec<f64> {
        let dt = self.horizon / self.n_steps as f64;
        (0..=self.n_steps).step_by(self.output_stride).map(|k| k as f64 * dt).collect()
    }
}

/// Empty iff the configuration can be run.
pub fn validate(raw: &RawConfig) -> Vec<Violation> {
    match resolve(raw) {
        Ok(_) => Vec::new(),
        Err(v) => v,
    }
}

struct Reader<'a> {
    raw: &'a RawConfig,
    violations: Vec<Violation>,
}

impl Reader<'_> {
    fn fail(&mut self, field: &str, constraint: impl Into<String>) {
        self.violations.push(Violation { field: field.to_string(), constraint: constraint.into() });
    }

    fn parsed<T: FromStr>(&mut self, key: &str) -> Option<T> {
        let text = self.raw.get(key)?;
        match text.parse() {
            Ok(v) => Some(v),
            Err(_) => {
                self.fail(key, format!("cannot parse {text:?}"));
                None
            }
        }
    }

    fn value<T: FromStr>(&mut self, key: &str, default: T) -> T {
        self.parsed(key).unwrap_or(default)
    }

    fn list(&mut self, key: &str, default: &[f64]) -> Vec<f64> {
        let Some(text) = self.raw.get(key) else { return default.to_vec() };
        let items: Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse::<f64>()).collect();
        match items {
            Ok(v) if !v.is_empty() => v,
            _ => {
                self.fail(key, format!("expected a comma-separated list of numbers, found {text:?}"));
                default.to_vec()
            }
        }
    }

    fn vector(&mut self, key: &str, dim: usize) -> Vector {
        let v = self.list(key, &[0.0]);
        if v.len() == 1 {
            Vector::splat(dim, v[0])
        } else if v.len() == dim {
            Vector::from_slice(&v)
        } else {
            self.fail(key, format!("expected 1 or {dim} components, found {}", v.len()));
            Vector::zeros(dim)
        }
    }

    fn positive(&mut self, key: &str, default: f64) -> f64 {
        let v = self.value(key, default);
        if !(v > 0.0 && v.is_finite()) {
            self.fail(key, "must be positive");
            return default;
        }
        v
    }

    fn grid(&mut self, field: &str, dim: usize, half_width: f64, step: f64) -> Grid {
        match Grid::new(dim, half_width, step) {
            Ok(g) => g,
            Err(_) => {
                self.fail(field, "L/h not integral");
                Grid::new(dim, 1.0, 1.0).expect("unit grid")
            }
        }
    }
}

pub fn resolve(raw: &RawConfig) -> Result<ExperimentConfig, Vec<Violation>> {
    let mut r = Reader { raw, violations: Vec::new() };
    for key in raw.entries().keys() {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            r.fail(key, "unknown field");
        }
    }

    let experiment = match raw.get("experiment") {
        None => {
            r.fail("experiment", "required");
            Experiment::FlowCheck
        }
        Some(name) => match Experiment::from_name(name) {
            Some(e) => e,
            None => {
                r.fail("experiment", format!("unknown experiment {name:?}"));
                Experiment::FlowCheck
            }
        },
    };

    let mut dim: usize = r.value("dim", 1);
    if !(1..=MAX_DIM).contains(&dim) {
        r.fail("dim", format!("must lie in 1..={MAX_DIM}"));
        dim = 1;
    }

    let p: f64 = r.value("p", 2.0);
    let q: Option<f64> = r.parsed("q");
    let norms = if !(p > 1.0) {
        r.fail("p", "p must exceed 1");
        NormConfig::new(2.0, None, Weight::Gaussian).expect("p = 2")
    } else {
        match NormConfig::new(p, q, Weight::Gaussian) {
            Ok(n) => n,
            Err(_) => {
                r.fail("q", "must satisfy 1/p + 1/q = 1");
                NormConfig::new(p, None, Weight::Gaussian).expect("p > 1")
            }
        }
    };

    let horizon = r.positive("T", 1.0);
    let mut n_steps: usize = r.value("n_steps", 64);
    if n_steps == 0 {
        r.fail("n_steps", "must be at least 1");
        n_steps = 1;
    }
    let half_width = r.positive("L", 3.0);
    let step = r.positive("h", 0.1);
    let grid = r.grid("L", dim, half_width, step);
    let n_paths: usize = r.value("n_paths", 100);
    if n_paths == 0 {
        r.fail("n_paths", "must be at least 1");
    }
    let seed: u64 = r.value("seed", 0);
    let threads: usize = r.value("threads", 0);
    let output_stride: usize = r.value("output_stride", n_steps);
    if output_stride == 0 || n_steps % output_stride != 0 {
        r.fail("output_stride", "must divide n_steps");
    }

    let drift = read_drift(&mut r, dim);
    let u0 = read_initial(&mut r, dim);
    let phi_center = r.vector("phi_center", dim);
    let phi_scale = r.positive("phi_scale", 0.5);

    let default_eps: &[f64] = match experiment {
        Experiment::Moments => &[0.4, 0.2, 0.1, 0.05],
        _ => &[0.2, 0.1, 0.05],
    };
    let epsilons = r.list("epsilons", default_eps);
    if epsilons.iter().any(|e| !(*e >= 0.0)) || (experiment == Experiment::Moments && epsilons.contains(&0.0)) {
        r.fail("epsilons", "widths must be positive (0 allowed for stability-data only)");
    }
    let levels: usize = r.value("levels", 5);
    if levels == 0 {
        r.fail("levels", "must be at least 1");
    }
    let reference_eps = r.positive("reference_eps", 0.5f64.powi(levels as i32 + 2));
    let holder_theta = r.positive("holder_theta", 0.5 * drift.theta().max(0.5));
    let holder_l = r.positive("holder_L", 2.0);
    let holder_h = r.positive("holder_h", 0.05);
    let holder_grid = r.grid("holder_L", dim, holder_l, holder_h);
    let moment_l = r.positive("moment_L", 1.0);
    let moment_h = r.positive("moment_h", 0.5);
    let moment_grid = r.grid("moment_L", dim, moment_l, moment_h);
    let start_times = r.list("start_times", &[0.0]);
    let dt = horizon / n_steps as f64;
    if start_times.iter().any(|s| {
        let k = s / dt;
        !(*s >= 0.0 && *s < horizon) || (k - k.round()).abs() > 1e-9 * k.max(1.0)
    }) {
        r.fail("start_times", "must be path-grid times in [0, T)");
    }
    let theta_prime = r.positive("theta_prime", 0.5);
    let noise_amplitude: f64 = r.value("noise_amplitude", 1.0);
    if !noise_amplitude.is_finite() {
        r.fail("noise_amplitude", "must be finite");
    }

    if r.violations.is_empty() {
        Ok(ExperimentConfig {
            experiment,
            dim,
            norms,
            horizon,
            n_steps,
            half_width,
            step,
            grid,
            n_paths,
            seed,
            threads,
            output_stride,
            drift,
            u0,
            phi_center,
            phi_scale,
            epsilons,
            levels,
            reference_eps,
            holder_theta,
            holder_grid,
            moment_grid,
            start_times,
            theta_prime,
            noise_amplitude,
        })
    } else {
        Err(r.violations)
    }
}

fn read_drift(r: &mut Reader<'_>, dim: usize) -> DriftSpec {
    let kind = r.raw.get("drift").unwrap_or("zero").to_string();
    let theta: f64 = r.value("theta", 0.5);
    let amplitude: f64 = r.value("amplitude", 1.0);
    let built = match kind.as_str() {
        "zero" => Ok(DriftSpec::zero(dim)),
        "constant" => Ok(DriftSpec::constant(r.vector("drift_value", dim))),
        "ou" => Ok(DriftSpec::ornstein_uhlenbeck(dim, r.value("rate", 1.0))),
        "rough" => {
            let ladder = RoughLadder { theta, amplitude, levels: r.value("K", 8), tail_slope: r.value("tail_slope", 0.0) };
            DriftSpec::rough(dim, ladder)
        }
        "cusp" => DriftSpec::cusp(dim, Cusp { theta, amplitude }),
        other => {
            r.fail("drift", format!("unknown drift {other:?} (zero, constant, ou, rough, cusp)"));
            Ok(DriftSpec::zero(dim))
        }
    };
    let drift = match built {
        Ok(d) => d,
        Err(e) => {
            r.fail("drift", e.to_string());
            DriftSpec::zero(dim)
        }
    };
    match r.parsed::<f64>("drift_eps") {
        None => drift,
        Some(eps) => drift.mollify(eps).unwrap_or_else(|e| {
            r.fail("drift_eps", e.to_string());
            DriftSpec::zero(dim)
        }),
    }
}

fn read_initial(r: &mut Reader<'_>, dim: usize) -> InitialData {
    let kind = r.raw.get("u0").unwrap_or("gaussian").to_string();
    let data = match kind.as_str() {
        "zero" => InitialData::Zero,
        "gaussian" => {
            let center = r.vector("u0_center", dim);
            InitialData::gaussian(center, r.positive("u0_width", 0.5), r.value("u0_amplitude", 1.0))
        }
        "indicator" => InitialData::SmoothedIndicator {
            half_width: r.positive("u0_half_width", 0.5),
            edge: r.positive("u0_edge", 0.1),
        },
        "power-cusp" => InitialData::PowerCusp { alpha: r.positive("u0_alpha", 0.5), radius: r.positive("u0_radius", 1.0) },
        other => {
            r.fail("u0", format!("unknown initial data {other:?} (zero, gaussian, indicator, power-cusp)"));
            InitialData::Zero
        }
    };
    match r.parsed::<f64>("u0_eps") {
        None => data,
        Some(eps) => data.mollify(eps).unwrap_or_else(|e| {
            r.fail("u0_eps", e.to_string());
            InitialData::Zero
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(text: &str) -> RawConfig {
        RawConfig::parse(text).unwrap()
    }

    #[test]
    fn parses_comments_and_overrides() {
        let mut c = raw("# header\nexperiment = flow-check\n\n  p=3 # trailing\n");
        assert_eq!(c.get("p"), Some("3"));
        c.apply_override("--p=4").unwrap();
        assert_eq!(c.get("p"), Some("4"));
        assert!(c.apply_override("p=4").is_err());
        assert!(RawConfig::parse("novalue\n").is_err());
        assert!(RawConfig::parse("a=1\na=2\n").is_err());
    }

    #[test]
    fn q_is_inferred_as_conjugate() {
        let c = resolve(&raw("experiment=existence\np=2\n")).unwrap();
        assert_eq!(c.norms.q(), 2.0);
        assert!(validate(&raw("experiment=existence\np=3\nq=1.5\n")).is_empty());
        assert_eq!(validate(&raw("experiment=existence\np=3\nq=2\n"))[0].field, "q");
    }

    #[test]
    fn p_must_exceed_one() {
        let v = validate(&raw("experiment=existence\np=1\n"));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].to_string(), "p: p must exceed 1");
    }

    #[test]
    fn box_must_be_integral() {
        let v = validate(&raw("experiment=existence\nL=2\nh=0.3\n"));
        assert_eq!(v, vec![Violation { field: "L".into(), constraint: "L/h not integral".into() }]);
    }

    #[test]
    fn every_violation_is_reported() {
        let v = validate(&raw("experiment=nope\nn_paths=0\nT=-1\nbogus=1\ndrift=rough\ntheta=1.5\n"));
        let fields: Vec<&str> = v.iter().map(|x| x.field.as_str()).collect();
        for f in ["bogus", "experiment", "T", "n_paths", "drift"] {
            assert!(fields.contains(&f), "{f} missing from {v:?}");
        }
    }

    #[test]
    fn hash_ignores_output_and_threads() {
        let a = raw("experiment=existence\nseed=1\n");
        let mut b = a.clone();
        b.set("threads", "4");
        b.set("output", "/tmp/x");
        assert_eq!(a.hash(), b.hash());
        b.set("seed", "2");
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
