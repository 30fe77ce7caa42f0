//! Experiment orchestration, file formats and the command-line front end for
//! [`stochtrans_core`].
//!
//! An experiment is described by a flat [`config::RawConfig`]; [`run`]
//! resolves it, executes the named experiment on a rayon pool and writes a
//! data CSV plus a JSON metadata sidecar named after the config hash.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use stochtrans_core::Executor;

pub use config::{resolve, validate, ExperimentConfig, RawConfig, Violation};
pub use experiments::Experiment;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "STOCHTRANS_OUTPUT_DIR";

/// Index-ordered parallel map on a dedicated rayon pool.
pub struct RayonExecutor {
    pool: rayon::ThreadPool,
}

impl RayonExecutor {
    /// `threads = 0` lets rayon pick the thread count.
    pub fn new(threads: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        Ok(RayonExecutor { pool: rayon::ThreadPoolBuilder::new().num_threads(threads).build()? })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for RayonExecutor {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration:\n{}", .0.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Parse(#[from] config::ParseError),
    #[error("{0}")]
    Numeric(#[from] stochtrans_core::Error),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl RunError {
    /// Process exit status: 2 for configuration problems, 3 for numerical
    /// failures, 4 for IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Invalid(_) | RunError::Parse(_) => 2,
            RunError::Numeric(_) => 3,
            RunError::Io { .. } | RunError::Pool(_) => 4,
        }
    }
}

/// Files written by one run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub data: PathBuf,
    pub metadata: PathBuf,
    pub extra: Vec<PathBuf>,
    pub rows: usize,
}

/// The output directory: the `output` key, else the environment variable,
/// else the working directory.
pub fn output_dir(raw: &RawConfig) -> PathBuf {
    raw.get("output")
        .map(PathBuf::from)
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

pub fn run(raw: &RawConfig) -> Result<RunSummary, RunError> {
    let cfg = resolve(raw).map_err(RunError::Invalid)?;
    let exec = RayonExecutor::new(cfg.threads)?;
    let started = Instant::now();
    let outputs = experiments::execute(&cfg, &exec)?;
    let wall = started.elapsed().as_secs_f64();

    let dir = output_dir(raw);
    std::fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
    let stem = format!("{}-{}", cfg.experiment.name(), &raw.hash()[..16]);
    let write = |name: String, bytes: &[u8]| -> Result<PathBuf, RunError> {
        let path = dir.join(name);
        output::write_file(&path, bytes).map_err(|e| io_error(&path, e))?;
        Ok(path)
    };
    let data = write(format!("{stem}.csv"), &outputs.data.to_bytes())?;
    let mut extra = Vec::new();
    for (suffix, bytes) in &outputs.extra {
        extra.push(write(format!("{stem}-{suffix}"), bytes)?);
    }
    let mut files = vec![file_name(&data)];
    files.extend(extra.iter().map(|p| file_name(p)));
    let meta = output::metadata(raw, &cfg, exec.threads(), wall, &files);
    let metadata = write(format!("{stem}.json"), serde_json::to_string_pretty(&meta).expect("json").as_bytes())?;
    Ok(RunSummary { data, metadata, extra, rows: outputs.data.rows.len() })
}

fn io_error(path: &Path, source: std::io::Error) -> RunError {
    RunError::Io { context: path.display().to_string(), source }
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}
