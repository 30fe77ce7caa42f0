//! Pathwise Monte Carlo kernels for the stochastic transport equation
//!
//! ```text
//! ∂ₜu + (b(x) + Ḃₜ)·∇u = 0,   u(0) = u₀
//! ```
//!
//! with Hölder-continuous, linearly growing drift `b`. Solutions are built by
//! stochastic characteristics, `u(t, x) = u₀(X_t^{-1}(x))`, and checked
//! against the Itô weak form, the duality identity, renormalization, and
//! the stability of the solution map in its data and drift.
//!
//! The crate is `no_std` and only needs `alloc`. Batch work goes through
//! [`exec::Executor`], so callers choose how paths and nodes are scheduled
//! while results stay bit-identical across schedules.

#![no_std]

extern crate alloc;

pub mod drift;
pub mod error;
pub mod exec;
pub mod flow;
pub mod grid;
pub mod initial;
pub mod linalg;
pub mod norms;
pub mod randomness;
pub mod stability;
pub mod stats;
pub mod transport;
pub mod weakform;

pub use drift::{Cusp, DriftKind, DriftSpec, RoughLadder, VectorField};
pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use flow::{backward_flow, forward_flow, inverse_check, FlowResult};
pub use grid::{Grid, GridFunction, ScalarField};
pub use initial::InitialData;
pub use linalg::{Matrix, Vector, MAX_DIM};
pub use randomness::{sample_batch_path, sample_path, BrownianPath};
pub use transport::{dual_density, renormalize, solve_characteristics, PathSolution};
pub use norms::{flow_moment_estimates, MomentSetup, MomentStatistic, MomentTable, NormConfig, Weight};
pub use stability::{
    drift_stability, initial_data_stability, regularization_demo, DemoConfig, DemoReport, HolderProbe,
    StabilityConfig, StabilityRecord,
};
pub use weakform::{duality_pairing, ito_residual, Residual, ResidualReport, TestFunction};
