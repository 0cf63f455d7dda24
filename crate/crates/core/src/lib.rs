//! Numerical toolkit for continuous-parameter priority queues.
//!
//! The computational kernel is the Skorokhod map on the half-line applied
//! column-wise to measure-valued paths (the measure-valued Skorokhod map).
//! On top of it sit fluid-model solvers for EDF (hard and soft), SJF/SRPT,
//! FIFO/LIFO and continuum-priority queues, and discrete-event simulators of
//! the corresponding stochastic systems that satisfy the same reflection
//! identities exactly, pre-limit.
//!
//! Path and measure types are generic over the scalar via `num_traits::Float`;
//! `f64` aliases are exported at the crate root and used by the simulator.

pub mod error;
pub mod fluid;
pub mod measure;
pub mod measure_path;
pub mod mvsm;
pub mod sim;
pub mod step_path;

pub use error::{Error, Result};
pub use measure::{levy_distance, sup_cdf_distance, FiniteMeasure};
pub use measure_path::MeasurePath;
pub use mvsm::{kclass_solve, theta, theta_lifo, theta_vs_kclass, verify_mvsp, MvsmSolution};
pub use step_path::{merge_grids, stieltjes_integral, StepPath};

/// Concrete scalar aliases.
pub type StepPath64 = StepPath<f64>;
pub type StepPath32 = StepPath<f32>;
pub type FiniteMeasure64 = FiniteMeasure<f64>;
pub type FiniteMeasure32 = FiniteMeasure<f32>;
pub type MeasurePath64 = MeasurePath<f64>;
pub type MeasurePath32 = MeasurePath<f32>;
pub type MvsmSolution64 = MvsmSolution<f64>;
