//! Experiment harness for the fluidq toolkit: TOML-configured fluid solves,
//! pre-limit simulations, exact identity verification, convergence sweeps,
//! and the SJF/SRPT agreement study.

pub mod config;
pub mod figure1;
pub mod run;

pub use config::{ExperimentConfig, FluidSolution};
pub use figure1::run_figure1;
pub use run::{
    fluid_report, median, nonincreasing, run_agreement, run_convergence, run_seed, sup_levy,
    AgreementReport, ConvergenceReport, MONOTONE_SLACK,
};
