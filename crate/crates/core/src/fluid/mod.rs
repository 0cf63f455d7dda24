//! Fluid-model data builders and solvers: EDF (hard and soft), SJF/SRPT
//! workload, FIFO, LIFO and continuum-priority models.

mod edf;
mod primitives;
mod work;

pub use edf::{
    edf_fluid_solve, edf_soft_solve, frontier, rho_monotonicity_check, EdfCertification,
    EdfFluidSolution, EdfSolveOptions, RhoComparison, SoftEdfSolution,
};
pub use primitives::{
    build_alpha_continuum, build_alpha_edf, build_alpha_fifo, build_alpha_work, build_mu,
    uniform_grid, ContinuumRate, EdfPrimitives, MarkLaw, Piecewise,
};
pub use work::{count_transform, sjf_srpt_fluid_solve};
