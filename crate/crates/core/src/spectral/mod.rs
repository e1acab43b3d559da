//! Pseudospectral solver for the perturbed Kaup-Kupershmidt equation on a
//! periodic box, with momentum-balance diagnostics.

mod grid;
pub mod snapshot;
mod solver;

pub use grid::Grid;
pub use solver::{
    kk_rhs, momentum_balance_residual, run_pde, step, AlphaSource, Diagnostics, PdeConfig, PdeState, RunOptions,
    Sample, Scheme, Snapshot, Solver, Trajectory,
};
