//! Numerical laboratory for soliton momentum dynamics in the perturbed
//! fifth-order Kaup-Kupershmidt equation.
//!
//! - [`soliton`]: sech² ansatz, momentum functional, quadrature audit
//! - [`spectral`]: pseudospectral PDE solver and balance diagnostics
//! - [`riccati`]: deterministic momentum ODE, closed and perturbative forms
//! - [`stochastic`]: white-noise gain, SDE paths and Monte Carlo moments
//! - [`painleve`]: reduction to Painlevé II and a validated integrator

pub mod error;
pub mod painleve;
pub mod quadrature;
pub mod riccati;
pub mod soliton;
pub mod spectral;
pub mod stochastic;

pub use error::{KkError, Result};
