//! Dirichlet process mixtures of generalized Mallows models over top-t
//! rankings, with two Gibbs samplers and the numerical oracles used to check
//! them.

pub mod dpm;
pub mod eval;
pub mod gm;
pub mod quadrature;
pub mod rankings;
pub mod samplers;
