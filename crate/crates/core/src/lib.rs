//! Prime-race densities for abelian extensions of Q.
//!
//! The crate is organised bottom-up:
//!
//! * [`group`]: finite abelian groups, characters and class functions.
//! * [`field`]: multiquadratic and cyclotomic-subgroup fields with their
//!   Artin conductors.
//! * [`zeros`]: Dirichlet L-function zeros, archives and zero sums.
//! * [`race`]: means, variances, correlations and the covariance matrix of a race.
//! * [`gaussian`]: Gaussian orthant probabilities (closed forms and randomized QMC).
//! * [`density`]: race densities from the Gaussian formula.
//! * [`simulator`]: random-phase sampling of the limiting distribution.
//! * [`partitions`]: set partitions and the alternating partition operator.
//! * [`constructions`]: prime-selection constructions for multiquadratic towers.
//!
//! Data-parallel loops go through [`exec`], which uses rayon when the
//! `parallel` feature is enabled and runs sequentially otherwise.

pub mod constructions;
pub mod density;
pub mod error;
pub mod exec;
pub mod field;
pub mod gaussian;
pub mod group;
pub mod partitions;
pub mod primes;
pub mod race;
pub mod simulator;
pub mod zeros;

pub use error::{Error, Result};
