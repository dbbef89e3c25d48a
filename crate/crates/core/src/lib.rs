//! Numerical and exact verification routines for Baxter Q-operators of the
//! hyperbolic Ruijsenaars system.
//!
//! Modules build on each other: [`special_functions`] provides the double sine
//! function, [`kernels`] the kernel and measure built from it, [`difference_operators`]
//! the Macdonald and Ruijsenaars operators, [`q_identities`] the exact rational
//! identities, [`residue_series`] the residue expansions and [`quadrature`] the
//! direct integrals.

pub mod error;
pub mod scalar;
pub mod special_functions;
pub mod kernels;
pub mod difference_operators;
pub mod q_identities;
pub mod residue_series;
pub mod quadrature;
pub mod par;

pub use error::{Error, LatticePoint, Result};
