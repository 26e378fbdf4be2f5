//! Weighted interacting particle systems with full genealogy.
//!
//! The crate is organised around a two-state counterexample to the classical
//! falling-factorial transition formula for the ancestral partition process:
//!
//! * [`model`]: closed-form limit quantities and the `R(alpha, p_a, p_b)` curve.
//! * [`simulator`]: forward simulation of a weighted particle system with
//!   multinomial resampling, recording every ancestor vector.
//! * [`genealogy`]: reverse-time ancestral partitions, the falling-factorial
//!   transition formula and its brute-force enumeration oracle.
//! * [`counterexample`]: exact, enumerated and Monte Carlo evaluation of
//!   `P(a_2^(1) = 1 | nu_2^(1) = 2, nu_1^(1) = 2)` for the two-state model.
//! * [`coupling`]: the hat/tilde coupling and its empirical checks.
//! * [`formats`]: text, CSV and JSON readers/writers for every artifact.

pub mod counterexample;
pub mod coupling;
pub mod error;
pub mod formats;
pub mod genealogy;
pub mod model;
pub mod rng;
pub mod simulator;
pub mod stats;

pub use error::{Error, Result};
