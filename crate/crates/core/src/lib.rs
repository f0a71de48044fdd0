//! Survival of growth models through renormalization.
//!
//! Two chains are covered:
//!
//! - the Galton-Watson chain ([`galton_watson`]), with exact time-`T` laws,
//!   the generating-function extinction oracle, block-event certificates
//!   `P^N(Y_T >= 2N) > 1/2` and the Chebyshev product bound on survival;
//! - a cooperative two-species chain ([`coop`]) whose transition law from
//!   `(x, y)` is `Bin(2(x + y), q) ⊗ Bin(2 min(x, y), p)`, with the exact
//!   one-step expectation `h(p, q)`, exact joint laws, certificates
//!   `E^{(N,N)}[⌊Z_T / N⌋] > 1` and the critical curve `h(p, q) = 1`.
//!
//! [`phase`] runs reproducible parallel sweeps over the `(p, q)` square and
//! renders them as CSV, PPM or SVG. [`dist`] holds the finite-support
//! integer distributions all exact computations are written in, and [`rng`]
//! the documented seed-derivation scheme.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coop;
pub mod dist;
pub mod error;
pub mod galton_watson;
pub mod phase;
pub mod rng;
pub mod stats;

pub use coop::{CoopParams, CoopState, JointLaw};
pub use dist::IntegerDistribution;
pub use error::{Error, Result};
pub use galton_watson::{Certificate, OffspringLaw};
pub use phase::{PhaseGrid, SurvivalEstimate};
