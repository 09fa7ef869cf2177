//! Certified search for spurious local minima of two-layer ReLU networks
//! trained on the population squared loss under standard Gaussian input.
//!
//! The crate is organised bottom-up:
//!
//! * [`closed_form`] evaluates the objective, gradient and Hessian exactly
//!   (no sampling) and carries the Monte Carlo / finite-difference oracles.
//! * [`search`] runs plain gradient descent and deduplicates candidates up to
//!   neuron and coordinate permutations.
//! * [`rigor`] is the outward-rounded interval layer plus the eigenvalue and
//!   derivative bounds.
//! * [`certify`] turns those bounds into a certificate of a nearby strict,
//!   non-global local minimum.
//! * [`harness`] drives experiments and owns every file format.

pub mod certify;
pub mod closed_form;
pub mod error;
pub mod harness;
pub mod rigor;
pub mod search;
mod weights;

pub use error::{Error, Operand, Result};
pub use weights::{TargetBasis, WeightPoint};
