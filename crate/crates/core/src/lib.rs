//! Entropic characteristics of sets of quantum states.
//!
//! * [`spectra`]: parametric eigenvalue sequences, partition sums, increase and
//!   decrease coefficients.
//! * [`qcore`]: density matrices, entropy, relative entropy, dephasing.
//! * [`maxent`]: maximal entropy under energy and relative-entropy constraints.
//! * [`chicap`]: the χ-capacity of finite state sets and its optimal average state.
//! * [`constructions`]: closed-form families with known capacities.
//! * [`approx`]: capacities of projected (truncated) state sets.
//! * [`cli`]: the batch front end behind the `qentcap` binary.
//!
//! All logarithms are natural; entropies are in nats.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::len_without_is_empty)]

pub mod approx;
pub mod chicap;
pub mod cli;
pub mod constructions;
pub mod error;
pub mod maxent;
pub mod qcore;
pub mod random;
pub(crate) mod series;
pub mod spectra;

pub use error::{Error, Result};
