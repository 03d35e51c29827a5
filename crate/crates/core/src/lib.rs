//! Large deviations of renewal-reward processes.
//!
//! A renewal-reward process collects a reward vector `X_i` at each renewal
//! time `T_i = S_1 + ⋯ + S_i`, so `W_t = Σ X_i 1{T_i ≤ t}`. This crate
//! computes the rate functions governing `P[W_t/t ∈ A]` — the Cramér
//! transform `J` of a waiting-time/reward pair, its perspective envelope `Υ`,
//! and the tail-mixed rates `I_i`, `I_s` — and checks them against seeded,
//! parallel Monte Carlo.
//!
//! - [`model`]: pair laws (built-in families and empirical samples), tail exponents.
//! - [`cgf`]: the cumulant generating function `Λ(ζ, φ)`.
//! - [`rate`]: `J`, `Υ`, `I_i`, `I_s`, infima over event sets.
//! - [`mc`]: trajectory simulation and probability estimates with exact binomial intervals.
//! - [`verify`]: bound checks, counterexamples, super-multiplicativity, tail exponents.
//! - [`cli`]: the `ldp-renewal` command line.

// Negated float comparisons are deliberate: they send NaN down the
// rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Quadrature constants are quoted at full published precision.
#![allow(clippy::excessive_precision)]

pub mod cgf;
pub mod cli;
pub mod error;
pub mod ext;
pub mod mc;
pub mod model;
pub mod optim;
pub mod quad;
pub mod rate;
pub mod sets;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use ext::ExtReal;
