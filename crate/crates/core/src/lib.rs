//! Bayesian detection of a Wiener drift change whose onset coincides with an
//! arrival of an observed Poisson process.
//!
//! The observer watches `X_t = W_t + mu (t - Theta)^+` together with a Poisson
//! process `N` of rate `lambda`. The disorder time `Theta` is the `zeta`-th
//! arrival of `N`, where `zeta` is zero with probability `pi` and geometric
//! with success probability `p` otherwise. This crate computes
//!
//! * the minimal Bayes risk `V(pi) = inf_tau P(tau < Theta) + c E(tau - Theta)^+`
//!   by value iteration over a one-arrival dynamic-programming operator
//!   ([`value`]),
//! * the optimal alarm threshold on the posterior probability process and
//!   epsilon-optimal thresholds with certified error bounds,
//! * false-alarm probabilities of threshold rules and the solution of the
//!   false-alarm-constrained problem ([`variational`]),
//! * an exact path simulator of the posterior process used as an
//!   independent Monte Carlo oracle ([`montecarlo`]).
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
pub mod grid;
pub(crate) mod math;
pub mod model;
pub mod montecarlo;
pub mod quadrature;
pub mod value;
pub mod variational;

pub use error::{Error, Result};
pub use grid::{Grid, GridFunction};
pub use model::{ModelParams, Roots};
pub use montecarlo::{MCEstimate, PathRecord, SimConfig};
pub use value::{Operator, SolverOptions, ThresholdSolve, ValueIteration};
pub use variational::{FalseAlarmSolve, SolutionKind, VariationalSolution};
