//! Continual learning across problem sizes for constructive neural routing
//! policies (TSP and CVRP).
//!
//! The crate is organized bottom-up: [`instances`] generates and parses
//! problem instances, [`routing`] defines tours, feasibility and reference
//! solvers, [`policy`] holds the attention policy with its hand-written
//! reverse-mode gradients, [`trainer`] runs the ascending-size curriculum with
//! experience replay and exemplar regularization, [`eval`] reproduces the
//! reporting protocol and [`cli`] exposes all of it on the command line.

pub mod cli;
pub mod error;
pub mod eval;
pub mod instances;
pub mod policy;
pub mod routing;
pub mod trainer;

pub use error::{Error, Result};
