//! Robust MDP construction and solving for high-confidence (percentile
//! criterion) policies on tabular MDPs.
//!
//! The crate builds ambiguity sets as per-state-action weighted-norm balls
//! around a nominal transition distribution, optimizes the shape (weights)
//! and size (budget) of those balls, and solves the resulting robust MDP
//! by value iteration on the robust Bellman operator.
//!
//! The crate is `no_std` + `alloc`; all IO, file formats, and the CLI live
//! in the companion `rmdp-cli` crate.

#![no_std]

extern crate alloc;

pub mod bayes;
pub mod builder;
pub mod domains;
pub mod error;
pub mod math;
pub mod mdp;
pub mod norms;
pub mod solver;

pub use error::{Error, Result};
pub use mdp::{Policy, TabularMdp, TransitionModel, ValueFunction};
pub use norms::{BallSpec, NormKind};
pub use solver::{AmbiguitySet, RobustSolution};
