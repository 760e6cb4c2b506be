//! Numerical converse-Lyapunov toolkit for controlled Markov chains.
//!
//! - [`kappa`]: comparison functions and KL bounds built from certificates.
//! - [`chain`]: seeded simulation of controlled Markov chains.
//! - [`certify`]: empirical stabilization certificates.
//! - [`lyapunov`]: probabilistic and mean Lyapunov functions and decay checks.
//! - [`synth`]: steepest-descent policies and reaching-time bounds.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;

pub mod certify;
pub mod chain;
pub mod kappa;
pub mod lyapunov;
pub mod synth;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/comparison-functions.md")]
    mod comparison_functions {}
    #[doc = include_str!("../../../book/src/kl-bounds.md")]
    mod kl_bounds {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/certificates.md")]
    mod certificates {}
    #[doc = include_str!("../../../book/src/lyapunov-functions.md")]
    mod lyapunov_functions {}
    #[doc = include_str!("../../../book/src/synthesis.md")]
    mod synthesis {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
