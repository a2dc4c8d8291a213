//! Numerical laboratory for epiperimetric-type decay estimates.
//!
//! [`engine`] turns sampled energy traces into verified growth/decay bounds.
//! The remaining modules produce such traces from concrete problems.

pub mod arc;
pub mod engine;
pub mod epi;
pub mod error;
pub mod loja;
pub mod minimizer;
pub mod obstacle;
pub mod polar;
pub mod weiss;

pub use error::{Error, Result};
