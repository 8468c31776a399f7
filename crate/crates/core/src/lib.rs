//! Time-of-flow analysis of few-level quantum dynamics.
//!
//! The crate propagates two- and three-level systems, turns target-state
//! populations into normalized time-of-flow (TF) distributions, simulates the
//! projective-measurement protocol that reconstructs them, and evaluates the
//! speed limits and uncertainty bounds attached to them.

pub mod dynamics;
pub mod error;
pub mod models;
pub mod nelder_mead;
pub mod operators;
pub mod optimize;
pub mod protocol;
pub mod qsl;
pub mod quadrature;
pub mod tf;

pub use error::{Error, Result};
pub use operators::C64;
