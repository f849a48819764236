//! Drift detection for dependent data streams.
//!
//! The crate covers synthetic path generators with drift injection
//! ([`streams`]), the reduction from many independent paths to an i.i.d.
//! drift sample ([`reduction`]), the fit-then-local-MSE consistency detector
//! ([`consistency`]), kernel and unit-root baselines ([`baselines`]) and a
//! seeded ROC-AUC benchmark harness ([`bench`]).

pub mod baselines;
pub mod bench;
pub mod consistency;
pub mod error;
pub mod reduction;
pub mod score;
pub mod seed;
pub mod streams;

pub use error::{DriftError, Result};
