//! Multi-thresholding good arm identification.
//!
//! An arm is *good* when every component of its mean reward vector reaches
//! the corresponding threshold. This crate provides MultiTUCB and three
//! baseline selection rules sharing its stopping conditions, the bundled
//! experimental environments, closed-form sample-complexity bounds and a
//! seeded experiment harness.

pub mod bounds;
pub mod cli;
pub mod environments;
pub mod error;
pub mod estimator;
pub mod formats;
pub mod harness;
pub mod policies;
pub mod primitives;

pub use error::{Error, Result};
