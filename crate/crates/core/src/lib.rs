//! Binary image-patch descriptors built by selecting pixel-test or
//! LBP-comparison bits from a random pool.
//!
//! The crate is organised around the data flow of a selection run:
//!
//! - [`dataset`] loads Brown-style patch pairs or synthesises labeled pair sets.
//! - [`bitgen`] samples candidate bit pools and caches their packed responses.
//! - [`selection`] picks `b` bits out of the pool: AUC hill climbing, plus
//!   boosting, correlation and random baselines.
//! - [`eval`] computes ROC curves, AUC and FPR at 95% TPR on held-out pairs.
//! - [`retrieval`] is a small FAST-keypoint image search harness.

pub mod bitgen;
pub mod bits;
pub mod dataset;
mod error;
pub mod eval;
pub mod retrieval;
pub mod rng;
pub mod selection;

pub use error::{Error, Result};
