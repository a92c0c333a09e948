//! Data-driven analysis of linear time-invariant systems.
//!
//! From finite, noise-free input/output trajectories this crate decides the
//! (vector) relative degree and the stability of the zero dynamics of the
//! generating system, and rebuilds a continuous-time model from three
//! zero-order-hold discretizations taken at rationally independent rates.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod ct;
pub mod error;
pub mod hankel;
pub mod linalg;
pub mod lti;
pub mod mpum;
pub mod reldeg;
pub mod signal;
pub mod zerodyn;

pub use error::{Error, Result};
pub use linalg::{Matrix, Stability, ToleranceConfig, Vector};
