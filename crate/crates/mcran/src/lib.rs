//! Simulator and optimizer for the downlink of a cache-enabled multi-cloud
//! radio access network.
//!
//! The crate is organized around the two-stage resource management pipeline:
//!
//! 1. [`netgen`] draws a network realization (geometry, channels, noise) and
//!    [`cache`] builds content popularity, cache placement and per-user
//!    requests; [`assoc`] then assigns users to clouds with an auction solver.
//! 2. [`engine`] maximizes the network energy efficiency over beamformers and
//!    processing-mode slacks by an outer successive inner-convex approximation
//!    loop wrapped around an inner Dinkelbach ratio search; every inner step
//!    is a concave QCQP assembled and solved by [`solver`]. The problem
//!    mathematics (surrogates, feasibility, energy accounting, hardening)
//!    live in [`fp`].
//!
//! Both centralized and per-cloud distributed (interference message passing)
//! executions are supported, along with fixed-clustering, forced-local and
//! sum-rate-maximization baselines.

pub mod assoc;
pub mod cache;
pub mod engine;
pub mod error;
pub mod fp;
pub mod netgen;
pub mod solver;

pub use error::McranError;
