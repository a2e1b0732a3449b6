//! Uplink/downlink decoupled access in two-tier massive MIMO networks:
//! stochastic-geometry deployments, zero-forcing links, association rules,
//! analytic spectral-efficiency bounds and Monte Carlo estimates.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod association;
pub mod bounds;
pub mod config;
pub mod error;
pub mod experiment;
pub mod expint;
pub mod geometry;
pub mod mimo;
pub mod quadrature;
pub mod sim;

pub use config::{AccessMode, NetworkConfig, Tier};
pub use error::{Error, Result};
