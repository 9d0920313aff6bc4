//! Link-level simulation of uplink massive MIMO receivers that combine in RF
//! with antenna switches and a small bank of constant phase shifters.
//!
//! - [`channel`]: IID Rayleigh channels and transmission samples.
//! - [`combining`]: quasi-coherent switch combining and the baselines.
//! - [`metrics`]: SINR and rate evaluation.
//! - [`asymptotics`]: large-array limits.
//! - [`rfchain`]: noise-figure cascades and presets.
//! - [`experiments`]: Monte Carlo studies with CSV/JSON output.
//! - [`config`]: the JSON run configuration used by the command line tool.

pub mod asymptotics;
pub mod channel;
pub mod combining;
pub mod config;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod rfchain;
pub mod stats;

pub use error::{Error, Result};
