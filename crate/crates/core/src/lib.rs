//! Secrecy performance of RIS-aided MIMO downlinks under Fisher-Snedecor F fading.

pub mod analytic;
pub mod channel;
pub mod config;
pub mod error;
pub mod fading;
pub mod figures;
pub mod geometry;
pub mod montecarlo;
pub mod quad;
pub mod specfun;
pub mod sweep;

pub use error::{Error, Result};
