//! Single-pixel imaging toolkit.
//!
//! Builds deterministic "origami" pattern sequences whose flattened rows
//! form an orthogonal +/-1 measurement matrix, simulates bucket-detector
//! measurements (including complementary 0/1 modulation and photon
//! counting noise), and reconstructs images with GI, DGI, correspondence
//! imaging, and a total-variation compressed-sensing solver. The `cli`
//! module drives the RMSE-vs-sampling-ratio benchmark sweep and DMD
//! frame export used by the `opcs` binary.

pub mod basis;
pub mod cli;
pub mod connectivity;
mod error;
pub mod forward;
pub mod imagery;
pub mod metrics;
pub mod recon;
pub mod walsh;

pub use error::{Error, Result};
