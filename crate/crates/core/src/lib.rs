//! Link-level Monte Carlo simulation of a full-duplex wideband mmWave
//! integrated access and backhaul (IAB) relay with low-resolution ADCs.
//!
//! A trial draws clustered-ray channels for the backhaul (gNB → IAB),
//! access (IAB → UE) and self-interference (IAB TX → IAB RX) links, designs
//! hybrid or all-digital beamformers, and scores the spectral efficiency of
//! both hops under the additive quantization noise model.

pub mod beamforming;
pub mod channel;
pub mod cli;
pub mod dump;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod montecarlo;
pub mod quantization;

pub use error::{Error, Result};
pub use montecarlo::{
    run_sweep, run_trial, Scenario, SimConfig, Simulator, SweepAxis, SweepResult, SweepRow,
    SweepSpec,
};
pub use quantization::Resolution;
