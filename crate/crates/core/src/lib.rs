//! Simulation and analysis of touchtone leakage into motion sensors.
//!
//! The pipeline: synthesise a dual-tone signal, pass it through a sensor
//! model that point-samples (and so aliases) it on six axes, optionally apply
//! a mitigation, extract windowed features and classify the key with a
//! gradient-boosted tree ensemble.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifier;
pub mod dtmf;
pub mod error;
pub mod features;
pub mod harness;
pub mod mitigation;
pub mod rng;
pub mod sampling;
pub mod sensor_sim;
pub mod spectrum;

pub use error::{Error, Result};
