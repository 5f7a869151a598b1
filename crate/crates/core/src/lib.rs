//! Near-field electric link simulation: capacitive channel model, link-layer
//! statistics, scenario sweeps and calibration against measured logs.

pub mod capnet;
pub mod error;
pub mod fieldregion;
pub mod geometry;
pub mod harness;
pub mod linklayer;
pub mod units;

pub use error::{Error, Result};
