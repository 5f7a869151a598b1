//! Scenarios, sweeps, calibration and the technology comparison.

pub mod anchors;
pub mod compare;
pub mod fit;
pub mod measurement;
pub mod params;
pub mod scenario;
pub mod sweep;

pub use anchors::Anchors;
pub use fit::{fit_parameters, FitOptions, FitParam, FitReport};
pub use measurement::{Measurement, MeasurementLog};
pub use params::Params;
pub use scenario::{Extension, LinkProfile, Mode, Scenario};
pub use sweep::{range_at_threshold, sweep_distance, SweepOptions, SweepResult};
