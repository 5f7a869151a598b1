//! Classical field-region boundaries for an aperture of size `D` at
//! wavelength `λ`.
//!
//! The link model never consults these; they are reported for context only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Note attached to every classification.
pub const QUASI_STATIC_NOTE: &str =
    "capacitive coupling is evaluated quasi-statically by the network model regardless of region";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionQuery {
    /// Largest aperture dimension, metres.
    pub d_aperture: f64,
    /// Wavelength, metres.
    pub wavelength: f64,
    /// Distance to classify, metres.
    pub distance: Option<f64>,
}

impl RegionQuery {
    pub fn new(d_aperture: f64, wavelength: f64, distance: Option<f64>) -> Result<Self> {
        if !(d_aperture > 0.0 && d_aperture.is_finite()) {
            return Err(Error::Config("aperture must be positive".into()));
        }
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(Error::Config("wavelength must be positive".into()));
        }
        if let Some(d) = distance {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::Config("distance must be non-negative".into()));
            }
        }
        Ok(Self {
            d_aperture,
            wavelength,
            distance,
        })
    }

    /// Wavelength of a carrier at `freq_hz` in vacuum.
    pub fn wavelength_of(freq_hz: f64) -> f64 {
        299_792_458.0 / freq_hz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    ReactiveNearField,
    RadiativeNearField,
    FarField,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::ReactiveNearField => "reactive-near-field",
            Region::RadiativeNearField => "radiative-near-field",
            Region::FarField => "far-field",
        }
    }
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub region: Region,
    pub fresnel_m: f64,
    pub fraunhofer_m: f64,
    /// The Fresnel boundary is not below the Fraunhofer distance, so there is
    /// no radiative near-field band and only two regions exist.
    pub collapsed: bool,
    pub note: &'static str,
}

/// `2 D² / λ`.
pub fn fraunhofer_distance(q: &RegionQuery) -> f64 {
    2.0 * q.d_aperture * q.d_aperture / q.wavelength
}

/// `0.62 √(D³ / λ)`.
pub fn fresnel_boundary(q: &RegionQuery) -> f64 {
    0.62 * (q.d_aperture.powi(3) / q.wavelength).sqrt()
}

/// Places `q.distance` relative to both boundaries.
///
/// For electrically small apertures the Fresnel boundary lies beyond the
/// Fraunhofer distance; the result is then either reactive (inside the
/// Fraunhofer distance) or far-field, with `collapsed` set.
pub fn classify_region(q: &RegionQuery) -> Result<Classification> {
    let d = q
        .distance
        .ok_or_else(|| Error::Config("classification needs a distance".into()))?;
    let fresnel = fresnel_boundary(q);
    let fraunhofer = fraunhofer_distance(q);
    let collapsed = fresnel >= fraunhofer;
    let region = if d >= fraunhofer {
        Region::FarField
    } else if collapsed || d < fresnel {
        Region::ReactiveNearField
    } else {
        Region::RadiativeNearField
    };
    Ok(Classification {
        region,
        fresnel_m: fresnel,
        fraunhofer_m: fraunhofer,
        collapsed,
        note: QUASI_STATIC_NOTE,
    })
}
