//! Electrode placement to capacitive network.
//!
//! Mutual capacitance follows an empirical rational decay in the
//! centre-to-centre distance,
//!
//! ```text
//! C(a, b) = ε_r · c0 · g(Δrot) · (√(A_a A_b) / A_ref) / (1 + (d / d_scale)^p)
//! ```
//!
//! where `c0` is the contact-scale coupling of two `A_ref` (1 cm²) plates and
//! `g` is an eight-entry table over relative rotation in 45° steps.
//! Self-capacitance to the far reference is that of a disc of equal area,
//! `8 ε0 r`.

use serde::{Deserialize, Serialize};

use crate::capnet::{CapacitiveNetwork, RX_N, RX_P, TX_N, TX_P};
use crate::error::{Error, Result};

pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Plate area at which the kernel returns `c0`, m².
pub const A_REF: f64 = 1e-4;

/// Outer dimensions of the reference device, metres (x, y, z).
pub const DEVICE_SIZE: [f64; 3] = [0.048, 0.044, 0.013];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Shape {
    Rectangle { length: f64, width: f64 },
    Square { side: f64 },
    Ring { outer: f64, inner: f64 },
}

impl Shape {
    pub fn area(&self) -> f64 {
        match *self {
            Shape::Rectangle { length, width } => length * width,
            Shape::Square { side } => side * side,
            Shape::Ring { outer, inner } => {
                std::f64::consts::PI * (outer * outer - inner * inner) / 4.0
            }
        }
    }

    /// Same shape with every dimension multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Shape {
        match *self {
            Shape::Rectangle { length, width } => Shape::Rectangle {
                length: length * k,
                width: width * k,
            },
            Shape::Square { side } => Shape::Square { side: side * k },
            Shape::Ring { outer, inner } => Shape::Ring {
                outer: outer * k,
                inner: inner * k,
            },
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        let valid = match *self {
            Shape::Rectangle { length, width } => ok(length) && ok(width),
            Shape::Square { side } => ok(side),
            Shape::Ring { outer, inner } => ok(outer) && ok(inner) && inner < outer,
        };
        if valid {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid electrode dimensions {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElectrodeGeometry {
    pub shape: Shape,
    /// Unit normal the plate faces.
    pub facing_axis: [f64; 3],
    /// Plate centre, metres.
    pub position: [f64; 3],
    /// Rotation about the facing axis, degrees in `[0, 360)`.
    pub rotation_deg: f64,
}

impl ElectrodeGeometry {
    pub fn new(shape: Shape, position: [f64; 3], rotation_deg: f64) -> Result<Self> {
        shape.validate()?;
        if position.iter().any(|v| !v.is_finite()) || !rotation_deg.is_finite() {
            return Err(Error::Config("electrode position must be finite".into()));
        }
        Ok(Self {
            shape,
            facing_axis: [0.0, 0.0, -1.0],
            position,
            rotation_deg: normalize_deg(rotation_deg),
        })
    }

    pub fn area(&self) -> f64 {
        self.shape.area()
    }
}

fn normalize_deg(d: f64) -> f64 {
    let r = d.rem_euclid(360.0);
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingKernel {
    pub c0: f64,
    pub d_scale: f64,
    pub p: f64,
    pub orientation_gain: [f64; 8],
    #[serde(default = "one")]
    pub epsilon_r: f64,
}

fn one() -> f64 {
    1.0
}

impl CouplingKernel {
    pub fn new(c0: f64, d_scale: f64, p: f64) -> Result<Self> {
        let k = Self {
            c0,
            d_scale,
            p,
            orientation_gain: [1.0; 8],
            epsilon_r: 1.0,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.c0) || !pos(self.d_scale) || !pos(self.p) {
            return Err(Error::Config(
                "kernel c0, d_scale and p must be positive".into(),
            ));
        }
        if !self.orientation_gain.iter().all(|&g| pos(g)) {
            return Err(Error::Config("orientation gains must be positive".into()));
        }
        if !(self.epsilon_r >= 1.0 && self.epsilon_r.is_finite()) {
            return Err(Error::Config("epsilon_r must be at least 1".into()));
        }
        Ok(())
    }

    /// Table index for a relative rotation: nearest 45° step.
    pub fn gain_bin(delta_deg: f64) -> usize {
        ((delta_deg.abs() / 45.0).round() as i64).rem_euclid(8) as usize
    }

    pub fn gain(&self, delta_deg: f64) -> f64 {
        self.orientation_gain[Self::gain_bin(delta_deg)]
    }

    /// Kernel value for reference-area plates at distance `d`.
    pub fn eval(&self, d: f64, delta_deg: f64) -> f64 {
        self.epsilon_r * self.c0 * self.gain(delta_deg) / (1.0 + (d / self.d_scale).powf(self.p))
    }
}

fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

pub fn mutual_capacitance(
    a: &ElectrodeGeometry,
    b: &ElectrodeGeometry,
    kernel: &CouplingKernel,
) -> Result<f64> {
    let d = distance(&a.position, &b.position);
    if d == 0.0 {
        return Err(Error::Config("electrode centres coincide".into()));
    }
    let size = (a.area() * b.area()).sqrt() / A_REF;
    Ok(size * kernel.eval(d, a.rotation_deg - b.rotation_deg))
}

/// Disc-of-equal-area estimate, `8 ε0 √(A/π)`.
pub fn disc_capacitance(area: f64) -> f64 {
    8.0 * EPSILON_0 * (area / std::f64::consts::PI).sqrt()
}

pub fn self_capacitance(e: &ElectrodeGeometry) -> f64 {
    disc_capacitance(e.area())
}

/// Signal electrode and ground plate of one device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DevicePlates {
    pub signal: ElectrodeGeometry,
    pub ground: ElectrodeGeometry,
}

/// Plate arrangement inside a device, in the device's own frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceLayout {
    pub electrode: Shape,
    /// Electrode centre offset from the device centre (x, y), metres.
    pub electrode_offset: [f64; 2],
    pub ground: Shape,
    /// Height of the ground plate above the electrode plane, metres.
    pub ground_height: f64,
}

impl DeviceLayout {
    /// Places the device with its centre at `center` and rotated by
    /// `rotation_deg` about the vertical axis.
    pub fn place(&self, center: [f64; 3], rotation_deg: f64) -> Result<DevicePlates> {
        if self.ground_height.is_nan() || self.ground_height <= 0.0 {
            return Err(Error::Config("ground_height must be positive".into()));
        }
        let (s, c) = rotation_deg.to_radians().sin_cos();
        let [ox, oy] = self.electrode_offset;
        let signal = ElectrodeGeometry::new(
            self.electrode,
            [
                center[0] + c * ox - s * oy,
                center[1] + s * ox + c * oy,
                center[2],
            ],
            rotation_deg,
        )?;
        let ground = ElectrodeGeometry::new(
            self.ground,
            [center[0], center[1], center[2] + self.ground_height],
            rotation_deg,
        )?;
        Ok(DevicePlates { signal, ground })
    }

    pub fn mirrored(&self) -> Self {
        let mut m = *self;
        m.electrode_offset = [-self.electrode_offset[0], self.electrode_offset[1]];
        m
    }
}

/// Four-plate network for a transmitter and receiver.
///
/// Each plate's self-capacitance is its disc estimate plus its coupling to
/// the other plate of the same device, so the receiver differential
/// capacitance reduces to the sum of the two disc estimates and is always
/// positive.
pub fn build_network(
    tx: &DevicePlates,
    rx: &DevicePlates,
    kernel: &CouplingKernel,
) -> Result<CapacitiveNetwork> {
    kernel.validate()?;
    let plates = [tx.signal, tx.ground, rx.signal, rx.ground];
    let names = [TX_P, TX_N, RX_P, RX_N].map(String::from).to_vec();
    let mut mutual = vec![0.0; 16];
    for i in 0..4 {
        for k in (i + 1)..4 {
            let c = mutual_capacitance(&plates[i], &plates[k], kernel)?;
            mutual[i * 4 + k] = c;
            mutual[k * 4 + i] = c;
        }
    }
    let self_cap = (0..4)
        .map(|i| {
            let sibling = i ^ 1;
            self_capacitance(&plates[i]) + mutual[i * 4 + sibling]
        })
        .collect();
    CapacitiveNetwork::new(names, mutual, self_cap)
}
