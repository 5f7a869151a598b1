//! Link scenarios: two placed devices, a coupling kernel, an optional
//! conductor or body extension, terminations and link-layer settings.
//!
//! Scenario files are TOML with a `schema_version` field. Quantities accept
//! engineering strings (`"20pF"`, `"1MΩ"`, `"5MHz"`) or plain SI numbers.
//!
//! ```toml
//! schema_version = 1
//! id = "example"
//! mode = "differential-air"
//!
//! [tx]
//! rotation_deg = 0.0
//! [tx.layout]
//! electrode = { kind = "rectangle", length = 0.026, width = 0.011 }
//! electrode_offset = [0.0045, 0.0]
//! ground = { kind = "rectangle", length = 0.044, width = 0.0145 }
//! ground_height = 0.006
//! # [rx] likewise
//!
//! [kernel]
//! c0 = 2.7e-12
//! d_scale = 0.158
//! p = 4.85
//! orientation_gain = [1, 1, 1, 1, 1, 1, 1, 1]
//!
//! [termination]
//! v_tx = 1.8
//! z_tx = "50ohm"
//! z_rx = "1MΩ"
//! frequency = "5MHz"
//!
//! [link]
//! n0 = 1e-14
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::capnet::{self, CapacitiveNetwork, ChannelResponse, PortTermination, RX_P, TX_P};
use crate::error::{Error, Result};
use crate::geometry::{
    build_network, mutual_capacitance, CouplingKernel, DeviceLayout, DevicePlates,
    ElectrodeGeometry, Shape, DEVICE_SIZE,
};
use crate::linklayer::{self, LinkConfig, Modulation};
use crate::units;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    DifferentialAir,
    DifferentialDielectric,
    ConductorExtended,
    BodyAssisted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Placement {
    pub layout: DeviceLayout,
    #[serde(default)]
    pub rotation_deg: f64,
}

/// How the far end of an extension couples into the receiver signal plate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RxCoupling {
    /// Fixed capacitance, independent of device separation.
    Fixed {
        #[serde(with = "units::farad")]
        c_rx: f64,
    },
    /// A plate of the given area at the transmitter, coupled to the receiver
    /// electrode through the scenario kernel.
    Plate { area_m2: f64 },
}

/// A floating conductor (tape, wire, body) inserted into the coupling path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Extension {
    #[serde(with = "units::meter")]
    pub length_m: f64,
    /// End-to-end series resistance. Zero joins both ends into one node.
    #[serde(with = "units::ohm")]
    pub series_resistance_ohm: f64,
    /// Coupling from the transmitter signal plate into the near end.
    #[serde(with = "units::farad")]
    pub c_tx: f64,
    /// Self-capacitance to the far reference per metre of length.
    #[serde(with = "units::farad_per_meter")]
    pub shunt_per_m: f64,
    pub rx: RxCoupling,
}

impl Extension {
    fn validate(&self) -> Result<()> {
        let ok = |v: f64| v >= 0.0 && v.is_finite();
        if !(self.length_m > 0.0 && self.length_m.is_finite()) {
            return Err(Error::Config("extension length must be positive".into()));
        }
        if !ok(self.series_resistance_ohm) || !ok(self.c_tx) || !ok(self.shunt_per_m) {
            return Err(Error::Config(
                "extension resistance and capacitances must be non-negative".into(),
            ));
        }
        match self.rx {
            RxCoupling::Fixed { c_rx } if ok(c_rx) => Ok(()),
            RxCoupling::Plate { area_m2 } if area_m2 > 0.0 && area_m2.is_finite() => Ok(()),
            _ => Err(Error::Config("invalid extension receiver coupling".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerminationSpec {
    #[serde(with = "units::volt")]
    pub v_tx: f64,
    #[serde(with = "units::ohm")]
    pub z_tx: f64,
    #[serde(with = "units::ohm")]
    pub z_rx: f64,
    #[serde(with = "units::hertz")]
    pub frequency: f64,
}

impl TerminationSpec {
    pub fn termination(&self) -> Result<PortTermination> {
        PortTermination::resistive(self.v_tx, self.z_tx, self.z_rx, self.frequency)
    }
}

/// Rate-independent link-layer settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkProfile {
    #[serde(with = "units::watt_per_hertz")]
    pub n0: f64,
    #[serde(default = "default_bits")]
    pub packet_len_bits: u32,
    #[serde(default = "default_eta")]
    pub proto_efficiency: f64,
    #[serde(default = "default_threshold")]
    pub per_threshold: f64,
    #[serde(default)]
    pub floor_per: f64,
}

fn default_bits() -> u32 {
    linklayer::DEFAULT_PACKET_BITS
}
fn default_eta() -> f64 {
    linklayer::DEFAULT_EFFICIENCY
}
fn default_threshold() -> f64 {
    linklayer::DEFAULT_PER_THRESHOLD
}

impl LinkProfile {
    pub fn at_rate(&self, rate: f64) -> Result<LinkConfig> {
        let cfg = LinkConfig {
            data_rate: rate,
            packet_len_bits: self.packet_len_bits,
            n0: self.n0,
            bandwidth: None,
            proto_efficiency: self.proto_efficiency,
            per_threshold: self.per_threshold,
            modulation: Modulation::BinaryCoherent,
            floor_per: self.floor_per,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub id: String,
    pub mode: Mode,
    /// Labels matching the `config`/`test` columns of measurement logs.
    #[serde(default)]
    pub config: Option<String>,
    #[serde(default)]
    pub test: Option<String>,
    pub tx: Placement,
    pub rx: Placement,
    pub kernel: CouplingKernel,
    #[serde(default)]
    pub extension: Option<Extension>,
    pub termination: TerminationSpec,
    pub link: LinkProfile,
    /// Device separation for fixed-distance scenarios, metres.
    #[serde(default)]
    pub fixed_gap_m: Option<f64>,
}

/// One evaluated link point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkPoint {
    pub response: ChannelResponse,
    pub per: f64,
    pub throughput_bps: f64,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario =
            toml::from_str(text).map_err(|e| Error::Config(format!("scenario: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("scenario: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "scenario schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.kernel.validate()?;
        self.termination.termination()?;
        self.link.at_rate(1e6)?;
        match (self.mode, &self.extension) {
            (Mode::ConductorExtended | Mode::BodyAssisted, None) => {
                return Err(Error::Config(format!(
                    "scenario `{}`: mode requires an extension",
                    self.id
                )))
            }
            (_, Some(ext)) => ext.validate()?,
            _ => {}
        }
        if let Some(g) = self.fixed_gap_m {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(Error::Config("fixed_gap_m must be non-negative".into()));
            }
        }
        self.network(self.fixed_gap_m.unwrap_or(0.0)).map(|_| ())
    }

    /// Copy without the extension, evaluated as a plain air link.
    pub fn without_extension(&self) -> Self {
        let mut s = self.clone();
        s.extension = None;
        s.mode = Mode::DifferentialAir;
        s
    }

    /// Transmitter centred at the origin; receiver centred `gap` beyond the
    /// transmitter's edge along +x.
    pub fn placed(&self, gap: f64) -> Result<(DevicePlates, DevicePlates)> {
        if !(gap >= 0.0 && gap.is_finite()) {
            return Err(Error::Config(format!(
                "distance {gap} must be non-negative"
            )));
        }
        let tx = self
            .tx
            .layout
            .place([0.0, 0.0, 0.0], self.tx.rotation_deg)?;
        let rx = self
            .rx
            .layout
            .place([DEVICE_SIZE[0] + gap, 0.0, 0.0], self.rx.rotation_deg)?;
        Ok((tx, rx))
    }

    /// Full capacitive network at device separation `gap`.
    pub fn network(&self, gap: f64) -> Result<CapacitiveNetwork> {
        let (tx, rx) = self.placed(gap)?;
        let mut net = build_network(&tx, &rx, &self.kernel)?;
        let Some(ext) = &self.extension else {
            return Ok(net);
        };
        let c_rx = match ext.rx {
            RxCoupling::Fixed { c_rx } => c_rx,
            RxCoupling::Plate { area_m2 } => {
                let plate = ElectrodeGeometry::new(
                    Shape::Square {
                        side: area_m2.sqrt(),
                    },
                    [0.0; 3],
                    self.tx.rotation_deg,
                )?;
                mutual_capacitance(&plate, &rx.signal, &self.kernel)?
            }
        };
        let shunt = ext.shunt_per_m * ext.length_m;
        if ext.series_resistance_ohm == 0.0 {
            net = net
                .with_node("Ext", shunt)?
                .with_mutual(TX_P, "Ext", ext.c_tx)?
                .with_mutual("Ext", RX_P, c_rx)?;
        } else {
            net = net
                .with_node("ExtTx", shunt / 2.0)?
                .with_node("ExtRx", shunt / 2.0)?
                .with_mutual(TX_P, "ExtTx", ext.c_tx)?
                .with_mutual("ExtRx", RX_P, c_rx)?
                .with_conductance("ExtTx", "ExtRx", 1.0 / ext.series_resistance_ohm)?;
        }
        Ok(net)
    }

    /// Channel response at separation `gap` and the given noise bandwidth.
    ///
    /// Plain four-plate links use the closed form; networks with extension
    /// nodes go through the nodal solver.
    pub fn response(&self, gap: f64, bandwidth: f64) -> Result<ChannelResponse> {
        let net = self.network(gap)?;
        let term = self.termination.termination()?;
        if net.nodes().len() == 4 {
            return capnet::evaluate(&net, &term, self.link.n0, bandwidth);
        }
        let c_eff = capnet::effective_coupling(&net)?;
        let c_rr = capnet::receiver_self_capacitance(&net)?;
        let h: Complex64 = capnet::nodal_solve(&net, &term)? / term.v_tx;
        capnet::response_from(c_eff, c_rr, h, false, &term, self.link.n0, bandwidth)
    }

    /// Modelled PER and throughput at separation `gap` and raw rate `rate`.
    pub fn evaluate(&self, gap: f64, rate: f64) -> Result<LinkPoint> {
        let cfg = self.link.at_rate(rate)?;
        let response = self.response(gap, cfg.bandwidth())?;
        let per = cfg.per_at_snr(response.snr_linear);
        Ok(LinkPoint {
            response,
            per,
            throughput_bps: linklayer::throughput(&cfg, per),
        })
    }
}
