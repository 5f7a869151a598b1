//! Lumped capacitive network between a transmitter and a receiver.
//!
//! The link is a network of plates: transmitter signal/ground (`TxP`, `TxN`),
//! receiver signal/ground (`RxP`, `RxN`), and optionally extra floating
//! conductors. Every pair of plates has a mutual capacitance and every plate
//! a self-capacitance to the global reference.
//!
//! The closed-form channel treats the link as a voltage divider:
//!
//! ```text
//! C_eff = C(TxP,RxP) + C(TxN,RxN) - C(TxP,RxN) - C(TxN,RxP)
//! C_RR  = Cr(RxP) + Cr(RxN) - 2 C(RxP,RxN)
//! Y_L   = s C_RR + 1/Z_Rx
//! H     = 1 / (1 + Z_Tx Y_L + Y_L / (s C_eff))
//! ```
//!
//! [`nodal_solve`] evaluates the same divider by assembling and solving a
//! nodal system instead, which also covers networks with extra nodes.

pub mod nodal;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use nodal::NodalCircuit;

pub const TX_P: &str = "TxP";
pub const TX_N: &str = "TxN";
pub const RX_P: &str = "RxP";
pub const RX_N: &str = "RxN";

/// Receiver impedances above this magnitude are clamped to it.
pub const Z_RX_CAP: f64 = 1e15;

fn j() -> Complex64 {
    Complex64::new(0.0, 1.0)
}

/// Symmetric mutual-capacitance matrix plus per-node self-capacitances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacitiveNetwork {
    nodes: Vec<String>,
    /// Row-major, `nodes.len()` squared, farads.
    mutual: Vec<f64>,
    /// Farads to the global reference.
    self_cap: Vec<f64>,
    /// Row-major edge conductances in siemens; all zero for ideal air links.
    conductance: Vec<f64>,
}

/// The four port capacitances of a plain four-plate link.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FourNode {
    pub txp_rxp: f64,
    pub txn_rxn: f64,
    pub txp_rxn: f64,
    pub txn_rxp: f64,
    pub txp_txn: f64,
    pub rxp_rxn: f64,
    pub self_txp: f64,
    pub self_txn: f64,
    pub self_rxp: f64,
    pub self_rxn: f64,
}

impl CapacitiveNetwork {
    /// Builds and validates a network. `mutual` is row-major over `nodes`.
    pub fn new(nodes: Vec<String>, mutual: Vec<f64>, self_cap: Vec<f64>) -> Result<Self> {
        let n = nodes.len();
        let net = Self {
            conductance: vec![0.0; n * n],
            nodes,
            mutual,
            self_cap,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn four_node(c: FourNode) -> Result<Self> {
        let nodes = [TX_P, TX_N, RX_P, RX_N].map(String::from).to_vec();
        let mut m = vec![0.0; 16];
        let mut set = |a: usize, b: usize, v: f64| {
            m[a * 4 + b] = v;
            m[b * 4 + a] = v;
        };
        set(0, 2, c.txp_rxp);
        set(1, 3, c.txn_rxn);
        set(0, 3, c.txp_rxn);
        set(1, 2, c.txn_rxp);
        set(0, 1, c.txp_txn);
        set(2, 3, c.rxp_rxn);
        Self::new(
            nodes,
            m,
            vec![c.self_txp, c.self_txn, c.self_rxp, c.self_rxn],
        )
    }

    fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if self.mutual.len() != n * n || self.self_cap.len() != n || self.conductance.len() != n * n
        {
            return Err(Error::Config(format!(
                "network matrices do not match {n} nodes"
            )));
        }
        for name in [TX_P, TX_N, RX_P, RX_N] {
            self.index(name)?;
        }
        for (i, a) in self.nodes.iter().enumerate() {
            if self.nodes[..i].contains(a) {
                return Err(Error::Config(format!("duplicate node `{a}`")));
            }
        }
        for r in 0..n {
            if self.mutual[r * n + r] != 0.0 {
                return Err(Error::InvalidNetwork(format!(
                    "diagonal mutual capacitance at `{}` must be zero",
                    self.nodes[r]
                )));
            }
            if self.conductance[r * n + r] != 0.0 {
                return Err(Error::InvalidNetwork(format!(
                    "diagonal conductance at `{}` must be zero",
                    self.nodes[r]
                )));
            }
            if !(self.self_cap[r] >= 0.0 && self.self_cap[r].is_finite()) {
                return Err(Error::InvalidNetwork(format!(
                    "self-capacitance of `{}` must be finite and non-negative",
                    self.nodes[r]
                )));
            }
            for c in 0..n {
                let v = self.mutual[r * n + c];
                let g = self.conductance[r * n + c];
                if !(v >= 0.0 && v.is_finite()) || !(g >= 0.0 && g.is_finite()) {
                    return Err(Error::InvalidNetwork(format!(
                        "edge `{}`-`{}` must be finite and non-negative",
                        self.nodes[r], self.nodes[c]
                    )));
                }
                if v != self.mutual[c * n + r] || g != self.conductance[c * n + r] {
                    return Err(Error::InvalidNetwork(format!(
                        "edge `{}`-`{}` is not reciprocal",
                        self.nodes[r], self.nodes[c]
                    )));
                }
            }
        }
        receiver_self_capacitance(self)?;
        Ok(())
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn index(&self, name: &str) -> Result<usize> {
        self.nodes
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Config(format!("network has no `{name}` node")))
    }

    /// Mutual capacitance between two named nodes.
    pub fn mutual(&self, a: &str, b: &str) -> Result<f64> {
        let n = self.nodes.len();
        Ok(self.mutual[self.index(a)? * n + self.index(b)?])
    }

    pub fn self_capacitance(&self, a: &str) -> Result<f64> {
        Ok(self.self_cap[self.index(a)?])
    }

    pub fn conductance(&self, a: &str, b: &str) -> Result<f64> {
        let n = self.nodes.len();
        Ok(self.conductance[self.index(a)? * n + self.index(b)?])
    }

    /// Returns a copy with an extra node that has the given self-capacitance
    /// and no edges yet.
    pub fn with_node(&self, name: &str, self_cap: f64) -> Result<Self> {
        let n = self.nodes.len();
        let m = n + 1;
        let mut mutual = vec![0.0; m * m];
        let mut conductance = vec![0.0; m * m];
        for r in 0..n {
            for c in 0..n {
                mutual[r * m + c] = self.mutual[r * n + c];
                conductance[r * m + c] = self.conductance[r * n + c];
            }
        }
        let mut nodes = self.nodes.clone();
        nodes.push(name.to_string());
        let mut caps = self.self_cap.clone();
        caps.push(self_cap);
        let net = Self {
            nodes,
            mutual,
            self_cap: caps,
            conductance,
        };
        net.validate()?;
        Ok(net)
    }

    /// Returns a copy with the mutual capacitance of one edge replaced.
    pub fn with_mutual(&self, a: &str, b: &str, farads: f64) -> Result<Self> {
        let (i, k) = (self.index(a)?, self.index(b)?);
        if i == k {
            return Err(Error::InvalidNetwork(format!("self edge on `{a}`")));
        }
        let n = self.nodes.len();
        let mut net = self.clone();
        net.mutual[i * n + k] = farads;
        net.mutual[k * n + i] = farads;
        net.validate()?;
        Ok(net)
    }

    /// Returns a copy with the conductance of one edge replaced.
    pub fn with_conductance(&self, a: &str, b: &str, siemens: f64) -> Result<Self> {
        let (i, k) = (self.index(a)?, self.index(b)?);
        if i == k {
            return Err(Error::InvalidNetwork(format!("self edge on `{a}`")));
        }
        let n = self.nodes.len();
        let mut net = self.clone();
        net.conductance[i * n + k] = siemens;
        net.conductance[k * n + i] = siemens;
        net.validate()?;
        Ok(net)
    }

    /// Swaps the roles of the transmitter and receiver plates.
    pub fn swap_ports(&self) -> Self {
        let mut net = self.clone();
        for name in &mut net.nodes {
            *name = match name.as_str() {
                TX_P => RX_P.to_string(),
                TX_N => RX_N.to_string(),
                RX_P => TX_P.to_string(),
                RX_N => TX_N.to_string(),
                other => other.to_string(),
            };
        }
        net
    }
}

/// Source and receiver terminations at one operating frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortTermination {
    pub v_tx: f64,
    pub z_tx: Complex64,
    pub z_rx: Complex64,
    /// Angular frequency, rad/s.
    pub omega: f64,
}

impl PortTermination {
    /// Validates the termination and clamps `|Z_Rx|` to [`Z_RX_CAP`]; an
    /// infinite receiver impedance becomes a `Z_RX_CAP` resistor.
    pub fn new(v_tx: f64, z_tx: Complex64, z_rx: Complex64, omega: f64) -> Result<Self> {
        if !(v_tx > 0.0 && v_tx.is_finite()) {
            return Err(Error::Config("v_tx must be positive".into()));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::Config("omega must be positive".into()));
        }
        if !z_tx.is_finite() || z_tx.re < 0.0 {
            return Err(Error::Config(
                "z_tx must be finite with a non-negative real part".into(),
            ));
        }
        if z_rx.re.is_nan() || z_rx.im.is_nan() || z_rx.re < 0.0 {
            return Err(Error::Config(
                "z_rx must have a non-negative real part".into(),
            ));
        }
        let z_rx = if z_rx.is_infinite() {
            Complex64::new(Z_RX_CAP, 0.0)
        } else if z_rx.norm() > Z_RX_CAP {
            z_rx * (Z_RX_CAP / z_rx.norm())
        } else {
            z_rx
        };
        if z_rx.norm() == 0.0 {
            return Err(Error::Config("z_rx must be non-zero".into()));
        }
        Ok(Self {
            v_tx,
            z_tx,
            z_rx,
            omega,
        })
    }

    /// Resistive terminations at a frequency in hertz.
    pub fn resistive(v_tx: f64, r_tx: f64, r_rx: f64, freq_hz: f64) -> Result<Self> {
        Self::new(
            v_tx,
            Complex64::new(r_tx, 0.0),
            Complex64::new(r_rx, 0.0),
            2.0 * std::f64::consts::PI * freq_hz,
        )
    }

    pub fn s(&self) -> Complex64 {
        j() * self.omega
    }

    /// Source power referred to the receiver input resistance,
    /// `V_Tx^2 / (2 Re Z_Rx)`, so that `P_Rx = |H|^2 P_Tx`.
    pub fn tx_power(&self) -> Result<f64> {
        if self.z_rx.re <= 0.0 {
            return Err(Error::Config(
                "power is undefined for a purely reactive receiver impedance".into(),
            ));
        }
        Ok(self.v_tx * self.v_tx / (2.0 * self.z_rx.re))
    }
}

/// Every derived quantity of one channel evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelResponse {
    pub c_eff: f64,
    pub c_rr: f64,
    /// `None` when `C_eff` is zero (open coupling path).
    pub z_c: Option<Complex64>,
    pub z_l: Complex64,
    pub h: Complex64,
    pub v_rx: Complex64,
    pub p_rx: f64,
    pub snr_linear: f64,
    pub snr_db: f64,
    /// Cross terms dominate: the received signal is inverted.
    pub polarity_inverted: bool,
}

/// Effective differential coupling capacitance. Negative when the cross
/// terms dominate.
pub fn effective_coupling(net: &CapacitiveNetwork) -> Result<f64> {
    Ok(net.mutual(TX_P, RX_P)? + net.mutual(TX_N, RX_N)?
        - net.mutual(TX_P, RX_N)?
        - net.mutual(TX_N, RX_P)?)
}

/// Differential capacitance across the receiver port. Must be positive.
pub fn receiver_self_capacitance(net: &CapacitiveNetwork) -> Result<f64> {
    let c =
        net.self_capacitance(RX_P)? + net.self_capacitance(RX_N)? - 2.0 * net.mutual(RX_P, RX_N)?;
    if c <= 0.0 {
        return Err(Error::InvalidNetwork(format!(
            "receiver differential capacitance is {c:.3e} F; it must be positive"
        )));
    }
    Ok(c)
}

/// `Z_L = 1 / (s C_RR + 1/Z_Rx)` for a given receiver differential capacitance.
pub fn load_impedance_from(c_rr: f64, term: &PortTermination) -> Complex64 {
    (term.s() * c_rr + term.z_rx.inv()).inv()
}

pub fn load_impedance(net: &CapacitiveNetwork, term: &PortTermination) -> Result<Complex64> {
    Ok(load_impedance_from(receiver_self_capacitance(net)?, term))
}

/// Closed-form divider transfer function from the two lumped capacitances.
///
/// Zero coupling yields exactly zero; negative coupling is rejected (see
/// [`evaluate`] for the polarity-tolerant path).
pub fn transfer_from(c_eff: f64, c_rr: f64, term: &PortTermination) -> Result<Complex64> {
    if c_eff == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if c_eff < 0.0 {
        return Err(Error::InvalidNetwork(format!(
            "effective coupling {c_eff:.3e} F is negative"
        )));
    }
    let s = term.s();
    let y_l = s * c_rr + term.z_rx.inv();
    Ok((1.0 + term.z_tx * y_l + y_l / (s * c_eff)).inv())
}

pub fn transfer_function(net: &CapacitiveNetwork, term: &PortTermination) -> Result<Complex64> {
    transfer_from(
        effective_coupling(net)?,
        receiver_self_capacitance(net)?,
        term,
    )
}

/// Received power and linear SNR for a given transfer function.
pub fn received_power_snr(h: Complex64, p_tx: f64, n0: f64, bandwidth: f64) -> (f64, f64) {
    let p_rx = h.norm_sqr() * p_tx;
    (p_rx, p_rx / (n0 * bandwidth))
}

/// Full closed-form channel evaluation.
///
/// A negative `C_eff` is evaluated on its magnitude and reported through
/// `polarity_inverted` with `H` negated, since a differential receiver only
/// sees the inversion as a phase flip.
pub fn evaluate(
    net: &CapacitiveNetwork,
    term: &PortTermination,
    n0: f64,
    bandwidth: f64,
) -> Result<ChannelResponse> {
    let c_eff = effective_coupling(net)?;
    let c_rr = receiver_self_capacitance(net)?;
    let polarity_inverted = c_eff < 0.0;
    let mut h = transfer_from(c_eff.abs(), c_rr, term)?;
    if polarity_inverted {
        h = -h;
    }
    response_from(c_eff, c_rr, h, polarity_inverted, term, n0, bandwidth)
}

/// Builds a [`ChannelResponse`] around an externally computed `H`, e.g. one
/// from [`nodal_solve`] on a network with extension nodes.
pub fn response_from(
    c_eff: f64,
    c_rr: f64,
    h: Complex64,
    polarity_inverted: bool,
    term: &PortTermination,
    n0: f64,
    bandwidth: f64,
) -> Result<ChannelResponse> {
    if !(n0 > 0.0 && bandwidth > 0.0) {
        return Err(Error::Config("n0 and bandwidth must be positive".into()));
    }
    let p_tx = term.tx_power()?;
    let (p_rx, snr) = received_power_snr(h, p_tx, n0, bandwidth);
    Ok(ChannelResponse {
        c_eff,
        c_rr,
        z_c: (c_eff != 0.0).then(|| (term.s() * c_eff.abs()).inv()),
        z_l: load_impedance_from(c_rr, term),
        h,
        v_rx: h * term.v_tx,
        p_rx,
        snr_linear: snr,
        snr_db: 10.0 * snr.log10(),
        polarity_inverted,
    })
}

/// Where a physical plate lands in the differential-mode circuit.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Port {
    Tx,
    Rx,
    Other(usize),
}

/// Solves the network as a nodal system and returns the differential
/// receiver voltage `V(RxP) - V(RxN)`.
///
/// Each port collapses to one differential node (the transmitter drive node
/// and the receiver node), with the signal plate counted positively and the
/// ground plate negatively; extra nodes keep their own unknown. Every edge is
/// stamped with the product of its endpoint polarities, so the
/// transmitter-to-receiver branch accumulates `s C_eff` and the receiver
/// shunt accumulates `s C_RR` edge by edge. Capacitance internal to the
/// transmitter port belongs to the source and is not stamped. The source
/// drives the transmitter node through `Z_Tx`; `Z_Rx` loads the receiver node.
pub fn nodal_solve(net: &CapacitiveNetwork, term: &PortTermination) -> Result<Complex64> {
    let n = net.nodes.len();
    let mut ckt = NodalCircuit::new();
    let tx = ckt.add_node("Tx");
    let rx = ckt.add_node("Rx");
    let mut map = Vec::with_capacity(n);
    for name in &net.nodes {
        map.push(match name.as_str() {
            TX_P => (Port::Tx, 1.0),
            TX_N => (Port::Tx, -1.0),
            RX_P => (Port::Rx, 1.0),
            RX_N => (Port::Rx, -1.0),
            other => (Port::Other(ckt.add_node(other)), 1.0),
        });
    }
    let node_of = |p: Port| match p {
        Port::Tx => tx,
        Port::Rx => rx,
        Port::Other(k) => k,
    };
    let s = term.s();

    for r in 0..n {
        let (pr, sr) = map[r];
        if pr != Port::Tx {
            ckt.add_branch(Some(node_of(pr)), None, s * net.self_cap[r]);
        }
        for (c, &(pc, sc)) in map.iter().enumerate().skip(r + 1) {
            let cap = net.mutual[r * n + c];
            let g = net.conductance[r * n + c];
            if pr == pc {
                // Port-internal edge: only the receiver's is part of the load.
                if pr == Port::Rx {
                    ckt.add_branch(Some(rx), None, s * (2.0 * sr * sc * cap));
                    ckt.add_branch(Some(rx), None, Complex64::new(g, 0.0));
                }
                continue;
            }
            let y = (s * cap + g) * (sr * sc);
            ckt.add_branch(Some(node_of(pr)), Some(node_of(pc)), y);
        }
    }
    ckt.add_branch(Some(rx), None, term.z_rx.inv());
    ckt.set_source(tx, Complex64::new(term.v_tx, 0.0), term.z_tx);

    let v = ckt.solve()?;
    Ok(v[rx])
}
