//! SNR to bit errors, packet errors and delivered throughput.
//!
//! Binary coherent signalling over AWGN with independent bit errors. A packet
//! fails if any of its bits fails.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::units;

pub const DEFAULT_PACKET_BITS: u32 = 1024;
pub const DEFAULT_EFFICIENCY: f64 = 0.6;
pub const DEFAULT_PER_THRESHOLD: f64 = 0.30;

/// The three raw rates of the reference transceiver.
pub const STANDARD_RATES: [f64; 3] = [1e6, 3.33e6, 5e6];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Modulation {
    #[default]
    BinaryCoherent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    #[serde(with = "units::bps")]
    pub data_rate: f64,
    #[serde(default = "default_packet_bits")]
    pub packet_len_bits: u32,
    #[serde(with = "units::watt_per_hertz")]
    pub n0: f64,
    /// Noise bandwidth in hertz; `None` means equal to the data rate.
    #[serde(default)]
    pub bandwidth: Option<f64>,
    #[serde(default = "default_efficiency")]
    pub proto_efficiency: f64,
    #[serde(default = "default_threshold")]
    pub per_threshold: f64,
    #[serde(default)]
    pub modulation: Modulation,
    /// Residual packet loss that does not depend on SNR.
    #[serde(default)]
    pub floor_per: f64,
}

fn default_packet_bits() -> u32 {
    DEFAULT_PACKET_BITS
}
fn default_efficiency() -> f64 {
    DEFAULT_EFFICIENCY
}
fn default_threshold() -> f64 {
    DEFAULT_PER_THRESHOLD
}

impl LinkConfig {
    pub fn new(data_rate: f64, n0: f64) -> Result<Self> {
        let cfg = Self {
            data_rate,
            packet_len_bits: DEFAULT_PACKET_BITS,
            n0,
            bandwidth: None,
            proto_efficiency: DEFAULT_EFFICIENCY,
            per_threshold: DEFAULT_PER_THRESHOLD,
            modulation: Modulation::BinaryCoherent,
            floor_per: 0.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.data_rate > 0.0 && self.data_rate.is_finite()) {
            return bad("data_rate must be positive");
        }
        if self.packet_len_bits == 0 {
            return bad("packet_len_bits must be at least 1");
        }
        if !(self.n0 > 0.0 && self.n0.is_finite()) {
            return bad("n0 must be positive");
        }
        if let Some(b) = self.bandwidth {
            if !(b > 0.0 && b.is_finite()) {
                return bad("bandwidth must be positive");
            }
        }
        if !(self.proto_efficiency > 0.0 && self.proto_efficiency <= 1.0) {
            return bad("proto_efficiency must be in (0, 1]");
        }
        if !(self.per_threshold > 0.0 && self.per_threshold < 1.0) {
            return bad("per_threshold must be in (0, 1)");
        }
        if !(0.0..1.0).contains(&self.floor_per) {
            return bad("floor_per must be in [0, 1)");
        }
        Ok(())
    }

    pub fn with_rate(mut self, rate: f64) -> Self {
        self.data_rate = rate;
        self
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth.unwrap_or(self.data_rate)
    }

    /// Total PER at a given SNR, floor included.
    pub fn per_at_snr(&self, snr: f64) -> f64 {
        let awgn = packet_error_rate(bit_error_rate(snr, self), self.packet_len_bits);
        combine_floor(self.floor_per, awgn)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketStats {
    pub per: f64,
    pub throughput_bps: f64,
    pub n_packets: Option<u64>,
    pub seed: Option<u64>,
}

/// Gaussian tail probability `Q(x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// `Q(√(2·snr))`.
pub fn bit_error_rate(snr: f64, cfg: &LinkConfig) -> f64 {
    match cfg.modulation {
        Modulation::BinaryCoherent => {
            if snr.is_infinite() {
                0.0
            } else {
                q_function((2.0 * snr.max(0.0)).sqrt())
            }
        }
    }
}

/// `1 − (1 − ber)^L`, evaluated without cancellation for tiny `ber`.
pub fn packet_error_rate(ber: f64, len_bits: u32) -> f64 {
    let ber = ber.clamp(0.0, 1.0);
    if ber == 1.0 {
        return 1.0;
    }
    (-(f64::from(len_bits) * (-ber).ln_1p()).exp_m1()).clamp(0.0, 1.0)
}

/// Independent loss mechanisms: a packet survives only if it survives both.
pub fn combine_floor(floor: f64, per: f64) -> f64 {
    floor + per * (1.0 - floor)
}

/// `η · R · (1 − per)`.
pub fn throughput(cfg: &LinkConfig, per: f64) -> f64 {
    cfg.proto_efficiency * cfg.data_rate * (1.0 - per.clamp(0.0, 1.0))
}

/// Draws `n` packet outcomes with failure probability `per_model`.
pub fn monte_carlo_packets(
    per_model: f64,
    n: u64,
    seed: u64,
    cfg: &LinkConfig,
) -> Result<PacketStats> {
    if n == 0 {
        return Err(Error::Config("packet count must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&per_model) {
        return Err(Error::Config("per_model must be in [0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let failed = (0..n).filter(|_| rng.random::<f64>() < per_model).count() as u64;
    let per = failed as f64 / n as f64;
    Ok(PacketStats {
        per,
        throughput_bps: throughput(cfg, per),
        n_packets: Some(n),
        seed: Some(seed),
    })
}

/// Per-task seed from a root seed and two indices (splitmix64 finalizer).
pub fn derive_seed(root: u64, a: u64, b: u64) -> u64 {
    let mut z = root
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(rate: f64) -> LinkConfig {
        LinkConfig::new(rate, 4e-21).unwrap()
    }

    #[test]
    fn ber_limits() {
        let c = cfg(1e6);
        assert_eq!(bit_error_rate(0.0, &c), 0.5);
        assert_eq!(bit_error_rate(f64::INFINITY, &c), 0.0);
        assert!(bit_error_rate(1e4, &c) < 1e-300);
    }

    #[test]
    fn per_examples() {
        assert_eq!(packet_error_rate(0.0, 4096), 0.0);
        assert!((packet_error_rate(0.5, 1) - 0.5).abs() < 1e-15);
        assert_eq!(packet_error_rate(1.0, 8), 1.0);
        let p = packet_error_rate(1e-5, 1024);
        assert!((p - 1.019e-2).abs() < 5e-6, "{p}");
    }

    #[test]
    fn throughput_examples() {
        let c = cfg(5e6);
        assert!((throughput(&c, 0.29) - 2.13e6).abs() < 1.0);
        assert!((throughput(&c, 0.29) - 2.0e6).abs() / 2.0e6 < 0.10);
        let c1 = cfg(1e6);
        assert!((throughput(&c1, 0.058) - 0.5652e6).abs() < 1.0);
        assert_eq!(throughput(&c, 1.0), 0.0);
    }

    #[test]
    fn floor_combination() {
        assert_eq!(combine_floor(0.0, 0.2), 0.2);
        assert!((combine_floor(0.1, 0.0) - 0.1).abs() < 1e-15);
        assert!((combine_floor(0.5, 0.5) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn monte_carlo_extremes() {
        let c = cfg(1e6);
        assert_eq!(monte_carlo_packets(0.0, 500, 3, &c).unwrap().per, 0.0);
        assert_eq!(monte_carlo_packets(1.0, 500, 3, &c).unwrap().per, 1.0);
        assert!(monte_carlo_packets(0.5, 0, 3, &c).is_err());
    }

    #[test]
    fn seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for a in 0..8 {
            for b in 0..64 {
                assert!(seen.insert(derive_seed(7, a, b)));
            }
        }
        assert_ne!(derive_seed(1, 0, 0), derive_seed(2, 0, 0));
    }

    #[test]
    fn config_validation() {
        assert!(LinkConfig::new(0.0, 1e-20).is_err());
        assert!(LinkConfig::new(1e6, 0.0).is_err());
        let mut c = cfg(1e6);
        c.proto_efficiency = 1.5;
        assert!(c.validate().is_err());
        c.proto_efficiency = 1.0;
        c.per_threshold = 1.0;
        assert!(c.validate().is_err());
    }
}
