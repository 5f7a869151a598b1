//! Reported measurement figures shipped with the crate.

use serde::{Deserialize, Serialize};

use super::measurement::MeasurementLog;
use crate::error::{Error, Result};

const EMBEDDED: &str = include_str!("../../data/anchors.toml");
const EMBEDDED_LOG: &str = include_str!("../../data/logs/anchors.csv");

/// Range at the PER threshold per rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeAnchor {
    pub scenario: String,
    pub rates_bps: Vec<f64>,
    pub range_cm: Vec<f64>,
    pub citation: String,
}

/// PER and/or throughput at one fixed separation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedAnchor {
    pub scenario: String,
    pub distance_m: f64,
    pub rates_bps: Vec<f64>,
    #[serde(default)]
    pub per: Option<Vec<f64>>,
    #[serde(default)]
    pub throughput_bps: Option<Vec<f64>>,
    pub citation: String,
}

/// Lower bounds on range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageAnchor {
    pub scenario: String,
    pub rates_bps: Vec<f64>,
    pub min_range_m: Vec<f64>,
    pub citation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShortRangeAnchor {
    pub scenario: String,
    pub distance_m: f64,
    pub rate_bps: f64,
    pub min_throughput_bps: f64,
    pub citation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Anchors {
    pub schema_version: u32,
    pub range: Vec<RangeAnchor>,
    pub fixed: Vec<FixedAnchor>,
    pub coverage: Vec<CoverageAnchor>,
    pub short_range: Vec<ShortRangeAnchor>,
}

impl Anchors {
    pub fn embedded() -> Self {
        let a: Anchors = toml::from_str(EMBEDDED).expect("embedded anchor dataset is valid");
        a.validate().expect("embedded anchor dataset is consistent");
        a
    }

    fn validate(&self) -> Result<()> {
        let same = |a: usize, b: Option<usize>| b.is_none_or(|b| a == b);
        let ok = self
            .range
            .iter()
            .all(|r| r.rates_bps.len() == r.range_cm.len())
            && self.fixed.iter().all(|f| {
                same(f.rates_bps.len(), f.per.as_ref().map(Vec::len))
                    && same(f.rates_bps.len(), f.throughput_bps.as_ref().map(Vec::len))
            })
            && self
                .coverage
                .iter()
                .all(|c| c.rates_bps.len() == c.min_range_m.len());
        if ok {
            Ok(())
        } else {
            Err(Error::Config("anchor lists have mismatched lengths".into()))
        }
    }

    pub fn range(&self, scenario: &str) -> Option<&RangeAnchor> {
        self.range.iter().find(|r| r.scenario == scenario)
    }

    pub fn fixed(&self, scenario: &str) -> Option<&FixedAnchor> {
        self.fixed.iter().find(|r| r.scenario == scenario)
    }

    pub fn coverage(&self, scenario: &str) -> Option<&CoverageAnchor> {
        self.coverage.iter().find(|r| r.scenario == scenario)
    }
}

/// Calibration log transcribed from the anchors.
///
/// A reported range `r` on the 1 cm grid only says that PER crosses the
/// threshold between `r` and `r + 1 cm`; the log places the crossing at the
/// midpoint. Coverage lower bounds are placed 5 cm beyond the bound.
pub fn calibration_log() -> MeasurementLog {
    MeasurementLog::from_str(EMBEDDED_LOG, "anchors.csv").expect("embedded anchor log is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_data_loads() {
        let a = Anchors::embedded();
        assert_eq!(
            a.range("cfg1_test1").unwrap().range_cm,
            vec![13.0, 9.0, 5.0]
        );
        assert!(a.fixed("tape").unwrap().per.is_some());
        assert!(a.fixed("body").unwrap().per.is_none());
        let log = calibration_log();
        assert_eq!(log.select("cfg1", "1").rows.len(), 3);
        assert_eq!(log.select("body", "1").rows.len(), 5);
    }
}
