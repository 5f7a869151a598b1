//! Power, range and rate of competing near-field technologies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EMBEDDED: &str = include_str!("../../data/technologies.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TechnologyRecord {
    pub name: String,
    #[serde(default)]
    pub tx_power_mw: Option<f64>,
    #[serde(default)]
    pub rx_power_mw: Option<f64>,
    /// Only used when the Tx/Rx split is unknown.
    #[serde(default)]
    pub combined_power_mw: Option<f64>,
    pub range_cm: (f64, f64),
    pub data_rate_mbps: f64,
    #[serde(default)]
    pub effective_rate_mbps: Option<f64>,
    /// The power figure is inferred from a ratio rather than measured.
    #[serde(default)]
    pub derived: bool,
    #[serde(default)]
    pub citation: String,
}

impl TechnologyRecord {
    pub fn combined_power_mw(&self) -> f64 {
        match (self.tx_power_mw, self.rx_power_mw) {
            (Some(t), Some(r)) => t + r,
            _ => self.combined_power_mw.unwrap_or(f64::NAN),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        let err = |m: &str| Err(Error::Config(format!("technology `{}`: {m}", self.name)));
        match (self.tx_power_mw, self.rx_power_mw, self.combined_power_mw) {
            (Some(t), Some(r), None) if pos(t) && pos(r) => {}
            (None, None, Some(c)) if pos(c) => {}
            _ => return err("needs positive tx and rx power, or a combined power only"),
        }
        let (lo, hi) = self.range_cm;
        if !(pos(lo) && pos(hi) && lo <= hi) {
            return err("range must be positive with min <= max");
        }
        if !pos(self.data_rate_mbps) {
            return err("data rate must be positive");
        }
        if let Some(e) = self.effective_rate_mbps {
            if !pos(e) {
                return err("effective rate must be positive");
            }
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Dataset {
    schema_version: u32,
    technology: Vec<TechnologyRecord>,
}

pub fn parse_records(text: &str) -> Result<Vec<TechnologyRecord>> {
    let ds: Dataset =
        toml::from_str(text).map_err(|e| Error::Config(format!("technology dataset: {e}")))?;
    if ds.schema_version != 1 {
        return Err(Error::Config(format!(
            "technology dataset schema_version {} is not supported",
            ds.schema_version
        )));
    }
    for r in &ds.technology {
        r.validate()?;
    }
    Ok(ds.technology)
}

/// The shipped dataset.
pub fn embedded_records() -> Vec<TechnologyRecord> {
    parse_records(EMBEDDED).expect("embedded technology dataset is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub name: String,
    pub tx_power_mw: Option<f64>,
    pub rx_power_mw: Option<f64>,
    pub combined_power_mw: f64,
    pub range_min_cm: f64,
    pub range_max_cm: f64,
    pub data_rate_mbps: f64,
    pub derived: bool,
}

/// Rows sorted by combined power, lowest first; ties keep input order.
pub fn compare_technologies(records: &[TechnologyRecord]) -> Result<Vec<ComparisonRow>> {
    if records.is_empty() {
        return Err(Error::Config("no technology records".into()));
    }
    for r in records {
        r.validate()?;
    }
    let mut rows: Vec<ComparisonRow> = records
        .iter()
        .map(|r| ComparisonRow {
            name: r.name.clone(),
            tx_power_mw: r.tx_power_mw,
            rx_power_mw: r.rx_power_mw,
            combined_power_mw: r.combined_power_mw(),
            range_min_cm: r.range_cm.0,
            range_max_cm: r.range_cm.1,
            data_rate_mbps: r.data_rate_mbps,
            derived: r.derived,
        })
        .collect();
    rows.sort_by(|a, b| a.combined_power_mw.total_cmp(&b.combined_power_mw));
    Ok(rows)
}
