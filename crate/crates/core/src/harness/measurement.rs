//! Measured PER/throughput logs.
//!
//! CSV with header `config,test,rate_bps,distance_m,per,throughput_bps,run`.
//! Either `per` or `throughput_bps` may be left empty, but not both.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HEADER: [&str; 7] = [
    "config",
    "test",
    "rate_bps",
    "distance_m",
    "per",
    "throughput_bps",
    "run",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub config: String,
    pub test: String,
    pub rate_bps: f64,
    pub distance_m: f64,
    pub per: Option<f64>,
    pub throughput_bps: Option<f64>,
    pub run: u32,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MeasurementLog {
    pub rows: Vec<Measurement>,
}

impl MeasurementLog {
    pub fn from_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_reader(file, &path.display().to_string())
    }

    pub fn from_str(text: &str, label: &str) -> Result<Self> {
        Self::from_reader(text.as_bytes(), label)
    }

    /// Parses a log; `label` names the source in diagnostics.
    pub fn from_reader<R: Read>(reader: R, label: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let err = |line: u64, column: &str, message: String| Error::Csv {
            path: label.to_string(),
            line,
            column: column.to_string(),
            message,
        };

        let headers = rdr
            .headers()
            .map_err(|e| err(1, "-", e.to_string()))?
            .clone();
        let cols: Vec<&str> = headers.iter().collect();
        if cols != HEADER {
            return Err(err(
                1,
                "-",
                format!("expected header `{}`", HEADER.join(",")),
            ));
        }

        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                err(line, "-", e.to_string())
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let field = |i: usize| record.get(i).unwrap_or("");
            let num = |i: usize| -> Result<Option<f64>> {
                let t = field(i);
                if t.is_empty() {
                    return Ok(None);
                }
                let v: f64 = t
                    .parse()
                    .map_err(|_| err(line, HEADER[i], format!("`{t}` is not a number")))?;
                if !v.is_finite() {
                    return Err(err(line, HEADER[i], format!("`{t}` is not finite")));
                }
                Ok(Some(v))
            };
            let required = |i: usize| -> Result<f64> {
                num(i)?.ok_or_else(|| err(line, HEADER[i], "value is required".into()))
            };

            let config = field(0).to_string();
            let test = field(1).to_string();
            if config.is_empty() {
                return Err(err(line, "config", "value is required".into()));
            }
            let rate_bps = required(2)?;
            if rate_bps <= 0.0 {
                return Err(err(line, "rate_bps", "must be positive".into()));
            }
            let distance_m = required(3)?;
            if distance_m < 0.0 {
                return Err(err(line, "distance_m", "must be non-negative".into()));
            }
            let per = num(4)?;
            if let Some(p) = per {
                if !(0.0..=1.0).contains(&p) {
                    return Err(err(line, "per", format!("{p} is outside [0, 1]")));
                }
            }
            let throughput_bps = num(5)?;
            if let Some(t) = throughput_bps {
                if t < 0.0 || t > rate_bps {
                    return Err(err(
                        line,
                        "throughput_bps",
                        format!("{t} is outside [0, rate_bps]"),
                    ));
                }
            }
            if per.is_none() && throughput_bps.is_none() {
                return Err(err(
                    line,
                    "per",
                    "per and throughput_bps are both empty".into(),
                ));
            }
            let run_text = field(6);
            let run = if run_text.is_empty() {
                0
            } else {
                run_text
                    .parse()
                    .map_err(|_| err(line, "run", format!("`{run_text}` is not an index")))?
            };
            rows.push(Measurement {
                config,
                test,
                rate_bps,
                distance_m,
                per,
                throughput_bps,
                run,
            });
        }
        if rows.is_empty() {
            return Err(err(1, "-", "log has no rows".into()));
        }
        Ok(Self { rows })
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Parse(e.to_string());
        w.write_record(HEADER).map_err(csv_err)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.config.clone(),
                r.test.clone(),
                r.rate_bps.to_string(),
                r.distance_m.to_string(),
                opt(r.per),
                opt(r.throughput_bps),
                r.run.to_string(),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Rows for one configuration and test.
    pub fn select(&self, config: &str, test: &str) -> Self {
        Self {
            rows: self
                .rows
                .iter()
                .filter(|r| r.config == config && r.test == test)
                .cloned()
                .collect(),
        }
    }

    /// Number of scalar observations (PER and throughput counted separately).
    pub fn observation_count(&self) -> usize {
        self.rows
            .iter()
            .map(|r| usize::from(r.per.is_some()) + usize::from(r.throughput_bps.is_some()))
            .sum()
    }

    pub fn distinct_distances(&self) -> usize {
        let mut d: Vec<f64> = self.rows.iter().map(|r| r.distance_m).collect();
        d.sort_by(f64::total_cmp);
        d.dedup();
        d.len()
    }
}
