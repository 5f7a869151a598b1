//! Distance/rate sweeps and range extraction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::{Mode, Scenario};
use crate::error::{Error, Result};
use crate::linklayer::{self, PacketStats};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSample {
    pub distance_m: f64,
    pub per: f64,
    pub throughput_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSweep {
    pub rate_bps: f64,
    pub samples: Vec<SweepSample>,
    pub range_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub scenario_id: String,
    pub seed: u64,
    pub param_version: String,
    pub per_threshold: f64,
    /// Packets simulated per point; `None` for analytic PER.
    pub packets_per_point: Option<u64>,
    pub rates: Vec<RateSweep>,
}

/// Options for [`sweep_distance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SweepOptions {
    pub seed: u64,
    /// Replace the analytic PER by a Monte Carlo estimate over this many
    /// packets per point.
    pub packets_per_point: Option<u64>,
}

/// `start, start+step, …` up to and including `stop` (within half a step).
pub fn distance_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && start >= 0.0 && stop >= start) {
        return Err(Error::Config(
            "distance grid needs 0 <= start <= stop and step > 0".into(),
        ));
    }
    let n = ((stop - start) / step + 0.5).floor() as usize;
    // Round to 1e-9 m so that grid points print cleanly.
    Ok((0..=n)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

pub fn sweep_distance(
    s: &Scenario,
    distances: &[f64],
    rates: &[f64],
    param_version: &str,
    opts: SweepOptions,
) -> Result<SweepResult> {
    s.validate()?;
    if distances.is_empty() || rates.is_empty() {
        return Err(Error::Config("sweep needs distances and rates".into()));
    }
    if distances.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(
            "distances must be strictly increasing".into(),
        ));
    }
    if distances[0] < 0.0 {
        return Err(Error::Config("distances must be non-negative".into()));
    }

    let tasks: Vec<(usize, usize)> = (0..rates.len())
        .flat_map(|r| (0..distances.len()).map(move |d| (r, d)))
        .collect();
    let points: Vec<SweepSample> = tasks
        .par_iter()
        .map(|&(ri, di)| {
            let rate = rates[ri];
            let d = distances[di];
            let pt = s.evaluate(d, rate)?;
            match opts.packets_per_point {
                None => Ok(SweepSample {
                    distance_m: d,
                    per: pt.per,
                    throughput_bps: pt.throughput_bps,
                }),
                Some(n) => {
                    let cfg = s.link.at_rate(rate)?;
                    let seed = linklayer::derive_seed(opts.seed, ri as u64, di as u64);
                    let st = linklayer::monte_carlo_packets(pt.per, n, seed, &cfg)?;
                    Ok(SweepSample {
                        distance_m: d,
                        per: st.per,
                        throughput_bps: st.throughput_bps,
                    })
                }
            }
        })
        .collect::<Result<_>>()?;

    let per_threshold = s.link.per_threshold;
    let rates = rates
        .iter()
        .enumerate()
        .map(|(ri, &rate)| {
            let samples = points[ri * distances.len()..(ri + 1) * distances.len()].to_vec();
            RateSweep {
                rate_bps: rate,
                range_m: range_from_samples(&samples, per_threshold),
                samples,
            }
        })
        .collect();
    Ok(SweepResult {
        scenario_id: s.id.clone(),
        seed: opts.seed,
        param_version: param_version.to_string(),
        per_threshold,
        packets_per_point: opts.packets_per_point,
        rates,
    })
}

/// Largest sampled distance with PER at or below `threshold`; zero when no
/// sample qualifies. No interpolation.
pub fn range_from_samples(samples: &[SweepSample], threshold: f64) -> f64 {
    samples
        .iter()
        .filter(|p| p.per <= threshold)
        .map(|p| p.distance_m)
        .fold(0.0, f64::max)
}

/// Range per rate at `threshold`, as `(rate_bps, range_m)`.
pub fn range_at_threshold(sweep: &SweepResult, threshold: f64) -> Vec<(f64, f64)> {
    sweep
        .rates
        .iter()
        .map(|r| (r.rate_bps, range_from_samples(&r.samples, threshold)))
        .collect()
}

impl SweepResult {
    /// `rate_bps,distance_m,per,throughput_bps` rows.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let e = |e: csv::Error| Error::Parse(e.to_string());
        w.write_record(["rate_bps", "distance_m", "per", "throughput_bps"])
            .map_err(e)?;
        for r in &self.rates {
            for p in &r.samples {
                w.write_record([
                    r.rate_bps.to_string(),
                    p.distance_m.to_string(),
                    format!("{:.9}", p.per),
                    format!("{:.3}", p.throughput_bps),
                ])
                .map_err(e)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn range_for(&self, rate: f64) -> Option<f64> {
        self.rates
            .iter()
            .find(|r| r.rate_bps == rate)
            .map(|r| r.range_m)
    }
}

/// PER and throughput per rate at the scenario's fixed separation.
pub fn simulate_conductor_extension(s: &Scenario, rates: &[f64]) -> Result<Vec<PacketStats>> {
    if s.extension.is_none() {
        return Err(Error::Config(format!(
            "scenario `{}` has no extension",
            s.id
        )));
    }
    let gap = s
        .fixed_gap_m
        .ok_or_else(|| Error::Config(format!("scenario `{}` has no fixed_gap_m", s.id)))?;
    rates
        .iter()
        .map(|&r| {
            let pt = s.evaluate(gap, r)?;
            Ok(PacketStats {
                per: pt.per,
                throughput_bps: pt.throughput_bps,
                n_packets: None,
                seed: None,
            })
        })
        .collect()
}

/// Sweep of a body-assisted scenario with the body segment set to
/// `body_len` metres.
pub fn simulate_body_assisted(
    s: &Scenario,
    body_len: f64,
    distances: &[f64],
    rates: &[f64],
    param_version: &str,
    opts: SweepOptions,
) -> Result<SweepResult> {
    if s.mode != Mode::BodyAssisted {
        return Err(Error::Config(format!(
            "scenario `{}` is not body-assisted",
            s.id
        )));
    }
    let mut s = s.clone();
    if let Some(ext) = s.extension.as_mut() {
        ext.length_m = body_len;
    }
    sweep_distance(&s, distances, rates, param_version, opts)
}
