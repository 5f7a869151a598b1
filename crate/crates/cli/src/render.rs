//! Text renderings of command results.
//!
//! CSV and JSON reports are stable; tables are for reading.

use std::fmt::Write;

use nfe_core::fieldregion::{fraunhofer_distance, fresnel_boundary, Classification, RegionQuery};
use nfe_core::harness::compare::ComparisonRow;
use nfe_core::harness::fit::FitReport;
use nfe_core::harness::scenario::LinkPoint;
use nfe_core::harness::SweepResult;
use nfe_core::linklayer::PacketStats;
use nfe_core::{Error, Result};
use serde::Serialize;
use serde_json::json;

use crate::Format;

/// `value` to four significant figures with an SI prefix chosen so the
/// mantissa lies in [1, 1000).
pub fn eng(value: f64, unit: &str) -> String {
    const PREFIXES: [(f64, &str); 12] = [
        (1e12, "T"),
        (1e9, "G"),
        (1e6, "M"),
        (1e3, "k"),
        (1.0, ""),
        (1e-3, "m"),
        (1e-6, "µ"),
        (1e-9, "n"),
        (1e-12, "p"),
        (1e-15, "f"),
        (1e-18, "a"),
        (1e-21, "z"),
    ];
    if value == 0.0 || !value.is_finite() {
        return format!("{value} {unit}");
    }
    let mag = value.abs();
    let (scale, p) = PREFIXES
        .iter()
        .copied()
        .find(|(s, _)| mag >= *s * (1.0 - 5e-5))
        .unwrap_or(PREFIXES[PREFIXES.len() - 1]);
    let m = value / scale;
    let decimals = (3 - m.abs().log10().floor() as i32).clamp(0, 3) as usize;
    let m = format!("{m:.decimals$}");
    let m = m.trim_end_matches('0').trim_end_matches('.');
    format!("{m} {p}{unit}")
}

fn pct(v: f64) -> String {
    format!("{:.2} %", 100.0 * v)
}

fn json_text<T: Serialize + ?Sized>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| Error::Parse(e.to_string()))
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

/// Left-aligned first column, right-aligned others.
fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (i, c) in r.iter().enumerate() {
            width[i] = width[i].max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut out = String::new();
        for (i, c) in cells.iter().enumerate() {
            let pad = width[i] - c.chars().count();
            if i == 0 {
                out.push_str(c);
                out.push_str(&" ".repeat(pad));
            } else {
                out.push_str("  ");
                out.push_str(&" ".repeat(pad));
                out.push_str(c);
            }
        }
        out.trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    let rule: usize = width.iter().sum::<usize>() + 2 * (cols - 1);
    out.push_str(&"-".repeat(rule));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    out
}

pub fn region(fmt: Format, q: &RegionQuery, c: Option<&Classification>) -> Result<String> {
    let fresnel = fresnel_boundary(q);
    let fraunhofer = fraunhofer_distance(q);
    let collapsed = fresnel >= fraunhofer;
    match fmt {
        Format::Report => json_text(&json!({
            "query": q,
            "fresnel_m": fresnel,
            "fraunhofer_m": fraunhofer,
            "collapsed": collapsed,
            "classification": c,
        })),
        Format::Csv => csv_text(
            &[
                "aperture_m",
                "wavelength_m",
                "fresnel_m",
                "fraunhofer_m",
                "collapsed",
                "distance_m",
                "region",
            ],
            &[vec![
                q.d_aperture.to_string(),
                q.wavelength.to_string(),
                fresnel.to_string(),
                fraunhofer.to_string(),
                collapsed.to_string(),
                q.distance.map(|d| d.to_string()).unwrap_or_default(),
                c.map(|c| c.region.to_string()).unwrap_or_default(),
            ]],
        ),
        Format::Table => {
            let mut out = String::new();
            let _ = writeln!(out, "aperture          {}", eng(q.d_aperture, "m"));
            let _ = writeln!(out, "wavelength        {}", eng(q.wavelength, "m"));
            let _ = writeln!(out, "fresnel boundary  {}", eng(fresnel, "m"));
            let _ = writeln!(out, "fraunhofer        {}", eng(fraunhofer, "m"));
            if collapsed {
                let _ = writeln!(
                    out,
                    "no radiative near-field band: fresnel boundary is beyond fraunhofer"
                );
            }
            if let Some(c) = c {
                let _ = writeln!(
                    out,
                    "distance          {}  ->  {}",
                    eng(q.distance.unwrap_or_default(), "m"),
                    c.region
                );
                let _ = writeln!(out, "note: {}", c.note);
            }
            Ok(out)
        }
    }
}

pub fn link(fmt: Format, id: &str, gap: f64, points: &[(f64, LinkPoint)]) -> Result<String> {
    match fmt {
        Format::Report => {
            let items: Vec<_> = points
                .iter()
                .map(|(rate, p)| json!({ "rate_bps": rate, "point": p }))
                .collect();
            json_text(&json!({ "scenario_id": id, "distance_m": gap, "rates": items }))
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = points
                .iter()
                .map(|(rate, p)| {
                    let r = &p.response;
                    vec![
                        id.to_string(),
                        gap.to_string(),
                        rate.to_string(),
                        format!("{:e}", r.c_eff),
                        format!("{:e}", r.c_rr),
                        format!("{:e}", r.h.norm()),
                        format!("{:.6}", r.h.arg().to_degrees()),
                        format!("{:.6}", r.snr_db),
                        format!("{:.9}", p.per),
                        format!("{:.3}", p.throughput_bps),
                        r.polarity_inverted.to_string(),
                    ]
                })
                .collect();
            csv_text(
                &[
                    "scenario",
                    "distance_m",
                    "rate_bps",
                    "c_eff_f",
                    "c_rr_f",
                    "h_mag",
                    "h_phase_deg",
                    "snr_db",
                    "per",
                    "throughput_bps",
                    "polarity_inverted",
                ],
                &rows,
            )
        }
        Format::Table => {
            let mut out = String::new();
            if let Some((_, p)) = points.first() {
                let r = &p.response;
                let _ = writeln!(out, "scenario {id} at {}", eng(gap, "m"));
                let _ = writeln!(
                    out,
                    "C_eff {}   C_RR {}",
                    eng(r.c_eff, "F"),
                    eng(r.c_rr, "F")
                );
                let _ = writeln!(
                    out,
                    "|H| {:.6}   phase {:.2} deg{}\n",
                    r.h.norm(),
                    r.h.arg().to_degrees(),
                    if r.polarity_inverted {
                        "   (polarity inverted)"
                    } else {
                        ""
                    }
                );
            }
            let rows: Vec<Vec<String>> = points
                .iter()
                .map(|(rate, p)| {
                    vec![
                        eng(*rate, "bps"),
                        format!("{:.2} dB", p.response.snr_db),
                        pct(p.per),
                        eng(p.throughput_bps, "bps"),
                    ]
                })
                .collect();
            out.push_str(&table(&["rate", "SNR", "PER", "throughput"], &rows));
            Ok(out)
        }
    }
}

pub fn sweep_table(r: &SweepResult) -> String {
    let mut out = format!(
        "scenario {}  parameters {}  PER threshold {}\n\n",
        r.scenario_id,
        r.param_version,
        pct(r.per_threshold)
    );
    let rows: Vec<Vec<String>> = r
        .rates
        .iter()
        .map(|x| {
            vec![
                eng(x.rate_bps, "bps"),
                eng(x.range_m, "m"),
                eng(
                    x.samples.first().map(|s| s.throughput_bps).unwrap_or(0.0),
                    "bps",
                ),
            ]
        })
        .collect();
    out.push_str(&table(&["rate", "range", "throughput at start"], &rows));
    out
}

pub struct McRow {
    pub rate_bps: f64,
    pub distance_m: f64,
    pub model_per: f64,
    pub stats: PacketStats,
}

pub fn montecarlo(fmt: Format, id: &str, root_seed: u64, rows: &[McRow]) -> Result<String> {
    match fmt {
        Format::Report => {
            let items: Vec<_> = rows
                .iter()
                .map(|r| {
                    json!({
                        "rate_bps": r.rate_bps,
                        "distance_m": r.distance_m,
                        "model_per": r.model_per,
                        "stats": r.stats,
                    })
                })
                .collect();
            json_text(&json!({ "scenario_id": id, "seed": root_seed, "points": items }))
        }
        Format::Csv => csv_text(
            &[
                "rate_bps",
                "distance_m",
                "model_per",
                "per",
                "throughput_bps",
                "packets",
                "seed",
            ],
            &rows
                .iter()
                .map(|r| {
                    vec![
                        r.rate_bps.to_string(),
                        r.distance_m.to_string(),
                        format!("{:.9}", r.model_per),
                        format!("{:.9}", r.stats.per),
                        format!("{:.3}", r.stats.throughput_bps),
                        r.stats.n_packets.unwrap_or(0).to_string(),
                        r.stats.seed.unwrap_or(0).to_string(),
                    ]
                })
                .collect::<Vec<_>>(),
        ),
        Format::Table => {
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let n = r.stats.n_packets.unwrap_or(0) as f64;
                    let sigma = (r.model_per * (1.0 - r.model_per) / n).sqrt();
                    vec![
                        eng(r.rate_bps, "bps"),
                        pct(r.model_per),
                        pct(r.stats.per),
                        pct(sigma),
                        eng(r.stats.throughput_bps, "bps"),
                    ]
                })
                .collect();
            Ok(format!(
                "scenario {id}  seed {root_seed}\n\n{}",
                table(
                    &["rate", "model PER", "simulated PER", "σ", "throughput"],
                    &body
                )
            ))
        }
    }
}

pub fn fit(fmt: Format, reports: &[FitReport]) -> Result<String> {
    match fmt {
        Format::Report => json_text(reports),
        Format::Csv => {
            let rows: Vec<Vec<String>> = reports
                .iter()
                .flat_map(|r| {
                    r.parameters.iter().map(move |(n, v)| {
                        vec![
                            r.scenario_id.clone(),
                            n.clone(),
                            format!("{v:e}"),
                            format!("{:e}", r.objective),
                            r.iterations.to_string(),
                        ]
                    })
                })
                .collect();
            csv_text(
                &["scenario", "parameter", "value", "objective", "iterations"],
                &rows,
            )
        }
        Format::Table => {
            let mut out = String::new();
            for r in reports {
                let _ = writeln!(
                    out,
                    "{}: objective {:.4e} -> {:.4e} in {} iterations, {} observations",
                    r.scenario_id, r.initial_objective, r.objective, r.iterations, r.observations
                );
                for (n, v) in &r.parameters {
                    let _ = writeln!(out, "  {n:<10} {v:.6e}");
                }
            }
            Ok(out)
        }
    }
}

fn opt_mw(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn compare(fmt: Format, rows: &[ComparisonRow]) -> Result<String> {
    match fmt {
        Format::Report => json_text(rows),
        Format::Csv => csv_text(
            &[
                "name",
                "tx_power_mw",
                "rx_power_mw",
                "combined_power_mw",
                "range_min_cm",
                "range_max_cm",
                "data_rate_mbps",
                "derived",
            ],
            &rows
                .iter()
                .map(|r| {
                    vec![
                        r.name.clone(),
                        opt_mw(r.tx_power_mw),
                        opt_mw(r.rx_power_mw),
                        r.combined_power_mw.to_string(),
                        r.range_min_cm.to_string(),
                        r.range_max_cm.to_string(),
                        r.data_rate_mbps.to_string(),
                        r.derived.to_string(),
                    ]
                })
                .collect::<Vec<_>>(),
        ),
        Format::Table => {
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let range = if r.range_min_cm == r.range_max_cm {
                        format!("{} cm", r.range_min_cm)
                    } else {
                        format!("{}-{} cm", r.range_min_cm, r.range_max_cm)
                    };
                    vec![
                        r.name.clone(),
                        format!(
                            "{} mW{}",
                            r.combined_power_mw,
                            if r.derived { " *" } else { "" }
                        ),
                        range,
                        eng(r.data_rate_mbps * 1e6, "bps"),
                    ]
                })
                .collect();
            let mut out = table(&["technology", "power", "range", "rate"], &body);
            if rows.iter().any(|r| r.derived) {
                out.push_str("* combined power derived from a stated ratio\n");
            }
            Ok(out)
        }
    }
}
