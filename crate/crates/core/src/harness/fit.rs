//! Least-squares calibration of kernel and link parameters to measured logs.
//!
//! PER residuals are taken in logit space, throughput residuals relative to
//! the measured value. The search is a Hooke–Jeeves pattern search over
//! log- or logit-transformed parameters.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::measurement::{Measurement, MeasurementLog};
use super::params::{builtin_ids, Params};
use super::scenario::Scenario;
use crate::error::{Error, Result};

/// Offset of the smoothed logit `ln((p + ε) / (1 - p + ε))`, which stays
/// finite and differentiable at PER 0 and 1.
pub const PER_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FitParam {
    C0,
    DScale,
    P,
    Gain(usize),
    N0,
    Eta,
    FloorPer,
}

impl FitParam {
    pub fn name(&self) -> String {
        match self {
            FitParam::C0 => "c0".into(),
            FitParam::DScale => "d_scale".into(),
            FitParam::P => "p".into(),
            FitParam::Gain(i) => format!("gain{i}"),
            FitParam::N0 => "n0".into(),
            FitParam::Eta => "eta".into(),
            FitParam::FloorPer => "floor_per".into(),
        }
    }

    /// Shapes the PER-versus-distance curve (as opposed to link-level
    /// offsets); each needs its own distance in the data.
    pub fn is_distance_law(&self) -> bool {
        matches!(
            self,
            FitParam::C0 | FitParam::DScale | FitParam::P | FitParam::Gain(_)
        )
    }

    fn bounded(self) -> bool {
        matches!(self, FitParam::Eta | FitParam::FloorPer)
    }

    pub fn get(&self, s: &Scenario) -> f64 {
        match *self {
            FitParam::C0 => s.kernel.c0,
            FitParam::DScale => s.kernel.d_scale,
            FitParam::P => s.kernel.p,
            FitParam::Gain(i) => s.kernel.orientation_gain[i],
            FitParam::N0 => s.link.n0,
            FitParam::Eta => s.link.proto_efficiency,
            FitParam::FloorPer => s.link.floor_per,
        }
    }

    pub fn set(&self, s: &mut Scenario, v: f64) {
        match *self {
            FitParam::C0 => s.kernel.c0 = v,
            FitParam::DScale => s.kernel.d_scale = v,
            FitParam::P => s.kernel.p = v,
            FitParam::Gain(i) => s.kernel.orientation_gain[i] = v,
            FitParam::N0 => s.link.n0 = v,
            FitParam::Eta => s.link.proto_efficiency = v,
            FitParam::FloorPer => s.link.floor_per = v,
        }
    }

    fn encode(self, v: f64) -> f64 {
        if self.bounded() {
            let v = v.clamp(1e-6, 1.0 - 1e-6);
            (v / (1.0 - v)).ln()
        } else {
            v.ln()
        }
    }

    fn decode(self, x: f64) -> f64 {
        if self.bounded() {
            1.0 / (1.0 + (-x).exp())
        } else {
            x.exp()
        }
    }
}

impl fmt::Display for FitParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for FitParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "c0" => FitParam::C0,
            "d_scale" => FitParam::DScale,
            "p" => FitParam::P,
            "n0" => FitParam::N0,
            "eta" | "proto_efficiency" => FitParam::Eta,
            "floor_per" => FitParam::FloorPer,
            other => match other.strip_prefix("gain").and_then(|i| i.parse().ok()) {
                Some(i) if i < 8 => FitParam::Gain(i),
                _ => return Err(Error::Config(format!("unknown fit parameter `{other}`"))),
            },
        })
    }
}

/// Parses a comma-separated parameter list such as `c0,d_scale,p`.
pub fn parse_free(list: &str) -> Result<Vec<FitParam>> {
    let mut out: Vec<FitParam> = Vec::new();
    for item in list.split(',').filter(|t| !t.trim().is_empty()) {
        let p: FitParam = item.parse()?;
        if !out.contains(&p) {
            out.push(p);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("no free parameters given".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Stop once every search step is below this (relative, since the search
    /// runs on log/logit parameters).
    pub rel_tol: f64,
    pub initial_step: f64,
    /// Further searches restarted from the best point with the initial step,
    /// as long as each one still improves the objective.
    pub max_restarts: usize,
    /// Penalise fits whose SNR increases with distance anywhere on a grid
    /// from 1 cm (or the closest logged distance) out to 1.5 times the
    /// largest logged distance.
    pub monotone: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 10_000,
            rel_tol: 1e-6,
            initial_step: 0.25,
            max_restarts: 8,
            monotone: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorResidual {
    pub config: String,
    pub test: String,
    pub rate_bps: f64,
    pub distance_m: f64,
    pub measured_per: Option<f64>,
    pub model_per: f64,
    pub measured_throughput_bps: Option<f64>,
    pub model_throughput_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub scenario_id: String,
    pub parameters: Vec<(String, f64)>,
    pub initial_objective: f64,
    pub objective: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub observations: usize,
    pub anchors: Vec<AnchorResidual>,
}

/// Throughput residuals are relative to the measured value, but never to
/// less than this fraction of the raw rate.
const THROUGHPUT_FLOOR: f64 = 0.01;

fn logit(p: f64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    ((p + PER_EPS) / (1.0 - p + PER_EPS)).ln()
}

fn row_residuals(s: &Scenario, row: &Measurement, out: &mut Vec<f64>) -> Result<()> {
    let pt = s.evaluate(row.distance_m, row.rate_bps)?;
    if let Some(per) = row.per {
        out.push(logit(pt.per) - logit(per));
    }
    if let Some(t) = row.throughput_bps {
        let scale = t.max(THROUGHPUT_FLOOR * row.rate_bps);
        out.push((pt.throughput_bps - t) / scale);
    }
    Ok(())
}

/// Residual vector of `s` against every row of `log`.
pub fn residuals(s: &Scenario, log: &MeasurementLog) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(log.observation_count());
    for row in &log.rows {
        row_residuals(s, row, &mut out)?;
    }
    Ok(out)
}

fn objective(s: &Scenario, log: &MeasurementLog) -> f64 {
    match residuals(s, log) {
        Ok(r) => {
            let v: f64 = r.iter().map(|x| x * x).sum();
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        }
        Err(_) => f64::INFINITY,
    }
}

/// Weight of the monotonicity penalty relative to the squared residuals.
const SHAPE_WEIGHT: f64 = 1000.0;
const SHAPE_STEP_M: f64 = 0.005;
const SHAPE_MAX_POINTS: usize = 64;
/// The penalty grid starts here unless the log goes closer.
const SHAPE_START_M: f64 = 0.01;

/// Sum of the increases of `ln SNR` between neighbouring grid points.
fn shape_penalty(s: &Scenario, grid: &[f64]) -> f64 {
    let mut prev: Option<f64> = None;
    let mut acc = 0.0;
    for &d in grid {
        let Ok(r) = s.response(d, 1.0) else {
            return f64::INFINITY;
        };
        let v = r.snr_linear.ln();
        if let Some(p) = prev {
            acc += (v - p).max(0.0);
        }
        prev = Some(v);
    }
    acc
}

fn shape_grid(log: &MeasurementLog) -> Vec<f64> {
    let near = log
        .rows
        .iter()
        .map(|r| r.distance_m)
        .fold(SHAPE_START_M, f64::min);
    let far = log.rows.iter().map(|r| r.distance_m).fold(0.0, f64::max);
    let stop = if far > near { 1.5 * far } else { near + 0.5 };
    let n = (((stop - near) / SHAPE_STEP_M).ceil() as usize).min(SHAPE_MAX_POINTS);
    let step = (stop - near) / n as f64;
    (0..=n).map(|i| near + step * i as f64).collect()
}

/// Checks that the log can constrain the requested parameters.
pub fn check_determined(log: &MeasurementLog, free: &[FitParam]) -> Result<()> {
    let obs = log.observation_count();
    if obs < free.len() {
        return Err(Error::UnderDetermined(format!(
            "{obs} observations for {} free parameters",
            free.len()
        )));
    }
    let shape = free.iter().filter(|p| p.is_distance_law()).count();
    let distances = log.distinct_distances();
    if distances < shape {
        return Err(Error::UnderDetermined(format!(
            "{distances} distinct distances for {shape} distance-law parameters"
        )));
    }
    Ok(())
}

/// One Hooke–Jeeves run from `x` with the initial step. Returns `false` if
/// the iteration cap was hit.
fn pattern_search(
    x: &mut Vec<f64>,
    fx: &mut f64,
    iterations: &mut usize,
    opts: FitOptions,
    eval: &mut dyn FnMut(&[f64]) -> f64,
) -> bool {
    let mut step = vec![opts.initial_step; x.len()];
    let explore = |base: &[f64], fbase: f64, step: &[f64], eval: &mut dyn FnMut(&[f64]) -> f64| {
        let mut y = base.to_vec();
        let mut fy = fbase;
        for i in 0..y.len() {
            let orig = y[i];
            y[i] = orig + step[i];
            let up = eval(&y);
            if up < fy {
                fy = up;
                continue;
            }
            y[i] = orig - step[i];
            let down = eval(&y);
            if down < fy {
                fy = down;
                continue;
            }
            y[i] = orig;
        }
        (y, fy)
    };

    loop {
        if step.iter().all(|&h| h < opts.rel_tol) || *fx == 0.0 {
            return true;
        }
        if *iterations >= opts.max_iterations {
            return false;
        }
        *iterations += 1;
        let (mut xn, mut fnew) = explore(x, *fx, &step, eval);
        if fnew < *fx {
            // Pattern moves while they keep paying off.
            loop {
                let pattern: Vec<f64> = xn.iter().zip(x.iter()).map(|(a, b)| 2.0 * a - b).collect();
                *x = xn.clone();
                *fx = fnew;
                let fp = eval(&pattern);
                let (xp, fpp) = explore(&pattern, fp, &step, eval);
                if fpp < *fx && *iterations < opts.max_iterations {
                    *iterations += 1;
                    xn = xp;
                    fnew = fpp;
                } else {
                    break;
                }
            }
        } else {
            for h in &mut step {
                *h *= 0.5;
            }
        }
    }
}

/// Fits `free` parameters of `s` to `log`, starting from the values already
/// in `s`. Returns the fitted scenario and a report.
pub fn fit_parameters(
    log: &MeasurementLog,
    s: &Scenario,
    free: &[FitParam],
    opts: FitOptions,
) -> Result<(Scenario, FitReport)> {
    fit_with_companions(log, s, free, opts, &[])
}

/// Like [`fit_parameters`], but the monotonicity penalty also covers
/// `companions`, scenarios that take the same values for `free`.
pub fn fit_with_companions(
    log: &MeasurementLog,
    s: &Scenario,
    free: &[FitParam],
    opts: FitOptions,
    companions: &[Scenario],
) -> Result<(Scenario, FitReport)> {
    if log.rows.is_empty() {
        return Err(Error::Config("measurement log is empty".into()));
    }
    if free.is_empty() {
        return Err(Error::Config("no free parameters given".into()));
    }
    s.validate()?;
    check_determined(log, free)?;

    let grid =
        (opts.monotone && free.iter().any(FitParam::is_distance_law)).then(|| shape_grid(log));
    let mut evaluations = 0usize;
    let mut trial = s.clone();
    let mut others = companions.to_vec();
    let mut eval = |x: &[f64]| -> f64 {
        evaluations += 1;
        for (p, &xi) in free.iter().zip(x) {
            let v = p.decode(xi);
            p.set(&mut trial, v);
            for o in &mut others {
                p.set(o, v);
            }
        }
        if trial.kernel.validate().is_err() || trial.link.at_rate(1.0).is_err() {
            return f64::INFINITY;
        }
        let mut v = objective(&trial, log);
        if let Some(g) = &grid {
            let pen: f64 = std::iter::once(&trial)
                .chain(others.iter())
                .map(|sc| shape_penalty(sc, g))
                .sum();
            v += SHAPE_WEIGHT * pen;
        }
        v
    };

    let mut x: Vec<f64> = free.iter().map(|p| p.encode(p.get(s))).collect();
    let mut fx = eval(&x);
    let initial_objective = fx;
    let mut iterations = 0usize;
    let mut restarts = 0;
    loop {
        let before = fx;
        let done = pattern_search(&mut x, &mut fx, &mut iterations, opts, &mut eval);
        if !done {
            let best = free
                .iter()
                .zip(&x)
                .map(|(p, &xi)| (p.name(), p.decode(xi)))
                .collect();
            return Err(Error::NonConvergence {
                iterations,
                objective: fx,
                best,
            });
        }
        restarts += 1;
        if restarts > opts.max_restarts || fx == 0.0 || before - fx <= 1e-9 * before {
            break;
        }
    }

    let mut fitted = s.clone();
    for (p, &xi) in free.iter().zip(&x) {
        p.set(&mut fitted, p.decode(xi));
    }
    let anchors = log
        .rows
        .iter()
        .map(|r| {
            let pt = fitted.evaluate(r.distance_m, r.rate_bps)?;
            Ok(AnchorResidual {
                config: r.config.clone(),
                test: r.test.clone(),
                rate_bps: r.rate_bps,
                distance_m: r.distance_m,
                measured_per: r.per,
                model_per: pt.per,
                measured_throughput_bps: r.throughput_bps,
                model_throughput_bps: pt.throughput_bps,
            })
        })
        .collect::<Result<_>>()?;
    let report = FitReport {
        scenario_id: s.id.clone(),
        parameters: free.iter().map(|p| (p.name(), p.get(&fitted))).collect(),
        initial_objective,
        objective: fx,
        residual_norm: fx.sqrt(),
        iterations,
        evaluations,
        observations: log.observation_count(),
        anchors,
    };
    Ok((fitted, report))
}

/// Model-generated log at the given grid, for round-trip checks.
pub fn synthetic_log(s: &Scenario, distances: &[f64], rates: &[f64]) -> Result<MeasurementLog> {
    let mut rows = Vec::new();
    for &rate in rates {
        for &d in distances {
            let pt = s.evaluate(d, rate)?;
            rows.push(Measurement {
                config: s.config.clone().unwrap_or_default(),
                test: s.test.clone().unwrap_or_default(),
                rate_bps: rate,
                distance_m: d,
                per: Some(pt.per),
                throughput_bps: Some(pt.throughput_bps),
                run: 0,
            });
        }
    }
    Ok(MeasurementLog { rows })
}

/// One step of the default calibration.
#[derive(Debug, Clone, Copy)]
struct Stage {
    scenario: &'static str,
    config: &'static str,
    test: &'static str,
    free: &'static [FitParam],
}

const STAGES: [Stage; 5] = [
    Stage {
        scenario: "cfg1_test1",
        config: "cfg1",
        test: "1",
        free: &[FitParam::C0, FitParam::DScale, FitParam::P],
    },
    Stage {
        scenario: "cfg3_test1",
        config: "cfg3",
        test: "1",
        free: &[FitParam::Gain(0)],
    },
    Stage {
        scenario: "cfg3_test2",
        config: "cfg3",
        test: "2",
        free: &[FitParam::Gain(1)],
    },
    Stage {
        scenario: "tape",
        config: "tape",
        test: "1",
        free: &[FitParam::N0, FitParam::Eta, FitParam::FloorPer],
    },
    Stage {
        scenario: "body",
        config: "body",
        test: "1",
        free: &[FitParam::C0, FitParam::DScale, FitParam::Eta],
    },
];

/// Every other built-in scenario that uses the shared air kernel.
fn air_scenarios(p: &Params) -> Result<Vec<Scenario>> {
    builtin_ids()
        .iter()
        .filter(|id| !matches!(id.as_str(), "cfg1_test1" | "tape" | "body"))
        .map(|id| p.scenario(id))
        .collect()
}

/// Runs the staged default calibration against an anchor log and returns
/// the updated parameter set.
///
/// Stages run in order, each starting from the output of the previous one:
/// the air kernel from configuration 1 test 1, kept monotone in distance
/// for every scenario sharing it; the two square-electrode
/// gains; the tape link profile; the body kernel and efficiency.
pub fn calibrate(
    params: &Params,
    log: &MeasurementLog,
    opts: FitOptions,
) -> Result<(Params, Vec<FitReport>)> {
    let mut p = params.clone();
    let mut reports = Vec::new();
    for stage in STAGES {
        let rows = log.select(stage.config, stage.test);
        if rows.rows.is_empty() {
            return Err(Error::Config(format!(
                "anchor log has no rows for {} test {}",
                stage.config, stage.test
            )));
        }
        let s = p.scenario(stage.scenario)?;
        let companions = if stage.scenario == "cfg1_test1" {
            air_scenarios(&p)?
        } else {
            Vec::new()
        };
        let (fitted, report) = fit_with_companions(&rows, &s, stage.free, opts, &companions)?;
        match stage.scenario {
            "cfg1_test1" => {
                p.air.kernel.c0 = fitted.kernel.c0;
                p.air.kernel.d_scale = fitted.kernel.d_scale;
                p.air.kernel.p = fitted.kernel.p;
            }
            "cfg3_test1" | "cfg3_test2" => {
                if let Some(g) = p.gains.get_mut("cfg3") {
                    *g = fitted.kernel.orientation_gain;
                }
            }
            "tape" => p.tape.link = fitted.link,
            "body" => {
                p.body.kernel = fitted.kernel;
                p.body.link = fitted.link;
            }
            _ => unreachable!(),
        }
        reports.push(report);
    }
    Ok((p, reports))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_names_round_trip() {
        for p in [
            FitParam::C0,
            FitParam::DScale,
            FitParam::P,
            FitParam::Gain(3),
            FitParam::N0,
            FitParam::Eta,
            FitParam::FloorPer,
        ] {
            assert_eq!(p.name().parse::<FitParam>().unwrap(), p);
        }
        assert!("gain8".parse::<FitParam>().is_err());
        assert!("q".parse::<FitParam>().is_err());
        assert_eq!(
            parse_free("c0, p,c0").unwrap(),
            vec![FitParam::C0, FitParam::P]
        );
    }

    #[test]
    fn transforms_invert() {
        for (p, v) in [
            (FitParam::C0, 3e-12),
            (FitParam::Eta, 0.62),
            (FitParam::FloorPer, 0.05),
        ] {
            let back = p.decode(p.encode(v));
            assert!((back - v).abs() < 1e-12 * v.max(1.0), "{p}: {back}");
        }
    }

    #[test]
    fn one_distance_is_under_determined() {
        let s = Params::embedded().scenario("cfg1_test1").unwrap();
        let log = synthetic_log(&s, &[0.05], &[1e6, 3.33e6, 5e6]).unwrap();
        let free = [FitParam::C0, FitParam::DScale, FitParam::P];
        assert!(matches!(
            fit_parameters(&log, &s, &free, FitOptions::default()),
            Err(Error::UnderDetermined(_))
        ));
    }

    #[test]
    fn iteration_cap_reports_best() {
        let s = Params::embedded().scenario("cfg1_test1").unwrap();
        let log = synthetic_log(&s, &[0.04, 0.08, 0.12], &[1e6]).unwrap();
        let mut start = s.clone();
        start.kernel.c0 *= 1.7;
        let opts = FitOptions {
            max_iterations: 2,
            ..Default::default()
        };
        match fit_parameters(&log, &start, &[FitParam::C0], opts) {
            Err(Error::NonConvergence {
                iterations, best, ..
            }) => {
                assert_eq!(iterations, 2);
                assert_eq!(best[0].0, "c0");
            }
            other => panic!("{other:?}"),
        }
    }
}
