//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use nfe_core::capnet::{self, CapacitiveNetwork, FourNode, PortTermination};
use nfe_core::fieldregion::{fraunhofer_distance, fresnel_boundary, RegionQuery};
use nfe_core::harness::compare::{compare_technologies, embedded_records};
use nfe_core::harness::params::builtin_ids;
use nfe_core::harness::sweep::{self, distance_grid, SweepOptions};
use nfe_core::harness::{anchors, fit, Anchors, FitOptions, FitParam, Params, Scenario};
use nfe_core::linklayer::{self, STANDARD_RATES};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ORACLE_CASES: usize = 1000;
const ORACLE_REL_TOL: f64 = 1e-9;
const ORACLE_TIME: Duration = Duration::from_secs(10);
const LOW_FREQ_TOL: f64 = 0.01;
const RANGE_REL_TOL: f64 = 0.20;
const FIT_TIME: Duration = Duration::from_secs(60);
const TAPE_PER_ABS_TOL: f64 = 0.05;
const THROUGHPUT_REL_TOL: f64 = 0.15;
const MC_PACKETS: u64 = 10_000;
const MC_SIGMAS: f64 = 3.0;
const ROUND_TRIP_REL_TOL: f64 = 0.01;
const SEED: u64 = 0x5EED_2024;

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, bad: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(bad)
    }
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let t = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..ORACLE_CASES {
        let net = CapacitiveNetwork::four_node(common::random_four_node(&mut rng)).unwrap();
        let term = common::random_termination(&mut rng);
        let closed = capnet::transfer_function(&net, &term).map_err(|e| e.to_string())?;
        let oracle = common::nodal_transfer(&net, &term);
        let solver = capnet::nodal_solve(&net, &term).map_err(|e| e.to_string())? / term.v_tx;
        worst = worst
            .max(common::rel_err(closed, oracle))
            .max(common::rel_err(solver, oracle));
    }
    let el = t.elapsed();
    check(
        worst < ORACLE_REL_TOL && el < ORACLE_TIME,
        format!("{ORACLE_CASES} networks, worst relative error {worst:.2e}, {el:.2?}"),
        format!("worst relative error {worst:.2e} (limit {ORACLE_REL_TOL:.0e}), {el:.2?}"),
    )
}

fn low_frequency_limit() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 1);
    let mut worst = 0.0f64;
    let mut nets: Vec<CapacitiveNetwork> = (0..200)
        .map(|_| CapacitiveNetwork::four_node(common::random_four_node(&mut rng)).unwrap())
        .collect();
    let p = Params::embedded();
    for id in ["cfg1_test1", "cfg2_test5", "cfg3_test2", "dielectric"] {
        nets.push(p.scenario(id).unwrap().network(0.05).unwrap());
    }
    for net in &nets {
        let c_eff = capnet::effective_coupling(net).unwrap();
        let term = PortTermination::resistive(1.0, 50.0, 1e6, 1e-3).unwrap();
        let h = capnet::transfer_function(net, &term).unwrap();
        let ratio = h / (Complex64::new(0.0, term.omega) * c_eff * term.z_rx);
        worst = worst.max((ratio - 1.0).norm());
    }
    check(
        worst < LOW_FREQ_TOL,
        format!(
            "{} networks at 1 mHz, worst |ratio - 1| = {worst:.2e}",
            nets.len()
        ),
        format!("worst |ratio - 1| = {worst:.2e}"),
    )
}

fn symmetric_cancellation() -> Outcome {
    for c in [1e-15, 3.3e-13, 7.77e-12, 1e-9] {
        let net = CapacitiveNetwork::four_node(FourNode {
            txp_rxp: c,
            txn_rxn: c,
            txp_rxn: c,
            txn_rxp: c,
            self_rxp: 1e-12,
            self_rxn: 1e-12,
            ..Default::default()
        })
        .unwrap();
        let c_eff = capnet::effective_coupling(&net).unwrap();
        let term = PortTermination::resistive(1.8, 50.0, 1e6, 5e6).unwrap();
        let r = capnet::evaluate(&net, &term, 1e-15, 1e6).unwrap();
        if c_eff != 0.0 || r.h != Complex64::new(0.0, 0.0) || r.z_c.is_some() {
            return Err(format!(
                "all-equal {c:e} F gives C_eff {c_eff:e}, H {}",
                r.h
            ));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 3);
    for _ in 0..1000 {
        let mut c = common::random_four_node(&mut rng);
        c.txn_rxn = c.txp_rxp;
        c.txn_rxp = c.txp_rxn;
        let net = CapacitiveNetwork::four_node(c).unwrap();
        let got = capnet::effective_coupling(&net).unwrap();
        let want = 2.0 * (c.txp_rxp - c.txp_rxn);
        if (got - want).abs() > 4.0 * f64::EPSILON * c.txp_rxp {
            return Err(format!("symmetric pair: {got:e} vs {want:e}"));
        }
    }
    Ok("all-equal couplings give exactly 0 F and H = 0; symmetric pairs give 2(C_d - C_x)".into())
}

fn region_math() -> Outcome {
    for lambda in [1.0, 0.5, 2.0, 0.25, 4.0, 60.0, 0.005] {
        let q = RegionQuery::new(lambda, lambda, None).unwrap();
        let rf = fraunhofer_distance(&q);
        if rf != 2.0 * lambda {
            return Err(format!("D = λ = {lambda}: R_F = {rf}"));
        }
    }
    let q = RegionQuery::new(1.0, 1.0, None).unwrap();
    let fr = fresnel_boundary(&q);
    check(
        fr == 0.62,
        "D = λ gives R_F = 2λ exactly; D = λ = 1 gives Fresnel 0.62 m exactly".into(),
        format!("Fresnel boundary {fr}"),
    )
}

fn range_cm(s: &Scenario, grid: &[f64]) -> Vec<f64> {
    let r = sweep::sweep_distance(
        s,
        grid,
        &STANDARD_RATES,
        "acceptance",
        SweepOptions::default(),
    )
    .unwrap();
    r.rates
        .iter()
        .map(|x| (x.range_m * 100.0).round())
        .collect()
}

fn within(got: &[f64], want: &[f64], rel: f64) -> bool {
    got.len() == want.len()
        && got
            .iter()
            .zip(want)
            .all(|(g, w)| (g - w).abs() <= rel * w.abs() + 1e-9)
}

/// The shipped parameter file with every calibrated value reset to a
/// generic starting point.
fn generic_start() -> Params {
    let mut p = Params::embedded();
    p.air.kernel.c0 = 1e-11;
    p.air.kernel.d_scale = 0.1;
    p.air.kernel.p = 5.0;
    for g in p.gains.values_mut() {
        *g = [1.0; 8];
    }
    p.tape.link.n0 = 5e-15;
    p.tape.link.proto_efficiency = 0.6;
    p.tape.link.floor_per = 0.05;
    p.body.kernel.c0 = 5e-12;
    p.body.kernel.d_scale = 0.3;
    p.body.link.n0 = 5e-15;
    p.body.link.proto_efficiency = 0.6;
    p
}

struct Calibrated {
    params: Params,
    elapsed: Duration,
}

fn calibrated() -> Result<Calibrated, String> {
    let t = Instant::now();
    let (params, _) = fit::calibrate(
        &generic_start(),
        &anchors::calibration_log(),
        FitOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    Ok(Calibrated {
        params,
        elapsed: t.elapsed(),
    })
}

fn air_grid() -> Vec<f64> {
    distance_grid(0.01, 0.40, 0.01).unwrap()
}

fn ranges_config1(cal: &Calibrated) -> Outcome {
    let a = Anchors::embedded();
    let want = &a.range("cfg1_test1").unwrap().range_cm;
    let t = Instant::now();
    let got = range_cm(&cal.params.scenario("cfg1_test1").unwrap(), &air_grid());
    let el = cal.elapsed + t.elapsed();
    check(
        within(&got, want, RANGE_REL_TOL) && el < FIT_TIME,
        format!("ranges {got:?} cm vs {want:?}, fit + verify {el:.2?}"),
        format!("ranges {got:?} cm vs {want:?}, fit + verify {el:.2?}"),
    )
}

fn ranges_config3(cal: &Calibrated) -> Outcome {
    let a = Anchors::embedded();
    let mut msg = Vec::new();
    let mut ok = true;
    for id in ["cfg3_test1", "cfg3_test2"] {
        let want = &a.range(id).unwrap().range_cm;
        let got = range_cm(&cal.params.scenario(id).unwrap(), &air_grid());
        ok &= within(&got, want, RANGE_REL_TOL);
        msg.push(format!("{id} {got:?} vs {want:?}"));
    }
    check(ok, msg.join("; "), msg.join("; "))
}

fn conductor_extension(cal: &Calibrated) -> Outcome {
    let a = Anchors::embedded();
    let anchor = a.fixed("tape").unwrap();
    let s = cal.params.scenario("tape").unwrap();
    let stats =
        sweep::simulate_conductor_extension(&s, &anchor.rates_bps).map_err(|e| e.to_string())?;
    let per: Vec<f64> = stats.iter().map(|x| x.per).collect();
    let thr: Vec<f64> = stats.iter().map(|x| x.throughput_bps).collect();
    let want_per = anchor.per.as_ref().unwrap();
    let want_thr = anchor.throughput_bps.as_ref().unwrap();
    let per_ok = per
        .iter()
        .zip(want_per)
        .all(|(g, w)| (g - w).abs() <= TAPE_PER_ABS_TOL);
    let msg = format!(
        "PER {:.1?} % vs {:.1?} %, throughput {:.2?} Mbps vs {:.2?} Mbps",
        per.iter().map(|x| x * 100.0).collect::<Vec<_>>(),
        want_per.iter().map(|x| x * 100.0).collect::<Vec<_>>(),
        thr.iter().map(|x| x / 1e6).collect::<Vec<_>>(),
        want_thr.iter().map(|x| x / 1e6).collect::<Vec<_>>(),
    );
    check(
        per_ok && within(&thr, want_thr, THROUGHPUT_REL_TOL),
        msg.clone(),
        msg,
    )
}

fn body_assisted(cal: &Calibrated) -> Outcome {
    let a = Anchors::embedded();
    let s = cal.params.scenario("body").unwrap();
    let contact = a.fixed("body").unwrap();
    let want_thr = contact.throughput_bps.as_ref().unwrap();
    let thr: Vec<f64> = contact
        .rates_bps
        .iter()
        .map(|&r| s.evaluate(contact.distance_m, r).unwrap().throughput_bps)
        .collect();
    let cov = a.coverage("body").unwrap();
    let grid = distance_grid(0.0, 2.0, 0.01).unwrap();
    let r = sweep::sweep_distance(
        &s,
        &grid,
        &cov.rates_bps,
        "acceptance",
        SweepOptions::default(),
    )
    .unwrap();
    let ranges: Vec<f64> = r.rates.iter().map(|x| x.range_m).collect();
    let cov_ok = ranges.iter().zip(&cov.min_range_m).all(|(g, w)| g >= w);
    let msg = format!(
        "contact throughput {:.2?} Mbps vs {:.2?}; range {:?} m vs at least {:?}",
        thr.iter().map(|x| x / 1e6).collect::<Vec<_>>(),
        want_thr.iter().map(|x| x / 1e6).collect::<Vec<_>>(),
        ranges,
        cov.min_range_m
    );
    check(
        within(&thr, want_thr, THROUGHPUT_REL_TOL) && cov_ok,
        msg.clone(),
        msg,
    )
}

fn monotonicity(cal: &Calibrated) -> Outcome {
    let mut count = 0;
    for id in builtin_ids() {
        let s = cal.params.scenario(&id).unwrap();
        let grid = match id.as_str() {
            "tape" => distance_grid(0.0, 5.0, 0.05).unwrap(),
            "body" => distance_grid(0.0, 2.0, 0.01).unwrap(),
            _ => air_grid(),
        };
        let r = sweep::sweep_distance(
            &s,
            &grid,
            &STANDARD_RATES,
            "acceptance",
            SweepOptions::default(),
        )
        .unwrap();
        for rate in &r.rates {
            for w in rate.samples.windows(2) {
                if w[1].per < w[0].per || w[1].throughput_bps > w[0].throughput_bps {
                    return Err(format!(
                        "{id} at {} bps between {} m and {} m",
                        rate.rate_bps, w[0].distance_m, w[1].distance_m
                    ));
                }
            }
        }
        let ranges: Vec<f64> = r.rates.iter().map(|x| x.range_m).collect();
        if !(ranges[0] >= ranges[1] && ranges[1] >= ranges[2]) {
            return Err(format!("{id} range ordering {ranges:?}"));
        }
        count += 1;
    }
    Ok(format!(
        "{count} scenarios monotone in distance with ordered ranges"
    ))
}

fn monte_carlo(cal: &Calibrated) -> Outcome {
    let s = cal.params.scenario("cfg1_test1").unwrap();
    let mut checked = 0;
    for (i, d) in [0.02, 0.06, 0.09, 0.10, 0.13, 0.14].into_iter().enumerate() {
        for (k, &rate) in STANDARD_RATES.iter().enumerate() {
            let cfg = s.link.at_rate(rate).unwrap();
            let model = s.evaluate(d, rate).unwrap().per;
            let seed = linklayer::derive_seed(SEED, i as u64, k as u64);
            let a = linklayer::monte_carlo_packets(model, MC_PACKETS, seed, &cfg).unwrap();
            let b = linklayer::monte_carlo_packets(model, MC_PACKETS, seed, &cfg).unwrap();
            if a.per.to_bits() != b.per.to_bits()
                || a.throughput_bps.to_bits() != b.throughput_bps.to_bits()
            {
                return Err(format!("seed {seed} not reproducible"));
            }
            let sigma = (model * (1.0 - model) / MC_PACKETS as f64).sqrt();
            if (a.per - model).abs() > MC_SIGMAS * sigma {
                return Err(format!(
                    "{d} m, {rate} bps: empirical {} vs model {model}",
                    a.per
                ));
            }
            checked += 1;
        }
    }
    let opts = SweepOptions {
        seed: SEED,
        packets_per_point: Some(MC_PACKETS),
    };
    let grid = distance_grid(0.01, 0.20, 0.01).unwrap();
    let a = sweep::sweep_distance(&s, &grid, &STANDARD_RATES, "v", opts).unwrap();
    let b = sweep::sweep_distance(&s, &grid, &STANDARD_RATES, "v", opts).unwrap();
    check(
        a.to_json().unwrap() == b.to_json().unwrap(),
        format!("{checked} points within 3σ; repeated seeded sweeps identical"),
        "seeded sweeps differ".into(),
    )
}

/// Scenario, free parameters, distance grid, start multipliers.
type FitCase<'a> = (&'a str, &'a [FitParam], &'a [f64], &'a [f64]);

fn fit_round_trip() -> Outcome {
    let p = Params::embedded();
    let mut worst = 0.0f64;
    let cases: [FitCase; 4] = [
        (
            "cfg1_test1",
            &[FitParam::C0, FitParam::DScale, FitParam::P],
            &[0.04, 0.07, 0.10, 0.13, 0.16],
            &[1.4, 0.8, 1.15],
        ),
        (
            "cfg3_test2",
            &[FitParam::Gain(1)],
            &[0.06, 0.10, 0.14, 0.18],
            &[1.3],
        ),
        (
            "tape",
            &[FitParam::N0, FitParam::Eta, FitParam::FloorPer],
            &[3.5],
            &[1.5, 0.9, 0.6],
        ),
        (
            "body",
            &[FitParam::C0, FitParam::DScale, FitParam::Eta],
            &[0.0, 0.3, 0.6, 0.9, 1.2],
            &[2.0, 0.7, 0.9],
        ),
    ];
    for (id, free, dist, scale) in cases {
        let truth = p.scenario(id).unwrap();
        let log = fit::synthetic_log(&truth, dist, &STANDARD_RATES).unwrap();
        let mut start = truth.clone();
        for (f, k) in free.iter().zip(scale) {
            f.set(&mut start, f.get(&truth) * k);
        }
        let (got, _) = fit::fit_parameters(&log, &start, free, FitOptions::default())
            .map_err(|e| format!("{id}: {e}"))?;
        for f in free {
            let rel = (f.get(&got) / f.get(&truth) - 1.0).abs();
            worst = worst.max(rel);
        }
    }
    check(
        worst < ROUND_TRIP_REL_TOL,
        format!("worst parameter error {:.2e} %", worst * 100.0),
        format!("worst parameter error {:.3} %", worst * 100.0),
    )
}

fn comparison_table() -> Outcome {
    let recs = embedded_records();
    let find = |n: &str| recs.iter().find(|r| r.name == n).unwrap();
    let nfe = find("NFE");
    let mm = find("mm-wave");
    let nfc = find("NFC");
    let nfmi = find("NFMI");
    let exact = nfe.tx_power_mw == Some(0.4)
        && nfe.rx_power_mw == Some(0.6)
        && nfe.range_cm == (5.0, 30.0)
        && mm.tx_power_mw == Some(55.0)
        && mm.rx_power_mw == Some(30.0)
        && mm.range_cm == (1.0, 1.0)
        && mm.data_rate_mbps == 3125.0
        && nfc.range_cm == (4.0, 4.0)
        && nfc.data_rate_mbps == 0.4
        && nfmi.range_cm == (100.0, 300.0)
        && nfmi.data_rate_mbps == 0.6;
    let rows = compare_technologies(&recs).unwrap();
    let order: Vec<&str> = rows.iter().map(|r| r.name.as_str()).collect();
    let ratio = nfc.combined_power_mw() / nfe.combined_power_mw();
    check(
        exact && order[0] == "NFE" && (ratio - 24.0).abs() < 1e-9,
        format!("records exact; order {order:?}; NFC/NFE power {ratio:.1}x"),
        format!("exact = {exact}; order {order:?}"),
    )
}

fn main() {
    let cal = calibrated();
    let with_cal = |f: fn(&Calibrated) -> Outcome| -> Outcome {
        match &cal {
            Ok(c) => f(c),
            Err(e) => Err(format!("calibration failed: {e}")),
        }
    };
    let results: Vec<(&str, Outcome)> = vec![
        ("oracle equivalence", oracle_equivalence()),
        ("low-frequency limit", low_frequency_limit()),
        ("symmetric cancellation", symmetric_cancellation()),
        ("region math", region_math()),
        (
            "calibrated ranges, configuration 1",
            with_cal(ranges_config1),
        ),
        (
            "calibrated ranges, configuration 3",
            with_cal(ranges_config3),
        ),
        ("conductor extension", with_cal(conductor_extension)),
        ("body-assisted anchors", with_cal(body_assisted)),
        ("monotonicity", with_cal(monotonicity)),
        ("monte carlo", with_cal(monte_carlo)),
        ("fit round-trip", fit_round_trip()),
        ("comparison table", comparison_table()),
    ];
    let mut failed = 0;
    for (i, (name, r)) in results.iter().enumerate() {
        match r {
            Ok(m) => println!("[{:>2}] PASS {name}: {m}", i + 1),
            Err(m) => {
                failed += 1;
                println!("[{:>2}] FAIL {name}: {m}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
