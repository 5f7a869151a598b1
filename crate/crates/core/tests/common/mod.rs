//! Reference implementations used only by the tests.

#![allow(dead_code)]

use nfe_core::capnet::{CapacitiveNetwork, FourNode, PortTermination};
use num_complex::Complex64;
use rand::Rng;

/// Dense complex solve by Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Vec<Complex64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &k| a[i][col].norm().total_cmp(&a[k][col].norm()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        assert!(d.norm() > 0.0, "singular test system");
        for r in (col + 1)..n {
            let f = a[r][col] / d;
            if f.norm() == 0.0 {
                continue;
            }
            let pivot_row = a[col].clone();
            for (x, v) in a[r].iter_mut().zip(&pivot_row).skip(col) {
                *x -= f * v;
            }
            let v = b[col];
            b[r] -= f * v;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for r in (0..n).rev() {
        let mut acc = b[r];
        for c in (r + 1)..n {
            acc -= a[r][c] * x[c];
        }
        x[r] = acc / a[r][r];
    }
    x
}

/// Differential-mode nodal analysis of a network, built edge by edge.
///
/// Returns `V_Rx / V_Tx`.
pub fn nodal_transfer(net: &CapacitiveNetwork, term: &PortTermination) -> Complex64 {
    let names = net.nodes();
    // 0 = transmitter port, 1 = receiver port, 2.. = other nodes.
    let mut slot = Vec::new();
    let mut extra = 2;
    for name in names {
        slot.push(match name.as_str() {
            "TxP" => (0, 1.0),
            "TxN" => (0, -1.0),
            "RxP" => (1, 1.0),
            "RxN" => (1, -1.0),
            _ => {
                extra += 1;
                (extra - 1, 1.0)
            }
        });
    }
    let n = extra;
    let s = term.s();
    let zero = Complex64::new(0.0, 0.0);
    let mut y = vec![vec![zero; n]; n];
    let mut rhs = vec![zero; n];
    for (i, a) in names.iter().enumerate() {
        let (pi, si) = slot[i];
        if pi != 0 {
            y[pi][pi] += s * net.self_capacitance(a).unwrap();
        }
        for (k, b) in names.iter().enumerate().skip(i + 1) {
            let (pk, sk) = slot[k];
            let cap = net.mutual(a, b).unwrap();
            let g = net.conductance(a, b).unwrap();
            if pi == pk {
                // Across the receiver port: capacitance enters the
                // differential load with the port polarity, a resistor
                // loads it directly.
                if pi != 0 {
                    y[pi][pi] += 2.0 * s * cap * (si * sk) + g;
                }
                continue;
            }
            let adm = (s * cap + g) * (si * sk);
            y[pi][pi] += adm;
            y[pk][pk] += adm;
            y[pi][pk] -= adm;
            y[pk][pi] -= adm;
        }
    }
    y[1][1] += term.z_rx.inv();
    let g = term.z_tx.inv();
    y[0][0] += g;
    rhs[0] = g;
    let v = solve_dense(y, rhs);
    v[1]
}

/// `Q(x)` by composite Simpson integration of the normal density.
pub fn q_quadrature(x: f64) -> f64 {
    let hi = x + 40.0;
    let n = 200_000;
    let h = (hi - x) / n as f64;
    let f = |t: f64| (-0.5 * t * t).exp();
    let mut acc = f(x) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(x + i as f64 * h);
    }
    acc * h / 3.0 / (2.0 * std::f64::consts::PI).sqrt()
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// A random four-plate network with positive effective coupling.
pub fn random_four_node<R: Rng>(rng: &mut R) -> FourNode {
    let txp_rxn = log_uniform(rng, 1e-16, 1e-10);
    let txn_rxp = log_uniform(rng, 1e-16, 1e-10);
    let extra = log_uniform(rng, 1e-16, 1e-10);
    let split = rng.random_range(0.0..1.0);
    let rxp_rxn = log_uniform(rng, 1e-15, 1e-10);
    FourNode {
        txp_rxp: txp_rxn + split * extra,
        txn_rxn: txn_rxp + (1.0 - split) * extra,
        txp_rxn,
        txn_rxp,
        txp_txn: log_uniform(rng, 1e-15, 1e-10),
        rxp_rxn,
        self_txp: log_uniform(rng, 1e-15, 1e-10),
        self_txn: log_uniform(rng, 1e-15, 1e-10),
        self_rxp: rxp_rxn + log_uniform(rng, 1e-15, 1e-10),
        self_rxn: rxp_rxn + log_uniform(rng, 1e-15, 1e-10),
    }
}

/// Random terminations with non-negative real parts.
pub fn random_termination<R: Rng>(rng: &mut R) -> PortTermination {
    let z_tx = Complex64::new(log_uniform(rng, 1.0, 1e4), rng.random_range(-1e3..1e3));
    let z_rx = Complex64::new(log_uniform(rng, 1e2, 1e9), rng.random_range(-1e5..1e5));
    let f = log_uniform(rng, 1e3, 1e8);
    PortTermination::new(
        rng.random_range(0.1..5.0),
        z_tx,
        z_rx,
        2.0 * std::f64::consts::PI * f,
    )
    .unwrap()
}

pub fn rel_err(a: Complex64, b: Complex64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).norm() / b.norm()
}
