//! Small dense modified-nodal-analysis solver over complex admittances.
//!
//! Nodes are named; the reference node is implicit. Branches are two-terminal
//! admittances between two nodes or between a node and the reference. A
//! single voltage source with a series impedance may drive one node against
//! the reference; its branch current becomes an extra unknown so that a zero
//! source impedance is still well posed.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative pivot magnitude below which the system is declared singular.
const PIVOT_RTOL: f64 = 1e-13;

#[derive(Debug, Clone)]
struct Source {
    node: usize,
    volts: Complex64,
    series: Complex64,
}

#[derive(Debug, Clone, Default)]
pub struct NodalCircuit {
    names: Vec<String>,
    admittance: Vec<Complex64>,
    source: Option<Source>,
}

impl NodalCircuit {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a node and returns its index.
    pub fn add_node(&mut self, name: impl Into<String>) -> usize {
        let n = self.names.len();
        let mut grown = vec![Complex64::new(0.0, 0.0); (n + 1) * (n + 1)];
        for r in 0..n {
            for c in 0..n {
                grown[r * (n + 1) + c] = self.admittance[r * n + c];
            }
        }
        self.admittance = grown;
        self.names.push(name.into());
        n
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    fn at(&mut self, r: usize, c: usize) -> &mut Complex64 {
        let n = self.names.len();
        &mut self.admittance[r * n + c]
    }

    /// Stamps admittance `y` between `a` and `b` (`None` is the reference).
    pub fn add_branch(&mut self, a: Option<usize>, b: Option<usize>, y: Complex64) {
        if y == Complex64::new(0.0, 0.0) {
            return;
        }
        match (a, b) {
            (Some(i), Some(j)) if i == j => {}
            (Some(i), Some(j)) => {
                *self.at(i, i) += y;
                *self.at(j, j) += y;
                *self.at(i, j) -= y;
                *self.at(j, i) -= y;
            }
            (Some(i), None) | (None, Some(i)) => *self.at(i, i) += y,
            (None, None) => {}
        }
    }

    /// Drives `node` with `volts` through `series` impedance against the
    /// reference. Replaces any previous source.
    pub fn set_source(&mut self, node: usize, volts: Complex64, series: Complex64) {
        self.source = Some(Source {
            node,
            volts,
            series,
        });
    }

    /// Solves for all node voltages, in node order.
    pub fn solve(&self) -> Result<Vec<Complex64>> {
        let n = self.names.len();
        let dim = n + usize::from(self.source.is_some());
        let zero = Complex64::new(0.0, 0.0);
        let mut a = vec![zero; dim * dim];
        let mut rhs = vec![zero; dim];
        for r in 0..n {
            for c in 0..n {
                a[r * dim + c] = self.admittance[r * n + c];
            }
        }
        if let Some(src) = &self.source {
            // KCL at the driven node gains the source current (leaving the
            // node is positive); the extra row is V_node + Z_s * I = V_s.
            a[src.node * dim + n] = Complex64::new(-1.0, 0.0);
            a[n * dim + src.node] = Complex64::new(1.0, 0.0);
            a[n * dim + n] = src.series;
            rhs[n] = src.volts;
        }

        let scale = a.iter().map(|v| v.norm()).fold(0.0_f64, f64::max);
        let label = |col: usize| -> String {
            if col < n {
                self.names[col].clone()
            } else {
                "source".to_string()
            }
        };
        if scale == 0.0 {
            return Err(Error::Singular { node: label(0) });
        }

        // Gaussian elimination with partial pivoting; `perm` tracks which
        // original unknown each column still refers to (columns never move).
        for k in 0..dim {
            let (p, pmag) =
                (k..dim)
                    .map(|r| (r, a[r * dim + k].norm()))
                    .fold(
                        (k, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if pmag <= PIVOT_RTOL * scale {
                return Err(Error::Singular { node: label(k) });
            }
            if p != k {
                for c in 0..dim {
                    a.swap(k * dim + c, p * dim + c);
                }
                rhs.swap(k, p);
            }
            let pivot = a[k * dim + k];
            for r in (k + 1)..dim {
                let f = a[r * dim + k] / pivot;
                if f == zero {
                    continue;
                }
                for c in k..dim {
                    let v = a[k * dim + c];
                    a[r * dim + c] -= f * v;
                }
                let v = rhs[k];
                rhs[r] -= f * v;
            }
        }
        let mut x = vec![zero; dim];
        for k in (0..dim).rev() {
            let mut acc = rhs[k];
            for c in (k + 1)..dim {
                acc -= a[k * dim + c] * x[c];
            }
            x[k] = acc / a[k * dim + k];
        }
        x.truncate(n);
        Ok(x)
    }
}
