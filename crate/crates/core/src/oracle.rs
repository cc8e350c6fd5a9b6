//! Exact reference computations on small rings by full state enumeration.
//!
//! Configurations are bitmasks (bit `k` = cell index `k`), so `N <= 16`.
//! Rates are recomputed here from scratch rather than shared with the
//! steppers, so these results can serve as independent checks.

use crate::error::{Error, Result};
use crate::lattice::{LatticeState, ModelParams};

const MAX_CELLS: usize = 16;

/// Probability vector over all `2^N` configurations.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    n_cells: usize,
    probs: Vec<f64>,
}

impl Distribution {
    pub fn point(state: &LatticeState) -> Result<Self> {
        let n = state.len();
        if n > MAX_CELLS {
            return Err(Error::InvalidParams(format!(
                "enumeration limited to N <= {MAX_CELLS}, got {n}"
            )));
        }
        let mut probs = vec![0.0; 1 << n];
        probs[to_mask(state.cells())] = 1.0;
        Ok(Self { n_cells: n, probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `E[sigma_k]` for every cell.
    pub fn mean_density(&self) -> Vec<f64> {
        (0..self.n_cells)
            .map(|k| {
                self.probs
                    .iter()
                    .enumerate()
                    .filter(|(mask, _)| mask >> k & 1 == 1)
                    .map(|(_, p)| p)
                    .sum()
            })
            .collect()
    }

    /// Exact `E[c0 e^{-beta J_{k-1}} s_{k-1}(1-s_k) - c0 e^{-beta J_k} s_k(1-s_{k+1})]`.
    pub fn expected_rhs(&self, params: &ModelParams) -> Vec<f64> {
        let n = self.n_cells;
        let mut out = vec![0.0; n];
        for (mask, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (k, slot) in out.iter_mut().enumerate() {
                let prev = (k + n - 1) % n;
                *slot += p * (hop_rate(mask, prev, n, params) - hop_rate(mask, k, n, params));
            }
        }
        out
    }
}

fn to_mask(cells: &[u8]) -> usize {
    cells.iter().enumerate().fold(0, |m, (k, &c)| m | ((c as usize) << k))
}

fn bit(mask: usize, k: usize, n: usize) -> usize {
    mask >> (k % n) & 1
}

/// Rate of the hop out of cell `k` (zero when the hop is blocked or no car is there).
fn hop_rate(mask: usize, k: usize, n: usize, params: &ModelParams) -> f64 {
    if bit(mask, k, n) == 0 || bit(mask, k + 1, n) == 1 {
        return 0.0;
    }
    let m = params.look_ahead();
    if m == 0 {
        return params.c0();
    }
    let occupied: usize = (1..=m).map(|i| bit(mask, k + i + 1, n)).sum();
    params.c0() * (-params.beta() * occupied as f64 / m as f64).exp()
}

fn hop(mask: usize, k: usize, n: usize) -> usize {
    (mask & !(1 << k)) | (1 << ((k + 1) % n))
}

/// Propagate through `steps` synchronous Metropolis steps: every eligible car
/// moves independently with probability `rate * dt`, all subsets enumerated.
pub fn propagate_metropolis(initial: &Distribution, params: &ModelParams, steps: usize) -> Distribution {
    let n = initial.n_cells;
    let mut current = initial.probs.clone();
    for _ in 0..steps {
        let mut next = vec![0.0; current.len()];
        for (mask, &p) in current.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let movers: Vec<(usize, f64)> = (0..n)
                .filter_map(|k| {
                    let r = hop_rate(mask, k, n, params);
                    (r > 0.0).then_some((k, r * params.dt()))
                })
                .collect();
            for subset in 0usize..(1 << movers.len()) {
                let mut weight = p;
                let mut target = mask;
                for (j, &(k, q)) in movers.iter().enumerate() {
                    if subset >> j & 1 == 1 {
                        weight *= q;
                        target = hop(target, k, n);
                    } else {
                        weight *= 1.0 - q;
                    }
                }
                next[target] += weight;
            }
        }
        current = next;
    }
    Distribution {
        n_cells: n,
        probs: current,
    }
}

/// Propagate the continuous-time chain to time `t` by uniformization.
pub fn propagate_continuous(initial: &Distribution, params: &ModelParams, t: f64) -> Distribution {
    let n = initial.n_cells;
    let size = initial.probs.len();
    let exits: Vec<Vec<(usize, f64)>> = (0..size)
        .map(|mask| {
            (0..n)
                .filter_map(|k| {
                    let r = hop_rate(mask, k, n, params);
                    (r > 0.0).then(|| (hop(mask, k, n), r))
                })
                .collect()
        })
        .collect();
    let lambda = exits
        .iter()
        .map(|e| e.iter().map(|(_, r)| r).sum::<f64>())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut term = initial.probs.clone();
    let mut result = vec![0.0; size];
    let mut weight = (-lambda * t).exp();
    let mut cumulative = 0.0;
    let mut j = 0usize;
    while cumulative < 1.0 - 1e-15 && j < 10_000 {
        for (r, v) in result.iter_mut().zip(&term) {
            *r += weight * v;
        }
        cumulative += weight;
        // term <- term * (I + Q / lambda)
        let mut next = vec![0.0; size];
        for (mask, &p) in term.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let mut stay = p;
            for &(target, r) in &exits[mask] {
                let flow = p * r / lambda;
                next[target] += flow;
                stay -= flow;
            }
            next[mask] += stay;
        }
        term = next;
        j += 1;
        weight *= lambda * t / j as f64;
    }
    Distribution {
        n_cells: n,
        probs: result,
    }
}

/// Probability that the next event of the continuous-time chain is the hop out of each cell.
pub fn jump_probabilities(state: &LatticeState, params: &ModelParams) -> Vec<f64> {
    let n = state.len();
    let mask = to_mask(state.cells());
    let rates: Vec<f64> = (0..n).map(|k| hop_rate(mask, k, n, params)).collect();
    let total: f64 = rates.iter().sum();
    if total == 0.0 {
        return rates;
    }
    rates.into_iter().map(|r| r / total).collect()
}
