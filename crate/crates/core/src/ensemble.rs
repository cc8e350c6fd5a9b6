//! Ensemble Monte Carlo statistics over independent realizations.
//!
//! Each realization is reduced to integer tallies per record time (occupancy
//! counts, neighbour pair counts, look-ahead window histograms). Integer sums
//! are exact, so the final statistics do not depend on how realizations are
//! split across worker threads; chunks are still folded in ascending order.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{self, KmcEngine, LatticeState, ModelParams, RngStream, ScanOrder};
use crate::meso;

/// Realizations simulated back to back inside one parallel task.
const CHUNK: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stepper {
    Metropolis,
    Kmc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleConfig {
    pub n: usize,
    pub record_times: Vec<f64>,
    pub master_seed: u64,
    pub stepper: Stepper,
    pub correlation_lags: Vec<usize>,
    pub smoothing_window: usize,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidEnsemble(format!(
                "need at least 2 realizations, got {}",
                self.n
            )));
        }
        if self.record_times.is_empty() {
            return Err(Error::InvalidEnsemble("record_times is empty".into()));
        }
        if self.record_times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::InvalidEnsemble("record_times must be finite and >= 0".into()));
        }
        if self.record_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidEnsemble("record_times must be strictly ascending".into()));
        }
        if self.correlation_lags.contains(&0) {
            return Err(Error::InvalidEnsemble("correlation lags must be positive".into()));
        }
        if self.smoothing_window == 0 || self.smoothing_window.is_multiple_of(2) {
            return Err(Error::InvalidEnsemble(format!(
                "smoothing window must be a positive odd integer, got {}",
                self.smoothing_window
            )));
        }
        Ok(())
    }
}

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of realization `p`: `splitmix64(master_seed ^ splitmix64(p))`.
pub fn realization_seed(master_seed: u64, p: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(p))
}

/// Number of whole Metropolis steps that fit in `t`.
fn steps_until(t: f64, dt: f64) -> u64 {
    (t / dt + 1e-9).floor() as u64
}

/// Simulate one realization and hand each snapshot to `visit(index, cells)`.
fn simulate(
    params: &ModelParams,
    ic: &LatticeState,
    record_times: &[f64],
    stepper: Stepper,
    seed: u64,
    mut visit: impl FnMut(usize, &[u8]),
) {
    let mut rng = RngStream::new(seed);
    match stepper {
        Stepper::Metropolis => {
            let probs = lattice::move_probabilities(params);
            let m = params.look_ahead();
            let mut cur = ic.cells().to_vec();
            let mut next = cur.clone();
            let mut step = 0u64;
            for (idx, &t) in record_times.iter().enumerate() {
                let target = steps_until(t, params.dt());
                while step < target {
                    lattice::metropolis_apply(&cur, &mut next, m, &probs, ScanOrder::Forward, |_| rng.uniform());
                    std::mem::swap(&mut cur, &mut next);
                    step += 1;
                }
                visit(idx, &cur);
            }
        }
        Stepper::Kmc => {
            let mut engine = KmcEngine::new(ic, params);
            let mut pending: Option<f64> = None;
            let mut absorbed = false;
            for (idx, &t) in record_times.iter().enumerate() {
                while !absorbed {
                    let when = match pending {
                        Some(when) => when,
                        None => match engine.draw_wait(&mut rng) {
                            Some(wait) => engine.time() + wait,
                            None => {
                                absorbed = true;
                                break;
                            }
                        },
                    };
                    if when > t {
                        pending = Some(when);
                        break;
                    }
                    engine.fire(&mut rng, when);
                    pending = None;
                }
                visit(idx, engine.cells());
            }
        }
    }
}

/// Snapshots of realization `p` at every record time, exactly as used by [`run_ensemble`].
pub fn run_realization(params: &ModelParams, ic: &LatticeState, cfg: &EnsembleConfig, p: usize) -> Vec<LatticeState> {
    let mut out = Vec::with_capacity(cfg.record_times.len());
    simulate(
        params,
        ic,
        &cfg.record_times,
        cfg.stepper,
        realization_seed(cfg.master_seed, p as u64),
        |idx, cells| {
            out.push(
                LatticeState::new(cells.to_vec())
                    .expect("stepper keeps cells binary")
                    .with_time(cfg.record_times[idx]),
            );
        },
    );
    out
}

/// Integer sufficient statistics for one record time.
#[derive(Clone, Debug, PartialEq)]
struct Tally {
    occupied: Vec<u64>,
    /// `[lag][k]`: realizations with both `k` and `k + lag` occupied.
    pairs: Vec<Vec<u64>>,
    /// `[k * (M + 1) + j]`: realizations whose window of `k` holds `j` cars.
    window: Vec<u64>,
    /// Same, restricted to realizations where the car in `k` can hop.
    eligible: Vec<u64>,
}

impl Tally {
    fn new(n_cells: usize, lags: usize, m: usize) -> Self {
        Self {
            occupied: vec![0; n_cells],
            pairs: vec![vec![0; n_cells]; lags],
            window: vec![0; n_cells * (m + 1)],
            eligible: vec![0; n_cells * (m + 1)],
        }
    }

    fn add(&mut self, cells: &[u8], lags: &[usize], m: usize, scratch: &mut Vec<usize>) {
        let n = cells.len();
        for (acc, &c) in self.occupied.iter_mut().zip(cells) {
            *acc += c as u64;
        }
        for (row, &lag) in self.pairs.iter_mut().zip(lags) {
            for k in 0..n {
                row[k] += (cells[k] & cells[(k + lag) % n]) as u64;
            }
        }
        // sliding window counts over cells k+2 ..= k+M+1
        scratch.clear();
        let mut count: usize = (0..m).map(|i| cells[(i + 2) % n] as usize).sum();
        for k in 0..n {
            scratch.push(count);
            if m > 0 {
                count -= cells[(k + 2) % n] as usize;
                count += cells[(k + m + 2) % n] as usize;
            }
        }
        let stride = m + 1;
        for k in 0..n {
            let j = scratch[k];
            self.window[k * stride + j] += 1;
            if cells[k] == 1 && cells[(k + 1) % n] == 0 {
                self.eligible[k * stride + j] += 1;
            }
        }
    }

    fn merge(&mut self, other: &Tally) {
        fn sum(a: &mut [u64], b: &[u64]) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        sum(&mut self.occupied, &other.occupied);
        for (a, b) in self.pairs.iter_mut().zip(&other.pairs) {
            sum(a, b);
        }
        sum(&mut self.window, &other.window);
        sum(&mut self.eligible, &other.eligible);
    }
}

/// Statistics at one record time. Vectors are indexed by 0-based cell index.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    /// Sample mean of `sigma_k`.
    pub mean: Vec<f64>,
    /// Sample standard deviation of `sigma_k` (divisor `n - 1`).
    pub std: Vec<f64>,
    /// `[lag index][k]`: Pearson `r_{k,k+lag}`; `None` when either cell has zero variance.
    pub correlation: Vec<Vec<Option<f64>>>,
    /// Sample mean of the unclosed moment right-hand side.
    pub exact_rhs: Vec<f64>,
    /// Product-measure closure evaluated at the sample means.
    pub closure_a1a2: Vec<f64>,
    /// Closure without the look-ahead factor, at the sample means.
    pub closure_nobeta: Vec<f64>,
    /// Sample mean of `exp(-beta J_k)`.
    pub a1_lhs: Vec<f64>,
    /// `exp(-beta * mean(J_k))`.
    pub a1_rhs: Vec<f64>,
    /// Product formula `prod [1 + rho_j (exp(-beta') - 1)]` over the window at the sample means.
    pub product_rhs: Vec<f64>,
    /// Sample mean of `exp(-beta' sigma_k)`.
    pub sigma_lhs: Vec<f64>,
    /// `exp(-beta' * rho_k)`.
    pub sigma_a1: Vec<f64>,
    /// `1 + rho_k (exp(-beta') - 1)`.
    pub sigma_exact: Vec<f64>,
}

/// Per-cell view of the look-ahead expectation diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct A1Diagnostic {
    pub lhs: f64,
    pub a1_rhs: f64,
    pub product_rhs: f64,
}

impl Snapshot {
    pub fn a1(&self, k: usize) -> A1Diagnostic {
        A1Diagnostic {
            lhs: self.a1_lhs[k],
            a1_rhs: self.a1_rhs[k],
            product_rhs: self.product_rhs[k],
        }
    }

    pub fn correlation_at(&self, lag_index: usize, k: usize) -> Option<f64> {
        self.correlation[lag_index][k]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleStats {
    pub n: usize,
    pub n_cells: usize,
    pub lags: Vec<usize>,
    /// True when the closure columns use the product generalization for `M > 1`.
    pub generalized_closure: bool,
    pub snapshots: Vec<Snapshot>,
}

impl EnsembleStats {
    /// Snapshot whose record time equals `t` (within 1e-9).
    pub fn at(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| (s.time - t).abs() < 1e-9)
    }
}

/// Run `cfg.n` realizations from `ic` and reduce them to [`EnsembleStats`].
pub fn run_ensemble(params: &ModelParams, ic: &LatticeState, cfg: &EnsembleConfig) -> Result<EnsembleStats> {
    cfg.validate()?;
    if ic.len() != params.n_cells() {
        return Err(Error::InvalidEnsemble(format!(
            "initial condition has {} cells, parameters say N = {}",
            ic.len(),
            params.n_cells()
        )));
    }
    if let Some(&lag) = cfg.correlation_lags.iter().find(|&&l| l >= params.n_cells()) {
        return Err(Error::InvalidEnsemble(format!("lag {lag} must be smaller than N")));
    }
    let n_cells = params.n_cells();
    let m = params.look_ahead();
    let times = cfg.record_times.len();
    let lags = &cfg.correlation_lags;
    let chunks = cfg.n.div_ceil(CHUNK);

    let partials: Vec<Vec<Tally>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut tallies = vec![Tally::new(n_cells, lags.len(), m); times];
            let mut scratch = Vec::with_capacity(n_cells);
            for p in c * CHUNK..((c + 1) * CHUNK).min(cfg.n) {
                let seed = realization_seed(cfg.master_seed, p as u64);
                simulate(params, ic, &cfg.record_times, cfg.stepper, seed, |idx, cells| {
                    tallies[idx].add(cells, lags, m, &mut scratch);
                });
            }
            tallies
        })
        .collect();

    let mut total = vec![Tally::new(n_cells, lags.len(), m); times];
    for part in &partials {
        for (acc, t) in total.iter_mut().zip(part) {
            acc.merge(t);
        }
    }

    let snapshots = total
        .iter()
        .zip(&cfg.record_times)
        .map(|(tally, &t)| finalize(tally, t, cfg.n, params, lags))
        .collect();
    Ok(EnsembleStats {
        n: cfg.n,
        n_cells,
        lags: lags.clone(),
        generalized_closure: m > 1,
        snapshots,
    })
}

fn finalize(tally: &Tally, time: f64, n: usize, params: &ModelParams, lags: &[usize]) -> Snapshot {
    let n_cells = params.n_cells();
    let m = params.look_ahead();
    let stride = m + 1;
    let nf = n as f64;
    let c0 = params.c0();
    // exp(-beta * j / M) for each window count j
    let factors: Vec<f64> = lattice::rate_table(params).iter().map(|r| r / c0).collect();
    let beta_prime = params.beta_prime();
    let e_prime = (-beta_prime).exp();

    let mean: Vec<f64> = tally.occupied.iter().map(|&c| c as f64 / nf).collect();
    let std = tally
        .occupied
        .iter()
        .map(|&c| {
            let c = c as f64;
            ((c - c * c / nf) / (nf - 1.0)).max(0.0).sqrt()
        })
        .collect();

    let correlation = tally
        .pairs
        .iter()
        .zip(lags)
        .map(|(row, &lag)| {
            (0..n_cells)
                .map(|k| {
                    let a = tally.occupied[k] as i128;
                    let b = tally.occupied[(k + lag) % n_cells] as i128;
                    let ni = n as i128;
                    let da = ni * a - a * a;
                    let db = ni * b - b * b;
                    if da == 0 || db == 0 {
                        return None;
                    }
                    let num = ni * row[k] as i128 - a * b;
                    Some((num as f64 / ((da as f64) * (db as f64)).sqrt()).clamp(-1.0, 1.0))
                })
                .collect()
        })
        .collect();

    let weighted = |hist: &[u64], k: usize| -> f64 {
        hist[k * stride..(k + 1) * stride]
            .iter()
            .zip(&factors)
            .map(|(&c, f)| c as f64 * f)
            .sum::<f64>()
    };
    let exact_rhs = (0..n_cells)
        .map(|k| {
            let prev = (k + n_cells - 1) % n_cells;
            c0 * (weighted(&tally.eligible, prev) - weighted(&tally.eligible, k)) / nf
        })
        .collect();

    let (a1_lhs, a1_rhs, product_rhs) = if m == 0 {
        (vec![1.0; n_cells], vec![1.0; n_cells], vec![1.0; n_cells])
    } else {
        let lhs = (0..n_cells).map(|k| weighted(&tally.window, k) / nf).collect();
        let rhs = (0..n_cells)
            .map(|k| {
                let hist = &tally.window[k * stride..(k + 1) * stride];
                let mean_j = hist.iter().enumerate().map(|(j, &c)| j as f64 * c as f64).sum::<f64>() / (m as f64 * nf);
                (-params.beta() * mean_j).exp()
            })
            .collect();
        let prod = (0..n_cells)
            .map(|k| meso::product_factor(&mean, k, m, beta_prime, None))
            .collect();
        (lhs, rhs, prod)
    };

    let sigma_lhs = tally
        .occupied
        .iter()
        .map(|&c| ((n as u64 - c) as f64 + c as f64 * e_prime) / nf)
        .collect();
    let sigma_a1 = mean.iter().map(|r| (-beta_prime * r).exp()).collect();
    let sigma_exact = mean.iter().map(|r| 1.0 + r * (e_prime - 1.0)).collect();

    let closure_a1a2 = (0..n_cells).map(|k| closure_rhs_a1a2(&mean, k, params)).collect();
    let closure_nobeta = (0..n_cells).map(|k| closure_rhs_nobeta(&mean, k, params)).collect();

    Snapshot {
        time,
        mean,
        std,
        correlation,
        exact_rhs,
        closure_a1a2,
        closure_nobeta,
        a1_lhs,
        a1_rhs,
        product_rhs,
        sigma_lhs,
        sigma_a1,
        sigma_exact,
    }
}

/// Sample mean of binary occupancies.
pub fn density_estimate(samples: &[u8]) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    samples.iter().map(|&s| s as f64).sum::<f64>() / samples.len() as f64
}

/// Sample Pearson correlation; `Ok(None)` when either sample has zero variance.
pub fn pearson_correlation(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::InvalidEnsemble("correlation needs at least 2 samples".into()));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Ok(None);
    }
    Ok(Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)))
}

/// Look-ahead expectation diagnostics at cell `k`, computed directly from raw samples.
pub fn a1_diagnostic(samples: &[LatticeState], k: usize, params: &ModelParams) -> Result<A1Diagnostic> {
    let m = params.look_ahead();
    if m == 0 {
        return Err(Error::InvalidParams("look-ahead diagnostics need M >= 1".into()));
    }
    let n = samples.len() as f64;
    let mut lhs = 0.0;
    let mut mean_j = 0.0;
    for s in samples {
        let j = lattice::look_ahead_potential(s, k, m)?;
        lhs += (-params.beta() * j).exp();
        mean_j += j;
    }
    let rho = column_means(samples);
    Ok(A1Diagnostic {
        lhs: lhs / n,
        a1_rhs: (-params.beta() * mean_j / n).exp(),
        product_rhs: meso::product_factor(&rho, k, m, params.beta_prime(), None),
    })
}

fn column_means(samples: &[LatticeState]) -> Vec<f64> {
    let n_cells = samples.first().map_or(0, |s| s.len());
    (0..n_cells)
        .map(|k| samples.iter().map(|s| s.cells()[k] as f64).sum::<f64>() / samples.len() as f64)
        .collect()
}

/// Sample mean of the unclosed right-hand side at cell `k`, from raw samples.
pub fn closure_rhs_exact(samples: &[LatticeState], k: usize, params: &ModelParams) -> f64 {
    let mut total = 0.0;
    for s in samples {
        let n = s.len();
        let prev = (k + n - 1) % n;
        if s.is_eligible(prev) {
            total += lattice::transition_rate(s, prev, params);
        }
        if s.is_eligible(k) {
            total -= lattice::transition_rate(s, k, params);
        }
    }
    total / samples.len() as f64
}

/// Product-measure closure of the moment right-hand side at cell `k`.
pub fn closure_rhs_a1a2(rho: &[f64], k: usize, params: &ModelParams) -> f64 {
    meso::new_rhs_at(rho, k, params)
}

/// Closure with the look-ahead factor dropped.
pub fn closure_rhs_nobeta(rho: &[f64], k: usize, params: &ModelParams) -> f64 {
    meso::free_rhs_at(rho, k, params)
}

/// Centered periodic moving average over an odd window.
pub fn cell_average(series: &[f64], window: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::InvalidParams(format!(
            "averaging window must be odd, got {window}"
        )));
    }
    if window > n {
        return Err(Error::InvalidParams(format!(
            "window {window} exceeds series length {n}"
        )));
    }
    let half = (window / 2) as isize;
    Ok((0..n as isize)
        .map(|k| {
            (-half..=half)
                .map(|o| series[(k + o).rem_euclid(n as isize) as usize])
                .sum::<f64>()
                / window as f64
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(n: usize, times: Vec<f64>, stepper: Stepper) -> EnsembleConfig {
        EnsembleConfig {
            n,
            record_times: times,
            master_seed: 11,
            stepper,
            correlation_lags: vec![1, 2],
            smoothing_window: 5,
        }
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(1, vec![0.0], Stepper::Metropolis);
        assert!(c.validate().is_err());
        c.n = 2;
        assert!(c.validate().is_ok());
        c.record_times = vec![1.0, 1.0];
        assert!(c.validate().is_err());
        c.record_times = vec![0.0];
        c.smoothing_window = 4;
        assert!(c.validate().is_err());
    }

    #[test]
    fn density_examples() {
        assert_eq!(density_estimate(&[1, 1, 1]), 1.0);
        assert_eq!(density_estimate(&[0, 0]), 0.0);
        assert_eq!(density_estimate(&[1, 0, 1, 0]), 0.5);
    }

    #[test]
    fn pearson_examples() {
        let a = [1.0, 0.0, 1.0, 1.0, 0.0];
        assert_eq!(pearson_correlation(&a, &a).unwrap(), Some(1.0));
        let b: Vec<f64> = a.iter().map(|x| 1.0 - x).collect();
        assert_eq!(pearson_correlation(&a, &b).unwrap(), Some(-1.0));
        assert_eq!(pearson_correlation(&[1.0, 1.0, 1.0], &[0.0, 1.0, 0.0]).unwrap(), None);
        assert!(pearson_correlation(&[1.0, 0.0], &[1.0]).is_err());
        // a = {1,0,1,0,1}, b = {1,1,0,0,1}: means 0.6, 0.6; centered
        // a: .4 -.6 .4 -.6 .4 ; b: .4 .4 -.6 -.6 .4
        // sum ab = .16 -.24 -.24 +.36 +.16 = 0.2 ; saa = sbb = 3*.16 + 2*.36 = 1.2
        let r = pearson_correlation(&[1.0, 0.0, 1.0, 0.0, 1.0], &[1.0, 1.0, 0.0, 0.0, 1.0])
            .unwrap()
            .unwrap();
        assert!((r - 0.2 / 1.2).abs() < 1e-15);
    }

    #[test]
    fn cell_average_examples() {
        let c = vec![0.4; 9];
        assert_eq!(cell_average(&c, 5).unwrap(), c);
        let s: Vec<f64> = (0..7).map(|k| k as f64).collect();
        assert_eq!(cell_average(&s, 1).unwrap(), s);
        let mut imp = vec![0.0; 10];
        imp[0] = 1.0;
        let avg = cell_average(&imp, 5).unwrap();
        for (k, v) in avg.iter().enumerate() {
            let expect = if [8, 9, 0, 1, 2].contains(&k) { 0.2 } else { 0.0 };
            assert!((v - expect).abs() < 1e-15, "{k}");
        }
        assert!(cell_average(&imp, 4).is_err());
        assert!(cell_average(&imp, 11).is_err());
    }

    #[test]
    fn a1_examples() {
        let p = ModelParams::new(8, 1, 3.0, 1.0, 1.0, 0.1).unwrap();
        let empty = vec![LatticeState::empty(8).unwrap(); 3];
        let d = a1_diagnostic(&empty, 2, &p).unwrap();
        assert_eq!((d.lhs, d.a1_rhs, d.product_rhs), (1.0, 1.0, 1.0));
        let full = vec![LatticeState::new(vec![1; 8]).unwrap(); 3];
        let d = a1_diagnostic(&full, 2, &p).unwrap();
        let e = (-3.0f64).exp();
        assert!((d.lhs - e).abs() < 1e-15 && (d.a1_rhs - e).abs() < 1e-15 && (d.product_rhs - e).abs() < 1e-15);
        // beta' = ln 2, rho = 0.5 -> 1 + 0.5 (0.5 - 1) = 0.75
        let q = meso::product_factor(&[0.0, 0.0, 0.5, 0.0], 0, 1, 2f64.ln(), None);
        assert!((q - 0.75).abs() < 1e-15);
    }

    #[test]
    fn closure_examples() {
        let p = ModelParams::new(6, 1, 3.0, 1.0, 1.0, 0.1).unwrap();
        let empty = vec![LatticeState::empty(6).unwrap(); 4];
        assert_eq!(closure_rhs_exact(&empty, 2, &p), 0.0);
        let single = vec![LatticeState::new(vec![0, 0, 1, 0, 0, 0]).unwrap(); 4];
        assert_eq!(closure_rhs_exact(&single, 2, &p), -1.0);
        let uniform = vec![0.3; 6];
        for k in 0..6 {
            assert!(closure_rhs_a1a2(&uniform, k, &p).abs() < 1e-16);
            assert!(closure_rhs_nobeta(&uniform, k, &p).abs() < 1e-16);
        }
        let rho = [0.3, 0.2, 0.5, 0.8, 0.1, 0.6];
        let p0 = p.with_beta(0.0).unwrap();
        for k in 0..6 {
            assert_eq!(closure_rhs_a1a2(&rho, k, &p0), closure_rhs_nobeta(&rho, k, &p0));
        }
        // cells k-1..k+2 = (0.2, 0.5, 0.8, 0.1) at k = 2
        let e = (-3.0f64).exp() - 1.0;
        let hand = (1.0 + 0.8 * e) * 0.2 * 0.5 - (1.0 + 0.1 * e) * 0.5 * 0.2;
        assert!((closure_rhs_a1a2(&rho, 2, &p) - hand).abs() < 1e-15);
        let hand_free = 0.2 * 0.5 - 0.5 * 0.2;
        assert!((closure_rhs_nobeta(&rho, 2, &p) - hand_free).abs() < 1e-15);
    }

    #[test]
    fn frozen_lattice_keeps_ic() {
        // dt -> 0 limit: with c0*dt tiny and few steps nothing moves; use times below one step.
        let p = ModelParams::new(10, 1, 0.0, 1.0, 1.0, 1.0).unwrap();
        let ic = lattice::red_light_ic(10, 2, 4).unwrap();
        let stats = run_ensemble(&p, &ic, &cfg(2, vec![0.0, 0.5, 0.9], Stepper::Metropolis)).unwrap();
        for s in &stats.snapshots {
            let expect: Vec<f64> = ic.cells().iter().map(|&c| c as f64).collect();
            assert_eq!(s.mean, expect);
            assert!(s.correlation.iter().flatten().all(Option::is_none));
        }
    }

    #[test]
    fn ensemble_route_matches_sample_route() {
        let p = ModelParams::new(24, 2, 2.0, 1.0, 1.0, 0.2).unwrap();
        let ic = lattice::red_light_ic(24, 4, 14).unwrap();
        let c = cfg(300, vec![0.0, 2.0, 5.0], Stepper::Metropolis);
        let stats = run_ensemble(&p, &ic, &c).unwrap();
        let runs: Vec<Vec<LatticeState>> = (0..c.n).map(|i| run_realization(&p, &ic, &c, i)).collect();
        for (ti, snap) in stats.snapshots.iter().enumerate() {
            let samples: Vec<LatticeState> = runs.iter().map(|r| r[ti].clone()).collect();
            for k in 0..24 {
                let column: Vec<u8> = samples.iter().map(|s| s.cells()[k]).collect();
                assert!((snap.mean[k] - density_estimate(&column)).abs() < 1e-15);
                for (li, &lag) in c.correlation_lags.iter().enumerate() {
                    let a: Vec<f64> = samples.iter().map(|s| s.cells()[k] as f64).collect();
                    let b: Vec<f64> = samples.iter().map(|s| s.cells()[(k + lag) % 24] as f64).collect();
                    let direct = pearson_correlation(&a, &b).unwrap();
                    match (direct, snap.correlation[li][k]) {
                        (None, None) => {}
                        (Some(x), Some(y)) => assert!((x - y).abs() < 1e-12, "r at {k}: {x} vs {y}"),
                        other => panic!("definedness differs at {k}: {other:?}"),
                    }
                }
                let d = a1_diagnostic(&samples, k, &p).unwrap();
                let s = snap.a1(k);
                assert!((d.lhs - s.lhs).abs() < 1e-12);
                assert!((d.a1_rhs - s.a1_rhs).abs() < 1e-12);
                assert!((d.product_rhs - s.product_rhs).abs() < 1e-12);
                assert!((closure_rhs_exact(&samples, k, &p) - snap.exact_rhs[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let p = ModelParams::new(30, 1, 3.0, 1.0, 1.0, 0.1).unwrap();
        let ic = lattice::red_light_ic(30, 5, 15).unwrap();
        let c = cfg(100, vec![1.0, 3.0], Stepper::Metropolis);
        let run_with = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_ensemble(&p, &ic, &c).unwrap())
        };
        assert_eq!(run_with(1), run_with(3));
    }

    #[test]
    fn kmc_ensemble_runs_and_conserves() {
        let p = ModelParams::new(20, 2, 1.0, 1.0, 1.0, 0.1).unwrap();
        let ic = lattice::red_light_ic(20, 3, 9).unwrap();
        let stats = run_ensemble(&p, &ic, &cfg(50, vec![0.0, 1.0, 4.0], Stepper::Kmc)).unwrap();
        for s in &stats.snapshots {
            let mass: f64 = s.mean.iter().sum();
            assert!((mass - 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kmc_gridlock_records_ic() {
        let p = ModelParams::new(6, 1, 1.0, 1.0, 1.0, 0.1).unwrap();
        let ic = LatticeState::new(vec![1; 6]).unwrap();
        let stats = run_ensemble(&p, &ic, &cfg(3, vec![0.0, 10.0], Stepper::Kmc)).unwrap();
        assert_eq!(stats.snapshots[1].mean, vec![1.0; 6]);
    }

    #[test]
    fn seeds_differ_per_realization() {
        let s: Vec<u64> = (0..100).map(|p| realization_seed(7, p)).collect();
        let mut sorted = s.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 100);
        assert_ne!(realization_seed(7, 0), realization_seed(8, 0));
    }

    proptest! {
        #[test]
        fn pearson_in_range(a in proptest::collection::vec(0u8..2, 2..40), seed in 0u64..1000) {
            let mut rng = RngStream::new(seed);
            let b: Vec<f64> = a.iter().map(|_| (rng.uniform() < 0.5) as u8 as f64).collect();
            let a: Vec<f64> = a.iter().map(|&x| x as f64).collect();
            if let Some(r) = pearson_correlation(&a, &b).unwrap() {
                prop_assert!((-1.0..=1.0).contains(&r));
            }
        }

        #[test]
        fn cell_average_preserves_sum(v in proptest::collection::vec(-5.0f64..5.0, 5..40), half in 0usize..2) {
            let w = 2 * half + 1;
            let avg = cell_average(&v, w).unwrap();
            let a: f64 = avg.iter().sum();
            let b: f64 = v.iter().sum();
            prop_assert!((a - b).abs() < 1e-10);
        }
    }
}
