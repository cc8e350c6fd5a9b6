//! Microscopic lattice model.
//!
//! A configuration is a ring of `N` cells, each empty (0) or holding one car (1).
//! A car in cell `k` may hop to cell `k + 1` when that cell is empty, at rate
//! `c0 * exp(-beta * J_k)`, where `J_k` is the mean occupancy of the `M` cells
//! `k + 2 ..= k + M + 1` (the cell directly ahead is not part of the window).
//!
//! Slice indices are 0-based. Cell *numbers* (used by [`red_light_ic`] and in
//! CSV output) are 1-based, so cell number `j` lives at index `j - 1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Base hop rate in 1/s (one cell per 0.23 s, about 65 mph with 22 ft cells).
pub const PAPER_C0: f64 = 4.3478;
/// Cell width in feet.
pub const PAPER_CELL_FEET: f64 = 22.0;
pub const PAPER_N: usize = 700;
/// Default `c0 * dt` for the Metropolis stepper.
pub const DEFAULT_C0_DT: f64 = 0.1;

/// Physical and numerical parameters shared by every model layer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    n_cells: usize,
    look_ahead: usize,
    beta: f64,
    c0: f64,
    h: f64,
    dt: f64,
}

impl ModelParams {
    pub fn new(n_cells: usize, look_ahead: usize, beta: f64, c0: f64, h: f64, dt: f64) -> Result<Self> {
        if n_cells < 2 {
            return Err(Error::InvalidParams(format!("N must be at least 2, got {n_cells}")));
        }
        if look_ahead >= n_cells {
            return Err(Error::InvalidParams(format!(
                "look-ahead M = {look_ahead} must be smaller than N = {n_cells}"
            )));
        }
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::InvalidParams(format!(
                "beta must be finite and >= 0, got {beta}"
            )));
        }
        if !c0.is_finite() || c0 <= 0.0 {
            return Err(Error::InvalidParams(format!("c0 must be finite and > 0, got {c0}")));
        }
        if !h.is_finite() || h <= 0.0 {
            return Err(Error::InvalidParams(format!("h must be finite and > 0, got {h}")));
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::InvalidParams(format!("dt must be finite and > 0, got {dt}")));
        }
        if c0 * dt > 1.0 {
            return Err(Error::InvalidParams(format!(
                "c0*dt = {} exceeds 1; Metropolis move probabilities c0*exp(-beta*J)*dt must not exceed 1",
                c0 * dt
            )));
        }
        Ok(Self {
            n_cells,
            look_ahead,
            beta,
            c0,
            h,
            dt,
        })
    }

    /// Parameters with `dt` chosen so that `c0 * dt = 0.1`.
    pub fn with_default_dt(n_cells: usize, look_ahead: usize, beta: f64, c0: f64, h: f64) -> Result<Self> {
        Self::new(n_cells, look_ahead, beta, c0, h, DEFAULT_C0_DT / c0)
    }

    pub fn with_dt(self, dt: f64) -> Result<Self> {
        Self::new(self.n_cells, self.look_ahead, self.beta, self.c0, self.h, dt)
    }

    pub fn with_beta(self, beta: f64) -> Result<Self> {
        Self::new(self.n_cells, self.look_ahead, beta, self.c0, self.h, self.dt)
    }

    pub fn with_look_ahead(self, look_ahead: usize) -> Result<Self> {
        Self::new(self.n_cells, look_ahead, self.beta, self.c0, self.h, self.dt)
    }

    pub fn with_n_cells(self, n_cells: usize) -> Result<Self> {
        Self::new(n_cells, self.look_ahead, self.beta, self.c0, self.h, self.dt)
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn look_ahead(&self) -> usize {
        self.look_ahead
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Free-flow velocity `h * c0`.
    pub fn v0(&self) -> f64 {
        self.h * self.c0
    }

    /// Per-cell interaction strength `beta / M` (zero when `M = 0`).
    pub fn beta_prime(&self) -> f64 {
        if self.look_ahead == 0 {
            0.0
        } else {
            self.beta / self.look_ahead as f64
        }
    }

    /// True when the look-ahead factor can differ from 1.
    pub fn has_potential(&self) -> bool {
        self.look_ahead > 0 && self.beta > 0.0
    }
}

/// Deterministic uniform stream. Backed by ChaCha8, whose output is fixed
/// across platforms and releases for a given seed.
#[derive(Clone, Debug)]
pub struct RngStream(ChaCha8Rng);

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform draw on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.0.random::<f64>()
    }

    /// Exponential variate with the given rate.
    #[inline]
    pub fn exponential(&mut self, rate: f64) -> f64 {
        -(1.0 - self.uniform()).ln() / rate
    }
}

/// Occupancy configuration of the ring at one time instant.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeState {
    cells: Vec<u8>,
    time: f64,
}

impl LatticeState {
    pub fn new(cells: Vec<u8>) -> Result<Self> {
        if cells.len() < 2 {
            return Err(Error::InvalidState(format!(
                "need at least 2 cells, got {}",
                cells.len()
            )));
        }
        if let Some(k) = cells.iter().position(|&c| c > 1) {
            return Err(Error::InvalidState(format!(
                "cell index {k} holds {}, expected 0 or 1",
                cells[k]
            )));
        }
        Ok(Self { cells, time: 0.0 })
    }

    pub fn empty(n_cells: usize) -> Result<Self> {
        Self::new(vec![0; n_cells])
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Occupancy at a periodic index: any integer is reduced modulo `N`.
    #[inline]
    pub fn at(&self, index: i64) -> u8 {
        self.cells[index.rem_euclid(self.cells.len() as i64) as usize]
    }

    /// Whether a car in cell `k` may hop this instant.
    #[inline]
    pub fn is_eligible(&self, k: usize) -> bool {
        eligible(&self.cells, k)
    }
}

#[inline]
fn eligible(cells: &[u8], k: usize) -> bool {
    let ahead = if k + 1 == cells.len() { 0 } else { k + 1 };
    cells[k] == 1 && cells[ahead] == 0
}

/// Number of occupied cells among `k + 2 ..= k + m + 1` (periodic).
#[inline]
pub(crate) fn window_count(cells: &[u8], k: usize, m: usize) -> usize {
    let n = cells.len();
    let mut idx = (k + 2) % n;
    let mut count = 0usize;
    for _ in 0..m {
        count += cells[idx] as usize;
        idx += 1;
        if idx == n {
            idx = 0;
        }
    }
    count
}

/// Look-ahead potential `J_k = (1/M) * sum_{i=1..M} sigma_{k+i+1}`.
pub fn look_ahead_potential(state: &LatticeState, k: usize, look_ahead: usize) -> Result<f64> {
    if look_ahead == 0 {
        return Err(Error::InvalidParams("look-ahead potential needs M >= 1".into()));
    }
    if k >= state.len() {
        return Err(Error::InvalidState(format!(
            "cell index {k} out of range for N = {}",
            state.len()
        )));
    }
    Ok(window_count(&state.cells, k, look_ahead) as f64 / look_ahead as f64)
}

/// Hop rate `c0 * exp(-beta * J_k)` for the car in cell `k`. Eligibility is not checked.
pub fn transition_rate(state: &LatticeState, k: usize, params: &ModelParams) -> f64 {
    if !params.has_potential() {
        return params.c0;
    }
    let count = window_count(&state.cells, k, params.look_ahead);
    rate_for_count(params, count)
}

#[inline]
fn rate_for_count(params: &ModelParams, count: usize) -> f64 {
    if !params.has_potential() {
        return params.c0;
    }
    let j = count as f64 / params.look_ahead as f64;
    params.c0 * (-params.beta * j).exp()
}

/// Rates indexed by the occupied count in the look-ahead window.
pub(crate) fn rate_table(params: &ModelParams) -> Vec<f64> {
    (0..=params.look_ahead)
        .map(|count| rate_for_count(params, count))
        .collect()
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum ScanOrder {
    Forward,
    #[cfg_attr(not(test), allow(dead_code))]
    Reverse,
}

/// One synchronous Metropolis update from `src` into `dst`.
///
/// Every test reads `src`; `draw(k)` is consulted only for eligible cars.
pub(crate) fn metropolis_apply(
    src: &[u8],
    dst: &mut [u8],
    look_ahead: usize,
    move_probs: &[f64],
    order: ScanOrder,
    mut draw: impl FnMut(usize) -> f64,
) {
    let n = src.len();
    dst.copy_from_slice(src);
    let mut visit = |k: usize| {
        let ahead = if k + 1 == n { 0 } else { k + 1 };
        if src[k] == 1 && src[ahead] == 0 {
            let p = move_probs[window_count(src, k, look_ahead)];
            if draw(k) < p {
                dst[k] = 0;
                dst[ahead] = 1;
            }
        }
    };
    match order {
        ScanOrder::Forward => (0..n).for_each(&mut visit),
        ScanOrder::Reverse => (0..n).rev().for_each(&mut visit),
    }
}

pub(crate) fn move_probabilities(params: &ModelParams) -> Vec<f64> {
    rate_table(params).into_iter().map(|r| r * params.dt).collect()
}

/// Advance the lattice by one Metropolis step of length `dt`.
pub fn metropolis_step(state: &LatticeState, params: &ModelParams, rng: &mut RngStream) -> LatticeState {
    let probs = move_probabilities(params);
    let mut next = vec![0u8; state.len()];
    metropolis_apply(
        &state.cells,
        &mut next,
        params.look_ahead,
        &probs,
        ScanOrder::Forward,
        |_| rng.uniform(),
    );
    LatticeState {
        cells: next,
        time: state.time + params.dt,
    }
}

/// Result of one kinetic Monte Carlo event.
#[derive(Clone, Debug, PartialEq)]
pub enum KmcOutcome {
    Moved {
        state: LatticeState,
        waiting_time: f64,
        /// Index of the cell the car left.
        from: usize,
    },
    /// No car can move; the chain stays here forever.
    Absorbing,
}

/// Event-driven simulator of the continuous-time chain. Keeps per-cell rates
/// and refreshes only the cells whose rate can change after a hop.
#[derive(Clone, Debug)]
pub(crate) struct KmcEngine {
    cells: Vec<u8>,
    rates: Vec<f64>,
    table: Vec<f64>,
    look_ahead: usize,
    time: f64,
}

impl KmcEngine {
    pub(crate) fn new(state: &LatticeState, params: &ModelParams) -> Self {
        let table = rate_table(params);
        let mut engine = Self {
            cells: state.cells.clone(),
            rates: vec![0.0; state.len()],
            table,
            look_ahead: params.look_ahead,
            time: state.time,
        };
        for k in 0..engine.cells.len() {
            engine.refresh(k);
        }
        engine
    }

    #[inline]
    fn refresh(&mut self, k: usize) {
        self.rates[k] = if eligible(&self.cells, k) {
            self.table[window_count(&self.cells, k, self.look_ahead)]
        } else {
            0.0
        };
    }

    pub(crate) fn time(&self) -> f64 {
        self.time
    }

    pub(crate) fn cells(&self) -> &[u8] {
        &self.cells
    }

    /// Total rate out of the current configuration.
    pub(crate) fn total_rate(&self) -> f64 {
        self.rates.iter().sum()
    }

    /// Exponential waiting time to the next event, or `None` in an absorbing state.
    pub(crate) fn draw_wait(&mut self, rng: &mut RngStream) -> Option<f64> {
        let total = self.total_rate();
        (total > 0.0).then(|| rng.exponential(total))
    }

    /// Pick an event with probability proportional to its rate, apply it and
    /// set the clock to `at`. Returns the cell the car left.
    pub(crate) fn fire(&mut self, rng: &mut RngStream, at: f64) -> usize {
        let total = self.total_rate();
        let target = rng.uniform() * total;
        let mut acc = 0.0;
        let mut chosen = 0;
        for (k, &r) in self.rates.iter().enumerate() {
            if r > 0.0 {
                acc += r;
                chosen = k;
                if acc > target {
                    break;
                }
            }
        }
        // roundoff can leave acc <= target; `chosen` is then the last positive rate
        self.apply(chosen);
        self.time = at;
        chosen
    }

    /// Draw the waiting time, then the event. Returns `None` in an absorbing state.
    pub(crate) fn step(&mut self, rng: &mut RngStream) -> Option<(f64, usize)> {
        let wait = self.draw_wait(rng)?;
        let k = self.fire(rng, self.time + wait);
        Some((wait, k))
    }

    fn apply(&mut self, k: usize) {
        let n = self.cells.len();
        let ahead = (k + 1) % n;
        self.cells[k] = 0;
        self.cells[ahead] = 1;
        // rate_j reads cells j ..= j + M + 1, so j in [k - M - 1, k + 1] may change.
        let span = self.look_ahead + 3;
        let first = (k + n * 2 - self.look_ahead - 1) % n;
        for off in 0..span.min(n) {
            self.refresh((first + off) % n);
        }
    }
}

/// Execute one event of the continuous-time chain.
pub fn kmc_step(state: &LatticeState, params: &ModelParams, rng: &mut RngStream) -> KmcOutcome {
    let mut engine = KmcEngine::new(state, params);
    match engine.step(rng) {
        Some((waiting_time, from)) => KmcOutcome::Moved {
            state: LatticeState {
                cells: engine.cells,
                time: engine.time,
            },
            waiting_time,
            from,
        },
        None => KmcOutcome::Absorbing,
    }
}

/// Red-light initial condition: cell numbers `start ..= last` (1-based) occupied.
pub fn red_light_ic(n_cells: usize, start: usize, last: usize) -> Result<LatticeState> {
    if start == 0 || start > last || last > n_cells {
        return Err(Error::InvalidState(format!(
            "red-light block needs 1 <= start <= last <= N, got start = {start}, last = {last}, N = {n_cells}"
        )));
    }
    let mut cells = vec![0u8; n_cells];
    cells[start - 1..last].fill(1);
    LatticeState::new(cells)
}

pub fn car_count(state: &LatticeState) -> usize {
    state.cells.iter().map(|&c| c as usize).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, m: usize, beta: f64, c0: f64, dt: f64) -> ModelParams {
        ModelParams::new(n, m, beta, c0, 1.0, dt).unwrap()
    }

    fn state(cells: &[u8]) -> LatticeState {
        LatticeState::new(cells.to_vec()).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(10, 2, 1.0, 4.0, 1.0, 0.3).is_err());
        assert!(ModelParams::new(10, 10, 1.0, 1.0, 1.0, 0.1).is_err());
        assert!(ModelParams::new(10, 2, -1.0, 1.0, 1.0, 0.1).is_err());
        assert!(ModelParams::new(1, 0, 1.0, 1.0, 1.0, 0.1).is_err());
        let p = ModelParams::new(10, 5, 3.0, 2.0, 22.0, 0.5).unwrap();
        assert_eq!(p.v0(), 44.0);
        assert_eq!(p.beta_prime(), 0.6);
        let d = ModelParams::with_default_dt(10, 1, 1.0, PAPER_C0, 22.0).unwrap();
        assert!((d.c0() * d.dt() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn state_rejects_non_binary() {
        assert!(LatticeState::new(vec![0, 2, 1]).is_err());
    }

    #[test]
    fn periodic_reads() {
        let s = state(&[1, 0, 0, 1, 0]);
        for j in -10i64..10 {
            assert_eq!(s.at(j + 5), s.at(j));
        }
        assert_eq!(s.at(-2), 1);
        assert_eq!(s.at(5), 1);
    }

    #[test]
    fn potential_examples() {
        let empty = LatticeState::empty(12).unwrap();
        assert_eq!(look_ahead_potential(&empty, 3, 5).unwrap(), 0.0);
        let full = state(&[1; 12]);
        assert_eq!(look_ahead_potential(&full, 3, 5).unwrap(), 1.0);
        // window of cell 0 with M = 5 is cells 2..=6; cell 1 is skipped
        let s = state(&[1, 1, 0, 1, 0, 0, 1, 1, 0, 0, 0, 0]);
        assert_eq!(look_ahead_potential(&s, 0, 5).unwrap(), 0.4);
        assert!(look_ahead_potential(&s, 0, 0).is_err());
    }

    #[test]
    fn potential_window_wraps() {
        let s = state(&[1, 0, 0, 0, 0, 0]);
        // cell 4: window cells 6, 7 -> indices 0, 1
        assert_eq!(look_ahead_potential(&s, 4, 2).unwrap(), 0.5);
    }

    #[test]
    fn rate_examples() {
        let s = state(&[1, 0, 1, 0, 0, 0]);
        let p = params(6, 1, 3.0, 2.0, 0.1);
        assert_eq!(transition_rate(&s, 0, &p), 2.0 * (-3.0f64).exp());
        assert_eq!(transition_rate(&s, 2, &p), 2.0);
        assert_eq!(transition_rate(&s, 0, &p.with_beta(0.0).unwrap()), 2.0);
        assert_eq!(transition_rate(&s, 0, &p.with_look_ahead(0).unwrap()), 2.0);
    }

    #[test]
    fn forced_move() {
        let p = params(4, 0, 0.0, 1.0, 1.0);
        let mut rng = RngStream::new(9);
        let next = metropolis_step(&state(&[1, 0, 0, 0]), &p, &mut rng);
        assert_eq!(next.cells(), &[0, 1, 0, 0]);
        assert_eq!(next.time(), 1.0);
    }

    #[test]
    fn blocked_car_never_moves() {
        let p = params(6, 0, 0.0, 1.0, 1.0);
        let mut rng = RngStream::new(1);
        let next = metropolis_step(&state(&[1, 1, 0, 0, 0, 0]), &p, &mut rng);
        assert_eq!(next.cells(), &[1, 0, 1, 0, 0, 0]);
    }

    #[test]
    fn wrap_around_move() {
        let p = params(4, 0, 0.0, 1.0, 1.0);
        let mut rng = RngStream::new(2);
        let next = metropolis_step(&state(&[0, 0, 0, 1]), &p, &mut rng);
        assert_eq!(next.cells(), &[1, 0, 0, 0]);
    }

    #[test]
    fn scan_order_does_not_matter() {
        let p = params(40, 3, 1.5, 1.0, 0.9);
        let probs = move_probabilities(&p);
        let mut rng = RngStream::new(77);
        for _ in 0..200 {
            let cells: Vec<u8> = (0..40).map(|_| (rng.uniform() < 0.6) as u8).collect();
            let draws: Vec<f64> = (0..40).map(|_| rng.uniform()).collect();
            let mut fwd = vec![0; 40];
            let mut rev = vec![0; 40];
            metropolis_apply(&cells, &mut fwd, 3, &probs, ScanOrder::Forward, |k| draws[k]);
            metropolis_apply(&cells, &mut rev, 3, &probs, ScanOrder::Reverse, |k| draws[k]);
            assert_eq!(fwd, rev);
        }
    }

    #[test]
    fn one_step_matches_hand_enumeration() {
        // N = 4, [1,0,1,0], M = 1, beta = 1, c0*dt = 0.5. Each car sees the
        // other car in its window, so both move independently with p = 0.5/e.
        let p = params(4, 1, 1.0, 1.0, 0.5);
        let pm = 0.5 * (-1.0f64).exp();
        let expected = [1.0 - pm, pm, 1.0 - pm, pm];
        let s = state(&[1, 0, 1, 0]);
        let trials = 100_000;
        let mut rng = RngStream::new(2024);
        let mut counts = [0usize; 4];
        for _ in 0..trials {
            let next = metropolis_step(&s, &p, &mut rng);
            for (c, &v) in counts.iter_mut().zip(next.cells()) {
                *c += v as usize;
            }
        }
        for k in 0..4 {
            let mean = counts[k] as f64 / trials as f64;
            let sd = (expected[k] * (1.0 - expected[k]) / trials as f64).sqrt();
            assert!(
                (mean - expected[k]).abs() < 4.0 * sd,
                "cell {k}: {mean} vs {}",
                expected[k]
            );
        }
    }

    #[test]
    fn kmc_single_move() {
        let p = params(2, 0, 0.0, 2.0, 0.1);
        let mut rng = RngStream::new(3);
        let mut total = 0.0;
        let trials = 20_000;
        for _ in 0..trials {
            match kmc_step(&state(&[1, 0]), &p, &mut rng) {
                KmcOutcome::Moved {
                    state,
                    waiting_time,
                    from,
                } => {
                    assert_eq!(state.cells(), &[0, 1]);
                    assert_eq!(from, 0);
                    total += waiting_time;
                }
                KmcOutcome::Absorbing => panic!("unexpected gridlock"),
            }
        }
        let mean = total / trials as f64;
        // Exp(2): mean 0.5, sd of the mean 0.5/sqrt(n)
        assert!((mean - 0.5).abs() < 4.0 * 0.5 / (trials as f64).sqrt());
    }

    #[test]
    fn kmc_gridlock_is_absorbing() {
        let p = params(5, 2, 1.0, 1.0, 0.1);
        let mut rng = RngStream::new(4);
        assert_eq!(kmc_step(&state(&[1; 5]), &p, &mut rng), KmcOutcome::Absorbing);
    }

    #[test]
    fn kmc_selection_follows_rates() {
        // [1,0,1,0,0,0], M = 2, beta = 2: car 0 sees one car in cells 2..=3
        // (rate e^-1), car 2 sees none in cells 4..=5 (rate 1).
        let p = params(6, 2, 2.0, 1.0, 0.1);
        let s = state(&[1, 0, 1, 0, 0, 0]);
        let ra = (-1.0f64).exp();
        let rb = 1.0;
        assert_eq!(transition_rate(&s, 0, &p), ra);
        assert_eq!(transition_rate(&s, 2, &p), rb);
        let trials = 100_000;
        let mut rng = RngStream::new(5);
        let mut first = 0usize;
        for _ in 0..trials {
            if let KmcOutcome::Moved { from, .. } = kmc_step(&s, &p, &mut rng) {
                first += (from == 0) as usize;
            }
        }
        let expect = ra / (ra + rb);
        let frac = first as f64 / trials as f64;
        let sd = (expect * (1.0 - expect) / trials as f64).sqrt();
        assert!((frac - expect).abs() < 4.0 * sd, "{frac} vs {expect}");
    }

    #[test]
    fn engine_rates_stay_consistent() {
        let p = params(30, 4, 2.0, 1.0, 0.1);
        let mut rng = RngStream::new(6);
        let ic = red_light_ic(30, 3, 15).unwrap();
        let mut engine = KmcEngine::new(&ic, &p);
        for _ in 0..2000 {
            engine.step(&mut rng).unwrap();
            let snapshot = LatticeState::new(engine.cells().to_vec()).unwrap();
            for k in 0..30 {
                let expect = if snapshot.is_eligible(k) {
                    transition_rate(&snapshot, k, &p)
                } else {
                    0.0
                };
                assert_eq!(engine.rates[k], expect, "cell {k}");
            }
        }
    }

    #[test]
    fn red_light_examples() {
        let s = red_light_ic(700, 20, 60).unwrap();
        assert_eq!(car_count(&s), 41);
        assert_eq!(s.cells()[19], 1);
        assert_eq!(s.cells()[59], 1);
        assert_eq!(s.cells()[18], 0);
        assert_eq!(s.cells()[60], 0);
        assert_eq!(car_count(&red_light_ic(10, 4, 4).unwrap()), 1);
        let full = red_light_ic(8, 1, 8).unwrap();
        assert_eq!(car_count(&full), 8);
        let p = params(8, 1, 1.0, 1.0, 0.1);
        assert_eq!(kmc_step(&full, &p, &mut RngStream::new(0)), KmcOutcome::Absorbing);
        assert!(red_light_ic(10, 6, 5).is_err());
        assert_eq!(car_count(&LatticeState::empty(9).unwrap()), 0);
    }

    #[test]
    fn identical_seeds_identical_streams() {
        let mut a = RngStream::new(123);
        let mut b = RngStream::new(123);
        for _ in 0..100 {
            assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
        }
    }
}
