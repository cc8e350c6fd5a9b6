//! Mesoscopic ODE models for the expected occupancies `rho_k`.
//!
//! All three variants share the flux form
//! `d rho_k/dt = c0 * (q_{k-1} - q_k)` with outflow `q_k = rho_k (1 - rho_{k+1}) * F_k`,
//! and differ only in the look-ahead factor `F_k` built from cells `k+2 ..= k+M+1`:
//!
//! * `Old`: `exp(-beta * I_k)`, `I_k` the window mean of `rho`;
//! * `New`: `prod_j [1 + rho_j (exp(-beta') - 1)]`, `beta' = beta / M`;
//! * `Empirical`: `prod_j [1 + rho_j (exp(-beta' rho_j^d) - 1)]`.
//!
//! Writing the right-hand side as a flux difference makes the ring sum telescope.

use crate::error::{Error, Result};
use crate::lattice::{LatticeState, ModelParams};

/// Window length above which products of factors are summed in log space.
const LOG_SPACE_MIN_WINDOW: usize = 17;
/// Tolerance on `rho` leaving `[0, 1]` during integration.
pub const RANGE_EPS: f64 = 1e-9;
/// Largest allowed `c0 * dt_ode`.
pub const MAX_C0_DT_ODE: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MesoVariant {
    Old,
    New,
    Empirical,
}

impl MesoVariant {
    /// Source label used in CSV output.
    pub fn label(self) -> &'static str {
        match self {
            MesoVariant::Old => "meso_old",
            MesoVariant::New => "meso_new",
            MesoVariant::Empirical => "meso_emp",
        }
    }
}

/// Expected occupancies on the ring.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityField {
    rho: Vec<f64>,
    time: f64,
}

impl DensityField {
    pub fn new(rho: Vec<f64>) -> Result<Self> {
        if rho.len() < 2 {
            return Err(Error::InvalidState(format!(
                "density field needs at least 2 cells, got {}",
                rho.len()
            )));
        }
        if let Some(k) = rho.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidState(format!("rho[{k}] = {} outside [0, 1]", rho[k])));
        }
        Ok(Self { rho, time: 0.0 })
    }

    pub fn from_state(state: &LatticeState) -> Self {
        Self {
            rho: state.cells().iter().map(|&c| c as f64).collect(),
            time: state.time(),
        }
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn mass(&self) -> f64 {
        self.rho.iter().sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Factor {
    Old,
    New,
    Empirical(f64),
}

#[inline]
fn wrap(k: isize, n: usize) -> usize {
    k.rem_euclid(n as isize) as usize
}

/// `prod_{i=1..M} [1 + rho_{k+i+1} (exp(-beta' * w) - 1)]` with `w = 1`, or
/// `w = rho^d` when `exponent` is given.
pub fn product_factor(rho: &[f64], k: usize, look_ahead: usize, beta_prime: f64, exponent: Option<f64>) -> f64 {
    let n = rho.len();
    let uniform = (-beta_prime).exp() - 1.0;
    let term = |i: usize| {
        let x = rho[(k + i + 1) % n];
        let e = match exponent {
            Some(d) => (-beta_prime * x.clamp(0.0, 1.0).powf(d)).exp() - 1.0,
            None => uniform,
        };
        1.0 + x * e
    };
    if look_ahead >= LOG_SPACE_MIN_WINDOW {
        (1..=look_ahead).map(|i| term(i).ln()).sum::<f64>().exp()
    } else {
        (1..=look_ahead).map(term).product()
    }
}

/// `I_k`: mean of `rho` over the look-ahead window of cell `k`.
pub fn window_mean(rho: &[f64], k: usize, look_ahead: usize) -> f64 {
    let n = rho.len();
    (1..=look_ahead).map(|i| rho[(k + i + 1) % n]).sum::<f64>() / look_ahead as f64
}

fn factor(rho: &[f64], k: usize, params: &ModelParams, kind: Factor) -> f64 {
    if !params.has_potential() {
        return 1.0;
    }
    let m = params.look_ahead();
    match kind {
        Factor::Old => (-params.beta() * window_mean(rho, k, m)).exp(),
        Factor::New => product_factor(rho, k, m, params.beta_prime(), None),
        Factor::Empirical(d) => product_factor(rho, k, m, params.beta_prime(), Some(d)),
    }
}

#[inline]
fn outflow(rho: &[f64], k: usize, params: &ModelParams, kind: Factor) -> f64 {
    let n = rho.len();
    rho[k] * (1.0 - rho[(k + 1) % n]) * factor(rho, k, params, kind)
}

fn rhs_at(rho: &[f64], k: usize, params: &ModelParams, kind: Factor) -> f64 {
    let prev = wrap(k as isize - 1, rho.len());
    params.c0() * (outflow(rho, prev, params, kind) - outflow(rho, k, params, kind))
}

fn rhs_vec(rho: &[f64], params: &ModelParams, kind: Factor) -> Vec<f64> {
    let n = rho.len();
    let q: Vec<f64> = (0..n).map(|k| outflow(rho, k, params, kind)).collect();
    (0..n)
        .map(|k| params.c0() * (q[wrap(k as isize - 1, n)] - q[k]))
        .collect()
}

/// Right-hand side with the exponential-of-mean look-ahead factor.
pub fn old_rhs(rho: &[f64], params: &ModelParams) -> Vec<f64> {
    rhs_vec(rho, params, Factor::Old)
}

/// Right-hand side with the product-measure look-ahead factor.
pub fn new_rhs(rho: &[f64], params: &ModelParams) -> Vec<f64> {
    rhs_vec(rho, params, Factor::New)
}

/// Single-cell value of [`new_rhs`]; bit-identical to the vector entry.
pub fn new_rhs_at(rho: &[f64], k: usize, params: &ModelParams) -> f64 {
    rhs_at(rho, k, params, Factor::New)
}

/// Right-hand side without the look-ahead factor (as if `beta = 0`).
pub fn free_rhs_at(rho: &[f64], k: usize, params: &ModelParams) -> f64 {
    let n = rho.len();
    let prev = wrap(k as isize - 1, n);
    params.c0() * (rho[prev] * (1.0 - rho[k]) - rho[k] * (1.0 - rho[(k + 1) % n]))
}

/// Right-hand side with the density-dependent strength `beta' * rho^d` per factor.
pub fn empirical_rhs(rho: &[f64], params: &ModelParams, d: f64) -> Result<Vec<f64>> {
    check_exponent(d)?;
    Ok(rhs_vec(rho, params, Factor::Empirical(d)))
}

fn check_exponent(d: f64) -> Result<()> {
    if !d.is_finite() || d < 0.0 {
        return Err(Error::InvalidParams(format!(
            "empirical exponent d must be finite and >= 0, got {d}"
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MesoModel {
    variant: MesoVariant,
    params: ModelParams,
    d: f64,
}

impl MesoModel {
    pub fn new(variant: MesoVariant, params: ModelParams, d: f64) -> Result<Self> {
        check_exponent(d)?;
        Ok(Self { variant, params, d })
    }

    pub fn variant(&self) -> MesoVariant {
        self.variant
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn rhs(&self, rho: &[f64]) -> Vec<f64> {
        let kind = match self.variant {
            MesoVariant::Old => Factor::Old,
            MesoVariant::New => Factor::New,
            MesoVariant::Empirical => Factor::Empirical(self.d),
        };
        rhs_vec(rho, &self.params, kind)
    }
}

fn axpy(y: &[f64], a: f64, x: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(y, x)| y + a * x).collect()
}

fn rk4_step(model: &MesoModel, rho: &mut [f64], h: f64) {
    let k1 = model.rhs(rho);
    let k2 = model.rhs(&axpy(rho, 0.5 * h, &k1));
    let k3 = model.rhs(&axpy(rho, 0.5 * h, &k2));
    let k4 = model.rhs(&axpy(rho, h, &k3));
    for (i, r) in rho.iter_mut().enumerate() {
        *r += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Integrate with classical RK4 and return the field at each of `record_times`.
///
/// Between consecutive record times the interval is split into equal steps
/// no longer than `dt_ode`.
pub fn integrate(
    field: &DensityField,
    model: &MesoModel,
    record_times: &[f64],
    dt_ode: f64,
) -> Result<Vec<DensityField>> {
    let c0 = model.params.c0();
    if dt_ode.is_nan() || dt_ode <= 0.0 || dt_ode * c0 > MAX_C0_DT_ODE {
        return Err(Error::InvalidParams(format!(
            "dt_ode = {dt_ode} must satisfy 0 < dt_ode * c0 <= {MAX_C0_DT_ODE}"
        )));
    }
    if field.rho.len() != model.params.n_cells() {
        return Err(Error::InvalidState(format!(
            "field has {} cells, model expects {}",
            field.rho.len(),
            model.params.n_cells()
        )));
    }
    let mut rho = field.rho.clone();
    let mut time = field.time;
    let mut out = Vec::with_capacity(record_times.len());
    for &target in record_times {
        if target < time - 1e-12 {
            return Err(Error::InvalidParams(format!(
                "record time {target} precedes current time {time}"
            )));
        }
        let span = target - time;
        let steps = (span / dt_ode - 1e-9).ceil().max(0.0) as usize;
        if steps > 0 {
            let h = span / steps as f64;
            for s in 1..=steps {
                rk4_step(model, &mut rho, h);
                let now = time + s as f64 * h;
                if let Some(k) = rho.iter().position(|v| !(-RANGE_EPS..=1.0 + RANGE_EPS).contains(v)) {
                    return Err(Error::RangeViolation {
                        time: now,
                        cell: k + 1,
                        value: rho[k],
                        dt_ode,
                    });
                }
            }
        }
        time = target;
        out.push(DensityField { rho: rho.clone(), time });
    }
    Ok(out)
}
