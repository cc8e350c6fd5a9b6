//! Finite-volume solver for the nonlocal conservation law
//! `rho_t + (v0 * exp(-beta * A[rho^{d+1}]) * rho * (1 - rho))_x = 0`,
//! where `A` averages over the look-ahead length `L` ahead of each point.
//!
//! The look-ahead average of cell `k` uses cells `k+2 ..= k+m+1` with
//! `m = ceil(L / dx)`, the same offset as the lattice potential, and the
//! interface flux `F_{k+1/2} = v0 * exp(-beta * A_k) * rho_k * (1 - rho_{k+1})`
//! is upwinded from the donor cell. With `dx = h` and `d = 0` one step is a
//! forward-Euler step of the exponential-of-mean mesoscopic model.

use crate::error::{Error, Result};

pub const MAX_COURANT: f64 = 0.9;

/// Cell averages on a periodic domain of length `D`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    rho_bar: Vec<f64>,
    domain_len: f64,
    look_ahead_len: f64,
    dx: f64,
    time: f64,
}

impl GridField {
    pub fn new(rho_bar: Vec<f64>, domain_len: f64, look_ahead_len: f64) -> Result<Self> {
        let n = rho_bar.len();
        if n < 2 {
            return Err(Error::InvalidState(format!("grid needs at least 2 cells, got {n}")));
        }
        if !(domain_len.is_finite() && domain_len > 0.0) {
            return Err(Error::InvalidParams(format!(
                "domain length must be positive, got {domain_len}"
            )));
        }
        let dx = domain_len / n as f64;
        if look_ahead_len.is_nan() || look_ahead_len < dx * (1.0 - 1e-12) || look_ahead_len >= domain_len {
            return Err(Error::InvalidParams(format!(
                "look-ahead length {look_ahead_len} must satisfy dx = {dx} <= L < D = {domain_len}"
            )));
        }
        if let Some(k) = rho_bar.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidState(format!(
                "rho_bar[{k}] = {} outside [0, 1]",
                rho_bar[k]
            )));
        }
        Ok(Self {
            rho_bar,
            domain_len,
            look_ahead_len,
            dx,
            time: 0.0,
        })
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn rho_bar(&self) -> &[f64] {
        &self.rho_bar
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn domain_len(&self) -> f64 {
        self.domain_len
    }

    pub fn look_ahead_len(&self) -> f64 {
        self.look_ahead_len
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Center of 0-based cell `k`.
    pub fn center(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dx
    }

    /// Number of cells in the look-ahead average.
    pub fn window_cells(&self) -> usize {
        ((self.look_ahead_len / self.dx) - 1e-9).ceil().max(1.0) as usize
    }

    /// Total mass `sum rho_bar * dx`.
    pub fn mass(&self) -> f64 {
        self.rho_bar.iter().sum::<f64>() * self.dx
    }
}

/// Quadrature of `(1/L) * int_0^L rho_bar^{d+1}(x_k + y) dy` over the look-ahead cells.
pub fn nonlocal_exponent(field: &GridField, k: usize, d: f64) -> f64 {
    let n = field.rho_bar.len();
    let m = field.window_cells();
    let p = d + 1.0;
    let sum: f64 = (1..=m)
        .map(|i| {
            let r = field.rho_bar[(k + i + 1) % n];
            if d == 0.0 {
                r
            } else {
                r.powf(p)
            }
        })
        .sum();
    sum / m as f64
}

/// Point flux `v0 * exp(-beta * A_k) * rho_k * (1 - rho_k)`.
pub fn nonlocal_flux(field: &GridField, k: usize, v0: f64, beta: f64, d: f64) -> f64 {
    let r = field.rho_bar[k];
    v0 * slowdown(field, k, beta, d) * r * (1.0 - r)
}

fn slowdown(field: &GridField, k: usize, beta: f64, d: f64) -> f64 {
    if beta == 0.0 {
        1.0
    } else {
        (-beta * nonlocal_exponent(field, k, d)).exp()
    }
}

/// One conservative upwind step of length `dt`.
pub fn fv_step(field: &GridField, v0: f64, beta: f64, d: f64, dt: f64) -> Result<GridField> {
    let courant = dt * v0 / field.dx;
    if courant > MAX_COURANT {
        return Err(Error::Cfl {
            courant,
            limit: MAX_COURANT,
        });
    }
    if d.is_nan() || d < 0.0 {
        return Err(Error::InvalidParams(format!("exponent d must be >= 0, got {d}")));
    }
    let n = field.rho_bar.len();
    let rho = &field.rho_bar;
    // flux[k] sits on the interface between cells k and k+1
    let flux: Vec<f64> = (0..n)
        .map(|k| v0 * slowdown(field, k, beta, d) * rho[k] * (1.0 - rho[(k + 1) % n]))
        .collect();
    let ratio = dt / field.dx;
    let next = (0..n)
        .map(|k| rho[k] - ratio * (flux[k] - flux[(k + n - 1) % n]))
        .collect();
    Ok(GridField {
        rho_bar: next,
        time: field.time + dt,
        ..*field
    })
}

/// Advance with equal steps no longer than `max_dt`, returning the field at each record time.
pub fn evolve(
    field: &GridField,
    v0: f64,
    beta: f64,
    d: f64,
    record_times: &[f64],
    max_dt: f64,
) -> Result<Vec<GridField>> {
    let mut current = field.clone();
    let mut out = Vec::with_capacity(record_times.len());
    for &target in record_times {
        let span = target - current.time;
        if span < -1e-12 {
            return Err(Error::InvalidParams(format!(
                "record time {target} precedes current time {}",
                current.time
            )));
        }
        let steps = (span / max_dt - 1e-9).ceil().max(0.0) as usize;
        if steps > 0 {
            let dt = span / steps as f64;
            for _ in 0..steps {
                current = fv_step(&current, v0, beta, d, dt)?;
            }
        }
        current.time = target;
        out.push(current.clone());
    }
    Ok(out)
}
