//! Potential, Hamiltonian and the energy-derived bounds of the leading pair.
//!
//! For the first follower the relative dynamics form a damped Hamiltonian
//! system with `H(x, y) = y^2 / 2 + P(x)` and
//! `P(x) = alpha * int_{X_inf}^{x} (V(s) - vbar) ds`. Since
//! `d/dx ln cosh(x - 2) = tanh(x - 2)`, the integral has the closed form
//! `alpha * (F(x) - F(X_inf))` with `F(x) = ln cosh(x - 2) + (tanh 2 - vbar) x`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ov_slope, ModelError, ModelParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnergyError {
    #[error("gap must be positive, got {0}")]
    NonPositiveGap(f64),
    #[error("shifted gap {u} must exceed -X_inf = {bound}")]
    ShiftedOutOfRange { u: f64, bound: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `ln cosh(z)` without overflow for large `|z|`.
fn ln_cosh(z: f64) -> f64 {
    let a = z.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

fn antiderivative(p: &ModelParams, x: f64) -> f64 {
    ln_cosh(x - 2.0) + (2f64.tanh() - p.vbar) * x
}

/// Closed form of `P`, also defined at `x = 0` (the limit from the right).
fn potential_unchecked(p: &ModelParams, x_inf: f64, x: f64) -> f64 {
    p.alpha * (antiderivative(p, x) - antiderivative(p, x_inf))
}

pub fn potential(p: &ModelParams, x: f64) -> Result<f64, EnergyError> {
    if !(x > 0.0) {
        return Err(EnergyError::NonPositiveGap(x));
    }
    p.validate()?;
    Ok(potential_unchecked(p, p.x_infinity(), x))
}

/// `P(u + X_inf)`, the potential centred on the equilibrium.
pub fn potential_shifted(p: &ModelParams, u: f64) -> Result<f64, EnergyError> {
    p.validate()?;
    let x_inf = p.x_infinity();
    if !(u > -x_inf) {
        return Err(EnergyError::ShiftedOutOfRange { u, bound: -x_inf });
    }
    Ok(potential_unchecked(p, x_inf, u + x_inf))
}

pub fn hamiltonian(p: &ModelParams, x: f64, y: f64) -> Result<f64, EnergyError> {
    Ok(0.5 * y * y + potential(p, x)?)
}

/// Energy dissipation rate `-(alpha + beta / x^2) y^2`.
#[allow(non_snake_case)]
pub fn dH_dt(p: &ModelParams, x: f64, y: f64) -> Result<f64, EnergyError> {
    if !(x > 0.0) {
        return Err(EnergyError::NonPositiveGap(x));
    }
    Ok(-(p.alpha + p.beta / (x * x)) * y * y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Delta1Source {
    /// Left root of `P(x) = h0`.
    Energy,
    /// Smallest gap observed along a simulated trajectory.
    Empirical,
    /// Neither available yet.
    Unavailable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyBudget {
    pub x_infinity: f64,
    pub h_circ: f64,
    pub y_bar: f64,
    /// Upper gap bound from `P(x_bar) = h0` on `(X_inf, inf)`.
    pub x_bar: f64,
    /// The value `h0` itself, reported next to `x_bar` for comparison.
    pub x_bar_literal: f64,
    pub delta_1: Option<f64>,
    pub delta_1_source: Delta1Source,
    /// `P(0+)`: the energy above which no energy-based gap floor exists.
    pub p_at_zero: f64,
    /// `alpha * min V'` over the closed gap interval `[delta_1, x_bar]`.
    pub k_sc: f64,
    pub k_lower: f64,
    pub k_upper: f64,
    /// `K = (alpha + beta / x_bar^2) / 2`.
    pub k_dissipation: f64,
    /// `K / k_upper`.
    pub gronwall_rate: f64,
}

/// Root of a monotone function on `[lo, hi]` given opposite signs at the ends.
fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `min V'` over `[a, b]`: a grid scan refined with the endpoints, where the
/// minimum of the unimodal `sech^2(x - 2)` is attained.
fn min_ov_slope(a: f64, b: f64) -> f64 {
    const GRID: usize = 10_000;
    let grid_min = (0..=GRID)
        .map(|i| ov_slope(a + (b - a) * i as f64 / GRID as f64))
        .fold(f64::INFINITY, f64::min);
    grid_min.min(ov_slope(a)).min(ov_slope(b))
}

impl EnergyBudget {
    fn refresh_constants(&mut self, p: &ModelParams) {
        let lo = self.delta_1.unwrap_or(0.0);
        self.k_sc = p.alpha * min_ov_slope(lo, self.x_bar);
        self.k_upper = p.alpha.max(0.5);
        self.k_lower = 0.5f64.min(0.5 * self.k_sc);
        self.k_dissipation = 0.5 * (p.alpha + p.beta / (self.x_bar * self.x_bar));
        self.gronwall_rate = self.k_dissipation / self.k_upper;
    }

    /// Replace an unavailable energy-based `delta_1` with an observed minimum gap.
    pub fn with_empirical_delta_1(mut self, p: &ModelParams, observed_min: f64) -> Self {
        if self.delta_1_source != Delta1Source::Energy {
            self.delta_1 = Some(observed_min);
            self.delta_1_source = Delta1Source::Empirical;
            self.refresh_constants(p);
        }
        self
    }

    /// Domain `C` in shifted coordinates: `(delta_1 - X_inf, x_bar - X_inf)` in `u`.
    pub fn shifted_gap_interval(&self) -> Option<(f64, f64)> {
        self.delta_1
            .map(|d| (d - self.x_infinity, self.x_bar - self.x_infinity))
    }
}

/// Energy constants for the leading pair started at `(x0, y0) = (X_1, Y_1)`.
pub fn energy_budget(p: &ModelParams, x0: f64, y0: f64) -> Result<EnergyBudget, EnergyError> {
    p.validate()?;
    if !(x0 > 0.0) || !y0.is_finite() {
        return Err(ModelError::Validation(format!("inadmissible initial data ({x0}, {y0})")).into());
    }
    let (ylo, yhi) = p.relative_speed_bounds();
    if !(y0 > ylo && y0 <= yhi) {
        return Err(ModelError::Validation(format!(
            "initial relative speed {y0} outside ({ylo}, {yhi}]"
        ))
        .into());
    }
    let x_inf = p.x_infinity();
    let pot = |x: f64| potential_unchecked(p, x_inf, x);
    let h = (0.5 * y0 * y0 + pot(x0)).max(0.0);
    let p_at_zero = pot(0.0);

    let x_bar = if h == 0.0 {
        x_inf
    } else {
        let mut hi = x_inf + 1.0;
        while pot(hi) < h {
            hi = x_inf + 2.0 * (hi - x_inf);
        }
        bisect(x_inf, hi, |x| pot(x) - h)
    };
    let (delta_1, source) = if h == 0.0 {
        (Some(x_inf), Delta1Source::Energy)
    } else if h < p_at_zero {
        (Some(bisect(0.0, x_inf, |x| pot(x) - h)), Delta1Source::Energy)
    } else {
        (None, Delta1Source::Unavailable)
    };

    let mut b = EnergyBudget {
        x_infinity: x_inf,
        h_circ: h,
        y_bar: (2.0 * h).sqrt(),
        x_bar,
        x_bar_literal: h,
        delta_1,
        delta_1_source: source,
        p_at_zero,
        k_sc: 0.0,
        k_lower: 0.0,
        k_upper: 0.0,
        k_dissipation: 0.0,
        gronwall_rate: 0.0,
    };
    b.refresh_constants(p);
    Ok(b)
}
