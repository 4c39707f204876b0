//! Vector fields of the optimal velocity follow-the-leader (OVFL) model.
//!
//! Three coordinate systems are supported:
//!
//! * absolute `(x_n, y_n)`, `n = 0..=N`, vehicle 0 being the leader;
//! * leader-relative `(X_n, Y_n) = (x_0 - x_n, vbar - y_n)`, `n = 1..=N`;
//! * pairwise difference `(xi_n, zeta_n) = (X_n - X_{n-1}, Y_n - Y_{n-1})`, with `X_0 = Y_0 = 0`.
//!
//! States are stored flat as `[positions..., velocities...]` when handed to
//! the integrator; see [`CoordinateSystem::dim`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `V(inf) = 1 - tanh(-2) = 1 + tanh(2)`.
pub const V_MAX: f64 = 1.964_027_580_075_817;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{what} = {value} is outside the admissible interval ({lo}, {hi})")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("singular gap {gap} for vehicle {index}")]
    Singularity { index: usize, gap: f64 },
    #[error("invalid state: {0}")]
    Validation(String),
}

/// Optimal velocity curve `V(x) = tanh(x - 2) - tanh(-2)`.
pub fn ov_value(gap: f64) -> f64 {
    (gap - 2.0).tanh() + 2f64.tanh()
}

/// Derivative `V'(x) = sech^2(x - 2)`.
pub fn ov_slope(gap: f64) -> f64 {
    let c = (gap - 2.0).cosh();
    1.0 / (c * c)
}

/// Inverse of [`ov_value`] on `(0, V_MAX)`: `2 + artanh(v + tanh(-2))`.
pub fn ov_inverse(speed: f64) -> Result<f64, ModelError> {
    if !(speed > 0.0 && speed < V_MAX) {
        return Err(ModelError::Domain {
            what: "optimal velocity",
            value: speed,
            lo: 0.0,
            hi: V_MAX,
        });
    }
    Ok(2.0 + (speed - 2f64.tanh()).atanh())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Relaxation gain toward the optimal velocity.
    pub alpha: f64,
    /// Follow-the-leader gain multiplying `dv / gap^2`.
    pub beta: f64,
    /// Constant leader speed.
    pub vbar: f64,
    /// Total vehicle count including the leader (`N + 1`).
    pub n_vehicles: usize,
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64, vbar: f64, n_vehicles: usize) -> Result<Self, ModelError> {
        let p = Self {
            alpha,
            beta,
            vbar,
            n_vehicles,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(ModelError::Domain {
                what: "alpha",
                value: self.alpha,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(ModelError::Domain {
                what: "beta",
                value: self.beta,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        if !(self.vbar > 0.0 && self.vbar < V_MAX) {
            return Err(ModelError::Domain {
                what: "vbar",
                value: self.vbar,
                lo: 0.0,
                hi: V_MAX,
            });
        }
        if self.n_vehicles < 2 {
            return Err(ModelError::Validation(format!(
                "n_vehicles must be at least 2, got {}",
                self.n_vehicles
            )));
        }
        Ok(())
    }

    /// Number of followers `N`.
    pub fn followers(&self) -> usize {
        self.n_vehicles - 1
    }

    /// Equilibrium gap `X_inf = V^{-1}(vbar)`.
    pub fn x_infinity(&self) -> f64 {
        ov_inverse(self.vbar).expect("validated vbar")
    }

    /// Admissible relative speeds `Y_n` lie in `(vbar - V_MAX, vbar]`.
    pub fn relative_speed_bounds(&self) -> (f64, f64) {
        (self.vbar - V_MAX, self.vbar)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoordinateSystem {
    Absolute,
    Relative,
    Difference,
}

impl CoordinateSystem {
    /// Length of the flat state vector for `n_vehicles` total vehicles.
    pub fn dim(self, n_vehicles: usize) -> usize {
        match self {
            CoordinateSystem::Absolute => 2 * n_vehicles,
            CoordinateSystem::Relative | CoordinateSystem::Difference => 2 * (n_vehicles - 1),
        }
    }
}

/// Time derivative of a state in any of the three coordinate systems.
#[derive(Debug, Clone, PartialEq)]
pub struct StateRate {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatoonState {
    pub t: f64,
    /// Positions `x_0 > x_1 > ... > x_N`.
    pub x: Vec<f64>,
    /// Velocities, `y_0 = vbar`.
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeState {
    pub t: f64,
    /// `X_n = x_0 - x_n` for `n = 1..=N`.
    pub x: Vec<f64>,
    /// `Y_n = vbar - y_n` for `n = 1..=N`.
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceState {
    pub t: f64,
    /// Gaps `xi_n`.
    pub xi: Vec<f64>,
    /// Gap closing rates `zeta_n`.
    pub zeta: Vec<f64>,
}

fn check_lengths(a: &[f64], b: &[f64], what: &str) -> Result<(), ModelError> {
    if a.len() != b.len() || a.is_empty() {
        return Err(ModelError::Validation(format!(
            "{what}: position/velocity vectors must be nonempty and of equal length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

impl PlatoonState {
    pub fn validate(&self) -> Result<(), ModelError> {
        check_lengths(&self.x, &self.y, "platoon state")?;
        if self.x.len() < 2 {
            return Err(ModelError::Validation("platoon needs a leader and a follower".into()));
        }
        for n in 1..self.x.len() {
            let gap = self.x[n - 1] - self.x[n];
            if !(gap > 0.0) {
                return Err(ModelError::Validation(format!(
                    "positions must be strictly decreasing: x_{} - x_{} = {gap}",
                    n - 1,
                    n
                )));
            }
        }
        Ok(())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.x.iter().chain(&self.y).copied().collect()
    }

    pub fn from_flat(t: f64, flat: &[f64]) -> Self {
        let (x, y) = flat.split_at(flat.len() / 2);
        Self {
            t,
            x: x.to_vec(),
            y: y.to_vec(),
        }
    }
}

impl RelativeState {
    pub fn validate(&self) -> Result<(), ModelError> {
        check_lengths(&self.x, &self.y, "relative state")?;
        let mut prev = 0.0;
        for (n, &x) in self.x.iter().enumerate() {
            if !(x - prev > 0.0) {
                return Err(ModelError::Validation(format!(
                    "relative positions must satisfy 0 < X_1 < ... < X_N: X_{} - X_{} = {}",
                    n + 1,
                    n,
                    x - prev
                )));
            }
            prev = x;
        }
        Ok(())
    }

    /// Ordering plus the speed limits `Y_n in (vbar - V_MAX, vbar]`.
    pub fn validate_admissible(&self, p: &ModelParams) -> Result<(), ModelError> {
        self.validate()?;
        if self.x.len() != p.followers() {
            return Err(ModelError::Validation(format!(
                "expected {} followers, got {}",
                p.followers(),
                self.x.len()
            )));
        }
        let (lo, hi) = p.relative_speed_bounds();
        for (n, &y) in self.y.iter().enumerate() {
            if !(y > lo && y <= hi) {
                return Err(ModelError::Validation(format!(
                    "speed limit violated: Y_{} = {y} not in ({lo}, {hi}]",
                    n + 1
                )));
            }
        }
        Ok(())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.x.iter().chain(&self.y).copied().collect()
    }

    pub fn from_flat(t: f64, flat: &[f64]) -> Self {
        let (x, y) = flat.split_at(flat.len() / 2);
        Self {
            t,
            x: x.to_vec(),
            y: y.to_vec(),
        }
    }
}

impl DifferenceState {
    pub fn validate(&self) -> Result<(), ModelError> {
        check_lengths(&self.xi, &self.zeta, "difference state")?;
        for (n, &g) in self.xi.iter().enumerate() {
            if !(g > 0.0) {
                return Err(ModelError::Validation(format!("gap xi_{} = {g} must be positive", n + 1)));
            }
        }
        Ok(())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.xi.iter().chain(&self.zeta).copied().collect()
    }

    pub fn from_flat(t: f64, flat: &[f64]) -> Self {
        let (xi, zeta) = flat.split_at(flat.len() / 2);
        Self {
            t,
            xi: xi.to_vec(),
            zeta: zeta.to_vec(),
        }
    }

    pub fn to_relative(&self) -> RelativeState {
        let mut x = Vec::with_capacity(self.xi.len());
        let mut y = Vec::with_capacity(self.xi.len());
        let (mut sx, mut sy) = (0.0, 0.0);
        for (g, z) in self.xi.iter().zip(&self.zeta) {
            sx += g;
            sy += z;
            x.push(sx);
            y.push(sy);
        }
        RelativeState { t: self.t, x, y }
    }
}

pub fn to_relative(s: &PlatoonState, vbar: f64) -> Result<RelativeState, ModelError> {
    s.validate()?;
    let x0 = s.x[0];
    Ok(RelativeState {
        t: s.t,
        x: s.x[1..].iter().map(|x| x0 - x).collect(),
        y: s.y[1..].iter().map(|y| vbar - y).collect(),
    })
}

/// Inverse of [`to_relative`]; the leader is placed at `x0_initial + vbar * t`.
pub fn to_absolute(s: &RelativeState, x0_initial: f64, vbar: f64) -> Result<PlatoonState, ModelError> {
    s.validate()?;
    let x0 = x0_initial + vbar * s.t;
    let mut x = vec![x0];
    let mut y = vec![vbar];
    x.extend(s.x.iter().map(|xr| x0 - xr));
    y.extend(s.y.iter().map(|yr| vbar - yr));
    Ok(PlatoonState { t: s.t, x, y })
}

pub fn to_difference(s: &RelativeState) -> Result<DifferenceState, ModelError> {
    s.validate()?;
    Ok(DifferenceState {
        t: s.t,
        xi: differences(&s.x),
        zeta: differences(&s.y),
    })
}

fn differences(v: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    v.iter()
        .map(|&a| {
            let d = a - prev;
            prev = a;
            d
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub x_infinity: f64,
    pub states: RelativeState,
}

pub fn equilibrium(p: &ModelParams) -> Result<Equilibrium, ModelError> {
    p.validate()?;
    let x_inf = p.x_infinity();
    let n = p.followers();
    Ok(Equilibrium {
        x_infinity: x_inf,
        states: RelativeState {
            t: 0.0,
            x: (1..=n).map(|k| k as f64 * x_inf).collect(),
            y: vec![0.0; n],
        },
    })
}

fn guard_gap(index: usize, gap: f64) -> Result<f64, ModelError> {
    if gap > 0.0 && gap.is_finite() {
        Ok(gap)
    } else {
        Err(ModelError::Singularity { index, gap })
    }
}

/// Absolute-coordinate derivative written into `dx` (flat layout).
fn absolute_rhs(p: &ModelParams, s: &[f64], dx: &mut [f64]) -> Result<(), ModelError> {
    let m = s.len() / 2;
    let (x, y) = s.split_at(m);
    let (dpos, dvel) = dx.split_at_mut(m);
    dpos.copy_from_slice(y);
    dvel[0] = 0.0;
    for n in 1..m {
        let gap = guard_gap(n, x[n - 1] - x[n])?;
        dvel[n] = p.alpha * (ov_value(gap) - y[n]) + p.beta * (y[n - 1] - y[n]) / (gap * gap);
    }
    Ok(())
}

fn relative_rhs(p: &ModelParams, s: &[f64], dx: &mut [f64]) -> Result<(), ModelError> {
    let m = s.len() / 2;
    let (x, y) = s.split_at(m);
    let (dpos, dvel) = dx.split_at_mut(m);
    dpos.copy_from_slice(y);
    let (mut xp, mut yp) = (0.0, 0.0);
    for n in 0..m {
        let gap = guard_gap(n + 1, x[n] - xp)?;
        dvel[n] = -p.alpha * (ov_value(gap) + y[n] - p.vbar) - p.beta * (y[n] - yp) / (gap * gap);
        xp = x[n];
        yp = y[n];
    }
    Ok(())
}

fn difference_rhs(p: &ModelParams, s: &[f64], dx: &mut [f64]) -> Result<(), ModelError> {
    let m = s.len() / 2;
    let (xi, zeta) = s.split_at(m);
    let (dpos, dvel) = dx.split_at_mut(m);
    dpos.copy_from_slice(zeta);
    let g0 = guard_gap(1, xi[0])?;
    dvel[0] = -p.alpha * (ov_value(g0) - p.vbar) - p.alpha * zeta[0] - p.beta * zeta[0] / (g0 * g0);
    let mut prev_v = ov_value(g0);
    let mut prev_q = zeta[0] / (g0 * g0);
    for n in 1..m {
        let g = guard_gap(n + 1, xi[n])?;
        let v = ov_value(g);
        let q = zeta[n] / (g * g);
        dvel[n] = -p.alpha * (v - prev_v) - p.alpha * zeta[n] - p.beta * (q - prev_q);
        prev_v = v;
        prev_q = q;
    }
    Ok(())
}

fn split_rate(d: Vec<f64>) -> StateRate {
    let m = d.len() / 2;
    let mut position = d;
    let velocity = position.split_off(m);
    StateRate { position, velocity }
}

pub fn vf_absolute(p: &ModelParams, s: &PlatoonState) -> Result<StateRate, ModelError> {
    check_lengths(&s.x, &s.y, "platoon state")?;
    let flat = s.to_flat();
    let mut d = vec![0.0; flat.len()];
    absolute_rhs(p, &flat, &mut d)?;
    Ok(split_rate(d))
}

pub fn vf_relative(p: &ModelParams, s: &RelativeState) -> Result<StateRate, ModelError> {
    check_lengths(&s.x, &s.y, "relative state")?;
    let flat = s.to_flat();
    let mut d = vec![0.0; flat.len()];
    relative_rhs(p, &flat, &mut d)?;
    Ok(split_rate(d))
}

pub fn vf_difference(p: &ModelParams, s: &DifferenceState) -> Result<StateRate, ModelError> {
    check_lengths(&s.xi, &s.zeta, "difference state")?;
    let flat = s.to_flat();
    let mut d = vec![0.0; flat.len()];
    difference_rhs(p, &flat, &mut d)?;
    Ok(split_rate(d))
}

/// Right-hand side usable by the integrator.
pub trait VectorField {
    fn dim(&self) -> usize;

    fn eval(&self, t: f64, state: &[f64], deriv: &mut [f64]) -> Result<(), ModelError>;

    /// Smallest inter-vehicle gap of a state, if the system has gaps.
    fn min_gap(&self, _state: &[f64]) -> Option<f64> {
        None
    }

    /// Upper bound on the step size imposed by the collision singularity.
    fn singular_step_cap(&self, _state: &[f64], _coefficient: f64) -> Option<f64> {
        None
    }
}

/// The OVFL model in a chosen coordinate system.
#[derive(Debug, Clone, Copy)]
pub struct OvflField {
    pub params: ModelParams,
    pub system: CoordinateSystem,
    x_infinity: f64,
}

impl OvflField {
    pub fn new(params: ModelParams, system: CoordinateSystem) -> Result<Self, ModelError> {
        params.validate()?;
        Ok(Self {
            params,
            system,
            x_infinity: params.x_infinity(),
        })
    }

    pub fn x_infinity(&self) -> f64 {
        self.x_infinity
    }

    /// Gap of pair `n` (1-based) in the flat state.
    pub fn gap(&self, state: &[f64], n: usize) -> f64 {
        match self.system {
            CoordinateSystem::Absolute => state[n - 1] - state[n],
            CoordinateSystem::Relative => {
                if n == 1 {
                    state[0]
                } else {
                    state[n - 1] - state[n - 2]
                }
            }
            CoordinateSystem::Difference => state[n - 1],
        }
    }

    /// `(X_1, Y_1)` of the first follower regardless of coordinate system.
    pub fn first_pair(&self, state: &[f64]) -> (f64, f64) {
        let m = state.len() / 2;
        match self.system {
            CoordinateSystem::Absolute => (state[0] - state[1], self.params.vbar - state[m + 1]),
            CoordinateSystem::Relative | CoordinateSystem::Difference => (state[0], state[m]),
        }
    }

    /// Closing rate of pair `n` (1-based): `zeta_n`.
    pub fn gap_rate(&self, state: &[f64], n: usize) -> f64 {
        let m = state.len() / 2;
        match self.system {
            CoordinateSystem::Absolute => state[m + n - 1] - state[m + n],
            CoordinateSystem::Relative => {
                if n == 1 {
                    state[m]
                } else {
                    state[m + n - 1] - state[m + n - 2]
                }
            }
            CoordinateSystem::Difference => state[m + n - 1],
        }
    }

    fn pairs(&self) -> usize {
        self.params.followers()
    }
}

impl VectorField for OvflField {
    fn dim(&self) -> usize {
        self.system.dim(self.params.n_vehicles)
    }

    fn eval(&self, _t: f64, state: &[f64], deriv: &mut [f64]) -> Result<(), ModelError> {
        match self.system {
            CoordinateSystem::Absolute => absolute_rhs(&self.params, state, deriv),
            CoordinateSystem::Relative => relative_rhs(&self.params, state, deriv),
            CoordinateSystem::Difference => difference_rhs(&self.params, state, deriv),
        }
    }

    fn min_gap(&self, state: &[f64]) -> Option<f64> {
        (1..=self.pairs()).map(|n| self.gap(state, n)).reduce(f64::min)
    }

    fn singular_step_cap(&self, state: &[f64], coefficient: f64) -> Option<f64> {
        let gap = self.min_gap(state)?;
        if gap < 0.25 * self.x_infinity {
            Some(coefficient * gap * gap / self.params.beta)
        } else {
            None
        }
    }
}
