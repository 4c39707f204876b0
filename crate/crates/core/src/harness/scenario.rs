use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::integrator::IntegratorConfig;
use crate::model::{
    to_relative, CoordinateSystem, DifferenceState, ModelParams, OvflField, PlatoonState, RelativeState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputKind {
    Timeseries,
    Events,
    Monitors,
    Barrier,
    Energy,
}

impl OutputKind {
    pub const ALL: [OutputKind; 5] = [
        OutputKind::Timeseries,
        OutputKind::Events,
        OutputKind::Monitors,
        OutputKind::Barrier,
        OutputKind::Energy,
    ];
}

fn default_name() -> String {
    "scenario".into()
}

fn default_system() -> CoordinateSystem {
    CoordinateSystem::Relative
}

fn default_t_end() -> f64 {
    100.0
}

fn default_epsilon() -> f64 {
    0.1
}

fn default_outputs() -> Vec<OutputKind> {
    OutputKind::ALL.to_vec()
}

/// A simulation request. `initial` holds one `(position-like, velocity-like)`
/// pair per vehicle in the chosen coordinates: `(x_n, y_n)` for every vehicle
/// including the leader in absolute coordinates, `(X_n, Y_n)` or
/// `(xi_n, zeta_n)` for each follower otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    pub params: ModelParams,
    #[serde(default = "default_system")]
    pub coordinate_system: CoordinateSystem,
    pub initial: Vec<[f64; 2]>,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<OutputKind>,
}

pub const PRESETS: [&str; 5] = ["fig5", "fig6-converge", "fig6-oscillate", "fig8", "near-collision"];

impl Scenario {
    fn pair(name: &str, alpha: f64, beta: f64, vbar: f64, initial: [f64; 2], t_end: f64) -> Self {
        Self {
            name: name.into(),
            params: ModelParams { alpha, beta, vbar, n_vehicles: 2 },
            coordinate_system: CoordinateSystem::Relative,
            initial: vec![initial],
            t_end,
            integrator: IntegratorConfig::default(),
            epsilon: default_epsilon(),
            seed: 0,
            outputs: default_outputs(),
        }
        .resolved()
    }

    pub fn preset(name: &str) -> Option<Self> {
        let s = match name {
            "fig5" => Self::pair(name, 2.0, 1.0, 0.8, [0.5, -0.7], 200.0),
            "fig6-converge" => Self::pair(name, 3.0, 2.0, 1.3, [0.5, 1.0], 60.0),
            "fig6-oscillate" => Self::pair(name, 1.0, 1.0, 1.3, [0.5, 1.0], 60.0),
            "fig8" => Self {
                name: name.into(),
                params: ModelParams { alpha: 2.0, beta: 2.0, vbar: 0.8, n_vehicles: 3 },
                coordinate_system: CoordinateSystem::Difference,
                initial: vec![[1.5, 0.3], [0.15, -0.4]],
                ..Self::pair(name, 2.0, 2.0, 0.8, [0.0, 0.0], 60.0)
            },
            "near-collision" => Self {
                name: name.into(),
                params: ModelParams { alpha: 1.0, beta: 0.1, vbar: 0.8, n_vehicles: 3 },
                coordinate_system: CoordinateSystem::Difference,
                initial: vec![[1.65, 0.05], [0.98, -1.19]],
                ..Self::pair(name, 1.0, 0.1, 0.8, [0.0, 0.0], 60.0)
            },
            _ => return None,
        };
        Some(s.resolved())
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Parse {
            message: e.to_string(),
            line: e.line(),
            column: e.column(),
        })
    }

    /// A scenario file path, or the name of a built-in preset.
    pub fn load(arg: &str) -> Result<Self, HarnessError> {
        let path = Path::new(arg);
        if path.exists() {
            let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
            return Self::from_json(&text);
        }
        Self::preset(arg).ok_or_else(|| HarnessError::Io {
            path: arg.into(),
            message: format!("no such file and no preset of that name (presets: {})", PRESETS.join(", ")),
        })
    }

    /// Defaults filled in and the horizon copied into the integrator settings.
    pub fn resolved(&self) -> Self {
        let mut s = self.clone();
        s.integrator.t_end = s.t_end;
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Check every invariant and return the vector field with the flat initial state.
    pub fn validate(&self) -> Result<(OvflField, Vec<f64>), HarnessError> {
        let p = self.params;
        let field = OvflField::new(p, self.coordinate_system).map_err(HarnessError::validation)?;
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(HarnessError::Validation(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(HarnessError::Validation(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        self.resolved().integrator.validate().map_err(HarnessError::validation)?;

        let expected = match self.coordinate_system {
            CoordinateSystem::Absolute => p.n_vehicles,
            _ => p.followers(),
        };
        if self.initial.len() != expected {
            return Err(HarnessError::Validation(format!(
                "initial must list {expected} (position, velocity) pairs for {} vehicles in {:?} coordinates, got {}",
                p.n_vehicles,
                self.coordinate_system,
                self.initial.len()
            )));
        }
        if let Some(bad) = self.initial.iter().flatten().find(|v| !v.is_finite()) {
            return Err(HarnessError::Validation(format!("initial data must be finite, got {bad}")));
        }
        let pos: Vec<f64> = self.initial.iter().map(|q| q[0]).collect();
        let vel: Vec<f64> = self.initial.iter().map(|q| q[1]).collect();
        let relative = match self.coordinate_system {
            CoordinateSystem::Absolute => {
                let s = PlatoonState { t: 0.0, x: pos, y: vel };
                s.validate().map_err(HarnessError::validation)?;
                if s.y[0] != p.vbar {
                    return Err(HarnessError::Validation(format!(
                        "leader speed y_0 = {} must equal vbar = {}",
                        s.y[0], p.vbar
                    )));
                }
                to_relative(&s, p.vbar).map_err(HarnessError::validation)?
            }
            CoordinateSystem::Relative => RelativeState { t: 0.0, x: pos, y: vel },
            CoordinateSystem::Difference => {
                let s = DifferenceState { t: 0.0, xi: pos, zeta: vel };
                s.validate().map_err(HarnessError::validation)?;
                s.to_relative()
            }
        };
        relative.validate_admissible(&p).map_err(HarnessError::validation)?;
        let flat = self.initial.iter().map(|q| q[0]).chain(self.initial.iter().map(|q| q[1])).collect();
        Ok((field, flat))
    }

    pub fn wants(&self, kind: OutputKind) -> bool {
        self.outputs.contains(&kind)
    }
}
