//! Optimal velocity follow-the-leader (OVFL) platoon simulation and
//! numerical checks of its collision boundary layer.

pub mod analysis;
pub mod energy;
pub mod harness;
pub mod integrator;
pub mod model;

pub use energy::{energy_budget, hamiltonian, potential, potential_shifted, EnergyBudget};
pub use integrator::{integrate, IntegratorConfig, Trajectory};
pub use model::{CoordinateSystem, ModelParams, OvflField};
