//! Benchmark dynamical systems and the fixed-step integrator that samples them.

mod integrate;
pub mod period;
mod series;
mod systems;

pub use integrate::{simulate, simulate_with_substeps, Rk4};
pub use period::{empirical_period, mean_crossing_interval};
pub use series::TimeSeries;
pub use systems::{
    coefficients_from_terms, make_coupled, make_system, support_from_terms, CoupledKind, CoupledSpec, Coupling,
    Dynamics, SystemKind, SystemSpec,
};
