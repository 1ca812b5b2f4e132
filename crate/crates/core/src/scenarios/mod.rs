//! Closed-form scenarios with analytic cross-checks.

mod families;
mod gaussian;
mod lz;

pub use families::{latitude_basis, latitude_circle, random_smooth_trajectory, rotating_qubit_basis};
pub use gaussian::GaussianScenario;
pub use lz::{LzScenario, LzSweep, LZ_GENERATOR_TOL};
