//! Two-level crossing `H_s(Γ) = [[Γ, ε], [ε, −Γ]]` driven along its ground
//! state.
//!
//! With `χ = atan2(ε, Γ)` the eigenvectors in the real gauge with positive
//! first component are
//!
//! ```text
//! ground  = ( sin χ/2, −cos χ/2 ),  E = −√(Γ² + ε²)
//! excited = ( cos χ/2,  sin χ/2 ),  E = +√(Γ² + ε²)
//! ```
//!
//! so `‖∂_Γψ‖ = ε / (2(Γ² + ε²))` and the budget-saturating schedule is
//! `t(Γ) = arctan(Γ/ε) / (2ω)`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::driving::{trajectory_hamiltonian, HamiltonianSchedule, ResourceBudget};
use crate::error::{Error, Result};
use crate::gauge::gauge_fix;
use crate::state::{PureState, StateTrajectory};

/// Agreement required between the closed-form optimal generator and the
/// generic construction.
pub const LZ_GENERATOR_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LzScenario {
    /// Coupling; half the minimum gap.
    pub epsilon: f64,
    /// Sweep endpoint, `Γ ∈ [−Γ₀, Γ₀]`.
    pub gamma0: f64,
    pub omega_max: f64,
}

fn mixing_angle(epsilon: f64, gamma: f64) -> f64 {
    epsilon.atan2(gamma)
}

/// `dχ/dΓ`.
fn mixing_rate(epsilon: f64, gamma: f64) -> f64 {
    -epsilon / (gamma * gamma + epsilon * epsilon)
}

pub(crate) fn lz_hamiltonian(epsilon: f64, gamma: f64) -> DMatrix<C64> {
    DMatrix::from_row_slice(
        2,
        2,
        &[C64::new(gamma, 0.0), C64::new(epsilon, 0.0), C64::new(epsilon, 0.0), C64::new(-gamma, 0.0)],
    )
}

pub(crate) fn ground(epsilon: f64, gamma: f64) -> PureState {
    let h = 0.5 * mixing_angle(epsilon, gamma);
    PureState::from_real(&[h.sin(), -h.cos()])
}

pub(crate) fn excited(epsilon: f64, gamma: f64) -> PureState {
    let h = 0.5 * mixing_angle(epsilon, gamma);
    PureState::from_real(&[h.cos(), h.sin()])
}

/// `∂_Γ` of [`ground`].
pub(crate) fn ground_gamma_derivative(epsilon: f64, gamma: f64) -> PureState {
    let h = 0.5 * mixing_angle(epsilon, gamma);
    let r = 0.5 * mixing_rate(epsilon, gamma);
    PureState::from_real(&[r * h.cos(), r * h.sin()])
}

/// `∂_Γ` of [`excited`].
pub(crate) fn excited_gamma_derivative(epsilon: f64, gamma: f64) -> PureState {
    let h = 0.5 * mixing_angle(epsilon, gamma);
    let r = 0.5 * mixing_rate(epsilon, gamma);
    PureState::from_real(&[-r * h.sin(), r * h.cos()])
}

impl LzScenario {
    pub fn new(epsilon: f64, gamma0: f64, omega_max: f64) -> Result<Self> {
        let sc = Self { epsilon, gamma0, omega_max };
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("epsilon", self.epsilon), ("gamma0", self.gamma0), ("omega_max", self.omega_max)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn budget(&self) -> Result<ResourceBudget> {
        ResourceBudget::new(self.omega_max)
    }

    pub fn hamiltonian(&self, gamma: f64) -> DMatrix<C64> {
        lz_hamiltonian(self.epsilon, gamma)
    }

    pub fn ground_state(&self, gamma: f64) -> PureState {
        ground(self.epsilon, gamma)
    }

    pub fn excited_state(&self, gamma: f64) -> PureState {
        excited(self.epsilon, gamma)
    }

    /// Ground state as a function of `Γ ∈ [−Γ₀, Γ₀]`.
    pub fn ground_path(&self) -> StateTrajectory<PureState> {
        let e = self.epsilon;
        StateTrajectory::new((-self.gamma0, self.gamma0), move |g| ground(e, g))
            .with_derivative(move |g| ground_gamma_derivative(e, g))
    }

    /// Ground state along `Γ = ε sinh u`, `u ∈ [−U₀, U₀]`. The speed
    /// `‖∂_uψ‖ = 1/(2 cosh u)` stays smooth for large `Γ₀/ε`, where the
    /// `Γ` parameterization concentrates all motion near the crossing.
    pub fn ground_path_stretched(&self) -> StateTrajectory<PureState> {
        let e = self.epsilon;
        let u0 = (self.gamma0 / e).asinh();
        StateTrajectory::new((-u0, u0), move |u: f64| ground(e, e * u.sinh())).with_derivative(move |u: f64| {
            let d = ground_gamma_derivative(e, e * u.sinh());
            PureState::new(d.into_vector() * C64::new(e * u.cosh(), 0.0))
        })
    }

    /// `t(Γ) = arctan(Γ/ε) / (2ω)`, measured from the crossing.
    pub fn time_of_gamma(&self, gamma: f64) -> f64 {
        (gamma / self.epsilon).atan() / (2.0 * self.omega_max)
    }

    /// `Γ(t) = ε tan(2ωt)`.
    pub fn gamma_of_time(&self, t: f64) -> f64 {
        self.epsilon * (2.0 * self.omega_max * t).tan()
    }

    /// `t(Γ₀)`; the sweep runs over `[−t(Γ₀), t(Γ₀)]`.
    pub fn half_time(&self) -> f64 {
        self.time_of_gamma(self.gamma0)
    }

    pub fn total_time(&self) -> f64 {
        2.0 * self.half_time()
    }

    /// Ground state along the optimal schedule, indexed by time.
    ///
    /// `∂_tψ = −ω (cos χ/2, sin χ/2)`, which follows from
    /// `dΓ/dt = 2ω(Γ² + ε²)/ε`.
    pub fn ground_trajectory(&self) -> StateTrajectory<PureState> {
        let sc = *self;
        let t1 = self.half_time();
        StateTrajectory::new((-t1, t1), move |t| ground(sc.epsilon, sc.gamma_of_time(t))).with_derivative(move |t| {
            let h = 0.5 * mixing_angle(sc.epsilon, sc.gamma_of_time(t));
            PureState::from_real(&[-sc.omega_max * h.cos(), -sc.omega_max * h.sin()])
        })
    }

    /// `[[0, iω], [−iω, 0]]`.
    pub fn optimal_hamiltonian(&self) -> DMatrix<C64> {
        let w = self.omega_max;
        DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(0.0, w), C64::new(0.0, -w), C64::new(0.0, 0.0)])
    }

    /// Largest deviation between [`Self::optimal_hamiltonian`] and the generic
    /// construction on the gauge-fixed ground trajectory at `n` times.
    pub fn generator_discrepancy(&self, n: usize, n_gauge_samples: usize) -> Result<f64> {
        let g = gauge_fix(&self.ground_trajectory(), n_gauge_samples)?;
        let expected = self.optimal_hamiltonian();
        let (lo, hi) = g.domain();
        let mut worst = 0.0f64;
        for k in 0..n {
            let t = lo + (hi - lo) * k as f64 / (n.max(2) - 1) as f64;
            let h = trajectory_hamiltonian(&g, t, true)?;
            worst = worst.max((h - &expected).camax());
        }
        Ok(worst)
    }

    /// The constant optimal schedule on `[−t(Γ₀), t(Γ₀)]`, after checking it
    /// against the generic construction.
    pub fn optimal_schedule(&self) -> Result<HamiltonianSchedule<DMatrix<C64>>> {
        let worst = self.generator_discrepancy(64, 257)?;
        if worst > LZ_GENERATOR_TOL {
            return Err(Error::Consistency(format!(
                "closed-form LZ generator differs from trajectory construction by {worst:e}"
            )));
        }
        let t1 = self.half_time();
        Ok(HamiltonianSchedule::constant((-t1, t1), self.optimal_hamiltonian()))
    }
}

/// Linear sweep `Γ(t) = −Γ₀ + 2Γ₀ t/T` on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LzSweep {
    pub epsilon: f64,
    pub gamma0: f64,
    pub duration: f64,
}

impl LzSweep {
    /// Sweep time `2Γ₀/ε²` at which the sweep rate equals `ε²`, the
    /// crossover between sudden and adiabatic passage.
    pub fn adiabatic_timescale(epsilon: f64, gamma0: f64) -> f64 {
        2.0 * gamma0 / (epsilon * epsilon)
    }

    /// Sweep lasting `fraction` of the adiabatic timescale.
    pub fn with_fraction(epsilon: f64, gamma0: f64, fraction: f64) -> Result<Self> {
        let s = Self { epsilon, gamma0, duration: fraction * Self::adiabatic_timescale(epsilon, gamma0) };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("epsilon", self.epsilon), ("gamma0", self.gamma0), ("duration", self.duration)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn gamma(&self, t: f64) -> f64 {
        -self.gamma0 + 2.0 * self.gamma0 * t / self.duration
    }

    fn gamma_rate(&self) -> f64 {
        2.0 * self.gamma0 / self.duration
    }

    pub fn domain(&self) -> (f64, f64) {
        (0.0, self.duration)
    }

    /// `H_s(Γ(t))`.
    pub fn system_schedule(&self) -> HamiltonianSchedule<DMatrix<C64>> {
        let sw = *self;
        HamiltonianSchedule::new(self.domain(), move |t| Ok(lz_hamiltonian(sw.epsilon, sw.gamma(t))))
    }

    /// Instantaneous `[ground, excited]` eigenvectors in time.
    pub fn eigenbasis(&self) -> Vec<StateTrajectory<PureState>> {
        let sw = *self;
        let ground_path = StateTrajectory::new(self.domain(), move |t| ground(sw.epsilon, sw.gamma(t)))
            .with_derivative(move |t| {
                let d = ground_gamma_derivative(sw.epsilon, sw.gamma(t));
                PureState::new(d.into_vector() * C64::new(sw.gamma_rate(), 0.0))
            });
        let excited_path = StateTrajectory::new(self.domain(), move |t| excited(sw.epsilon, sw.gamma(t)))
            .with_derivative(move |t| {
                let d = excited_gamma_derivative(sw.epsilon, sw.gamma(t));
                PureState::new(d.into_vector() * C64::new(sw.gamma_rate(), 0.0))
            });
        vec![ground_path, excited_path]
    }
}
