//! U(1) gauge fixing of state trajectories.
//!
//! The Berry connection `A(s) = −i<∂_sψ|ψ>` is real for any norm-preserving
//! trajectory. Integrating it gives the phase `φ(s)`; the trajectory
//! `ψ̃ = e^{iφ}ψ` then satisfies the parallel-transport condition
//! `<∂_sψ̃|ψ̃> = 0`.

use std::cell::Cell;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::numeric::{cumulative_simpson, simpson, HermiteTable};
use crate::state::{Ket, StateTrajectory};

/// Largest tolerated real part of `<∂ψ|ψ>` (relative to `max(1, ‖∂ψ‖)`).
pub const CONNECTION_RESIDUE_TOL: f64 = 1e-8;
/// Largest tolerated `|<∂ψ̃|ψ̃>|` after gauge fixing.
pub const GAUGE_RESIDUAL_TOL: f64 = 1e-8;
pub const DEFAULT_GAUGE_SAMPLES: usize = 2048;

/// Connection value together with the part that should vanish.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Connection {
    pub value: f64,
    /// `|Re<∂ψ|ψ>|`; nonzero only if the trajectory leaks norm.
    pub residue: f64,
}

/// `A(s)` and its residue, without the tolerance check.
pub fn connection_with_residue<K: Ket>(traj: &StateTrajectory<K>, s: f64) -> Result<Connection> {
    let psi = traj.eval(s);
    let dpsi = traj.velocity(s);
    let raw = dpsi.inner(&psi)?;
    let scale = dpsi.norm().max(1.0);
    // −i·(x + iy) = y − ix
    Ok(Connection { value: raw.im, residue: raw.re.abs() / scale })
}

/// Berry connection `−i<∂_sψ|ψ>` at `s`.
pub fn berry_connection<K: Ket>(traj: &StateTrajectory<K>, s: f64) -> Result<f64> {
    let c = connection_with_residue(traj, s)?;
    if c.residue > CONNECTION_RESIDUE_TOL {
        return Err(Error::NonUnitaryTrajectory { s, residue: c.residue });
    }
    Ok(c.value)
}

/// Open-path phase `∫_{s0}^{s1} A(s) ds` by composite Simpson.
pub fn gauge_phase<K: Ket>(traj: &StateTrajectory<K>, s0: f64, s1: f64, n_steps: usize) -> Result<f64> {
    if s0 == s1 {
        return Ok(0.0);
    }
    simpson(|s| berry_connection(traj, s), s0, s1, n_steps)
}

/// Trajectory carrying the phase that removes its Berry connection.
#[derive(Clone)]
pub struct GaugeFixedTrajectory<K> {
    base: StateTrajectory<K>,
    phase: HermiteTable,
    max_connection_residue: f64,
    max_gauge_residual: f64,
}

impl<K: Ket> fmt::Debug for GaugeFixedTrajectory<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GaugeFixedTrajectory")
            .field("base", &self.base)
            .field("samples", &self.phase.x().len())
            .field("max_connection_residue", &self.max_connection_residue)
            .field("max_gauge_residual", &self.max_gauge_residual)
            .finish()
    }
}

/// Gauge-fix `traj` on `n_samples` equally spaced lattice points, with
/// `φ = 0` at the start of the domain.
///
/// `φ` is accumulated by Simpson quadrature on the lattice and interpolated by
/// cubic Hermite segments whose slopes are the connection itself; the rate
/// `φ̇(s)` is evaluated pointwise from the connection. The gauge condition is
/// verified at every lattice point.
pub fn gauge_fix<K: Ket>(traj: &StateTrajectory<K>, n_samples: usize) -> Result<GaugeFixedTrajectory<K>> {
    if n_samples < 2 {
        return Err(Error::Invalid(format!("gauge_fix needs at least 2 samples, got {n_samples}")));
    }
    let (lo, hi) = traj.domain();
    let (nodes, phase, rate, max_residue) = if hi > lo {
        let max_residue = Cell::new(0.0f64);
        let integral = cumulative_simpson(
            |s| {
                let c = connection_with_residue(traj, s)?;
                if c.residue > CONNECTION_RESIDUE_TOL {
                    return Err(Error::NonUnitaryTrajectory { s, residue: c.residue });
                }
                max_residue.set(max_residue.get().max(c.residue));
                Ok(c.value)
            },
            lo,
            hi,
            n_samples - 1,
        )?;
        (integral.nodes, integral.integral, integral.integrand, max_residue.get())
    } else {
        // Degenerate domain: a single instant, phase pinned at zero.
        let c = connection_with_residue(traj, lo)?;
        (vec![lo, lo + 1.0], vec![0.0, 0.0], vec![c.value, c.value], c.residue)
    };
    let mut fixed = GaugeFixedTrajectory {
        base: traj.clone(),
        phase: HermiteTable::new(nodes, phase, rate)?,
        max_connection_residue: max_residue,
        max_gauge_residual: 0.0,
    };
    let mut worst = (0.0f64, lo);
    for &s in fixed.phase.x().iter().filter(|&&s| s <= hi) {
        let r = fixed.gauge_residual(s)?;
        if r > worst.0 {
            worst = (r, s);
        }
    }
    if worst.0 > GAUGE_RESIDUAL_TOL {
        return Err(Error::GaugeResidual { residual: worst.0, at: worst.1 });
    }
    fixed.max_gauge_residual = worst.0;
    Ok(fixed)
}

impl<K: Ket> GaugeFixedTrajectory<K> {
    pub fn base(&self) -> &StateTrajectory<K> {
        &self.base
    }

    pub fn domain(&self) -> (f64, f64) {
        self.base.domain()
    }

    /// Lattice points on which `φ` was accumulated.
    pub fn lattice(&self) -> &[f64] {
        self.phase.x()
    }

    /// Accumulated phases at the lattice points.
    pub fn lattice_phases(&self) -> &[f64] {
        self.phase.y()
    }

    pub fn max_connection_residue(&self) -> f64 {
        self.max_connection_residue
    }

    pub fn max_gauge_residual(&self) -> f64 {
        self.max_gauge_residual
    }

    /// `φ(s)`.
    pub fn phase(&self, s: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if hi == lo {
            return Ok(0.0);
        }
        self.phase.eval(s)
    }

    /// `φ̇(s) = A(s)`.
    pub fn phase_rate(&self, s: f64) -> Result<f64> {
        berry_connection(&self.base, s)
    }

    /// `ψ̃(s) = e^{iφ(s)} ψ(s)`.
    pub fn state(&self, s: f64) -> Result<K> {
        Ok(self.base.eval(s).scale(C64::from_polar(1.0, self.phase(s)?)))
    }

    /// `∂_sψ̃ = e^{iφ}(∂_sψ + iφ̇ψ)`.
    pub fn derivative(&self, s: f64) -> Result<K> {
        let psi = self.base.eval(s);
        let dpsi = self.base.velocity(s);
        let rate = self.phase_rate(s)?;
        let u = C64::from_polar(1.0, self.phase(s)?);
        dpsi.combine(u, &psi, C64::new(0.0, rate) * u)
    }

    /// `|<∂_sψ̃|ψ̃>|`.
    pub fn gauge_residual(&self, s: f64) -> Result<f64> {
        Ok(self.derivative(s)?.inner(&self.state(s)?)?.norm())
    }

    /// The gauge-fixed states as a trajectory with analytic derivative.
    pub fn to_trajectory(&self) -> StateTrajectory<K> {
        let this = Arc::new(self.clone());
        let d = this.clone();
        StateTrajectory::new(self.domain(), move |s| this.state(s).expect("s inside gauge lattice"))
            .with_derivative(move |s| d.derivative(s).expect("s inside gauge lattice"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::PureState;
    use std::f64::consts::PI;

    fn latitude(theta: f64) -> StateTrajectory<PureState> {
        StateTrajectory::new((0.0, 2.0 * PI), move |phi: f64| {
            PureState::from_slice(&[
                C64::new((theta / 2.0).cos(), 0.0),
                C64::from_polar((theta / 2.0).sin(), phi),
            ])
        })
    }

    #[test]
    fn real_trajectory_has_zero_connection() {
        let traj = StateTrajectory::new((0.0, 1.0), |s: f64| PureState::from_real(&[s.cos(), s.sin()]));
        assert!(berry_connection(&traj, 0.4).unwrap().abs() < 1e-12);
    }

    #[test]
    fn latitude_connection_is_minus_sin_squared_half_theta() {
        for theta in [PI / 6.0, PI / 2.0, 2.0] {
            let a = berry_connection(&latitude(theta), 1.3).unwrap();
            assert!((a + (theta / 2.0).sin().powi(2)).abs() < 1e-9, "theta {theta}: {a}");
        }
    }

    #[test]
    fn latitude_phase_over_full_loop() {
        for theta in [PI / 6.0, PI / 2.0] {
            let phi = gauge_phase(&latitude(theta), 0.0, 2.0 * PI, 64).unwrap();
            assert!((phi + PI * (1.0 - theta.cos())).abs() < 1e-8, "{phi}");
        }
        assert_eq!(gauge_phase(&latitude(1.0), 0.3, 0.3, 8).unwrap(), 0.0);
    }

    #[test]
    fn gauge_fix_on_latitude_is_linear_phase() {
        let g = gauge_fix(&latitude(PI / 2.0), 257).unwrap();
        for s in [0.0, 0.5, 3.0, 2.0 * PI] {
            assert!((g.phase(s).unwrap() + s / 2.0).abs() < 1e-9, "{s}: {:e}", g.phase(s).unwrap() + s / 2.0);
            assert!(g.gauge_residual(s).unwrap() < 1e-8);
        }
        assert!(g.max_connection_residue() < 1e-10);
    }

    #[test]
    fn global_phase_ramp_is_removed() {
        let fixed = PureState::from_slice(&[C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let f2 = fixed.clone();
        let traj = StateTrajectory::new((0.0, 2.0), move |s: f64| f2.scale(C64::from_polar(1.0, 3.0 * s)));
        assert!((berry_connection(&traj, 1.0).unwrap() + 3.0).abs() < 1e-8);
        let g = gauge_fix(&traj, 101).unwrap();
        for s in [0.0, 0.77, 2.0] {
            assert!((g.phase(s).unwrap() + 3.0 * s).abs() < 1e-8);
            assert!(g.state(s).unwrap().max_abs_diff(&fixed).unwrap() < 1e-8);
        }
    }

    #[test]
    fn already_fixed_trajectory_has_zero_phase() {
        let traj = StateTrajectory::new((0.0, 1.0), |s: f64| PureState::from_real(&[s.cos(), s.sin()]));
        let g = gauge_fix(&traj, 33).unwrap();
        assert!(g.lattice_phases().iter().all(|p| p.abs() < 1e-14));
    }

    #[test]
    fn norm_leaking_trajectory_is_rejected() {
        let traj = StateTrajectory::new((0.0, 1.0), |s: f64| PureState::from_real(&[1.0 + s, 0.0]));
        assert!(matches!(
            berry_connection(&traj, 0.5),
            Err(Error::NonUnitaryTrajectory { .. })
        ));
        assert!(gauge_fix(&traj, 16).is_err());
    }

    #[test]
    fn simpson_phase_converges_at_fourth_order() {
        // connection −sin²(θ/2)·(1 + cos ϕ) from the ϕ ↦ ϕ + sin ϕ reparameterization
        let theta = 1.1f64;
        let sin2 = (theta / 2.0).sin().powi(2);
        let traj = latitude(theta).affine_reparam(0.0, 1.0, (0.0, 2.0));
        let warped = StateTrajectory::new((0.0, 2.0), move |u: f64| traj.eval(u + u.sin()));
        let exact = -sin2 * (2.0 + 2f64.sin());
        let e1 = (gauge_phase(&warped, 0.0, 2.0, 8).unwrap() - exact).abs();
        let e2 = (gauge_phase(&warped, 0.0, 2.0, 16).unwrap() - exact).abs();
        assert!(e1 / e2 > 12.0, "{e1} {e2}");
    }
}
