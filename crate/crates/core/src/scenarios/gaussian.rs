//! Oscillator ground state moved and squeezed along `x(s) = μs`,
//! `ω(s) = ω₀/s²`, with `s` decreasing from 1 to `s_f` under the budget
//! `∫|ψ̇|² dz = ε²`.
//!
//! The packet is `ψ(s; z) = (mω/πħ)^{1/4} exp(−mω(z + x)²/(2ħ))`. Its
//! parameter speed is `‖∂_sψ‖ = 1/(η s)` with `η = √(2ħ/(μ²mω₀ + ħ))`, so
//! the optimal schedule is `s(t) = e^{−ηεt}` and `‖∂_tψ‖ = ε` throughout.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::driving::{HamiltonianSchedule, RankTwoKernel, ResourceBudget};
use crate::error::{Error, Result};
use crate::gauge::gauge_fix;
use crate::state::{Grid1d, GridWavefunction, StateTrajectory};

/// Default number of grid points.
pub const DEFAULT_GRID_POINTS: usize = 4096;
/// Half-widths (in units of the packet width) that must stay on the grid.
const GEOMETRY_HALF_WIDTHS: f64 = 6.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianScenario {
    pub m: f64,
    pub omega0: f64,
    pub mu: f64,
    #[serde(default = "unit")]
    pub hbar: f64,
    /// `ε` of the budget `∫|ψ̇|² dz = ε²`.
    pub eps_rate: f64,
    pub s_f: f64,
    #[serde(default)]
    pub grid: Option<Grid1d>,
}

fn unit() -> f64 {
    1.0
}

impl GaussianScenario {
    pub fn new(m: f64, omega0: f64, mu: f64, hbar: f64, eps_rate: f64, s_f: f64) -> Result<Self> {
        let sc = Self { m, omega0, mu, hbar, eps_rate, s_f, grid: None };
        sc.validate()?;
        Ok(sc)
    }

    pub fn with_grid(mut self, grid: Grid1d) -> Result<Self> {
        self.grid = Some(grid);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("m", self.m), ("omega0", self.omega0), ("hbar", self.hbar), ("eps_rate", self.eps_rate)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.mu.is_finite() {
            return Err(Error::Invalid(format!("mu must be finite, got {}", self.mu)));
        }
        if !(self.s_f > 0.0 && self.s_f < 1.0) {
            return Err(Error::Invalid(format!("s_f must lie in (0, 1), got {}", self.s_f)));
        }
        if let Some(grid) = &self.grid {
            grid.validate()?;
            self.check_geometry(grid)?;
        }
        Ok(())
    }

    pub fn eta(&self) -> f64 {
        (2.0 * self.hbar / (self.mu * self.mu * self.m * self.omega0 + self.hbar)).sqrt()
    }

    /// Amplitude width `√(ħ/(mω₀))` of the `s = 1` packet.
    pub fn sigma0(&self) -> f64 {
        (self.hbar / (self.m * self.omega0)).sqrt()
    }

    /// `z ∈ [−10σ₀ − μ, 10σ₀]` on [`DEFAULT_GRID_POINTS`] points.
    pub fn default_grid(&self) -> Grid1d {
        let w = 10.0 * self.sigma0();
        let lo = (-w - self.mu).min(-w);
        let hi = w.max(w - self.mu);
        Grid1d { z_min: lo, z_max: hi, n_points: DEFAULT_GRID_POINTS }
    }

    pub fn grid(&self) -> Grid1d {
        self.grid.unwrap_or_else(|| self.default_grid())
    }

    /// The packet centre `−μs` and width `σ₀s` are linear in `s`, so checking
    /// both endpoints covers the whole path.
    pub fn check_geometry(&self, grid: &Grid1d) -> Result<()> {
        for s in [self.s_f, 1.0] {
            let center = -self.mu * s;
            let reach = GEOMETRY_HALF_WIDTHS * self.sigma0() * s;
            if center - reach < grid.z_min || center + reach > grid.z_max {
                return Err(Error::Geometry(format!(
                    "packet at s = {s} spans [{}, {}], outside grid [{}, {}]",
                    center - reach,
                    center + reach,
                    grid.z_min,
                    grid.z_max
                )));
            }
        }
        Ok(())
    }

    fn beta(&self, s: f64) -> f64 {
        self.m * self.omega0 / (2.0 * self.hbar * s * s)
    }

    /// `ψ(s; z)`.
    pub fn amplitude(&self, s: f64, z: f64) -> f64 {
        let b = self.beta(s);
        let u = z + self.mu * s;
        (2.0 * b / std::f64::consts::PI).powf(0.25) * (-b * u * u).exp()
    }

    /// `∂_sψ(s; z) = ψ·(−1/(2s) + 2βu²/s − 2βμu)`, `u = z + μs`.
    pub fn amplitude_s_derivative(&self, s: f64, z: f64) -> f64 {
        let b = self.beta(s);
        let u = z + self.mu * s;
        self.amplitude(s, z) * (-0.5 / s + 2.0 * b * u * u / s - 2.0 * b * self.mu * u)
    }

    pub fn packet(&self, grid: &Grid1d, s: f64) -> GridWavefunction {
        let b = self.beta(s);
        let norm = (2.0 * b / std::f64::consts::PI).powf(0.25);
        GridWavefunction::from_fn(*grid, |z| {
            let u = z + self.mu * s;
            C64::new(norm * (-b * u * u).exp(), 0.0)
        })
    }

    /// `scale · ∂_sψ(s; ·)` on `grid`.
    fn packet_s_derivative(&self, grid: &Grid1d, s: f64, scale: f64) -> GridWavefunction {
        let b = self.beta(s);
        let norm = scale * (2.0 * b / std::f64::consts::PI).powf(0.25);
        GridWavefunction::from_fn(*grid, |z| {
            let u = z + self.mu * s;
            let factor = -0.5 / s + 2.0 * b * u * u / s - 2.0 * b * self.mu * u;
            C64::new(norm * (-b * u * u).exp() * factor, 0.0)
        })
    }

    /// The packet as a function of `s ∈ [s_f, 1]`.
    pub fn path(&self) -> StateTrajectory<GridWavefunction> {
        let grid = self.grid();
        let (a, b) = (self.clone(), self.clone());
        let g2 = grid;
        StateTrajectory::new((self.s_f, 1.0), move |s| a.packet(&grid, s))
            .with_derivative(move |s| b.packet_s_derivative(&g2, s, 1.0))
    }

    /// `s(t) = e^{−ηεt}`.
    pub fn s_of_t(&self, t: f64) -> f64 {
        (-self.eta() * self.eps_rate * t).exp()
    }

    /// `t(s) = −ln(s)/(ηε)`.
    pub fn t_of_s(&self, s: f64) -> f64 {
        -s.ln() / (self.eta() * self.eps_rate)
    }

    pub fn total_time(&self) -> f64 {
        self.t_of_s(self.s_f)
    }

    /// `ψ(z, t)` on the optimal schedule.
    pub fn state_at(&self, grid: &Grid1d, t: f64) -> GridWavefunction {
        self.packet(grid, self.s_of_t(t))
    }

    /// `∂_tψ(z, t) = −ηε s ∂_sψ`.
    pub fn state_time_derivative(&self, grid: &Grid1d, t: f64) -> GridWavefunction {
        let s = self.s_of_t(t);
        self.packet_s_derivative(grid, s, -self.eta() * self.eps_rate * s)
    }

    /// The packet along the optimal schedule, `t ∈ [0, t(s_f)]`.
    pub fn time_trajectory(&self) -> StateTrajectory<GridWavefunction> {
        let grid = self.grid();
        let g2 = grid;
        let (a, b) = (self.clone(), self.clone());
        StateTrajectory::new((0.0, self.total_time()), move |t| a.state_at(&grid, t))
            .with_derivative(move |t| b.state_time_derivative(&g2, t))
    }

    /// Budget in the units of the scenario.
    pub fn budget(&self) -> Result<ResourceBudget> {
        ResourceBudget::new(self.eps_rate)
    }

    /// Explicit kernel `<z|H(t)|z'>` in energy units:
    ///
    /// ```text
    /// iηε mω₀ (z' − z) E (μ + (z + z')E) (mω₀E²/πħ)^{1/2}
    ///   × exp(−mω₀(2μ² + E²(z² + z'²) + 2μE(z + z'))/(2ħ)),   E = e^{ηεt}
    /// ```
    pub fn explicit_kernel(&self, t: f64, z: f64, zp: f64) -> C64 {
        let e = (self.eta() * self.eps_rate * t).exp();
        let mw = self.m * self.omega0;
        let pre = self.eta() * self.eps_rate * mw * (zp - z) * e * (self.mu + (z + zp) * e);
        let norm = (mw * e * e / (std::f64::consts::PI * self.hbar)).sqrt();
        let expo = -mw * (2.0 * self.mu * self.mu + e * e * (z * z + zp * zp) + 2.0 * self.mu * e * (z + zp))
            / (2.0 * self.hbar);
        C64::new(0.0, pre * norm * expo.exp())
    }

    /// Generic factored schedule (angular-frequency units) on the gauge-fixed
    /// time trajectory.
    pub fn factored_schedule(&self, n_gauge_samples: usize) -> Result<HamiltonianSchedule<RankTwoKernel<GridWavefunction>>> {
        let g = gauge_fix(&self.time_trajectory(), n_gauge_samples)?;
        Ok(HamiltonianSchedule::factored(&g, true))
    }

    /// Largest relative deviation between [`Self::explicit_kernel`] and
    /// `ħ` times the generic kernel at time `t`, over all grid pairs.
    pub fn kernel_discrepancy(&self, grid: &Grid1d, t: f64) -> Result<f64> {
        let kernel = RankTwoKernel::new(self.state_at(grid, t), self.state_time_derivative(grid, t), 0.0)?;
        let n = grid.n_points;
        let mut scale = 0.0f64;
        let mut worst = 0.0f64;
        let zs: Vec<f64> = grid.points().collect();
        for i in 0..n {
            for j in 0..n {
                let explicit = self.explicit_kernel(t, zs[i], zs[j]);
                let generic = kernel.entry(i, j) * self.hbar;
                scale = scale.max(explicit.norm());
                worst = worst.max((explicit - generic).norm());
            }
        }
        Ok(if scale > 0.0 { worst / scale } else { worst })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::Ket;

    fn unit_rate_scenario() -> GaussianScenario {
        GaussianScenario::new(1.0, 1.0, 1.0, 1.0, 1.0, 0.2).unwrap()
    }

    #[test]
    fn eta_is_one_in_unit_setting() {
        assert_eq!(unit_rate_scenario().eta(), 1.0);
    }

    #[test]
    fn s_derivative_matches_finite_difference() {
        let sc = GaussianScenario::new(1.3, 0.7, 0.8, 0.9, 1.1, 0.3).unwrap();
        for (s, z) in [(0.5, -0.2), (0.9, 0.6), (0.31, -1.0)] {
            let h = 1e-5;
            let fd = (sc.amplitude(s + h, z) - sc.amplitude(s - h, z)) / (2.0 * h);
            assert!((fd - sc.amplitude_s_derivative(s, z)).abs() < 1e-8);
        }
    }

    #[test]
    fn parameter_speed_is_one_over_eta_s() {
        let sc = GaussianScenario::new(1.3, 0.7, 0.8, 0.9, 1.1, 0.3).unwrap();
        let grid = sc.default_grid();
        let path = sc.path();
        for s in [0.3, 0.6, 1.0] {
            let speed = path.velocity(s).norm();
            assert!((speed - 1.0 / (sc.eta() * s)).abs() < 1e-9 * speed, "{s}");
            assert!((path.eval(s).norm() - 1.0).abs() < 1e-12);
        }
        assert!((sc.packet(&grid, 1.0).mean_position() + sc.mu).abs() < 1e-10);
    }

    #[test]
    fn time_speed_is_eps() {
        let sc = GaussianScenario::new(1.3, 0.7, 0.8, 0.9, 1.1, 0.3).unwrap();
        let traj = sc.time_trajectory();
        let (_, t1) = traj.domain();
        for k in 0..5 {
            let t = t1 * k as f64 / 4.0;
            assert!((traj.velocity(t).norm() - sc.eps_rate).abs() < 1e-9);
        }
    }

    #[test]
    fn kernel_identity_on_coarse_grid() {
        let sc = GaussianScenario::new(1.3, 0.7, 0.8, 0.9, 1.1, 0.3).unwrap();
        let d = sc.default_grid();
        let grid = Grid1d::new(d.z_min, d.z_max, 96).unwrap();
        for t in [0.0, 0.4] {
            assert!(sc.kernel_discrepancy(&grid, t).unwrap() < 1e-12);
        }
    }

    #[test]
    fn uncorrected_kernel_agrees_only_at_start_with_unit_rate() {
        // The variant without the factor ε·e^{2ηεt}.
        let sc = unit_rate_scenario();
        let literal = |sc: &GaussianScenario, t: f64, z: f64, zp: f64| {
            sc.explicit_kernel(t, z, zp) / (sc.eps_rate * (2.0 * sc.eta() * sc.eps_rate * t).exp())
        };
        assert_eq!(literal(&sc, 0.0, 0.3, -0.4), sc.explicit_kernel(0.0, 0.3, -0.4));
        assert!((literal(&sc, 0.5, 0.3, -0.4) - sc.explicit_kernel(0.5, 0.3, -0.4)).norm() > 1e-3);
    }

    #[test]
    fn geometry_is_enforced() {
        let sc = unit_rate_scenario();
        assert!(sc.check_geometry(&sc.default_grid()).is_ok());
        let narrow = Grid1d::new(-2.0, 2.0, 256).unwrap();
        assert!(matches!(sc.clone().with_grid(narrow), Err(Error::Geometry(_))));
        assert!(GaussianScenario::new(1.0, 1.0, 1.0, 1.0, 1.0, 1.0).is_err());
    }
}
