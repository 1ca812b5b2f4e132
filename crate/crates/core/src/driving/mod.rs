//! Hamiltonians that drive a state along a prescribed path.
//!
//! For fixed endpoints the time-optimal generator under a variance budget `ω`
//! is the constant rank-2 operator `iω(|ψ'_f><ψ_i| − |ψ_i><ψ'_f|)`. Chaining
//! that construction over infinitesimal pieces of a gauge-fixed trajectory
//! gives the time-dependent generator
//!
//! ```text
//! H(t) = i(|∂ψ̃><ψ̃| − |ψ̃><∂ψ̃|) + φ̇(t)·1
//! ```
//!
//! whose mean is `φ̇` and whose variance is `<∂ψ|∂ψ> − φ̇²`.
//!
//! Units: `ħ = 1`; all generators are angular frequencies.

mod counterdiabatic;
mod mixed;

pub use counterdiabatic::{
    counterdiabatic_control, counterdiabatic_hprime, counterdiabatic_schedule, phase_decomposition,
    PhaseDecomposition,
};
pub use mixed::{
    mixed_hamiltonian, mixed_hamiltonian_projector_form, mixed_variance, mixed_variance_at,
    DensityTrajectory, GaugeFixedDensity,
};

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gauge::GaugeFixedTrajectory;
use crate::state::{gram_schmidt_partner, Ket, PureState};

pub const HERMITICITY_TOL: f64 = 1e-10;
/// The trajectory generator presumes `<∂ψ̃|ψ̃> = 0`; anything beyond this is rejected.
pub const TRAJECTORY_GAUGE_TOL: f64 = 1e-6;
pub const DIAGNOSTIC_TOL: f64 = 1e-8;
const NEGATIVE_VARIANCE_TOL: f64 = 1e-12;

/// Upper bound on the energy variance, `sup_t ΔH² = ω_max²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResourceBudget {
    omega_max: f64,
}

impl ResourceBudget {
    pub fn new(omega_max: f64) -> Result<Self> {
        if !(omega_max > 0.0 && omega_max.is_finite()) {
            return Err(Error::Budget(format!("omega_max must be positive, got {omega_max}")));
        }
        Ok(Self { omega_max })
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }
}

/// `max |H − H†|`.
pub fn hermiticity_residual(h: &DMatrix<C64>) -> f64 {
    let n = h.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst
}

pub(crate) fn outer(a: &PureState, b: &PureState) -> DMatrix<C64> {
    a.as_vector() * b.as_vector().adjoint()
}

/// Time-optimal constant Hamiltonian between fixed endpoints.
pub fn brachistochrone_hamiltonian(
    psi_i: &PureState,
    psi_f: &PureState,
    budget: ResourceBudget,
) -> Result<DMatrix<C64>> {
    let partner = gram_schmidt_partner(psi_i, psi_f)?;
    let w = C64::new(0.0, budget.omega_max());
    let h = (outer(&partner, psi_i) - outer(psi_i, &partner)) * w;
    let r = hermiticity_residual(&h);
    if r > HERMITICITY_TOL {
        return Err(Error::NonHermitian(r));
    }
    Ok(h)
}

/// Minimal time `arccos|<ψ_i|ψ_f>| / ω` between fixed endpoints.
pub fn brachistochrone_time(psi_i: &PureState, psi_f: &PureState, budget: ResourceBudget) -> Result<f64> {
    let overlap = psi_i.inner(psi_f)?.norm().min(1.0);
    Ok(overlap.acos() / budget.omega_max())
}

/// Factored rank-2 generator `i(|d><a| − |a><d|) + shift·1`.
///
/// Applying it costs two inner products, so grid wavefunctions never need the
/// dense kernel `H(z, z')`.
#[derive(Debug, Clone)]
pub struct RankTwoKernel<K> {
    state: K,
    tangent: K,
    shift: f64,
}

impl<K: Ket> RankTwoKernel<K> {
    pub fn new(state: K, tangent: K, shift: f64) -> Result<Self> {
        state.compatible(&tangent)?;
        Ok(Self { state, tangent, shift })
    }

    pub fn state(&self) -> &K {
        &self.state
    }

    pub fn tangent(&self) -> &K {
        &self.tangent
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// `H|ψ>`.
    pub fn apply(&self, psi: &K) -> Result<K> {
        let a = self.state.inner(psi)?;
        let d = self.tangent.inner(psi)?;
        let i = C64::new(0.0, 1.0);
        let out = self.tangent.combine(i * a, &self.state, -i * d)?;
        out.combine(C64::new(1.0, 0.0), psi, C64::new(self.shift, 0.0))
    }

    /// `<ψ|H|ψ>` and `<ψ|H²|ψ> − <ψ|H|ψ>²` for normalized `ψ`.
    pub fn moments(&self, psi: &K) -> Result<(f64, f64)> {
        let h_psi = self.apply(psi)?;
        let mean = psi.inner(&h_psi)?.re;
        let second = h_psi.norm_squared();
        Ok((mean, second - mean * mean))
    }

    /// Kernel samples `H(z_i, z_j) = i(d_i a_j* − a_i d_j*) + shift·δ_ij`.
    ///
    /// For an n-level system this is the operator matrix itself; for a grid
    /// wavefunction the operator acts as `Σ_j w_j H(z_i, z_j) ψ_j`.
    pub fn matrix(&self) -> DMatrix<C64> {
        let a = self.state.amplitudes();
        let d = self.tangent.amplitudes();
        let i = C64::new(0.0, 1.0);
        let mut m = (d * a.adjoint() - a * d.adjoint()) * i;
        for k in 0..m.nrows() {
            m[(k, k)] += self.shift;
        }
        m
    }

    /// A single kernel entry, without materializing the matrix.
    pub fn entry(&self, i: usize, j: usize) -> C64 {
        let a = self.state.amplitudes();
        let d = self.tangent.amplitudes();
        let mut v = C64::new(0.0, 1.0) * (d[i] * a[j].conj() - a[i] * d[j].conj());
        if i == j {
            v += self.shift;
        }
        v
    }
}

/// Rank-2 generator driving `gtraj` at parameter `t`.
///
/// With `include_phase_term` the identity term `φ̇(t)·1` is added, so that the
/// operator drives the original (ungauged) trajectory rather than `ψ̃`.
pub fn trajectory_kernel<K: Ket>(
    gtraj: &GaugeFixedTrajectory<K>,
    t: f64,
    include_phase_term: bool,
) -> Result<RankTwoKernel<K>> {
    let state = gtraj.state(t)?;
    let tangent = gtraj.derivative(t)?;
    let residual = tangent.inner(&state)?.norm();
    if residual > TRAJECTORY_GAUGE_TOL {
        return Err(Error::GaugeResidual { residual, at: t });
    }
    let shift = if include_phase_term { gtraj.phase_rate(t)? } else { 0.0 };
    RankTwoKernel::new(state, tangent, shift)
}

/// Dense form of [`trajectory_kernel`] for n-level systems.
pub fn trajectory_hamiltonian(
    gtraj: &GaugeFixedTrajectory<PureState>,
    t: f64,
    include_phase_term: bool,
) -> Result<DMatrix<C64>> {
    let h = trajectory_kernel(gtraj, t, include_phase_term)?.matrix();
    let r = hermiticity_residual(&h);
    if r > HERMITICITY_TOL {
        return Err(Error::NonHermitian(r));
    }
    Ok(h)
}

/// Mean and variance of the driving Hamiltonian along the trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DrivingDiagnostics {
    /// `φ̇(t)`.
    pub mean: f64,
    /// `<∂ψ|∂ψ> − φ̇²`.
    pub variance: f64,
    /// `<ψ|H|ψ>` from the constructed operator.
    pub operator_mean: f64,
    /// `<ψ|H²|ψ> − <ψ|H|ψ>²` from the constructed operator.
    pub operator_variance: f64,
}

impl DrivingDiagnostics {
    /// Largest disagreement between the formula side and the operator side.
    pub fn discrepancy(&self) -> f64 {
        (self.mean - self.operator_mean)
            .abs()
            .max((self.variance - self.operator_variance).abs())
    }
}

/// Energy mean and variance of the generator at `t`, computed both from the
/// trajectory (`φ̇`, `‖∂ψ‖² − φ̇²`) and from the operator acting on `ψ(t)`.
pub fn diagnostics<K: Ket>(gtraj: &GaugeFixedTrajectory<K>, t: f64) -> Result<DrivingDiagnostics> {
    let base = gtraj.base();
    let psi = base.eval(t);
    let rate = gtraj.phase_rate(t)?;
    let mut variance = base.velocity(t).norm_squared() - rate * rate;
    if variance < 0.0 {
        if variance < -NEGATIVE_VARIANCE_TOL * (1.0 + rate * rate) {
            return Err(Error::Consistency(format!("negative variance {variance:e} at t = {t}")));
        }
        variance = 0.0;
    }
    let kernel = trajectory_kernel(gtraj, t, true)?;
    let (operator_mean, operator_variance) = kernel.moments(&psi)?;
    Ok(DrivingDiagnostics { mean: rate, variance, operator_mean, operator_variance })
}

/// Result of the accessibility test `‖∂ψ‖ ≤ √(ω_max² + φ̇²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccessReport {
    pub accessible: bool,
    /// `min_t (√(ω_max² + φ̇²) − ‖∂ψ‖)`; zero when the budget is saturated.
    pub worst_margin: f64,
    pub worst_t: f64,
}

/// Relative slack allowed when the bound holds with equality.
const ACCESS_EQUALITY_TOL: f64 = 1e-9;

/// Checks the speed condition at every lattice point of `gtraj`.
pub fn accessible<K: Ket>(gtraj: &GaugeFixedTrajectory<K>, budget: ResourceBudget) -> Result<AccessReport> {
    let (lo, hi) = gtraj.domain();
    let mut worst = AccessReport { accessible: true, worst_margin: f64::INFINITY, worst_t: lo };
    for &t in gtraj.lattice().iter().filter(|&&t| t <= hi) {
        let rate = gtraj.phase_rate(t)?;
        let limit = (budget.omega_max().powi(2) + rate * rate).sqrt();
        let margin = limit - gtraj.base().velocity(t).norm();
        if margin < worst.worst_margin {
            worst.worst_margin = margin;
            worst.worst_t = t;
        }
        if margin < -ACCESS_EQUALITY_TOL * limit {
            worst.accessible = false;
        }
    }
    Ok(worst)
}

type ScheduleFn<G> = Arc<dyn Fn(f64) -> Result<G> + Send + Sync>;

/// Time-dependent generator on a closed interval.
#[derive(Clone)]
pub struct HamiltonianSchedule<G> {
    eval: ScheduleFn<G>,
    domain: (f64, f64),
    constant: bool,
}

impl<G> fmt::Debug for HamiltonianSchedule<G> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianSchedule")
            .field("domain", &self.domain)
            .field("constant", &self.constant)
            .finish()
    }
}

impl<G: Clone + Send + Sync + 'static> HamiltonianSchedule<G> {
    pub fn new(domain: (f64, f64), eval: impl Fn(f64) -> Result<G> + Send + Sync + 'static) -> Self {
        Self { eval: Arc::new(eval), domain, constant: false }
    }

    /// Time-independent generator; propagators exponentiate it once.
    pub fn constant(domain: (f64, f64), h: G) -> Self {
        Self { eval: Arc::new(move |_| Ok(h.clone())), domain, constant: true }
    }

    pub fn at(&self, t: f64) -> Result<G> {
        (self.eval)(t)
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }
}

impl HamiltonianSchedule<DMatrix<C64>> {
    /// Dense schedule `H(t) = i(|∂ψ̃><ψ̃| − h.c.) + φ̇𝟙` of a gauge-fixed n-level trajectory.
    pub fn from_trajectory(gtraj: &GaugeFixedTrajectory<PureState>, include_phase_term: bool) -> Self {
        let g = Arc::new(gtraj.clone());
        Self::new(gtraj.domain(), move |t| trajectory_hamiltonian(&g, t, include_phase_term))
    }
}

impl<K: Ket> HamiltonianSchedule<RankTwoKernel<K>> {
    /// The same schedule in rank-two form, valid for any representation.
    pub fn factored(gtraj: &GaugeFixedTrajectory<K>, include_phase_term: bool) -> Self {
        let g = Arc::new(gtraj.clone());
        Self::new(gtraj.domain(), move |t| trajectory_kernel(&g, t, include_phase_term))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::gauge_fix;
    use crate::state::StateTrajectory;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn qubit_brachistochrone_matrix() {
        let h = brachistochrone_hamiltonian(
            &PureState::basis(2, 0),
            &PureState::basis(2, 1),
            ResourceBudget::new(1.0).unwrap(),
        )
        .unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
        assert!((h - expect).norm() < 1e-15);
    }

    #[test]
    fn pre_orthogonalized_target_gives_same_generator() {
        let budget = ResourceBudget::new(1.0).unwrap();
        let e0 = PureState::basis(2, 0);
        let diag = PureState::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
        let h1 = brachistochrone_hamiltonian(&e0, &diag, budget).unwrap();
        let h2 = brachistochrone_hamiltonian(&e0, &PureState::basis(2, 1), budget).unwrap();
        assert!((h1 - h2).norm() < 1e-14);
    }

    #[test]
    fn brachistochrone_times() {
        let e0 = PureState::basis(2, 0);
        let b1 = ResourceBudget::new(1.0).unwrap();
        assert_eq!(brachistochrone_time(&e0, &e0, b1).unwrap(), 0.0);
        let t = brachistochrone_time(&e0, &PureState::basis(2, 1), ResourceBudget::new(3.0).unwrap()).unwrap();
        assert!((t - PI / 6.0).abs() < 1e-15);
        let diag = PureState::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
        let t = brachistochrone_time(&e0, &diag, ResourceBudget::new(2.0).unwrap()).unwrap();
        assert!((t - PI / 8.0).abs() < 1e-15);
    }

    #[test]
    fn budget_must_be_positive() {
        assert!(ResourceBudget::new(0.0).is_err());
        assert!(ResourceBudget::new(f64::NAN).is_err());
    }

    #[test]
    fn constant_trajectory_gives_zero_generator() {
        let traj = StateTrajectory::constant((0.0, 1.0), PureState::from_real(&[0.6, 0.8]));
        let g = gauge_fix(&traj, 9).unwrap();
        let h = trajectory_hamiltonian(&g, 0.5, true).unwrap();
        assert!(h.norm() < 1e-15);
        let d = diagnostics(&g, 0.5).unwrap();
        assert_eq!((d.mean, d.variance), (0.0, 0.0));
        let r = accessible(&g, ResourceBudget::new(1e-3).unwrap()).unwrap();
        assert!(r.accessible);
    }

    #[test]
    fn kernel_apply_matches_matrix() {
        let a = PureState::from_slice(&[c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0)]);
        let d = PureState::from_slice(&[c(0.1, -0.3), c(0.2, 0.05), c(-1.0, 0.4)]);
        let k = RankTwoKernel::new(a, d, 0.7).unwrap();
        let psi = PureState::from_slice(&[c(0.3, 0.1), c(-0.5, 0.2), c(0.4, 0.4)]);
        let direct = k.matrix() * psi.as_vector();
        let applied = k.apply(&psi).unwrap();
        assert!((direct - applied.as_vector()).norm() < 1e-14);
        assert!((k.entry(2, 1) - k.matrix()[(2, 1)]).norm() < 1e-15);
    }

    #[test]
    fn latitude_diagnostics_and_accessibility() {
        // ψ(t) = (1, e^{2it})/√2: ‖∂ψ‖² = 2, φ̇ = −1, variance 1
        let traj = StateTrajectory::new((0.0, PI), |t: f64| {
            PureState::from_slice(&[c(FRAC_1_SQRT_2, 0.0), C64::from_polar(FRAC_1_SQRT_2, 2.0 * t)])
        });
        let g = gauge_fix(&traj, 65).unwrap();
        let d = diagnostics(&g, 1.0).unwrap();
        assert!((d.mean + 1.0).abs() < 1e-9);
        assert!((d.variance - 1.0).abs() < 1e-8);
        assert!(d.discrepancy() < 1e-8);
        // gauge-fixed speed is 1 = 2·ω_max for ω_max = 0.5
        let r = accessible(&g, ResourceBudget::new(0.5).unwrap()).unwrap();
        assert!(!r.accessible);
        assert!(accessible(&g, ResourceBudget::new(1.0 + 1e-6).unwrap()).unwrap().accessible);
    }
}
