//! Mandelstam-Tamm and Margolus-Levitin bounds for fixed endpoints, and the
//! continuum example where both stop carrying information.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::driving::{hermiticity_residual, ResourceBudget, HERMITICITY_TOL};
use crate::error::{Error, Result};
use crate::gauge::gauge_fix;
use crate::reparam::{time_of_param, BudgetProfile};
use crate::state::{Grid1d, GridWavefunction, Ket, PureState, StateTrajectory};

const NORMALIZATION_TOL: f64 = 1e-10;

/// Speed-limit bounds for `ψ_i → ψ_f` under a time-independent `H`, with
/// expectation values taken in `ψ_i`. Unbounded cases are `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QslReport {
    /// `arccos|<ψ_i|ψ_f>|`.
    pub angle: f64,
    pub mt_bound: f64,
    pub ml_bound: f64,
    pub tau_qsl: f64,
    /// `√(<H²> − <H>²)`.
    pub delta_e: f64,
    /// `<H> − E_ground`.
    pub mean_excess_e: f64,
}

fn bound(angle: f64, rate: f64, scale: f64) -> f64 {
    if angle == 0.0 {
        0.0
    } else if rate <= 1e-14 * scale {
        f64::INFINITY
    } else {
        angle / rate
    }
}

fn check_normalized(psi: &PureState, which: &str) -> Result<()> {
    let n = psi.norm();
    if (n - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Invalid(format!("{which} has norm {n}")));
    }
    Ok(())
}

pub fn qsl_bounds(h: &DMatrix<C64>, psi_i: &PureState, psi_f: &PureState) -> Result<QslReport> {
    if !h.is_square() || h.nrows() != psi_i.dim() {
        return Err(Error::Shape(format!("operator {:?} on state of dim {}", h.shape(), psi_i.dim())));
    }
    psi_i.compatible(psi_f)?;
    let r = hermiticity_residual(h);
    if r > HERMITICITY_TOL {
        return Err(Error::NonHermitian(r));
    }
    check_normalized(psi_i, "psi_i")?;
    check_normalized(psi_f, "psi_f")?;
    let angle = psi_i.inner(psi_f)?.norm().min(1.0).acos();
    let h_psi = h * psi_i.as_vector();
    let mean = psi_i.as_vector().dotc(&h_psi).re;
    let delta_e = (h_psi.norm_squared() - mean * mean).max(0.0).sqrt();
    let spectrum = SymmetricEigen::new(h.clone()).eigenvalues;
    let e_ground = spectrum.iter().copied().fold(f64::INFINITY, f64::min);
    let mean_excess_e = (mean - e_ground).max(0.0);
    let scale = spectrum.iter().map(|e| e.abs()).fold(1.0, f64::max);
    let mt_bound = bound(angle, delta_e, scale);
    let ml_bound = bound(angle, mean_excess_e, scale);
    Ok(QslReport { angle, mt_bound, ml_bound, tau_qsl: mt_bound.max(ml_bound), delta_e, mean_excess_e })
}

/// Overlap of two packets on a common grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlapReport {
    /// `|∫ψ_f* ψ_i dz|`.
    pub overlap: f64,
    /// `arccos` of the overlap.
    pub angle: f64,
}

pub fn continuum_separation_demo(psi_i: &GridWavefunction, psi_f: &GridWavefunction) -> Result<OverlapReport> {
    let overlap = psi_f.inner(psi_i)?.norm().min(1.0);
    Ok(OverlapReport { overlap, angle: overlap.acos() })
}

/// `π^{−1/4} σ^{−1/2} exp(−(z − c)²/(2σ²))`, unit norm on the real line.
pub fn gaussian_packet(grid: &Grid1d, center: f64, sigma: f64) -> GridWavefunction {
    let norm = (std::f64::consts::PI.sqrt() * sigma).powf(-0.5);
    GridWavefunction::from_fn(*grid, move |z| C64::new(norm * (-(z - center).powi(2) / (2.0 * sigma * sigma)).exp(), 0.0))
}

/// Rigid translation `ψ(z − s)` of the packet [`gaussian_packet`] for
/// `s ∈ [0, distance]`, with analytic derivative.
pub fn translation_path(grid: &Grid1d, sigma: f64, distance: f64) -> StateTrajectory<GridWavefunction> {
    let g1 = *grid;
    let g2 = *grid;
    StateTrajectory::new((0.0, distance), move |s| gaussian_packet(&g1, s, sigma)).with_derivative(move |s| {
        let norm = (std::f64::consts::PI.sqrt() * sigma).powf(-0.5);
        GridWavefunction::from_fn(g2, move |z| {
            let u = z - s;
            C64::new(norm * u / (sigma * sigma) * (-u * u / (2.0 * sigma * sigma)).exp(), 0.0)
        })
    })
}

/// Minimal time along [`translation_path`] under a constant budget.
///
/// The exact value is `distance / (√2 σ ω)`, linear in the separation.
pub fn translation_time(
    grid: &Grid1d,
    sigma: f64,
    distance: f64,
    budget: ResourceBudget,
    n_steps: usize,
) -> Result<f64> {
    let g = gauge_fix(&translation_path(grid, sigma, distance), n_steps + 1)?;
    Ok(time_of_param(&g, &BudgetProfile::constant(budget), 0.0, distance, n_steps)?.total_time())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driving::brachistochrone_hamiltonian;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identical_endpoints_give_zero() {
        let h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]));
        let psi = PureState::from_real(&[1.0, 0.0]);
        let r = qsl_bounds(&h, &psi, &psi).unwrap();
        assert_eq!((r.mt_bound, r.ml_bound, r.tau_qsl), (0.0, 0.0, 0.0));
    }

    #[test]
    fn stationary_state_is_unbounded() {
        let h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]));
        let r = qsl_bounds(&h, &PureState::basis(2, 0), &PureState::basis(2, 1)).unwrap();
        assert!(r.mt_bound.is_infinite() && r.ml_bound.is_infinite());
    }

    #[test]
    fn hand_evaluated_qubit() {
        let h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]));
        let s = 0.5f64.sqrt();
        let r = qsl_bounds(&h, &PureState::from_real(&[s, s]), &PureState::from_real(&[s, -s])).unwrap();
        assert!((r.delta_e - 0.5).abs() < 1e-15);
        assert!((r.mean_excess_e - 0.5).abs() < 1e-15);
        assert!((r.tau_qsl - PI).abs() < 1e-14);
    }

    #[test]
    fn brachistochrone_saturates_both_bounds() {
        let w = 1.7;
        let psi_i = PureState::basis(2, 0);
        let psi_f = PureState::basis(2, 1);
        let h = brachistochrone_hamiltonian(&psi_i, &psi_f, ResourceBudget::new(w).unwrap()).unwrap();
        let r = qsl_bounds(&h, &psi_i, &psi_f).unwrap();
        assert!((r.delta_e - w).abs() < 1e-14);
        assert!((r.tau_qsl - PI / (2.0 * w)).abs() < 1e-14);
    }

    #[test]
    fn energy_shift_invariance() {
        let h = DMatrix::from_row_slice(2, 2, &[c(0.3, 0.0), c(0.2, -0.4), c(0.2, 0.4), c(-1.0, 0.0)]);
        let psi_i = PureState::from_slice(&[c(0.6, 0.0), c(0.0, 0.8)]);
        let psi_f = PureState::from_slice(&[c(0.8, 0.0), c(0.6, 0.0)]);
        let a = qsl_bounds(&h, &psi_i, &psi_f).unwrap();
        let shifted = &h + DMatrix::<C64>::identity(2, 2) * c(5.0, 0.0);
        let b = qsl_bounds(&shifted, &psi_i, &psi_f).unwrap();
        assert!((a.mt_bound - b.mt_bound).abs() < 1e-12);
        assert!((a.ml_bound - b.ml_bound).abs() < 1e-12);
    }

    #[test]
    fn non_hermitian_and_unnormalized_inputs_are_rejected() {
        let h = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let psi = PureState::basis(2, 0);
        assert!(matches!(qsl_bounds(&h, &psi, &psi), Err(Error::NonHermitian(_))));
        let h = DMatrix::<C64>::identity(2, 2);
        assert!(qsl_bounds(&h, &PureState::from_real(&[1.0, 1.0]), &psi).is_err());
    }

    #[test]
    fn identical_packets_have_zero_angle() {
        let grid = Grid1d::new(-10.0, 10.0, 2001).unwrap();
        let p = gaussian_packet(&grid, 0.0, 1.0);
        assert!(continuum_separation_demo(&p, &p).unwrap().angle < 1e-6);
    }

    #[test]
    fn squeezed_overlap_matches_closed_form() {
        let grid = Grid1d::new(-12.0, 12.0, 4001).unwrap();
        let a = gaussian_packet(&grid, 0.0, 1.0);
        let b = gaussian_packet(&grid, 0.0, 0.5);
        let r = continuum_separation_demo(&a, &b).unwrap();
        assert!((r.overlap - 0.8f64.sqrt()).abs() < 1e-10, "{}", r.overlap);
    }

    #[test]
    fn translation_time_is_linear_in_distance() {
        let grid = Grid1d::new(-10.0, 30.0, 8001).unwrap();
        let budget = ResourceBudget::new(1.0).unwrap();
        let t5 = translation_time(&grid, 1.0, 5.0, budget, 64).unwrap();
        let t10 = translation_time(&grid, 1.0, 10.0, budget, 128).unwrap();
        assert!((t5 - 5.0 / 2f64.sqrt()).abs() < 1e-8, "{t5}");
        assert!((t10 / t5 - 2.0).abs() < 1e-8);
    }
}
