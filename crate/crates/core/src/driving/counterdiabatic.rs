use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use super::{hermiticity_residual, outer, HamiltonianSchedule};
use crate::error::{Error, Result};
use crate::numeric::simpson;
use crate::state::{Ket, PureState, StateTrajectory};

pub const ORTHONORMALITY_TOL: f64 = 1e-8;
const EIGENPATH_TOL: f64 = 1e-6;
const SCHRODINGER_TOL: f64 = 1e-6;

fn gram_residual(states: &[PureState]) -> Result<f64> {
    let mut worst = 0.0f64;
    for (i, a) in states.iter().enumerate() {
        for (j, b) in states.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((a.inner(b)? - target).norm());
        }
    }
    Ok(worst)
}

/// `H'(t) = i Σ_n |∂_tψ_n><ψ_n|` for a complete orthonormal moving basis.
///
/// Hermiticity follows from completeness and is verified, not imposed.
pub fn counterdiabatic_hprime(eigentrajectories: &[StateTrajectory<PureState>], t: f64) -> Result<DMatrix<C64>> {
    let states: Vec<PureState> = eigentrajectories.iter().map(|tr| tr.eval(t)).collect();
    let dim = states.first().map(|s| s.dim()).ok_or(Error::IncompleteBasis { found: 0, dim: 0 })?;
    if states.len() != dim {
        return Err(Error::IncompleteBasis { found: states.len(), dim });
    }
    let residual = gram_residual(&states)?;
    if residual > ORTHONORMALITY_TOL {
        return Err(Error::OrthonormalityDrift { residual, t });
    }
    let tangents: Vec<PureState> = eigentrajectories.iter().map(|tr| tr.velocity(t)).collect();
    let mut h = DMatrix::zeros(dim, dim);
    for (psi, dpsi) in states.iter().zip(&tangents) {
        h += outer(dpsi, psi);
    }
    h *= C64::new(0.0, 1.0);
    let residual = hermiticity_residual(&h);
    if residual > ORTHONORMALITY_TOL {
        return Err(Error::OrthonormalityDrift { residual, t });
    }
    for (psi, dpsi) in states.iter().zip(&tangents) {
        let lhs = dpsi.as_vector() * C64::new(0.0, 1.0);
        let err = (lhs - &h * psi.as_vector()).norm();
        if err > SCHRODINGER_TOL {
            return Err(Error::Consistency(format!(
                "basis vector not driven by H' at t = {t}: residual {err:e}"
            )));
        }
    }
    Ok(h)
}

/// Schedule of `H'(t)` over `domain`.
pub fn counterdiabatic_schedule(
    eigentrajectories: Vec<StateTrajectory<PureState>>,
    domain: (f64, f64),
) -> HamiltonianSchedule<DMatrix<C64>> {
    HamiltonianSchedule::new(domain, move |t| counterdiabatic_hprime(&eigentrajectories, t))
}

/// Control term `H_CD = −(H_s − H')`, so that `H_s + H_CD = H'`.
pub fn counterdiabatic_control(
    h_system: &HamiltonianSchedule<DMatrix<C64>>,
    h_prime: &HamiltonianSchedule<DMatrix<C64>>,
    t: f64,
) -> Result<DMatrix<C64>> {
    let hs = h_system.at(t)?;
    let hp = h_prime.at(t)?;
    if hs.shape() != hp.shape() {
        return Err(Error::Shape(format!("H_s {:?} vs H' {:?}", hs.shape(), hp.shape())));
    }
    Ok(hp - hs)
}

/// Dynamic and geometric phases of one band, accumulated from the start of
/// the system schedule's domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseDecomposition {
    /// Instantaneous eigenenergy `E_n(t)`.
    pub energy: f64,
    /// `θ_n = −∫ E_n dt'`.
    pub dynamic: f64,
    /// `γ_n = ∫ i<ψ_n|∂ψ_n> dt'`.
    pub geometric: f64,
    /// `γ_n = ∫ <ψ_n|H'|ψ_n> dt'`, computed through the counterdiabatic operator.
    pub geometric_from_hprime: f64,
}

impl PhaseDecomposition {
    pub fn geometric_discrepancy(&self) -> f64 {
        (self.geometric - self.geometric_from_hprime).abs()
    }
}

/// Splits the adiabatic phase of band `band` into dynamic and Berry parts.
pub fn phase_decomposition(
    h_system: &HamiltonianSchedule<DMatrix<C64>>,
    eigenbasis: &[StateTrajectory<PureState>],
    band: usize,
    t: f64,
    n_steps: usize,
) -> Result<PhaseDecomposition> {
    let path = eigenbasis
        .get(band)
        .ok_or_else(|| Error::Invalid(format!("band {band} not in a basis of {}", eigenbasis.len())))?;
    let energy_at = |tau: f64| -> Result<f64> {
        let h = h_system.at(tau)?;
        let psi = path.eval(tau);
        let h_psi = &h * psi.as_vector();
        let e = psi.as_vector().dotc(&h_psi).re;
        let residual = (h_psi - psi.as_vector() * C64::new(e, 0.0)).norm();
        if residual > EIGENPATH_TOL {
            return Err(Error::NotAnEigenpath { t: tau, residual });
        }
        Ok(e)
    };
    let t0 = h_system.domain().0;
    let energy = energy_at(t)?;
    if t == t0 {
        return Ok(PhaseDecomposition { energy, dynamic: 0.0, geometric: 0.0, geometric_from_hprime: 0.0 });
    }
    let dynamic = -simpson(energy_at, t0, t, n_steps)?;
    let geometric = simpson(
        |tau| {
            let psi = path.eval(tau);
            Ok((C64::new(0.0, 1.0) * psi.inner(&path.velocity(tau))?).re)
        },
        t0,
        t,
        n_steps,
    )?;
    let geometric_from_hprime = simpson(
        |tau| {
            let h = counterdiabatic_hprime(eigenbasis, tau)?;
            let psi = path.eval(tau);
            Ok(psi.as_vector().dotc(&(h * psi.as_vector())).re)
        },
        t0,
        t,
        n_steps,
    )?;
    Ok(PhaseDecomposition { energy, dynamic, geometric, geometric_from_hprime })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn precessing_field(rate: f64) -> (HamiltonianSchedule<DMatrix<C64>>, Vec<StateTrajectory<PureState>>) {
        // H_s = cos(rt) σx + sin(rt) σy, eigenvectors (1, ±e^{irt})/√2
        let hs = HamiltonianSchedule::new((0.0, 2.0 * PI / rate), move |t: f64| {
            let z = C64::from_polar(1.0, -rate * t);
            Ok(DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), z, z.conj(), C64::new(0.0, 0.0)]))
        });
        let plus = StateTrajectory::new((0.0, 2.0 * PI / rate), move |t: f64| {
            PureState::from_slice(&[C64::new(FRAC_1_SQRT_2, 0.0), C64::from_polar(FRAC_1_SQRT_2, rate * t)])
        });
        let minus = StateTrajectory::new((0.0, 2.0 * PI / rate), move |t: f64| {
            PureState::from_slice(&[C64::new(FRAC_1_SQRT_2, 0.0), -C64::from_polar(FRAC_1_SQRT_2, rate * t)])
        });
        (hs, vec![plus, minus])
    }

    #[test]
    fn static_basis_gives_zero_hprime() {
        let basis = vec![
            StateTrajectory::constant((0.0, 1.0), PureState::basis(2, 0)),
            StateTrajectory::constant((0.0, 1.0), PureState::basis(2, 1)),
        ];
        assert!(counterdiabatic_hprime(&basis, 0.5).unwrap().norm() < 1e-15);
    }

    #[test]
    fn incomplete_basis_is_rejected() {
        let basis = vec![StateTrajectory::constant((0.0, 1.0), PureState::basis(2, 0))];
        assert!(matches!(
            counterdiabatic_hprime(&basis, 0.5),
            Err(Error::IncompleteBasis { found: 1, dim: 2 })
        ));
    }

    #[test]
    fn non_orthogonal_basis_is_rejected() {
        let basis = vec![
            StateTrajectory::constant((0.0, 1.0), PureState::basis(2, 0)),
            StateTrajectory::constant((0.0, 1.0), PureState::from_real(&[0.6, 0.8])),
        ];
        assert!(matches!(
            counterdiabatic_hprime(&basis, 0.5),
            Err(Error::OrthonormalityDrift { .. })
        ));
    }

    #[test]
    fn control_is_difference_and_linear() {
        let a = DMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(0.0, 2.0), C64::new(0.0, -2.0), C64::new(-1.0, 0.0)]);
        let b = DMatrix::from_row_slice(2, 2, &[C64::new(0.5, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(3.0, 0.0)]);
        let alpha = 2.5;
        let hs = HamiltonianSchedule::constant((0.0, 1.0), a.clone() * C64::new(alpha, 0.0));
        let hp = HamiltonianSchedule::constant((0.0, 1.0), b.clone());
        let cd = counterdiabatic_control(&hs, &hp, 0.3).unwrap();
        assert!((&cd - (&b - &a * C64::new(alpha, 0.0))).norm() < 1e-15);
        assert!(counterdiabatic_control(&hp, &hp, 0.0).unwrap().norm() == 0.0);
        let bad = HamiltonianSchedule::constant((0.0, 1.0), DMatrix::<C64>::zeros(3, 3));
        assert!(matches!(counterdiabatic_control(&hs, &bad, 0.0), Err(Error::Shape(_))));
    }

    #[test]
    fn static_hamiltonian_phases() {
        let h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(-0.5, 0.0), C64::new(1.5, 0.0)]));
        let hs = HamiltonianSchedule::constant((0.0, 3.0), h);
        let basis = vec![
            StateTrajectory::constant((0.0, 3.0), PureState::basis(2, 0)),
            StateTrajectory::constant((0.0, 3.0), PureState::basis(2, 1)),
        ];
        let p = phase_decomposition(&hs, &basis, 1, 2.0, 16).unwrap();
        assert!((p.dynamic + 3.0).abs() < 1e-13);
        assert_eq!(p.geometric, 0.0);
    }

    #[test]
    fn precessing_field_berry_phase_is_minus_pi() {
        let rate = 1.3;
        let (hs, basis) = precessing_field(rate);
        let period = 2.0 * PI / rate;
        let p = phase_decomposition(&hs, &basis, 0, period, 64).unwrap();
        assert!((p.geometric + PI).abs() < 1e-8, "{}", p.geometric);
        assert!(p.geometric_discrepancy() < 1e-6);
        assert!((p.dynamic + period).abs() < 1e-12);
    }

    #[test]
    fn wrong_band_is_not_an_eigenpath() {
        let (hs, basis) = precessing_field(1.0);
        let wrong = vec![StateTrajectory::constant((0.0, 1.0), PureState::basis(2, 0))];
        assert!(matches!(
            phase_decomposition(&hs, &wrong, 0, 1.0, 8),
            Err(Error::NotAnEigenpath { .. })
        ));
        assert!(phase_decomposition(&hs, &basis, 5, 1.0, 8).is_err());
    }
}
