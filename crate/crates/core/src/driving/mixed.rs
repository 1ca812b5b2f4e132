//! Driving a density matrix `ρ(t) = Σ_n p_n |n(t)><n(t)|` with fixed weights
//! along a moving eigenbasis.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{hermiticity_residual, outer, HamiltonianSchedule};
use crate::driving::counterdiabatic::ORTHONORMALITY_TOL;
use crate::error::{Error, Result};
use crate::gauge::{connection_with_residue, gauge_fix, GaugeFixedTrajectory};
use crate::state::{Ket, PureState, StateTrajectory};

const WEIGHT_SUM_TOL: f64 = 1e-12;
const FORM_AGREEMENT_TOL: f64 = 1e-8;
const VARIANCE_ORACLE_TOL: f64 = 1e-8;

/// Spectral trajectory of a density matrix: constant weights, moving
/// orthonormal eigenvectors. The eigenvectors must span the whole space;
/// zero weights are allowed.
#[derive(Debug, Clone)]
pub struct DensityTrajectory {
    weights: Vec<f64>,
    eigenvectors: Vec<StateTrajectory<PureState>>,
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
        return Err(Error::Invalid(format!("weights must be nonnegative, got {weights:?}")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::Invalid(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

fn gram_residual(states: &[PureState]) -> f64 {
    let mut worst = 0.0f64;
    for (i, a) in states.iter().enumerate() {
        for (j, b) in states.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((a.as_vector().dotc(b.as_vector()) - target).norm());
        }
    }
    worst
}

fn density_from(weights: &[f64], states: &[PureState]) -> DMatrix<C64> {
    let dim = states[0].dim();
    let mut rho = DMatrix::zeros(dim, dim);
    for (p, psi) in weights.iter().zip(states) {
        if *p != 0.0 {
            rho += outer(psi, psi) * C64::new(*p, 0.0);
        }
    }
    rho
}

impl DensityTrajectory {
    pub fn new(weights: Vec<f64>, eigenvectors: Vec<StateTrajectory<PureState>>) -> Result<Self> {
        if weights.len() != eigenvectors.len() {
            return Err(Error::Shape(format!(
                "{} weights for {} eigenvectors",
                weights.len(),
                eigenvectors.len()
            )));
        }
        check_weights(&weights)?;
        let first = eigenvectors.first().ok_or(Error::IncompleteBasis { found: 0, dim: 0 })?;
        let domain = first.domain();
        let dim = first.eval(domain.0).dim();
        if eigenvectors.len() != dim {
            return Err(Error::IncompleteBasis { found: eigenvectors.len(), dim });
        }
        if eigenvectors.iter().any(|e| e.domain() != domain) {
            return Err(Error::Invalid("eigenvector trajectories have different domains".into()));
        }
        let out = Self { weights, eigenvectors };
        let residual = out.gram_residual(domain.0);
        if residual > ORTHONORMALITY_TOL {
            return Err(Error::OrthonormalityDrift { residual, t: domain.0 });
        }
        Ok(out)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn eigenvectors(&self) -> &[StateTrajectory<PureState>] {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvectors.len()
    }

    pub fn domain(&self) -> (f64, f64) {
        self.eigenvectors[0].domain()
    }

    fn states(&self, s: f64) -> Vec<PureState> {
        self.eigenvectors.iter().map(|e| e.eval(s)).collect()
    }

    pub fn rho(&self, s: f64) -> DMatrix<C64> {
        density_from(&self.weights, &self.states(s))
    }

    /// `max |<m|n> − δ_mn|` at `s`.
    pub fn gram_residual(&self, s: f64) -> f64 {
        gram_residual(&self.states(s))
    }

    /// Gauge-fixes every eigenvector independently.
    pub fn gauge_fix(&self, n_samples: usize) -> Result<GaugeFixedDensity> {
        let eigenvectors = self
            .eigenvectors
            .iter()
            .map(|e| gauge_fix(e, n_samples))
            .collect::<Result<Vec<_>>>()?;
        Ok(GaugeFixedDensity { weights: self.weights.clone(), eigenvectors })
    }
}

/// Density trajectory with each eigenvector in its parallel-transport gauge.
#[derive(Debug, Clone)]
pub struct GaugeFixedDensity {
    weights: Vec<f64>,
    eigenvectors: Vec<GaugeFixedTrajectory<PureState>>,
}

struct Frame {
    states: Vec<PureState>,
    tangents: Vec<PureState>,
}

impl GaugeFixedDensity {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn eigenvectors(&self) -> &[GaugeFixedTrajectory<PureState>] {
        &self.eigenvectors
    }

    pub fn domain(&self) -> (f64, f64) {
        self.eigenvectors[0].domain()
    }

    pub fn rho(&self, t: f64) -> Result<DMatrix<C64>> {
        Ok(density_from(&self.weights, &self.frame(t)?.states))
    }

    fn frame(&self, t: f64) -> Result<Frame> {
        let states = self.eigenvectors.iter().map(|e| e.state(t)).collect::<Result<Vec<_>>>()?;
        let residual = gram_residual(&states);
        if residual > ORTHONORMALITY_TOL {
            return Err(Error::OrthonormalityDrift { residual, t });
        }
        let tangents = self.eigenvectors.iter().map(|e| e.derivative(t)).collect::<Result<Vec<_>>>()?;
        Ok(Frame { states, tangents })
    }

    /// Schedule of the mixed-state generator over the domain.
    pub fn schedule(&self) -> HamiltonianSchedule<DMatrix<C64>> {
        let me = self.clone();
        HamiltonianSchedule::new(self.domain(), move |t| mixed_hamiltonian(&me, t))
    }
}

fn symmetric_form(frame: &Frame) -> DMatrix<C64> {
    let dim = frame.states[0].dim();
    let mut h = DMatrix::zeros(dim, dim);
    for (n, dn) in frame.states.iter().zip(&frame.tangents) {
        h += outer(dn, n) - outer(n, dn);
    }
    h * C64::new(0.0, 0.5)
}

fn projector_form(frame: &Frame) -> DMatrix<C64> {
    let dim = frame.states[0].dim();
    let mut h = DMatrix::zeros(dim, dim);
    for (n, dn) in frame.states.iter().zip(&frame.tangents) {
        h += outer(dn, n);
    }
    h * C64::new(0.0, 1.0)
}

/// `H̃ = (i/2) Σ_n (|∂ñ><ñ| − |ñ><∂ñ|)`, checked against `i Σ_n |∂ñ><ñ|`.
pub fn mixed_hamiltonian(dtraj: &GaugeFixedDensity, t: f64) -> Result<DMatrix<C64>> {
    let frame = dtraj.frame(t)?;
    let h = symmetric_form(&frame);
    let residual = (&h - projector_form(&frame)).camax();
    if residual > FORM_AGREEMENT_TOL {
        return Err(Error::OrthonormalityDrift { residual, t });
    }
    Ok(h)
}

/// `H̃ = i Σ_n |∂ñ><ñ|`; Hermitian only because the basis is complete.
pub fn mixed_hamiltonian_projector_form(dtraj: &GaugeFixedDensity, t: f64) -> Result<DMatrix<C64>> {
    let h = projector_form(&dtraj.frame(t)?);
    let residual = hermiticity_residual(&h);
    if residual > ORTHONORMALITY_TOL {
        return Err(Error::OrthonormalityDrift { residual, t });
    }
    Ok(h)
}

/// `(ΔH̃)² = Σ_{n,m} p_m |<ñ|∂m̃>|²`, cross-checked against
/// `tr(ρH̃²) − tr(ρH̃)²`.
pub fn mixed_variance(dtraj: &GaugeFixedDensity, t: f64) -> Result<f64> {
    let frame = dtraj.frame(t)?;
    let mut formula = 0.0;
    for (p, dm) in dtraj.weights.iter().zip(&frame.tangents) {
        for n in &frame.states {
            formula += p * n.as_vector().dotc(dm.as_vector()).norm_sqr();
        }
    }
    let h = symmetric_form(&frame);
    let rho = density_from(&dtraj.weights, &frame.states);
    let rh = &rho * &h;
    let mean = rh.trace().re;
    let oracle = (&rh * &h).trace().re - mean * mean;
    if (formula - oracle).abs() > VARIANCE_ORACLE_TOL * (1.0 + formula.abs()) {
        return Err(Error::Consistency(format!(
            "mixed variance {formula:e} disagrees with trace formula {oracle:e} at t = {t}"
        )));
    }
    Ok(formula)
}

/// Gauge-invariant form of the variance, evaluated without gauge fixing:
/// `Σ_m p_m (‖∂m‖² − A_m²)` with `A_m` the connection of eigenvector `m`.
pub fn mixed_variance_at(dtraj: &DensityTrajectory, s: f64) -> Result<f64> {
    let mut total = 0.0;
    for (p, e) in dtraj.weights.iter().zip(&dtraj.eigenvectors) {
        if *p == 0.0 {
            continue;
        }
        let a = connection_with_residue(e, s)?.value;
        total += p * (e.velocity(s).norm_squared() - a * a).max(0.0);
    }
    Ok(total)
}
