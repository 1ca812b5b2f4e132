//! Time propagation under a [`HamiltonianSchedule`], scored against targets.
//!
//! Each step applies the exact exponential `exp(−i H(t_mid) dt)` sampled at
//! the step midpoint, so the scheme is unitary and second order in `dt`.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::driving::{HamiltonianSchedule, RankTwoKernel};
use crate::error::{Error, Result};
use crate::output::fmt_f64;
use crate::state::{fidelity, Ket, PureState, StateTrajectory};

pub const NORM_DRIFT_TOL: f64 = 1e-8;
pub const SPECTRUM_DRIFT_TOL: f64 = 1e-8;
pub const UNITARITY_TOL: f64 = 1e-12;
const DENSITY_INPUT_TOL: f64 = 1e-10;

/// One propagation step `ψ → U ψ`.
pub trait StepOperator<K>: Send + Sync {
    fn apply(&self, psi: &K) -> Result<K>;
}

/// A generator that can be exponentiated over a step of length `dt`.
pub trait Generator<K: Ket>: Clone + Send + Sync + 'static {
    type Step: StepOperator<K>;

    fn step(&self, dt: f64) -> Result<Self::Step>;
}

/// `exp(−i H dt)` for Hermitian `H`, via the eigendecomposition.
pub fn unitary(h: &DMatrix<C64>, dt: f64) -> Result<DMatrix<C64>> {
    let eig = SymmetricEigen::new(h.clone());
    let phases = eig.eigenvalues.map(|e| C64::from_polar(1.0, -e * dt));
    let v = &eig.eigenvectors;
    let u = v * DMatrix::from_diagonal(&phases) * v.adjoint();
    let n = u.nrows();
    let residual = (u.adjoint() * &u - DMatrix::<C64>::identity(n, n)).camax();
    if residual > UNITARITY_TOL * (n as f64).max(1.0) {
        return Err(Error::IntegratorFailure { t: f64::NAN, quantity: "unitarity", drift: residual, suggested_dt: dt });
    }
    Ok(u)
}

impl StepOperator<PureState> for DMatrix<C64> {
    fn apply(&self, psi: &PureState) -> Result<PureState> {
        if self.ncols() != psi.dim() {
            return Err(Error::Shape(format!("operator {:?} on state of dim {}", self.shape(), psi.dim())));
        }
        Ok(PureState::new(self * psi.as_vector()))
    }
}

impl Generator<PureState> for DMatrix<C64> {
    type Step = DMatrix<C64>;

    fn step(&self, dt: f64) -> Result<DMatrix<C64>> {
        unitary(self, dt)
    }
}

/// Closed-form exponential of a rank-2 generator restricted to
/// `span{a, d}`; the orthogonal complement only picks up the global phase.
#[derive(Debug, Clone)]
pub struct RankTwoStep<K> {
    basis: Vec<K>,
    block: [[C64; 2]; 2],
    global: C64,
}

/// `exp(−i M dt)` for a Hermitian 2×2 block `M = m0 + m·σ`.
fn exp_hermitian_2x2(m: [[C64; 2]; 2], dt: f64) -> [[C64; 2]; 2] {
    let m0 = 0.5 * (m[0][0].re + m[1][1].re);
    let mz = 0.5 * (m[0][0].re - m[1][1].re);
    let off = 0.5 * (m[0][1] + m[1][0].conj());
    let (mx, my) = (off.re, -off.im);
    let r = (mx * mx + my * my + mz * mz).sqrt();
    let (c, sinc) = if r * dt.abs() < 1e-8 {
        (1.0 - 0.5 * (r * dt).powi(2), dt)
    } else {
        ((r * dt).cos(), (r * dt).sin() / r)
    };
    let i = C64::new(0.0, 1.0);
    let g = C64::from_polar(1.0, -m0 * dt);
    [
        [g * (c - i * sinc * mz), g * (-i * sinc * C64::new(mx, -my))],
        [g * (-i * sinc * C64::new(mx, my)), g * (c + i * sinc * mz)],
    ]
}

impl<K: Ket> Generator<K> for RankTwoKernel<K> {
    type Step = RankTwoStep<K>;

    fn step(&self, dt: f64) -> Result<RankTwoStep<K>> {
        let global = C64::from_polar(1.0, -self.shift() * dt);
        let bare = RankTwoKernel::new(self.state().clone(), self.tangent().clone(), 0.0)?;
        let e1 = self.state().normalize()?;
        let d = self.tangent();
        let proj = e1.inner(d)?;
        let rest = d.combine(C64::new(1.0, 0.0), &e1, -proj)?;
        let scale = d.norm().max(1.0);
        if rest.norm() <= 1e-14 * scale {
            // `d ∥ a`: the generator vanishes up to the shift.
            return Ok(RankTwoStep { basis: vec![], block: [[C64::new(1.0, 0.0); 2]; 2], global });
        }
        let e2 = rest.normalize()?;
        let basis = vec![e1, e2];
        let mut m = [[C64::new(0.0, 0.0); 2]; 2];
        for j in 0..2 {
            let h_ej = bare.apply(&basis[j])?;
            for i in 0..2 {
                m[i][j] = basis[i].inner(&h_ej)?;
            }
        }
        Ok(RankTwoStep { basis, block: exp_hermitian_2x2(m, dt), global })
    }
}

impl<K: Ket> StepOperator<K> for RankTwoStep<K> {
    fn apply(&self, psi: &K) -> Result<K> {
        let mut out = psi.scale(self.global);
        if self.basis.is_empty() {
            return Ok(out);
        }
        let x = [self.basis[0].inner(psi)?, self.basis[1].inner(psi)?];
        for i in 0..2 {
            let c = self.block[i][0] * x[0] + self.block[i][1] * x[1] - x[i];
            out = out.combine(C64::new(1.0, 0.0), &self.basis[i], self.global * c)?;
        }
        Ok(out)
    }
}

/// Step size, checkpoint stride and storage policy for a propagation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Propagator {
    pub dt: f64,
    /// Record every `checkpoint_every`-th step (the final step is always recorded).
    pub checkpoint_every: usize,
    pub keep_states: bool,
}

/// Time series produced by [`Propagator::state`].
#[derive(Debug, Clone)]
pub struct PropagationResult<K> {
    pub times: Vec<f64>,
    /// Empty unless `keep_states` was requested.
    pub states: Vec<K>,
    /// `|<target(t)|ψ(t)>|²`; empty without a target.
    pub fidelity_vs_target: Vec<f64>,
    pub norm_drift: Vec<f64>,
    /// Minimum of `fidelity_vs_target`, 1 without a target.
    pub worst_fidelity: f64,
    pub final_state: K,
}

impl<K> PropagationResult<K> {
    /// CSV with columns `t, fidelity, norm_drift`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Invalid(format!("csv output: {e}"));
        w.write_record(["t", "fidelity", "norm_drift"]).map_err(io)?;
        for (k, t) in self.times.iter().enumerate() {
            let f = self.fidelity_vs_target.get(k).copied().unwrap_or(f64::NAN);
            w.write_record([fmt_f64(*t), fmt_f64(f), fmt_f64(self.norm_drift[k])]).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Invalid(format!("csv output: {e}")))
    }
}

/// Density-matrix counterpart of [`PropagationResult`].
#[derive(Debug, Clone)]
pub struct DensityPropagationResult {
    pub times: Vec<f64>,
    pub states: Vec<DMatrix<C64>>,
    /// Trace distance to the target; empty without a target.
    pub trace_distance: Vec<f64>,
    /// Largest eigenvalue shift relative to `ρ0`.
    pub spectrum_drift: Vec<f64>,
    pub worst_trace_distance: f64,
    pub final_state: DMatrix<C64>,
}

impl DensityPropagationResult {
    /// CSV with columns `t, trace_distance, spectrum_drift`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Invalid(format!("csv output: {e}"));
        w.write_record(["t", "trace_distance", "spectrum_drift"]).map_err(io)?;
        for (k, t) in self.times.iter().enumerate() {
            let d = self.trace_distance.get(k).copied().unwrap_or(f64::NAN);
            w.write_record([fmt_f64(*t), fmt_f64(d), fmt_f64(self.spectrum_drift[k])]).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Invalid(format!("csv output: {e}")))
    }
}

fn step_grid(t0: f64, t1: f64, dt: f64) -> Result<(usize, f64)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Invalid(format!("dt must be positive, got {dt}")));
    }
    if !(t1 >= t0) {
        return Err(Error::Invalid(format!("propagation interval [{t0}, {t1}] is reversed")));
    }
    let n = ((t1 - t0) / dt - 1e-9).ceil().max(0.0) as usize;
    let h = if n == 0 { 0.0 } else { (t1 - t0) / n as f64 };
    Ok((n, h))
}

fn check_domain<G: Clone + Send + Sync + 'static>(schedule: &HamiltonianSchedule<G>, t0: f64, t1: f64) -> Result<()> {
    let (lo, hi) = schedule.domain();
    let tol = 1e-12 * (hi - lo).abs().max(1.0);
    if t0 < lo - tol || t1 > hi + tol {
        return Err(Error::OutOfRange { value: if t0 < lo - tol { t0 } else { t1 }, lo, hi });
    }
    Ok(())
}

impl Propagator {
    pub fn new(dt: f64) -> Self {
        Self { dt, checkpoint_every: 1, keep_states: true }
    }

    pub fn checkpoint_every(mut self, stride: usize) -> Self {
        self.checkpoint_every = stride.max(1);
        self
    }

    pub fn keep_states(mut self, keep: bool) -> Self {
        self.keep_states = keep;
        self
    }

    /// Propagates `psi0` from `t0` to `t1`. A constant schedule is
    /// exponentiated once.
    pub fn state<K: Ket, G: Generator<K>>(
        &self,
        schedule: &HamiltonianSchedule<G>,
        psi0: &K,
        t0: f64,
        t1: f64,
        target: Option<&StateTrajectory<K>>,
    ) -> Result<PropagationResult<K>> {
        check_domain(schedule, t0, t1)?;
        let (n, h) = step_grid(t0, t1, self.dt)?;
        let norm0 = psi0.norm();
        let cached = if schedule.is_constant() && n > 0 {
            Some(schedule.at(t0)?.step(h)?)
        } else {
            None
        };
        let mut out = PropagationResult {
            times: vec![],
            states: vec![],
            fidelity_vs_target: vec![],
            norm_drift: vec![],
            worst_fidelity: 1.0,
            final_state: psi0.clone(),
        };
        let mut record = |t: f64, psi: &K, drift: f64| -> Result<()> {
            out.times.push(t);
            out.norm_drift.push(drift);
            if let Some(target) = target {
                let f = fidelity(&target.eval(t), psi)? / (norm0 * norm0);
                out.worst_fidelity = out.worst_fidelity.min(f);
                out.fidelity_vs_target.push(f);
            }
            if self.keep_states {
                out.states.push(psi.clone());
            }
            Ok(())
        };
        let mut psi = psi0.clone();
        record(t0, &psi, 0.0)?;
        for k in 0..n {
            let t_mid = t0 + (k as f64 + 0.5) * h;
            psi = match &cached {
                Some(u) => u.apply(&psi)?,
                None => schedule.at(t_mid)?.step(h)?.apply(&psi)?,
            };
            let t = if k + 1 == n { t1 } else { t0 + (k + 1) as f64 * h };
            let drift = (psi.norm() - norm0).abs();
            if drift > NORM_DRIFT_TOL {
                return Err(Error::IntegratorFailure { t, quantity: "norm", drift, suggested_dt: 0.5 * h });
            }
            if (k + 1) % self.checkpoint_every == 0 || k + 1 == n {
                record(t, &psi, drift)?;
            }
        }
        out.final_state = psi;
        Ok(out)
    }

    /// Propagates `ρ0` by `ρ → U ρ U†`, checking that the spectrum is conserved.
    pub fn density(
        &self,
        schedule: &HamiltonianSchedule<DMatrix<C64>>,
        rho0: &DMatrix<C64>,
        t0: f64,
        t1: f64,
        target: Option<&dyn Fn(f64) -> Result<DMatrix<C64>>>,
    ) -> Result<DensityPropagationResult> {
        check_domain(schedule, t0, t1)?;
        let spectrum0 = validate_density(rho0)?;
        let (n, h) = step_grid(t0, t1, self.dt)?;
        let cached = if schedule.is_constant() && n > 0 { Some(unitary(&schedule.at(t0)?, h)?) } else { None };
        let mut out = DensityPropagationResult {
            times: vec![],
            states: vec![],
            trace_distance: vec![],
            spectrum_drift: vec![],
            worst_trace_distance: 0.0,
            final_state: rho0.clone(),
        };
        let mut record = |t: f64, rho: &DMatrix<C64>, drift: f64| -> Result<()> {
            out.times.push(t);
            out.spectrum_drift.push(drift);
            if let Some(target) = target {
                let d = trace_distance(&target(t)?, rho)?;
                out.worst_trace_distance = out.worst_trace_distance.max(d);
                out.trace_distance.push(d);
            }
            if self.keep_states {
                out.states.push(rho.clone());
            }
            Ok(())
        };
        let mut rho = rho0.clone();
        record(t0, &rho, 0.0)?;
        for k in 0..n {
            let t_mid = t0 + (k as f64 + 0.5) * h;
            let u = match &cached {
                Some(u) => u.clone(),
                None => unitary(&schedule.at(t_mid)?, h)?,
            };
            rho = &u * rho * u.adjoint();
            let t = if k + 1 == n { t1 } else { t0 + (k + 1) as f64 * h };
            if (k + 1) % self.checkpoint_every == 0 || k + 1 == n {
                let drift = spectrum_drift(&spectrum0, &rho);
                if drift > SPECTRUM_DRIFT_TOL {
                    return Err(Error::IntegratorFailure { t, quantity: "spectrum", drift, suggested_dt: 0.5 * h });
                }
                record(t, &rho, drift)?;
            }
        }
        out.final_state = rho;
        Ok(out)
    }
}

fn sorted_spectrum(m: &DMatrix<C64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn spectrum_drift(reference: &[f64], rho: &DMatrix<C64>) -> f64 {
    let herm = crate::driving::hermiticity_residual(rho);
    let trace = (rho.trace() - C64::new(1.0, 0.0)).norm();
    sorted_spectrum(rho)
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).abs())
        .fold(herm.max(trace), f64::max)
}

/// Checks `ρ` is Hermitian, unit-trace and positive semidefinite; returns
/// its sorted spectrum.
pub fn validate_density(rho: &DMatrix<C64>) -> Result<Vec<f64>> {
    if !rho.is_square() || rho.nrows() == 0 {
        return Err(Error::Shape(format!("density matrix of shape {:?}", rho.shape())));
    }
    let herm = crate::driving::hermiticity_residual(rho);
    if herm > DENSITY_INPUT_TOL {
        return Err(Error::NonHermitian(herm));
    }
    let trace = rho.trace();
    if (trace - C64::new(1.0, 0.0)).norm() > DENSITY_INPUT_TOL {
        return Err(Error::Invalid(format!("density matrix has trace {trace}")));
    }
    let spectrum = sorted_spectrum(rho);
    if spectrum[0] < -DENSITY_INPUT_TOL {
        return Err(Error::Invalid(format!("density matrix has eigenvalue {:e}", spectrum[0])));
    }
    Ok(spectrum)
}

/// `½ Σ |λ_k(a − b)|`.
pub fn trace_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    let diff = a - b;
    Ok(0.5 * SymmetricEigen::new(diff).eigenvalues.iter().map(|e| e.abs()).sum::<f64>())
}

/// Propagation with checkpoints at every step.
pub fn propagate_state<K: Ket, G: Generator<K>>(
    schedule: &HamiltonianSchedule<G>,
    psi0: &K,
    t0: f64,
    t1: f64,
    dt: f64,
    target: Option<&StateTrajectory<K>>,
) -> Result<PropagationResult<K>> {
    Propagator::new(dt).state(schedule, psi0, t0, t1, target)
}

pub fn propagate_density(
    schedule: &HamiltonianSchedule<DMatrix<C64>>,
    rho0: &DMatrix<C64>,
    t0: f64,
    t1: f64,
    dt: f64,
    target: Option<&dyn Fn(f64) -> Result<DMatrix<C64>>>,
) -> Result<DensityPropagationResult> {
    Propagator::new(dt).density(schedule, rho0, t0, t1, target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driving::{brachistochrone_hamiltonian, brachistochrone_time, ResourceBudget};
    use crate::state::{Grid1d, GridWavefunction};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn zero_generator_leaves_state_fixed() {
        let psi = PureState::from_real(&[0.6, 0.8]);
        let sched = HamiltonianSchedule::constant((0.0, 1.0), DMatrix::<C64>::zeros(2, 2));
        let target = StateTrajectory::constant((0.0, 1.0), psi.clone());
        let r = propagate_state(&sched, &psi, 0.0, 1.0, 0.1, Some(&target)).unwrap();
        assert_eq!(r.times.len(), 11);
        assert!((r.worst_fidelity - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unitary_is_unitary() {
        let h = DMatrix::from_row_slice(3, 3, &[
            c(1.0, 0.0), c(0.2, 0.3), c(0.0, -1.0),
            c(0.2, -0.3), c(-0.5, 0.0), c(0.7, 0.0),
            c(0.0, 1.0), c(0.7, 0.0), c(2.0, 0.0),
        ]);
        let u = unitary(&h, 0.37).unwrap();
        assert!((u.adjoint() * &u - DMatrix::identity(3, 3)).camax() < 1e-13);
    }

    #[test]
    fn brachistochrone_arrives_on_time() {
        let psi_i = PureState::from_real(&[1.0, 0.0, 0.0]);
        let psi_f = PureState::from_slice(&[c(0.3, 0.1), c(0.0, 0.7), c(0.5, -0.2)]).normalize().unwrap();
        let budget = ResourceBudget::new(2.0).unwrap();
        let h = brachistochrone_hamiltonian(&psi_i, &psi_f, budget).unwrap();
        let t = brachistochrone_time(&psi_i, &psi_f, budget).unwrap();
        let sched = HamiltonianSchedule::constant((0.0, 2.0 * t), h);
        let r = propagate_state(&sched, &psi_i, 0.0, 2.0 * t, 1e-3, None).unwrap();
        let (k, best) = r
            .states
            .iter()
            .map(|s| fidelity(s, &psi_f).unwrap())
            .enumerate()
            .fold((0, 0.0), |acc, (k, f)| if f > acc.1 { (k, f) } else { acc });
        assert!((r.times[k] - t).abs() < 2e-3);
        assert!(best > 1.0 - 1e-6);
    }

    #[test]
    fn rank_two_step_matches_dense_exponential() {
        let a = PureState::from_slice(&[c(0.5, 0.1), c(-0.3, 0.6), c(0.2, 0.0), c(0.1, -0.4)]).normalize().unwrap();
        let d0 = PureState::from_slice(&[c(0.3, -0.2), c(0.1, 0.1), c(-0.7, 0.4), c(0.2, 0.2)]);
        let ov = a.inner(&d0).unwrap();
        let d = d0.combine(c(1.0, 0.0), &a, -ov).unwrap();
        let kernel = RankTwoKernel::new(a.clone(), d, 0.37).unwrap();
        let psi = PureState::from_slice(&[c(0.1, 0.0), c(0.2, 0.5), c(0.0, -0.3), c(0.6, 0.1)]).normalize().unwrap();
        let dense = unitary(&kernel.matrix(), 0.8).unwrap().apply(&psi).unwrap();
        let fast = kernel.step(0.8).unwrap().apply(&psi).unwrap();
        assert!(dense.max_abs_diff(&fast).unwrap() < 1e-13);
    }

    #[test]
    fn rank_two_step_on_grid_preserves_norm() {
        let grid = Grid1d::new(-8.0, 8.0, 401).unwrap();
        let g = GridWavefunction::from_fn(grid, |z| c((-z * z / 2.0).exp() / std::f64::consts::PI.powf(0.25), 0.0));
        let dg = GridWavefunction::from_fn(grid, |z| c(z * (-z * z / 2.0).exp() / std::f64::consts::PI.powf(0.25), 0.0));
        let kernel = RankTwoKernel::new(g.clone(), dg, 0.0).unwrap();
        let out = kernel.step(0.3).unwrap().apply(&g).unwrap();
        assert!((out.norm() - g.norm()).abs() < 1e-12);
    }

    #[test]
    fn midpoint_rule_is_second_order() {
        // H(t) = t σx + σz has no closed form; compare against a fine reference.
        let sched = HamiltonianSchedule::new((0.0, 2.0), |t: f64| {
            Ok(DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(t, 0.0), c(t, 0.0), c(-1.0, 0.0)]))
        });
        let psi = PureState::basis(2, 0);
        let reference = propagate_state(&sched, &psi, 0.0, 2.0, 1e-4, None).unwrap().final_state;
        let deficit = |dt: f64| {
            let out = propagate_state(&sched, &psi, 0.0, 2.0, dt, None).unwrap().final_state;
            1.0 - fidelity(&out, &reference).unwrap()
        };
        let ratio = deficit(0.02) / deficit(0.01);
        assert!(ratio > 3.5, "ratio {ratio}");
    }

    #[test]
    fn density_validation_and_constancy() {
        let rho = DMatrix::from_row_slice(2, 2, &[c(0.7, 0.0), c(0.1, 0.1), c(0.1, -0.1), c(0.3, 0.0)]);
        let sched = HamiltonianSchedule::constant((0.0, 1.0), DMatrix::<C64>::zeros(2, 2));
        let fixed = rho.clone();
        let target = move |_t: f64| Ok(fixed.clone());
        let r = propagate_density(&sched, &rho, 0.0, 1.0, 0.25, Some(&target)).unwrap();
        assert!(r.worst_trace_distance < 1e-15);
        let bad = DMatrix::from_row_slice(2, 2, &[c(1.2, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.2, 0.0)]);
        assert!(validate_density(&bad).is_err());
        let nonherm = DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.0), c(0.0, 0.0), c(0.5, 0.0)]);
        assert!(matches!(validate_density(&nonherm), Err(Error::NonHermitian(_))));
    }

    #[test]
    fn trace_distance_of_orthogonal_pure_states_is_one() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]));
        let b = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)]));
        assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reversed_interval_and_bad_dt_are_rejected() {
        let sched = HamiltonianSchedule::constant((0.0, 1.0), DMatrix::<C64>::zeros(2, 2));
        let psi = PureState::basis(2, 0);
        assert!(propagate_state(&sched, &psi, 1.0, 0.0, 0.1, None).is_err());
        assert!(propagate_state(&sched, &psi, 0.0, 1.0, 0.0, None).is_err());
        assert!(matches!(
            propagate_state(&sched, &psi, 0.0, 2.0, 0.1, None),
            Err(Error::OutOfRange { .. })
        ));
    }
}
