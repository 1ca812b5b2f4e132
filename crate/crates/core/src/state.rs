//! Normalized complex states, inner products and parameterized trajectories.
//!
//! Two representations implement [`Ket`]: [`PureState`] for n-level systems,
//! where the inner product is the plain sum, and [`GridWavefunction`] for a
//! wavefunction sampled on a uniform 1-d grid, where the inner product is the
//! composite trapezoid quadrature. Everything downstream is written against
//! the trait.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pairs with `|<a|b>|` above `1 - DEGENERATE_PAIR_TOL` have no Gram-Schmidt partner.
pub const DEGENERATE_PAIR_TOL: f64 = 1e-12;

/// A vector in some Hilbert space representation.
pub trait Ket: Clone + fmt::Debug + Send + Sync + 'static {
    fn amplitudes(&self) -> &DVector<C64>;

    /// A vector of the same geometry carrying new amplitudes.
    fn with_amplitudes(&self, amplitudes: DVector<C64>) -> Self;

    /// Checks that `self` and `other` live in the same space.
    fn compatible(&self, other: &Self) -> Result<()>;

    /// `<self|other>`, conjugate-linear in `self`.
    fn inner(&self, other: &Self) -> Result<C64>;

    fn dim(&self) -> usize {
        self.amplitudes().len()
    }

    fn norm_squared(&self) -> f64 {
        self.inner(self).map(|v| v.re).unwrap_or(f64::NAN)
    }

    fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    fn normalize(&self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Invalid(format!("cannot normalize a vector of norm {n}")));
        }
        Ok(self.scale(C64::new(1.0 / n, 0.0)))
    }

    fn scale(&self, c: C64) -> Self {
        self.with_amplitudes(self.amplitudes() * c)
    }

    /// `a·self + b·other`.
    fn combine(&self, a: C64, other: &Self, b: C64) -> Result<Self> {
        self.compatible(other)?;
        Ok(self.with_amplitudes(self.amplitudes() * a + other.amplitudes() * b))
    }

    /// Largest amplitude-wise difference.
    fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.compatible(other)?;
        Ok(self
            .amplitudes()
            .iter()
            .zip(other.amplitudes().iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

/// Amplitude vector of an n-level system.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: DVector<C64>,
}

impl PureState {
    /// Wraps the amplitudes as given; no normalization.
    pub fn new(amplitudes: DVector<C64>) -> Self {
        assert!(!amplitudes.is_empty(), "a state needs at least one amplitude");
        Self { amplitudes }
    }

    pub fn from_slice(amplitudes: &[C64]) -> Self {
        Self::new(DVector::from_column_slice(amplitudes))
    }

    pub fn from_real(amplitudes: &[f64]) -> Self {
        Self::new(DVector::from_iterator(
            amplitudes.len(),
            amplitudes.iter().map(|&a| C64::new(a, 0.0)),
        ))
    }

    /// Normalized copy of the given amplitudes.
    pub fn normalized(amplitudes: DVector<C64>) -> Result<Self> {
        Self::new(amplitudes).normalize()
    }

    /// Computational basis vector `e_k` of dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Self {
        assert!(k < dim);
        let mut v = DVector::zeros(dim);
        v[k] = C64::new(1.0, 0.0);
        Self::new(v)
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(DVector::zeros(dim))
    }

    pub fn as_vector(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn into_vector(self) -> DVector<C64> {
        self.amplitudes
    }
}

impl Ket for PureState {
    fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    fn with_amplitudes(&self, amplitudes: DVector<C64>) -> Self {
        Self::new(amplitudes)
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::Shape(format!(
                "dimension {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }

    fn inner(&self, other: &Self) -> Result<C64> {
        self.compatible(other)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }
}

/// Uniform 1-d grid `z_k = z_min + k·dz`, `k = 0..n_points`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid1d {
    pub z_min: f64,
    pub z_max: f64,
    pub n_points: usize,
}

impl Grid1d {
    pub fn new(z_min: f64, z_max: f64, n_points: usize) -> Result<Self> {
        let g = Self { z_min, z_max, n_points };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points < 2 {
            return Err(Error::Geometry(format!("need at least 2 grid points, got {}", self.n_points)));
        }
        if !(self.z_max > self.z_min) || !self.z_min.is_finite() || !self.z_max.is_finite() {
            return Err(Error::Geometry(format!(
                "grid bounds must satisfy z_min < z_max, got [{}, {}]",
                self.z_min, self.z_max
            )));
        }
        Ok(())
    }

    pub fn dz(&self) -> f64 {
        (self.z_max - self.z_min) / (self.n_points - 1) as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        if k + 1 == self.n_points {
            self.z_max
        } else {
            self.z_min + k as f64 * self.dz()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |k| self.point(k))
    }

    /// Trapezoid weight of node `k`.
    pub fn weight(&self, k: usize) -> f64 {
        if k == 0 || k + 1 == self.n_points {
            0.5 * self.dz()
        } else {
            self.dz()
        }
    }

    /// Trapezoid integral of real samples.
    pub fn integrate(&self, samples: &[f64]) -> f64 {
        samples.iter().enumerate().map(|(k, v)| self.weight(k) * v).sum()
    }
}

/// Complex wavefunction sampled on a [`Grid1d`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridWavefunction {
    grid: Grid1d,
    samples: DVector<C64>,
}

impl GridWavefunction {
    pub fn new(grid: Grid1d, samples: DVector<C64>) -> Result<Self> {
        grid.validate()?;
        if samples.len() != grid.n_points {
            return Err(Error::Shape(format!(
                "{} samples on a {}-point grid",
                samples.len(),
                grid.n_points
            )));
        }
        Ok(Self { grid, samples })
    }

    /// Samples `f(z)` at every grid point.
    pub fn from_fn(grid: Grid1d, f: impl Fn(f64) -> C64) -> Self {
        let samples = DVector::from_iterator(grid.n_points, grid.points().map(f));
        Self { grid, samples }
    }

    pub fn grid(&self) -> &Grid1d {
        &self.grid
    }

    pub fn samples(&self) -> &DVector<C64> {
        &self.samples
    }

    /// `∫ z |ψ|² dz / ∫ |ψ|² dz`.
    pub fn mean_position(&self) -> f64 {
        let p: Vec<f64> = self.samples.iter().map(|a| a.norm_sqr()).collect();
        let zp: Vec<f64> = self.grid.points().zip(&p).map(|(z, p)| z * p).collect();
        self.grid.integrate(&zp) / self.grid.integrate(&p)
    }

    /// Variance of `|ψ|²` as a position distribution.
    pub fn position_variance(&self) -> f64 {
        let mean = self.mean_position();
        let p: Vec<f64> = self.samples.iter().map(|a| a.norm_sqr()).collect();
        let z2p: Vec<f64> = self
            .grid
            .points()
            .zip(&p)
            .map(|(z, p)| (z - mean).powi(2) * p)
            .collect();
        self.grid.integrate(&z2p) / self.grid.integrate(&p)
    }
}

impl Ket for GridWavefunction {
    fn amplitudes(&self) -> &DVector<C64> {
        &self.samples
    }

    fn with_amplitudes(&self, amplitudes: DVector<C64>) -> Self {
        assert_eq!(amplitudes.len(), self.grid.n_points);
        Self { grid: self.grid, samples: amplitudes }
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Shape(format!("grid {:?} vs {:?}", self.grid, other.grid)));
        }
        Ok(())
    }

    fn inner(&self, other: &Self) -> Result<C64> {
        self.compatible(other)?;
        let n = self.samples.len();
        let dz = self.grid.dz();
        let mut acc = self.samples.dotc(&other.samples);
        acc -= 0.5 * (self.samples[0].conj() * other.samples[0]
            + self.samples[n - 1].conj() * other.samples[n - 1]);
        Ok(acc * dz)
    }
}

/// `<a|b>` in the representation's own inner product.
pub fn inner<K: Ket>(a: &K, b: &K) -> Result<C64> {
    a.inner(b)
}

/// `|<a|b>|²`, clamped to `[0, 1]` for normalized inputs.
pub fn fidelity<K: Ket>(a: &K, b: &K) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().min(1.0))
}

/// Unit vector in span{ψ_i, ψ_f} orthogonal to ψ_i.
///
/// `ψ_f` is first rotated to the representative `e^{−iα}ψ_f` of its ray with
/// real positive overlap `cosΩ = |<ψ_i|ψ_f>|`, so that
/// `e^{−iα}ψ_f = cosΩ ψ_i + sinΩ ψ'_f` lies on a real great circle. A second
/// projection pass keeps the result orthogonal to working precision.
pub fn gram_schmidt_partner<K: Ket>(psi_i: &K, psi_f: &K) -> Result<K> {
    let overlap = psi_i.inner(psi_f)?;
    if overlap.norm() >= 1.0 - DEGENERATE_PAIR_TOL {
        return Err(Error::DegeneratePair { overlap: overlap.norm() });
    }
    let cos_omega = overlap.norm();
    let align = if cos_omega > 0.0 { overlap.conj() / cos_omega } else { C64::new(1.0, 0.0) };
    let sin_omega = (1.0 - cos_omega * cos_omega).sqrt();
    let mut v = psi_f.combine(align / sin_omega, psi_i, C64::new(-cos_omega / sin_omega, 0.0))?;
    let residue = psi_i.inner(&v)?;
    v = v.combine(C64::new(1.0, 0.0), psi_i, -residue)?;
    v.normalize()
}

/// How a trajectory derivative was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeMethod {
    Analytic,
    /// Central difference, O(h²).
    Central,
    /// Second-order one-sided difference used at the domain boundary.
    OneSided,
}

#[derive(Debug, Clone)]
pub struct Derivative<K> {
    pub value: K,
    pub method: DerivativeMethod,
}

impl<K> Derivative<K> {
    /// True when accuracy was downgraded to a one-sided stencil.
    pub fn is_downgraded(&self) -> bool {
        self.method == DerivativeMethod::OneSided
    }
}

type Evaluator<K> = Arc<dyn Fn(f64) -> K + Send + Sync>;

/// A map `s ↦ ψ(s)` on a closed parameter interval, optionally with an
/// analytic derivative.
#[derive(Clone)]
pub struct StateTrajectory<K> {
    eval: Evaluator<K>,
    derivative: Option<Evaluator<K>>,
    domain: (f64, f64),
    fd_step: f64,
}

impl<K: Ket> fmt::Debug for StateTrajectory<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StateTrajectory")
            .field("domain", &self.domain)
            .field("fd_step", &self.fd_step)
            .field("analytic_derivative", &self.derivative.is_some())
            .finish()
    }
}

impl<K: Ket> StateTrajectory<K> {
    /// Trajectory on `[lo, hi]` (either order accepted). The finite-difference
    /// step defaults to `1e-5` of the domain length, capped at `1e-5`.
    pub fn new(domain: (f64, f64), eval: impl Fn(f64) -> K + Send + Sync + 'static) -> Self {
        let domain = if domain.0 <= domain.1 { domain } else { (domain.1, domain.0) };
        let len = domain.1 - domain.0;
        let fd_step = if len > 0.0 { 1e-5 * len.min(1.0) } else { 1e-5 };
        Self { eval: Arc::new(eval), derivative: None, domain, fd_step }
    }

    pub fn with_derivative(mut self, derivative: impl Fn(f64) -> K + Send + Sync + 'static) -> Self {
        self.derivative = Some(Arc::new(derivative));
        self
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        assert!(h > 0.0, "fd_step must be positive");
        self.fd_step = h;
        self
    }

    /// Constant trajectory.
    pub fn constant(domain: (f64, f64), state: K) -> Self {
        let zero = state.scale(C64::new(0.0, 0.0));
        Self::new(domain, move |_| state.clone()).with_derivative(move |_| zero.clone())
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    pub fn eval(&self, s: f64) -> K {
        (self.eval)(s)
    }

    /// `∂_s ψ`: analytic when supplied, otherwise a finite difference.
    pub fn derivative(&self, s: f64) -> Derivative<K> {
        match &self.derivative {
            Some(d) => Derivative { value: d(s), method: DerivativeMethod::Analytic },
            None => self.finite_difference(s),
        }
    }

    /// Shorthand for `derivative(s).value`.
    pub fn velocity(&self, s: f64) -> K {
        self.derivative(s).value
    }

    /// Central difference with step `fd_step`, or a one-sided second-order
    /// stencil when `s` is closer than `fd_step` to the domain boundary.
    pub fn finite_difference(&self, s: f64) -> Derivative<K> {
        let h = self.fd_step;
        let (lo, hi) = self.domain;
        let one = C64::new(1.0, 0.0);
        let inv2h = C64::new(1.0 / (2.0 * h), 0.0);
        let slack = 1e-12 * (hi - lo).abs().max(1.0);
        if s - h >= lo - slack && s + h <= hi + slack {
            let f1 = self.eval(s + h);
            let f0 = self.eval(s - h);
            let value = f1.combine(inv2h, &f0, -inv2h).expect("trajectory changed shape");
            return Derivative { value, method: DerivativeMethod::Central };
        }
        let dir = if s - h < lo { 1.0 } else { -1.0 };
        let f0 = self.eval(s);
        let f1 = self.eval(s + dir * h);
        let f2 = self.eval(s + 2.0 * dir * h);
        let c = C64::new(dir / (2.0 * h), 0.0);
        let value = f0
            .combine(-3.0 * one, &f1, 4.0 * one)
            .and_then(|v| v.combine(c, &f2, -c))
            .expect("trajectory changed shape");
        Derivative { value, method: DerivativeMethod::OneSided }
    }

    /// Reparameterize by an affine map `s = a + b·u` (b ≠ 0) over `u ∈ [u0, u1]`.
    pub fn affine_reparam(&self, a: f64, b: f64, u_domain: (f64, f64)) -> Self {
        let inner = self.clone();
        let inner_d = self.clone();
        let bc = C64::new(b, 0.0);
        Self::new(u_domain, move |u| inner.eval(a + b * u))
            .with_derivative(move |u| inner_d.velocity(a + b * u).scale(bc))
    }
}
