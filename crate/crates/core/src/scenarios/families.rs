//! Test families with known derivatives.

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::state::{PureState, StateTrajectory};

/// Qubit on the circle of polar angle `theta`, `(cos θ/2, e^{iΩt} sin θ/2)`,
/// once around for `t ∈ [0, 2π/Ω]`.
pub fn latitude_circle(theta: f64, rate: f64) -> StateTrajectory<PureState> {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let period = 2.0 * std::f64::consts::PI / rate.abs();
    StateTrajectory::new((0.0, period), move |t| {
        PureState::from_slice(&[C64::new(c, 0.0), C64::from_polar(s, rate * t)])
    })
    .with_derivative(move |t| {
        PureState::from_slice(&[C64::new(0.0, 0.0), C64::new(0.0, rate) * C64::from_polar(s, rate * t)])
    })
}

const TERMS: usize = 3;

#[derive(Debug, Clone)]
struct Mixture {
    dim: usize,
    coeffs: Vec<C64>,
    freqs: Vec<f64>,
}

impl Mixture {
    fn raw(&self, s: f64) -> (DVector<C64>, DVector<C64>) {
        let mut v = DVector::zeros(self.dim);
        let mut dv = DVector::zeros(self.dim);
        for j in 0..self.dim {
            for k in 0..TERMS {
                let idx = j * TERMS + k;
                let term = self.coeffs[idx] * C64::from_polar(1.0, self.freqs[idx] * s);
                v[j] += term;
                dv[j] += C64::new(0.0, self.freqs[idx]) * term;
            }
        }
        (v, dv)
    }
}

/// Smooth random path on `[0, 1]` in dimension `dim`.
///
/// Each amplitude is a sum of a few complex exponentials with frequencies in
/// `[−2, 2]`, then the vector is normalized. The derivative follows from the
/// quotient rule, so it is exact. Equal seeds give equal paths.
pub fn random_smooth_trajectory(dim: usize, seed: u64) -> StateTrajectory<PureState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = dim * TERMS;
    let coeffs = (0..n)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect::<Vec<_>>();
    let freqs = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let mut mix = Mixture { dim, coeffs, freqs };
    // A constant term on the first component keeps the norm away from zero.
    mix.coeffs[0] += C64::new(2.0 * TERMS as f64, 0.0);
    mix.freqs[0] = 0.0;
    let m2 = mix.clone();
    StateTrajectory::new((0.0, 1.0), move |s| {
        let (v, _) = mix.raw(s);
        let norm = v.norm();
        PureState::new(v / C64::new(norm, 0.0))
    })
    .with_derivative(move |s| {
        let (v, dv) = m2.raw(s);
        let norm = v.norm();
        let radial = v.dotc(&dv).re / (norm * norm * norm);
        PureState::new(dv / C64::new(norm, 0.0) - v * C64::new(radial, 0.0))
    })
}

/// Real qubit basis rotated at rate `kappa`, `|0(t)> = (cos κt/2, sin κt/2)`
/// and its partner, over one period `2π/κ`.
pub fn rotating_qubit_basis(kappa: f64) -> Vec<StateTrajectory<PureState>> {
    let period = 2.0 * std::f64::consts::PI / kappa.abs();
    let zero = StateTrajectory::new((0.0, period), move |t: f64| {
        let h = 0.5 * kappa * t;
        PureState::from_real(&[h.cos(), h.sin()])
    })
    .with_derivative(move |t: f64| {
        let h = 0.5 * kappa * t;
        PureState::from_real(&[-0.5 * kappa * h.sin(), 0.5 * kappa * h.cos()])
    });
    let one = StateTrajectory::new((0.0, period), move |t: f64| {
        let h = 0.5 * kappa * t;
        PureState::from_real(&[-h.sin(), h.cos()])
    })
    .with_derivative(move |t: f64| {
        let h = 0.5 * kappa * t;
        PureState::from_real(&[-0.5 * kappa * h.cos(), -0.5 * kappa * h.sin()])
    });
    vec![zero, one]
}

/// [`latitude_circle`] at unit rate together with its orthogonal partner
/// `(−e^{−it} sin θ/2, cos θ/2)`.
pub fn latitude_basis(theta: f64) -> Vec<StateTrajectory<PureState>> {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let partner = StateTrajectory::new((0.0, 2.0 * std::f64::consts::PI), move |t: f64| {
        PureState::from_slice(&[-C64::from_polar(s, -t), C64::new(c, 0.0)])
    })
    .with_derivative(move |t: f64| {
        PureState::from_slice(&[C64::new(0.0, 1.0) * C64::from_polar(s, -t), C64::new(0.0, 0.0)])
    });
    vec![latitude_circle(theta, 1.0), partner]
}
