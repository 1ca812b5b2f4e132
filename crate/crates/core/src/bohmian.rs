//! Polar decomposition `ψ = R e^{iS/ħ}` of a space-time wavefunction, the
//! local potential it would need, and the continuity test that decides
//! whether any local potential can generate it.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::output::fmt_f64;
use crate::state::{Grid1d, GridWavefunction};

/// Amplitude mask relative to the slice maximum.
pub const MASK_FRACTION: f64 = 1e-6;
/// Default bound on the normalized continuity residual.
pub const DEFAULT_THRESHOLD: f64 = 1e-3;
/// Phase jumps between neighbours larger than this are treated as nodes.
const NODE_JUMP: f64 = 0.9 * PI;

/// `ψ(z, t)` on a uniform space grid and a uniform time lattice.
#[derive(Debug, Clone)]
pub struct WavefunctionSeries {
    grid: Grid1d,
    times: Vec<f64>,
    /// Row `n` holds the slice at `times[n]`.
    psi: DMatrix<C64>,
}

impl WavefunctionSeries {
    pub fn new(grid: Grid1d, times: Vec<f64>, psi: DMatrix<C64>) -> Result<Self> {
        grid.validate()?;
        if psi.nrows() != times.len() || psi.ncols() != grid.n_points {
            return Err(Error::Shape(format!(
                "{}x{} samples for {} times on a {}-point grid",
                psi.nrows(),
                psi.ncols(),
                times.len(),
                grid.n_points
            )));
        }
        if times.len() < 3 {
            return Err(Error::Invalid(format!("need at least 3 time slices, got {}", times.len())));
        }
        let dt = times[1] - times[0];
        if !(dt > 0.0) {
            return Err(Error::Invalid("times must increase".into()));
        }
        for w in times.windows(2) {
            if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(w[1].abs()) {
                return Err(Error::Invalid(format!("time lattice is not uniform near t = {}", w[0])));
            }
        }
        Ok(Self { grid, times, psi })
    }

    pub fn from_fn(grid: Grid1d, times: Vec<f64>, f: impl Fn(f64, f64) -> C64) -> Result<Self> {
        let zs: Vec<f64> = grid.points().collect();
        let psi = DMatrix::from_fn(times.len(), zs.len(), |n, k| f(zs[k], times[n]));
        Self::new(grid, times, psi)
    }

    pub fn from_states(times: Vec<f64>, states: &[GridWavefunction]) -> Result<Self> {
        let first = states.first().ok_or_else(|| Error::Invalid("empty state series".into()))?;
        let grid = *first.grid();
        let mut psi = DMatrix::zeros(states.len(), grid.n_points);
        for (n, st) in states.iter().enumerate() {
            if *st.grid() != grid {
                return Err(Error::Shape(format!("slice {n} lives on a different grid")));
            }
            psi.row_mut(n).copy_from(&st.samples().transpose());
        }
        Self::new(grid, times, psi)
    }

    pub fn grid(&self) -> &Grid1d {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn samples(&self) -> &DMatrix<C64> {
        &self.psi
    }

    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    /// Every second point in `z` and `t`.
    pub fn coarsened(&self) -> Result<Self> {
        let nz = self.grid.n_points.div_ceil(2);
        let nt = self.times.len().div_ceil(2);
        let z_max = self.grid.point(2 * (nz - 1));
        let grid = Grid1d::new(self.grid.z_min, z_max, nz)?;
        let times = (0..nt).map(|n| self.times[2 * n]).collect();
        let psi = DMatrix::from_fn(nt, nz, |n, k| self.psi[(2 * n, 2 * k)]);
        Self::new(grid, times, psi)
    }
}

/// `R` and `S` on the space-time lattice, with the amplitude mask.
#[derive(Debug, Clone)]
pub struct PolarField {
    pub grid: Grid1d,
    pub times: Vec<f64>,
    pub hbar: f64,
    pub r: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub mask: DMatrix<bool>,
}

impl PolarField {
    /// Largest `|R e^{iS/ħ} − ψ|` on the mask.
    pub fn reconstruction_error(&self, series: &WavefunctionSeries) -> f64 {
        let mut worst = 0.0f64;
        for n in 0..self.times.len() {
            for k in 0..self.grid.n_points {
                if self.mask[(n, k)] {
                    let rebuilt = C64::from_polar(self.r[(n, k)], self.s[(n, k)] / self.hbar);
                    worst = worst.max((rebuilt - series.psi[(n, k)]).norm());
                }
            }
        }
        worst
    }

    fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    /// Points whose stencil in `z` lies entirely on the mask.
    fn interior(&self, n: usize, k: usize) -> bool {
        k > 0 && k + 1 < self.grid.n_points && self.mask[(n, k - 1)] && self.mask[(n, k)] && self.mask[(n, k + 1)]
    }
}

fn wrap(x: f64) -> f64 {
    let y = x - 2.0 * PI * (x / (2.0 * PI)).round();
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

pub fn polar_decompose(series: &WavefunctionSeries, hbar: f64) -> Result<PolarField> {
    if !(hbar > 0.0) {
        return Err(Error::Invalid(format!("hbar must be positive, got {hbar}")));
    }
    let (nt, nz) = series.psi.shape();
    let mut r = DMatrix::<f64>::zeros(nt, nz);
    let mut s = DMatrix::<f64>::zeros(nt, nz);
    let mut mask = DMatrix::from_element(nt, nz, false);
    let zs: Vec<f64> = series.grid.points().collect();
    for n in 0..nt {
        let row = series.psi.row(n);
        let (center, peak) = row
            .iter()
            .enumerate()
            .map(|(k, a)| (k, a.norm()))
            .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if peak == 0.0 {
            return Err(Error::Node { z: zs[0], t: series.times[n] });
        }
        let cut = MASK_FRACTION * peak;
        for k in 0..nz {
            r[(n, k)] = row[k].norm();
            mask[(n, k)] = r[(n, k)] > cut;
        }
        // The mask must be one interval around the centre.
        let lo = (0..=center).rev().find(|&k| !mask[(n, k)]).map_or(0, |k| k + 1);
        let hi = (center..nz).find(|&k| !mask[(n, k)]).unwrap_or(nz);
        if let Some(k) = (0..lo).chain(hi..nz).find(|&k| mask[(n, k)]) {
            let gap = if k < lo { lo - 1 } else { hi };
            return Err(Error::Node { z: zs[gap], t: series.times[n] });
        }
        let arg: Vec<f64> = row.iter().map(|a| a.arg()).collect();
        let mut phase = vec![0.0; nz];
        phase[center] = arg[center];
        for k in center + 1..nz {
            let jump = wrap(arg[k] - arg[k - 1]);
            if k < hi && jump.abs() > NODE_JUMP {
                return Err(Error::Node { z: 0.5 * (zs[k] + zs[k - 1]), t: series.times[n] });
            }
            phase[k] = phase[k - 1] + jump;
        }
        for k in (0..center).rev() {
            let jump = wrap(arg[k] - arg[k + 1]);
            if k >= lo && jump.abs() > NODE_JUMP {
                return Err(Error::Node { z: 0.5 * (zs[k] + zs[k + 1]), t: series.times[n] });
            }
            phase[k] = phase[k + 1] + jump;
        }
        // Temporal continuity: nearest branch to the previous slice.
        if n > 0 {
            let shift = 2.0 * PI * ((phase[center] - s[(n - 1, center)] / hbar) / (2.0 * PI)).round();
            for p in &mut phase {
                *p -= shift;
            }
        }
        for k in 0..nz {
            s[(n, k)] = hbar * phase[k];
        }
    }
    Ok(PolarField { grid: series.grid, times: series.times.clone(), hbar, r, s, mask })
}

/// Second-order time derivative of row-major field `f` at `(n, k)`.
fn d_dt(f: &DMatrix<f64>, n: usize, k: usize, dt: f64) -> f64 {
    let nt = f.nrows();
    if n == 0 {
        (3.0 * (f[(1, k)] - f[(0, k)]) + (f[(1, k)] - f[(2, k)])) / (2.0 * dt)
    } else if n + 1 == nt {
        (3.0 * (f[(n, k)] - f[(n - 1, k)]) + (f[(n - 2, k)] - f[(n - 1, k)])) / (2.0 * dt)
    } else {
        (f[(n + 1, k)] - f[(n - 1, k)]) / (2.0 * dt)
    }
}

fn d_dz(f: &DMatrix<f64>, n: usize, k: usize, dz: f64) -> f64 {
    (f[(n, k + 1)] - f[(n, k - 1)]) / (2.0 * dz)
}

fn d2_dz2(f: &DMatrix<f64>, n: usize, k: usize, dz: f64) -> f64 {
    (f[(n, k + 1)] - 2.0 * f[(n, k)] + f[(n, k - 1)]) / (dz * dz)
}

/// `V = −∂_tS − (∂_zS)²/(2m) + (ħ²/2m) ∂_z²R / R`, `NaN` off the mask.
///
/// Time derivatives compare the same grid point across slices, so a point
/// counts only if it is on the mask in the neighbouring slices too.
pub fn local_potential(field: &PolarField, m: f64) -> DMatrix<f64> {
    let (nt, nz) = field.r.shape();
    let dz = field.grid.dz();
    let dt = field.dt();
    let hbar = field.hbar;
    DMatrix::from_fn(nt, nz, |n, k| {
        if !field.interior(n, k) || !time_stencil_on_mask(field, n, k) {
            return f64::NAN;
        }
        let st = d_dt(&field.s, n, k, dt);
        let sz = d_dz(&field.s, n, k, dz);
        let rzz = d2_dz2(&field.r, n, k, dz);
        -st - sz * sz / (2.0 * m) + hbar * hbar / (2.0 * m) * rzz / field.r[(n, k)]
    })
}

fn time_stencil_on_mask(field: &PolarField, n: usize, k: usize) -> bool {
    let nt = field.times.len();
    let rows: [usize; 3] = if n == 0 {
        [0, 1, 2]
    } else if n + 1 == nt {
        [n - 2, n - 1, n]
    } else {
        [n - 1, n, n + 1]
    };
    rows.iter().all(|&j| field.mask[(j, k)])
}

/// Per-slice L² norm over the mask of `∂_tR + (R ∂_z²S + 2 ∂_zR ∂_zS)/(2m)`,
/// divided by `max_t ‖∂_tR‖ + floor`.
///
/// The normalizer is taken over all slices so that instants where the packet
/// momentarily stops changing (a free packet at its waist) do not divide by
/// zero. The floor `√ε·max R/dt` is the smallest rate the lattice resolves.
pub fn continuity_residual(field: &PolarField, m: f64) -> Vec<f64> {
    let (nt, nz) = field.r.shape();
    let dz = field.grid.dz();
    let dt = field.dt();
    let mut num = vec![0.0; nt];
    let mut rate = 0.0f64;
    let mut peak = 0.0f64;
    for (n, acc) in num.iter_mut().enumerate() {
        let mut den = 0.0;
        for k in 0..nz {
            peak = peak.max(field.r[(n, k)]);
            if !field.interior(n, k) || !time_stencil_on_mask(field, n, k) {
                continue;
            }
            let rt = d_dt(&field.r, n, k, dt);
            let rz = d_dz(&field.r, n, k, dz);
            let sz = d_dz(&field.s, n, k, dz);
            let szz = d2_dz2(&field.s, n, k, dz);
            let res = rt + (field.r[(n, k)] * szz + 2.0 * rz * sz) / (2.0 * m);
            *acc += res * res * dz;
            den += rt * rt * dz;
        }
        *acc = acc.sqrt();
        rate = rate.max(den.sqrt());
    }
    let norm = rate + f64::EPSILON.sqrt() * peak / dt;
    num.into_iter().map(|x| x / norm).collect()
}

/// Outcome of the locality analysis.
#[derive(Debug, Clone, Serialize)]
pub struct BohmianReport {
    #[serde(skip)]
    pub grid: Grid1d,
    #[serde(skip)]
    pub times: Vec<f64>,
    #[serde(skip)]
    pub potential: DMatrix<f64>,
    pub continuity_residual_norm: Vec<f64>,
    pub max_residual: f64,
    /// The same supremum on the lattice with every second point dropped.
    pub coarse_max_residual: f64,
    pub threshold: f64,
    pub local_ok: bool,
    pub constraint_note: String,
}

impl BohmianReport {
    /// Rows `z, t, V, residual`; `V` is `NaN` off the mask.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Invalid(format!("csv output: {e}"));
        w.write_record(["z", "t", "V", "residual"]).map_err(io)?;
        let zs: Vec<f64> = self.grid.points().collect();
        for (n, &t) in self.times.iter().enumerate() {
            for (k, &z) in zs.iter().enumerate() {
                let rec = [fmt_f64(z), fmt_f64(t), fmt_f64(self.potential[(n, k)]), fmt_f64(self.continuity_residual_norm[n])];
                w.write_record(rec).map_err(io)?;
            }
        }
        w.flush().map_err(|e| Error::Invalid(format!("csv output: {e}")))
    }

    pub fn to_json(&self) -> Result<String> {
        crate::output::to_json_string(self)
    }

    /// Largest `|V − V_ref|` on the mask.
    pub fn potential_error(&self, v_ref: impl Fn(f64, f64) -> f64) -> f64 {
        let zs: Vec<f64> = self.grid.points().collect();
        let mut worst = 0.0f64;
        for (n, &t) in self.times.iter().enumerate() {
            for (k, &z) in zs.iter().enumerate() {
                let v = self.potential[(n, k)];
                if v.is_finite() {
                    worst = worst.max((v - v_ref(z, t)).abs());
                }
            }
        }
        worst
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

/// Locality verdict with a refinement-trend check.
///
/// `local_ok` needs the supremum residual below `threshold`, and either a
/// residual already at round-off level (`≤ 10⁻³·threshold`) or one that
/// shrinks at least twofold from the coarsened lattice, as discretization
/// error must.
pub fn locality_verdict(series: &WavefunctionSeries, m: f64, hbar: f64, threshold: f64) -> Result<BohmianReport> {
    if !(m > 0.0) || !(threshold > 0.0) {
        return Err(Error::Invalid(format!("need m > 0 and threshold > 0, got {m}, {threshold}")));
    }
    let field = polar_decompose(series, hbar)?;
    let residual = continuity_residual(&field, m);
    let fine = sup(&residual);
    let coarse_series = series.coarsened()?;
    let coarse = sup(&continuity_residual(&polar_decompose(&coarse_series, hbar)?, m));
    let trend_ok = fine <= 1e-3 * threshold || coarse >= 2.0 * fine;
    let local_ok = fine < threshold && trend_ok;
    let constraint_note = if local_ok {
        format!("continuity satisfied: residual {fine:.3e} < {threshold:.1e}, coarse {coarse:.3e}; V is a local potential")
    } else if fine < threshold {
        format!("residual {fine:.3e} below threshold but not shrinking under refinement (coarse {coarse:.3e})")
    } else {
        format!("continuity violated: residual {fine:.3e} >= {threshold:.1e}; no local potential generates these dynamics")
    };
    Ok(BohmianReport {
        grid: field.grid,
        times: field.times.clone(),
        potential: local_potential(&field, m),
        continuity_residual_norm: residual,
        max_residual: fine,
        coarse_max_residual: coarse,
        threshold,
        local_ok,
        constraint_note,
    })
}

/// Oscillator ground state translated at speed `μ` with the plane-wave
/// phase `(√(mħω) z − ħωt/2)/ħ`.
///
/// Only `μ = √(ħω/m)` satisfies the continuity equation; otherwise the
/// normalized residual is exactly `|μ − v|/μ` with `v = √(ħω/m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TravelingPacket {
    pub m: f64,
    pub omega: f64,
    pub hbar: f64,
    pub mu: f64,
}

impl TravelingPacket {
    /// The packet with the speed the continuity equation allows.
    pub fn matched(m: f64, omega: f64, hbar: f64) -> Self {
        Self { m, omega, hbar, mu: (hbar * omega / m).sqrt() }
    }

    pub fn phase_velocity(&self) -> f64 {
        (self.hbar * self.omega / self.m).sqrt()
    }

    pub fn psi(&self, z: f64, t: f64) -> C64 {
        let a = self.m * self.omega / self.hbar;
        let u = z - self.mu * t;
        let amp = (a / PI).powf(0.25) * (-a * u * u / 2.0).exp();
        let phase = ((self.m * self.hbar * self.omega).sqrt() * z - self.hbar * self.omega * t / 2.0) / self.hbar;
        C64::from_polar(amp, phase)
    }

    pub fn series(&self, grid: Grid1d, times: Vec<f64>) -> Result<WavefunctionSeries> {
        WavefunctionSeries::from_fn(grid, times, |z, t| self.psi(z, t))
    }

    /// `−ħω/2 + mω²(z − μt)²/2`.
    pub fn potential(&self, z: f64, t: f64) -> f64 {
        let u = z - self.mu * t;
        -0.5 * self.hbar * self.omega + 0.5 * self.m * self.omega * self.omega * u * u
    }

    pub fn exact_residual(&self) -> f64 {
        (self.mu - self.phase_velocity()).abs() / self.mu.abs()
    }
}

/// Uniform times `t0 + k·dt`, `k = 0..n`.
pub fn time_lattice(t0: f64, dt: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| t0 + k as f64 * dt).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn packet_series(p: &TravelingPacket, nz: usize, nt: usize) -> WavefunctionSeries {
        let grid = Grid1d::new(-8.0, 10.0, nz).unwrap();
        p.series(grid, time_lattice(0.0, 1.0 / (nt - 1) as f64, nt)).unwrap()
    }

    #[test]
    fn real_gaussian_has_zero_phase() {
        let grid = Grid1d::new(-6.0, 6.0, 121).unwrap();
        let s = WavefunctionSeries::from_fn(grid, time_lattice(0.0, 0.1, 4), |z, _| C64::new((-z * z).exp(), 0.0)).unwrap();
        let f = polar_decompose(&s, 1.0).unwrap();
        assert!(f.s.iter().all(|&x| x == 0.0));
        let r = continuity_residual(&f, 1.0);
        assert!(r.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn plane_wave_phase_is_unwrapped() {
        let grid = Grid1d::new(-6.0, 6.0, 601).unwrap();
        let (k, hbar) = (3.0, 0.7);
        let s = WavefunctionSeries::from_fn(grid, time_lattice(0.0, 0.1, 3), |z, _| {
            C64::from_polar((-z * z / 4.0).exp(), k * z)
        })
        .unwrap();
        let f = polar_decompose(&s, hbar).unwrap();
        let zs: Vec<f64> = grid.points().collect();
        let c = 300;
        for (i, z) in zs.iter().enumerate() {
            // Unwrapped relative to the centre value.
            let expect = hbar * k * (z - zs[c]) + f.s[(1, c)];
            assert!((f.s[(1, i)] - expect).abs() < 1e-10);
        }
        assert!(f.reconstruction_error(&s) < 1e-12);
    }

    #[test]
    fn traveling_packet_phase_and_potential() {
        let p = TravelingPacket::matched(1.0, 1.0, 1.0);
        let s = packet_series(&p, 721, 51);
        let f = polar_decompose(&s, 1.0).unwrap();
        assert!(f.reconstruction_error(&s) < 1e-8);
        let zs: Vec<f64> = s.grid().points().collect();
        let (n, k) = (20, 400);
        let t = s.times()[n];
        let exact = zs[k] - 0.5 * t;
        let shift = f.s[(n, k)] - exact;
        assert!((shift / (2.0 * PI) - (shift / (2.0 * PI)).round()).abs() < 1e-9);
        let report = locality_verdict(&s, 1.0, 1.0, DEFAULT_THRESHOLD).unwrap();
        assert!(report.local_ok, "{}", report.constraint_note);
        assert!(report.potential_error(|z, t| p.potential(z, t)) < 2e-2);
    }

    #[test]
    fn mismatched_speed_is_nonlocal() {
        let mut p = TravelingPacket::matched(1.0, 1.0, 1.0);
        p.mu *= 2.0;
        let report = locality_verdict(&packet_series(&p, 721, 51), 1.0, 1.0, DEFAULT_THRESHOLD).unwrap();
        assert!(!report.local_ok);
        assert!((report.max_residual - p.exact_residual()).abs() < 1e-2, "{}", report.max_residual);
    }

    #[test]
    fn static_oscillator_recovers_harmonic_potential() {
        let (m, w, hbar) = (1.3, 0.8, 0.9);
        let a = m * w / hbar;
        let error = |nz: usize| {
            let grid = Grid1d::new(-7.0, 7.0, nz).unwrap();
            let s = WavefunctionSeries::from_fn(grid, time_lattice(0.0, 0.05, 11), |z, t| {
                C64::from_polar((-a * z * z / 2.0).exp(), -0.5 * w * t)
            })
            .unwrap();
            let report = locality_verdict(&s, m, hbar, DEFAULT_THRESHOLD).unwrap();
            assert!(report.local_ok, "{}", report.constraint_note);
            report.potential_error(|z, _| 0.5 * m * w * w * z * z)
        };
        let (coarse, fine) = (error(701), error(1401));
        assert!(fine < 1e-2 && coarse / fine > 3.5, "{coarse} {fine}");
    }

    #[test]
    fn free_spreading_packet_needs_no_potential() {
        let (m, hbar, sigma) = (1.0, 1.0, 1.0);
        let grid = Grid1d::new(-12.0, 12.0, 961).unwrap();
        let psi = |z: f64, t: f64| {
            let a = C64::new(sigma * sigma, hbar * t / (2.0 * m));
            (C64::new(sigma, 0.0) / a).sqrt() * (-z * z / (4.0 * a)).exp()
        };
        let s = WavefunctionSeries::from_fn(grid, time_lattice(0.0, 0.02, 51), psi).unwrap();
        let report = locality_verdict(&s, m, hbar, DEFAULT_THRESHOLD).unwrap();
        assert!(report.local_ok, "{}", report.constraint_note);
        assert!(report.potential_error(|_, _| 0.0) < 2e-2);
    }

    #[test]
    fn global_phase_shifts_potential_by_constant() {
        let p = TravelingPacket::matched(1.0, 1.0, 1.0);
        let base = packet_series(&p, 361, 26);
        let chi = |t: f64| 0.4 * t * t;
        let psi = DMatrix::from_fn(base.times().len(), base.grid().n_points, |n, k| {
            base.samples()[(n, k)] * C64::from_polar(1.0, chi(base.times()[n]))
        });
        let shifted = WavefunctionSeries::new(*base.grid(), base.times().to_vec(), psi).unwrap();
        let a = locality_verdict(&base, 1.0, 1.0, DEFAULT_THRESHOLD).unwrap();
        let b = locality_verdict(&shifted, 1.0, 1.0, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(a.local_ok, b.local_ok);
        for n in 0..a.times.len() {
            for k in 0..base.grid().n_points {
                let (va, vb) = (a.potential[(n, k)], b.potential[(n, k)]);
                if va.is_finite() {
                    assert!((vb - va + 0.8 * a.times[n]).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn node_inside_mask_is_reported() {
        let grid = Grid1d::new(-5.0, 5.0, 200).unwrap();
        let s = WavefunctionSeries::from_fn(grid, time_lattice(0.0, 0.1, 3), |z, _| {
            C64::new((z - 0.3) * (-z * z / 2.0).exp(), 0.0)
        })
        .unwrap();
        match polar_decompose(&s, 1.0) {
            Err(Error::Node { z, .. }) => assert!((z - 0.3).abs() < 0.1, "{z}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_and_json_outputs() {
        let p = TravelingPacket::matched(1.0, 1.0, 1.0);
        let s = packet_series(&p, 41, 5);
        let report = locality_verdict(&s, 1.0, 1.0, DEFAULT_THRESHOLD).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 41 * 5);
        let v: serde_json::Value = serde_json::from_str(&report.to_json().unwrap()).unwrap();
        assert!(v["local_ok"].is_boolean());
    }
}
