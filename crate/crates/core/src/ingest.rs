//! Trajectories supplied as sampled amplitudes.
//!
//! The CSV layout is one row per sample: `s, Re a₁, Im a₁, Re a₂, Im a₂, …`.
//! A header line is optional and `#` starts a comment. Between samples the
//! amplitudes are joined by cubic Hermite pieces whose slopes come from
//! fourth-order differences, and the result is renormalized.

use std::io::Read;

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::state::{Grid1d, GridWavefunction, PureState, StateTrajectory};

/// Fewer rows than this cannot support the interpolation stencil.
pub const MIN_ROWS: usize = 4;
/// Norm drift above this is reported and corrected.
pub const WARN_DRIFT: f64 = 1e-6;
/// Norm drift above this is rejected.
pub const REJECT_DRIFT: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct SampledTrajectory {
    s: Vec<f64>,
    rows: Vec<DVector<C64>>,
    slopes: Vec<DVector<C64>>,
    max_drift: f64,
}

impl SampledTrajectory {
    pub fn new(s: Vec<f64>, rows: Vec<DVector<C64>>) -> Result<Self> {
        if s.len() != rows.len() {
            return Err(Error::Shape(format!("{} parameters for {} rows", s.len(), rows.len())));
        }
        if s.len() < MIN_ROWS {
            return Err(Error::Invalid(format!(
                "{} samples; at least {MIN_ROWS} are needed to resolve derivatives",
                s.len()
            )));
        }
        let dim = rows[0].len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Shape("rows must share a nonzero dimension".into()));
        }
        for (k, w) in s.windows(2).enumerate() {
            if !(w[1] > w[0]) || !w[0].is_finite() || !w[1].is_finite() {
                return Err(Error::Invalid(format!(
                    "s must be strictly increasing; row {} has {} after {}",
                    k + 2,
                    w[1],
                    w[0]
                )));
            }
        }
        let mut max_drift = 0.0f64;
        let mut rows = rows;
        for (k, row) in rows.iter_mut().enumerate() {
            let norm = row.norm();
            let drift = (norm - 1.0).abs();
            if !(drift <= REJECT_DRIFT) {
                return Err(Error::Invalid(format!(
                    "row {} at s = {} has norm {norm}, drift above {REJECT_DRIFT}",
                    k + 1,
                    s[k]
                )));
            }
            max_drift = max_drift.max(drift);
            if drift > WARN_DRIFT {
                *row /= C64::new(norm, 0.0);
            }
        }
        if max_drift > WARN_DRIFT {
            log::warn!("input norms drift by up to {max_drift:.3e}; rows renormalized");
        }
        let slopes = (0..s.len()).map(|i| stencil_slope(&s, &rows, i)).collect();
        Ok(Self { s, rows, slopes, max_drift })
    }

    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let (s, rows) = parse_csv(reader)?;
        Self::new(s, rows)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.s[0], self.s[self.s.len() - 1])
    }

    pub fn dim(&self) -> usize {
        self.rows[0].len()
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// Largest `|‖row‖ − 1|` before renormalization.
    pub fn max_drift(&self) -> f64 {
        self.max_drift
    }

    /// Normalized interpolant at `x`.
    pub fn eval(&self, x: f64) -> PureState {
        let n = self.s.len();
        let x = x.clamp(self.s[0], self.s[n - 1]);
        let i = match self.s.partition_point(|&v| v <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let h = self.s[i + 1] - self.s[i];
        let u = (x - self.s[i]) / h;
        let (u2, u3) = (u * u, u * u * u);
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        let c = |x: f64| C64::new(x, 0.0);
        let v = &self.rows[i] * c(h00)
            + &self.slopes[i] * c(h10 * h)
            + &self.rows[i + 1] * c(h01)
            + &self.slopes[i + 1] * c(h11 * h);
        let norm = v.norm();
        PureState::new(v / c(norm))
    }

    /// The interpolant as a trajectory with finite-difference derivatives.
    pub fn trajectory(&self) -> StateTrajectory<PureState> {
        let me = self.clone();
        let domain = self.domain();
        StateTrajectory::new(domain, move |x| me.eval(x))
    }
}

fn parse_csv<R: Read>(reader: R) -> Result<(Vec<f64>, Vec<DVector<C64>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut s = Vec::new();
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Invalid(format!("csv input: {e}")))?;
        let first = rec.get(0).unwrap_or("");
        if line == 0 && first.parse::<f64>().is_err() {
            continue;
        }
        let vals = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Invalid(format!("csv line {}: {e}", line + 1)))?;
        if vals.len() < 3 || vals.len() % 2 == 0 {
            return Err(Error::Invalid(format!(
                "csv line {}: expected s followed by Re/Im pairs, got {} fields",
                line + 1,
                vals.len()
            )));
        }
        s.push(vals[0]);
        rows.push(DVector::from_iterator(
            (vals.len() - 1) / 2,
            vals[1..].chunks(2).map(|p| C64::new(p[0], p[1])),
        ));
    }
    Ok((s, rows))
}

/// Sampled grid wavefunctions `ψ(s; z_k)`, one row per `s` with a Re/Im
/// pair per grid point, normalized in the grid inner product.
pub fn grid_trajectory_from_csv<R: Read>(reader: R, grid: Grid1d) -> Result<StateTrajectory<GridWavefunction>> {
    grid.validate()?;
    let (s, rows) = parse_csv(reader)?;
    if let Some(bad) = rows.iter().position(|r| r.len() != grid.n_points) {
        return Err(Error::Shape(format!(
            "row {} has {} amplitudes for a {}-point grid",
            bad + 1,
            rows[bad].len(),
            grid.n_points
        )));
    }
    // Scaling by √w_k turns the grid norm into the Euclidean one.
    let root_w: Vec<f64> = (0..grid.n_points).map(|k| grid.weight(k).sqrt()).collect();
    let scaled = rows
        .into_iter()
        .map(|r| DVector::from_iterator(r.len(), r.iter().zip(&root_w).map(|(a, w)| a * *w)))
        .collect();
    let sampled = SampledTrajectory::new(s, scaled)?;
    Ok(StateTrajectory::new(sampled.domain(), move |x| {
        let psi = sampled.eval(x);
        let v = psi.as_vector().iter().zip(&root_w).map(|(a, w)| a / *w);
        GridWavefunction::new(grid, DVector::from_iterator(grid.n_points, v)).expect("grid-sized samples")
    }))
}

/// Derivative at node `i` of the Lagrange polynomial through the five
/// nearest nodes (four when only four exist).
fn stencil_slope(s: &[f64], rows: &[DVector<C64>], i: usize) -> DVector<C64> {
    let n = s.len();
    let width = n.min(5);
    let start = i.saturating_sub(width / 2).min(n - width);
    let nodes: Vec<usize> = (start..start + width).collect();
    let xi = s[i];
    let mut out = DVector::zeros(rows[0].len());
    for &j in &nodes {
        let w = if j == i {
            nodes.iter().filter(|&&k| k != i).map(|&k| 1.0 / (xi - s[k])).sum::<f64>()
        } else {
            let num: f64 = nodes.iter().filter(|&&k| k != i && k != j).map(|&k| xi - s[k]).product();
            let den: f64 = nodes.iter().filter(|&&k| k != j).map(|&k| s[j] - s[k]).product();
            num / den
        };
        out += &rows[j] * C64::new(w, 0.0);
    }
    out
}
