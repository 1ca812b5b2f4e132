//! Minimal-time reparameterization.
//!
//! A path `ψ(s)` traversed at the largest speed the variance budget allows
//! takes `t(s) = ∫ ‖∂_sψ̃‖ / ω(s) |ds|`. The table built here holds that map
//! and its inverse `s(t)`.

use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::driving::{mixed_variance_at, DensityTrajectory, ResourceBudget};
use crate::error::{Error, Result};
use crate::gauge::GaugeFixedTrajectory;
use crate::numeric::{cumulative_simpson, HermiteTable};
use crate::output::fmt_f64;
use crate::state::{Ket, StateTrajectory};

/// Gauge residual above which the speed `‖∂_sψ̃‖` is not trusted.
pub const REPARAM_GAUGE_TOL: f64 = 1e-6;

/// Variance budget `ω(s)` along the path.
#[derive(Clone)]
pub struct BudgetProfile {
    omega: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    constant: Option<f64>,
}

impl std::fmt::Debug for BudgetProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BudgetProfile").field("constant", &self.constant).finish()
    }
}

impl BudgetProfile {
    pub fn constant(budget: ResourceBudget) -> Self {
        let w = budget.omega_max();
        Self { omega: Arc::new(move |_| w), constant: Some(w) }
    }

    pub fn from_fn(omega: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { omega: Arc::new(omega), constant: None }
    }

    /// `ω(s)`, rejected unless positive and finite.
    pub fn at(&self, s: f64) -> Result<f64> {
        let w = (self.omega)(s);
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::Budget(format!("omega({s}) = {w}")));
        }
        Ok(w)
    }

    pub fn as_constant(&self) -> Option<f64> {
        self.constant
    }
}

/// Sampled `t(s)` with its inverse.
#[derive(Debug, Clone)]
pub struct ReparamTable {
    s: Vec<f64>,
    t: Vec<f64>,
    /// `|dt/ds| = ‖∂_sψ̃‖ / ω` at each node.
    rate: Vec<f64>,
    budget: Vec<f64>,
    forward: HermiteTable,
    inverse: Option<HermiteTable>,
}

#[derive(Serialize)]
struct TableHeader<'a> {
    s0: f64,
    s1: f64,
    n_nodes: usize,
    total_time: f64,
    budget_constant: Option<f64>,
    budget_profile: &'a [f64],
}

impl ReparamTable {
    /// Builds the table from nodes `s` (monotone either way), cumulative
    /// times starting at 0 and the local rates `|dt/ds|`.
    fn new(s: Vec<f64>, mut t: Vec<f64>, rate: Vec<f64>, budget: Vec<f64>) -> Result<Self> {
        for k in 1..t.len() {
            if t[k] < t[k - 1] {
                log::warn!("clipping non-monotone time {:e} -> {:e} at s = {}", t[k], t[k - 1], s[k]);
                t[k] = t[k - 1];
            }
        }
        let sign = if s[s.len() - 1] >= s[0] { 1.0 } else { -1.0 };
        let mut fx = s.clone();
        let mut fy = t.clone();
        let mut fd: Vec<f64> = rate.iter().map(|r| sign * r).collect();
        if sign < 0.0 {
            fx.reverse();
            fy.reverse();
            fd.reverse();
        }
        let forward = HermiteTable::monotone(fx, fy, fd)?;
        // Stalled segments (equal t) keep only their first node.
        let (mut ix, mut iy, mut id) = (vec![], vec![], vec![]);
        for k in 0..t.len() {
            if ix.last().is_some_and(|&last| t[k] <= last) {
                continue;
            }
            ix.push(t[k]);
            iy.push(s[k]);
            id.push(if rate[k] > 0.0 { sign / rate[k] } else { f64::NAN });
        }
        let inverse = if ix.len() >= 2 { Some(HermiteTable::monotone(ix, iy, id)?) } else { None };
        Ok(Self { s, t, rate, budget, forward, inverse })
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn rate(&self) -> &[f64] {
        &self.rate
    }

    pub fn budget_profile(&self) -> &[f64] {
        &self.budget
    }

    pub fn total_time(&self) -> f64 {
        self.t[self.t.len() - 1]
    }

    /// `(s0, s1)` in traversal order.
    pub fn param_range(&self) -> (f64, f64) {
        (self.s[0], self.s[self.s.len() - 1])
    }

    /// `t(s)` by monotone cubic Hermite interpolation.
    pub fn time_at(&self, s: f64) -> Result<f64> {
        self.forward.eval(s)
    }

    /// `s(t)`.
    pub fn invert(&self, t: f64) -> Result<f64> {
        invert(self, t)
    }

    /// CSV with columns `s, t`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Invalid(format!("csv output: {e}"));
        w.write_record(["s", "t"]).map_err(io)?;
        for (s, t) in self.s.iter().zip(&self.t) {
            w.write_record([fmt_f64(*s), fmt_f64(*t)]).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Invalid(format!("csv output: {e}")))
    }

    /// JSON header describing the table and its budget profile.
    pub fn header_json(&self, budget: &BudgetProfile) -> Result<String> {
        let (s0, s1) = self.param_range();
        crate::output::to_json_string(&TableHeader {
            s0,
            s1,
            n_nodes: self.s.len(),
            total_time: self.total_time(),
            budget_constant: budget.as_constant(),
            budget_profile: &self.budget,
        })
    }
}

/// `s(t)` for `t ∈ [0, total_time]`.
pub fn invert(table: &ReparamTable, t: f64) -> Result<f64> {
    let total = table.total_time();
    match &table.inverse {
        Some(inv) => inv.eval(t),
        None if t.abs() <= 1e-12 * total.max(1.0) => Ok(table.s[0]),
        None => Err(Error::OutOfRange { value: t, lo: 0.0, hi: total }),
    }
}

fn build<F>(speed: F, budget: &BudgetProfile, s0: f64, s1: f64, n_steps: usize) -> Result<ReparamTable>
where
    F: Fn(f64) -> Result<f64>,
{
    if s0 == s1 {
        let w = budget.at(s0)?;
        let r = speed(s0)? / w;
        return Ok(degenerate_table(s0, r, w));
    }
    let integral = cumulative_simpson(|s| Ok(speed(s)? / budget.at(s)?), s0, s1, n_steps)?;
    let t: Vec<f64> = integral.integral.iter().map(|v| v.abs()).collect();
    let budget_samples = integral.nodes.iter().map(|&s| budget.at(s)).collect::<Result<Vec<_>>>()?;
    ReparamTable::new(integral.nodes, t, integral.integrand, budget_samples)
}

fn degenerate_table(s0: f64, rate: f64, w: f64) -> ReparamTable {
    let forward = HermiteTable::new(vec![s0, s0 + 1.0], vec![0.0, 0.0], vec![0.0, 0.0]).expect("two knots");
    ReparamTable { s: vec![s0], t: vec![0.0], rate: vec![rate], budget: vec![w], forward, inverse: None }
}

/// `t(s) = ∫_{s0}^{s} ‖∂_sψ̃‖ / ω |ds|` on `n_steps` Simpson intervals.
pub fn time_of_param<K: Ket>(
    gtraj: &GaugeFixedTrajectory<K>,
    budget: &BudgetProfile,
    s0: f64,
    s1: f64,
    n_steps: usize,
) -> Result<ReparamTable> {
    let speed = |s: f64| -> Result<f64> {
        let d = gtraj.derivative(s)?;
        let residual = d.inner(&gtraj.state(s)?)?.norm();
        if residual > REPARAM_GAUGE_TOL {
            return Err(Error::GaugeResidual { residual, at: s });
        }
        Ok(d.norm())
    };
    build(speed, budget, s0, s1, n_steps)
}

/// Mixed-state analogue: the speed is `√(Σ_{n,m} p_m |<m̃|∂_s ñ>|²)`.
pub fn time_of_param_mixed(
    dtraj: &DensityTrajectory,
    budget: &BudgetProfile,
    s0: f64,
    s1: f64,
    n_steps: usize,
) -> Result<ReparamTable> {
    build(|s| Ok(mixed_variance_at(dtraj, s)?.sqrt()), budget, s0, s1, n_steps)
}

/// The gauge-fixed path traversed at the budget-saturating speed, indexed by
/// time `t ∈ [0, total_time]`.
///
/// The derivative uses the chain rule with the exact `ds/dt = ±ω / ‖∂_sψ̃‖`
/// wherever the path moves, falling back to the interpolant's slope where it
/// stalls.
pub fn retime<K: Ket>(
    gtraj: &GaugeFixedTrajectory<K>,
    budget: &BudgetProfile,
    table: &ReparamTable,
) -> StateTrajectory<K> {
    let (s0, s1) = table.param_range();
    let sign = if s1 >= s0 { 1.0 } else { -1.0 };
    let g = Arc::new(gtraj.clone());
    let tab = Arc::new(table.clone());
    let (g2, tab2, budget) = (g.clone(), tab.clone(), budget.clone());
    StateTrajectory::new((0.0, table.total_time()), move |t| {
        let s = tab.invert(t).expect("t inside reparam table");
        g.state(s).expect("s inside gauge lattice")
    })
    .with_derivative(move |t| {
        let s = tab2.invert(t).expect("t inside reparam table");
        let d = g2.derivative(s).expect("s inside gauge lattice");
        let speed = d.norm();
        let ds_dt = match (speed > 0.0, budget.at(s)) {
            (true, Ok(w)) => sign * w / speed,
            _ => tab2
                .inverse
                .as_ref()
                .and_then(|inv| inv.eval_with_slope(t).ok())
                .map_or(0.0, |(_, slope)| slope),
        };
        d.scale(num_complex::Complex64::new(ds_dt, 0.0))
    })
}
