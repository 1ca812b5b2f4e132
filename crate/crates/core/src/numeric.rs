//! Quadrature and interpolation shared by the gauge and reparameterization
//! modules.

use crate::error::{Error, Result};

/// Composite Simpson rule on `n` intervals of `[a, b]`. Odd `n` is rounded up.
pub fn simpson<F>(f: F, a: f64, b: f64, n: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if n < 2 {
        return Err(Error::Invalid(format!("Simpson needs at least 2 intervals, got {n}")));
    }
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    if h == 0.0 {
        return Ok(0.0);
    }
    let mut acc = f(a)? + f(b)?;
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h)?;
    }
    Ok(acc * h / 3.0)
}

/// Node values and running integral produced by [`cumulative_simpson`].
#[derive(Debug, Clone)]
pub struct CumulativeIntegral {
    pub nodes: Vec<f64>,
    pub integrand: Vec<f64>,
    pub integral: Vec<f64>,
}

/// Running integral of `f` over `n` equal intervals from `a` to `b`.
///
/// Each interval is integrated with Simpson's rule through its midpoint, so the
/// integral is available at every node with O(h^4) accuracy. `b < a` is allowed;
/// the integral is then signed accordingly.
pub fn cumulative_simpson<F>(f: F, a: f64, b: f64, n: usize) -> Result<CumulativeIntegral>
where
    F: Fn(f64) -> Result<f64>,
{
    if n < 1 {
        return Err(Error::Invalid("cumulative integral needs at least one interval".into()));
    }
    let h = (b - a) / n as f64;
    let nodes: Vec<f64> = (0..=n)
        .map(|k| if k == n { b } else { a + k as f64 * h })
        .collect();
    let integrand = nodes.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    let mut integral = Vec::with_capacity(n + 1);
    integral.push(0.0);
    let mut acc = 0.0;
    for k in 0..n {
        let mid = f(0.5 * (nodes[k] + nodes[k + 1]))?;
        acc += (nodes[k + 1] - nodes[k]) / 6.0 * (integrand[k] + 4.0 * mid + integrand[k + 1]);
        integral.push(acc);
    }
    Ok(CumulativeIntegral { nodes, integrand, integral })
}

/// Piecewise cubic Hermite interpolant on strictly increasing abscissae.
#[derive(Debug, Clone)]
pub struct HermiteTable {
    x: Vec<f64>,
    y: Vec<f64>,
    dy: Vec<f64>,
}

impl HermiteTable {
    pub fn new(x: Vec<f64>, y: Vec<f64>, dy: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.len() != dy.len() {
            return Err(Error::Shape(format!(
                "Hermite table lengths differ: {} / {} / {}",
                x.len(),
                y.len(),
                dy.len()
            )));
        }
        if x.len() < 2 {
            return Err(Error::Invalid("Hermite table needs at least two knots".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("Hermite abscissae must be strictly increasing".into()));
        }
        Ok(Self { x, y, dy })
    }

    /// Monotone interpolant: slopes are taken from `dy` where finite, filled in
    /// with PCHIP estimates otherwise, then limited so that monotone data never
    /// overshoots.
    pub fn monotone(x: Vec<f64>, y: Vec<f64>, dy: Vec<f64>) -> Result<Self> {
        let mut table = Self::new(x, y, dy)?;
        let fallback = pchip_slopes(&table.x, &table.y);
        for (d, p) in table.dy.iter_mut().zip(&fallback) {
            if !d.is_finite() {
                *d = *p;
            }
        }
        fritsch_carlson_limit(&table.x, &table.y, &mut table.dy);
        Ok(table)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn dy(&self) -> &[f64] {
        &self.dy
    }

    pub fn range(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    fn segment(&self, x: f64) -> Result<usize> {
        let (lo, hi) = self.range();
        let tol = 1e-12 * (hi - lo).abs().max(1.0);
        if !(x >= lo - tol && x <= hi + tol) {
            return Err(Error::OutOfRange { value: x, lo, hi });
        }
        let k = self.x.partition_point(|&xi| xi <= x);
        Ok(k.clamp(1, self.x.len() - 1) - 1)
    }

    /// Value and first derivative at `x`.
    pub fn eval_with_slope(&self, x: f64) -> Result<(f64, f64)> {
        let k = self.segment(x)?;
        let h = self.x[k + 1] - self.x[k];
        let u = (x - self.x[k]) / h;
        let (y0, y1) = (self.y[k], self.y[k + 1]);
        let (d0, d1) = (self.dy[k] * h, self.dy[k + 1] * h);
        let u2 = u * u;
        let u3 = u2 * u;
        let value = (2.0 * u3 - 3.0 * u2 + 1.0) * y0
            + (u3 - 2.0 * u2 + u) * d0
            + (-2.0 * u3 + 3.0 * u2) * y1
            + (u3 - u2) * d1;
        let slope = ((6.0 * u2 - 6.0 * u) * y0
            + (3.0 * u2 - 4.0 * u + 1.0) * d0
            + (-6.0 * u2 + 6.0 * u) * y1
            + (3.0 * u2 - 2.0 * u) * d1)
            / h;
        Ok((value, slope))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.eval_with_slope(x).map(|(v, _)| v)
    }
}

/// Three-point PCHIP slope estimates (Fritsch-Butland weighted harmonic mean).
pub fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut d = vec![0.0; n];
    if n == 2 {
        d[0] = delta[0];
        d[1] = delta[0];
        return d;
    }
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s * d0 <= 0.0 {
            0.0
        } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

/// Clamp slopes so that the Hermite interpolant stays monotone on every
/// monotone segment.
pub fn fritsch_carlson_limit(x: &[f64], y: &[f64], d: &mut [f64]) {
    for k in 0..x.len() - 1 {
        let delta = (y[k + 1] - y[k]) / (x[k + 1] - x[k]);
        if delta == 0.0 {
            d[k] = 0.0;
            d[k + 1] = 0.0;
            continue;
        }
        if d[k] * delta < 0.0 {
            d[k] = 0.0;
        }
        if d[k + 1] * delta < 0.0 {
            d[k + 1] = 0.0;
        }
        let a = d[k] / delta;
        let b = d[k + 1] / delta;
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            d[k] = tau * a * delta;
            d[k + 1] = tau * b * delta;
        }
    }
}
