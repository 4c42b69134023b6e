//! Reaction terms `f(t, x, y)` of `y_t - y_xx + f(t, x, y) = 0`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Tabulated `f(y)` interpolated by cubic Hermite splines with
/// centered-difference slopes, extended linearly outside the knots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableNonlinearity {
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl TableNonlinearity {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(invalid("table knots and values differ in length"));
        }
        if knots.len() < 2 {
            return Err(invalid("table needs at least two knots"));
        }
        if !knots.windows(2).all(|w| w[0] < w[1]) {
            return Err(invalid("table knots must be strictly increasing"));
        }
        if knots.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(invalid("table entries must be finite"));
        }
        let n = knots.len();
        let secant = |k: usize| (values[k + 1] - values[k]) / (knots[k + 1] - knots[k]);
        let slopes = (0..n)
            .map(|k| {
                if k == 0 {
                    secant(0)
                } else if k == n - 1 {
                    secant(n - 2)
                } else {
                    (values[k + 1] - values[k - 1]) / (knots[k + 1] - knots[k - 1])
                }
            })
            .collect();
        Ok(Self {
            knots,
            values,
            slopes,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn segment(&self, y: f64) -> usize {
        let k = self.knots.partition_point(|&k| k <= y);
        k.saturating_sub(1).min(self.knots.len() - 2)
    }

    fn eval(&self, y: f64) -> f64 {
        let n = self.knots.len();
        if y <= self.knots[0] {
            return self.values[0] + self.slopes[0] * (y - self.knots[0]);
        }
        if y >= self.knots[n - 1] {
            return self.values[n - 1] + self.slopes[n - 1] * (y - self.knots[n - 1]);
        }
        let k = self.segment(y);
        let h = self.knots[k + 1] - self.knots[k];
        let s = (y - self.knots[k]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.values[k]
            + h10 * h * self.slopes[k]
            + h01 * self.values[k + 1]
            + h11 * h * self.slopes[k + 1]
    }

    fn deriv(&self, y: f64) -> f64 {
        let n = self.knots.len();
        if y <= self.knots[0] {
            return self.slopes[0];
        }
        if y >= self.knots[n - 1] {
            return self.slopes[n - 1];
        }
        let k = self.segment(y);
        let h = self.knots[k + 1] - self.knots[k];
        let s = (y - self.knots[k]) / h;
        let s2 = s * s;
        let d00 = 6.0 * s2 - 6.0 * s;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = -6.0 * s2 + 6.0 * s;
        let d11 = 3.0 * s2 - 2.0 * s;
        (d00 * self.values[k] + d01 * self.values[k + 1]) / h
            + d10 * self.slopes[k]
            + d11 * self.slopes[k + 1]
    }

    /// Exact range of the (piecewise quadratic) derivative.
    fn deriv_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut visit = |v: f64| {
            lo = lo.min(v);
            hi = hi.max(v);
        };
        for k in 0..self.knots.len() - 1 {
            let (a, b) = (self.knots[k], self.knots[k + 1]);
            visit(self.slopes[k]);
            visit(self.slopes[k + 1]);
            // derivative is quadratic in s; its vertex may be interior
            let h = b - a;
            let (p0, p1) = (self.values[k], self.values[k + 1]);
            let (m0, m1) = (self.slopes[k], self.slopes[k + 1]);
            let quad = 6.0 * (p0 - p1) / h + 3.0 * (m0 + m1);
            let lin = -6.0 * (p0 - p1) / h - 4.0 * m0 - 2.0 * m1;
            if quad != 0.0 {
                let s = -lin / (2.0 * quad);
                if (0.0..=1.0).contains(&s) {
                    visit(self.deriv(a + s * h));
                }
            }
        }
        (lo, hi)
    }
}

/// Reaction term. Every variant also exposes its analytic `y`-derivative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    /// `f = 0`: the linear heat equation.
    Zero,
    /// `f = c y`, a constant potential.
    LinearPotential(f64),
    /// `f = sin(pi y)`.
    SinPi,
    /// User-supplied table `f(y)`.
    Table(TableNonlinearity),
}

impl Nonlinearity {
    pub fn eval(&self, _t: f64, _x: f64, y: f64) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::LinearPotential(c) => c * y,
            Nonlinearity::SinPi => (PI * y).sin(),
            Nonlinearity::Table(table) => table.eval(y),
        }
    }

    pub fn deriv(&self, _t: f64, _x: f64, y: f64) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::LinearPotential(c) => *c,
            Nonlinearity::SinPi => PI * (PI * y).cos(),
            Nonlinearity::Table(table) => table.deriv(y),
        }
    }

    /// Bound on `|df/dy|` over the working range.
    pub fn lipschitz(&self) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::LinearPotential(c) => c.abs(),
            Nonlinearity::SinPi => PI,
            Nonlinearity::Table(table) => {
                let (lo, hi) = table.deriv_range();
                lo.abs().max(hi.abs())
            }
        }
    }

    /// Infimum of `df/dy`; the one-sided Lipschitz constant of `-f`.
    pub fn min_slope(&self) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::LinearPotential(c) => *c,
            Nonlinearity::SinPi => -PI,
            Nonlinearity::Table(table) => table.deriv_range().0,
        }
    }

    pub fn vanishes_at_zero(&self) -> bool {
        match self {
            Nonlinearity::Table(table) => table.eval(0.0) == 0.0,
            _ => true,
        }
    }

    /// `L^2` contraction rate `pi^2 + inf f'` of trajectory differences
    /// (Poincare constant of `(0,1)` plus the one-sided slope bound).
    pub fn dissipation_rate(&self) -> f64 {
        PI * PI + self.min_slope()
    }

    pub fn is_dissipative(&self) -> bool {
        self.dissipation_rate() > 0.0
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, Nonlinearity::Zero | Nonlinearity::LinearPotential(_))
    }
}

impl fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nonlinearity::Zero => write!(f, "zero"),
            Nonlinearity::LinearPotential(c) => write!(f, "potential:{c}"),
            Nonlinearity::SinPi => write!(f, "sin_pi"),
            Nonlinearity::Table(t) => write!(f, "table[{} knots]", t.knots.len()),
        }
    }
}

/// Parses `zero` (alias `linear`), `sin_pi`, and `potential:<c>`.
/// Tables come from files and are built by the caller.
impl FromStr for Nonlinearity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "zero" | "linear" => Ok(Nonlinearity::Zero),
            "sin_pi" | "sin" => Ok(Nonlinearity::SinPi),
            other => {
                if let Some(c) = other.strip_prefix("potential:") {
                    let c: f64 = c
                        .parse()
                        .map_err(|_| invalid(format!("bad potential coefficient {c:?}")))?;
                    Ok(Nonlinearity::LinearPotential(c))
                } else {
                    Err(invalid(format!("unknown nonlinearity {other:?}")))
                }
            }
        }
    }
}
