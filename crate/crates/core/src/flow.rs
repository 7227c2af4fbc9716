//! The bump vector field `X(x) = exp(1/(x(x-1)))` on `[0, 1]`, its flow
//! `φ_t`, and the first and second spatial derivatives of the flow.
//!
//! Derivatives are obtained by integrating the variational equations
//!
//! ```text
//! y' = X(y)
//! v' = X'(y) v                 (v = ∂φ/∂x)
//! w' = X''(y) v² + X'(y) w     (w = ∂²φ/∂x²)
//! ```
//!
//! jointly with the flow. The rectifying time coordinate
//! `τ(x) = ∫_{1/2}^x du / X(u)` gives an independent route to `φ_t`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{golden, ode, quadrature, roots};

/// Exponents below this make `exp` underflow past the smallest subnormal.
pub const UNDERFLOW_EXPONENT: f64 = -745.0;

/// Lower edge of the domain on which the time coordinate is finite in `f64`.
pub const RECTIFICATION_MARGIN: f64 = 0.002;

/// Default absolute/relative ODE tolerance.
pub const DEFAULT_TOL: f64 = 1e-13;

/// `max X = X(1/2) = e^{-4}`.
pub const MAX_SPEED: f64 = 0.018_315_638_888_734_18;

/// Values of `X`, `X'` and `X''` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldValue {
    pub x: f64,
    pub speed: f64,
    pub d1: f64,
    pub d2: f64,
}

/// `(X, X', X'')` without domain checks; zero outside `(0, 1)` and wherever
/// the exponent underflows.
#[inline]
pub(crate) fn field_jet(x: f64) -> (f64, f64, f64) {
    if x <= 0.0 || x >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let q = x * (x - 1.0);
    let g = 1.0 / q;
    if g < UNDERFLOW_EXPONENT {
        return (0.0, 0.0, 0.0);
    }
    let s = 2.0 * x - 1.0;
    let g2 = g * g;
    let dg = -s * g2;
    let ddg = 2.0 * s * s * g2 * g - 2.0 * g2;
    let e = g.exp();
    (e, dg * e, (ddg + dg * dg) * e)
}

/// Evaluates the field and its first two derivatives.
pub fn vector_field(x: f64) -> Result<FieldValue> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain {
            what: "x",
            value: x,
            expected: "[0, 1]",
        });
    }
    let (speed, d1, d2) = field_jet(x);
    Ok(FieldValue { x, speed, d1, d2 })
}

/// One evaluation of the flow with its spatial derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowSample {
    pub t: f64,
    pub x: f64,
    /// `φ_t(x)`
    pub y: f64,
    /// `φ'_t(x)`
    pub d1: f64,
    /// `φ''_t(x)`
    pub d2: f64,
    /// Accumulated local error estimate of the integrator.
    pub err: f64,
}

/// Certified constants of the flow family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowConstants {
    /// Flow-time bound `T` with `φ'_t ≥ 2/3` for `|t| ≤ T`.
    #[serde(rename = "T")]
    pub t_bound: f64,
    /// Uniform bound on `|φ''_t|` for `|t| ≤ 1`.
    #[serde(rename = "M")]
    pub m_bound: f64,
    /// `sup |X'|`.
    #[serde(rename = "B1")]
    pub b1: f64,
    pub tol: f64,
    pub grid_n: usize,
}

impl FlowConstants {
    /// The same constants with a different time bound. `T = 0` turns the
    /// cookie-cutter map into the piecewise-linear middle-thirds map.
    pub fn with_time_bound(mut self, t_bound: f64) -> Self {
        self.t_bound = t_bound;
        self
    }

    pub fn flow(&self) -> Flow {
        Flow::new(self.tol)
    }

    /// `C = Π_{i≥0} (1 + 27 M 2^{-i-2})`, the block-product bound on the
    /// distortion of every iterate.
    pub fn distortion_bound(&self) -> f64 {
        let mut log_prod = 0.0;
        for i in 0..1100 {
            let term = 27.0 * self.m_bound * 2f64.powi(-(i + 2));
            if term < 1e-300 {
                break;
            }
            log_prod += term.ln_1p();
        }
        log_prod.exp()
    }
}

/// ODE-backed evaluator of `φ_t` and its derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flow {
    tol: f64,
}

impl Default for Flow {
    fn default() -> Self {
        Self::new(DEFAULT_TOL)
    }
}

impl Flow {
    pub fn new(tol: f64) -> Self {
        Self { tol }
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    fn check(t: f64, x: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain {
                what: "x",
                value: x,
                expected: "[0, 1]",
            });
        }
        if t.is_nan() || t.abs() > 1.0 {
            return Err(Error::Domain {
                what: "t",
                value: t,
                expected: "[-1, 1]",
            });
        }
        Ok(())
    }

    /// `φ_t(x)` and `φ'_t(x)`.
    pub fn position_and_derivative(&self, t: f64, x: f64) -> Result<(f64, f64)> {
        Self::check(t, x)?;
        if t == 0.0 || field_jet(x).0 == 0.0 {
            return Ok((x, 1.0));
        }
        let sol = ode::dopri5(
            |s: &[f64; 2]| {
                let (f, df, _) = field_jet(s[0]);
                [f, df * s[1]]
            },
            [x, 1.0],
            t,
            self.tol,
        )
        .ok_or(Error::SolverFailure { t, x })?;
        Ok((sol.state[0].clamp(0.0, 1.0), sol.state[1]))
    }

    /// Position, first and second derivative together.
    pub fn sample(&self, t: f64, x: f64) -> Result<FlowSample> {
        Self::check(t, x)?;
        if t == 0.0 || field_jet(x).0 == 0.0 {
            return Ok(FlowSample {
                t,
                x,
                y: x,
                d1: 1.0,
                d2: 0.0,
                err: 0.0,
            });
        }
        let sol = ode::dopri5(
            |s: &[f64; 3]| {
                let (f, df, ddf) = field_jet(s[0]);
                [f, df * s[1], ddf * s[1] * s[1] + df * s[2]]
            },
            [x, 1.0, 0.0],
            t,
            self.tol,
        )
        .ok_or(Error::SolverFailure { t, x })?;
        Ok(FlowSample {
            t,
            x,
            y: sol.state[0].clamp(0.0, 1.0),
            d1: sol.state[1],
            d2: sol.state[2],
            err: sol.err,
        })
    }

    pub fn position(&self, t: f64, x: f64) -> Result<f64> {
        Ok(self.position_and_derivative(t, x)?.0)
    }

    pub fn derivative(&self, t: f64, x: f64) -> Result<f64> {
        Ok(self.position_and_derivative(t, x)?.1)
    }

    pub fn second_derivative(&self, t: f64, x: f64) -> Result<f64> {
        Ok(self.sample(t, x)?.d2)
    }
}

fn check_rectifiable(x: f64) -> Result<()> {
    if !(RECTIFICATION_MARGIN..=1.0 - RECTIFICATION_MARGIN).contains(&x) {
        return Err(Error::Domain {
            what: "x",
            value: x,
            expected: "[0.002, 0.998]",
        });
    }
    Ok(())
}

#[inline]
fn inverse_speed(u: f64) -> f64 {
    (1.0 / (u * (1.0 - u))).exp()
}

/// `τ(x) = ∫_{1/2}^x du / X(u)`.
pub fn time_coordinate(x: f64) -> Result<f64> {
    check_rectifiable(x)?;
    Ok(quadrature::integrate(inverse_speed, 0.5, x, 1e-15))
}

/// `φ_t(x) = τ⁻¹(τ(x) + t)`, solved as `∫_x^y du/X(u) = t` by bracketed
/// root finding. Independent of the ODE integrator.
pub fn flow_by_rectification(t: f64, x: f64) -> Result<f64> {
    check_rectifiable(x)?;
    if t == 0.0 {
        return Ok(x);
    }
    // |φ_t(x) - x| ≤ |t| · max X
    let reach = t.abs() * MAX_SPEED * (1.0 + 1e-9);
    let (lo, hi) = if t > 0.0 {
        (x, (x + reach).min(1.0 - RECTIFICATION_MARGIN))
    } else {
        ((x - reach).max(RECTIFICATION_MARGIN), x)
    };
    let residual = |y: f64| quadrature::integrate(inverse_speed, x, y, 1e-15) - t;
    roots::brent(residual, lo, hi, 1e-17).ok_or(Error::Bracket { lo, hi })
}

/// Result of maximizing `|X'|` near one of its two interior peaks.
fn refine_field_slope_peak(grid: &[f64], values: &[f64], range: std::ops::Range<usize>) -> f64 {
    let (i_best, _) =
        range.clone().map(|i| (i, values[i])).fold(
            (range.start, f64::MIN),
            |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
        );
    let lo = grid[i_best.saturating_sub(1)];
    let hi = grid[(i_best + 1).min(grid.len() - 1)];
    golden::maximize(|x| field_jet(x).1.abs(), lo, hi, 1e-14).value
}

/// Certifies `T`, `M` and `B1 = sup|X'|` on a uniform grid of `grid_n + 1`
/// points.
///
/// `T = min(1, ln(3/2)/B1)`; `M` is 1.05 times the largest `|φ''_t|` seen for
/// `t ∈ {±1, ±1/2, ±1/4, ±1/8}`; `φ'_t ≥ 2/3` is checked for
/// `t ∈ {±T, ±T/2, ±T/4, ±T/8}`.
pub fn certify_constants(grid_n: usize, tol: f64) -> Result<FlowConstants> {
    if grid_n < 1024 {
        return Err(Error::Precondition(format!(
            "certification grid must have at least 1024 cells, got {grid_n}"
        )));
    }
    let grid: Vec<f64> = (0..=grid_n).map(|i| i as f64 / grid_n as f64).collect();
    let slopes: Vec<f64> = grid.iter().map(|&x| field_jet(x).1.abs()).collect();
    let half = grid_n / 2;
    let b1 =
        refine_field_slope_peak(&grid, &slopes, 1..half).max(refine_field_slope_peak(&grid, &slopes, half + 1..grid_n));
    let t_bound = (1.5f64.ln() / b1).min(1.0);

    let flow = Flow::new(tol);
    let mut curvature_max = 0.0_f64;
    for t in signed_dyadic_times(1.0) {
        for &x in &grid {
            curvature_max = curvature_max.max(flow.sample(t, x)?.d2.abs());
        }
    }
    for t in signed_dyadic_times(t_bound) {
        for &x in &grid {
            let d1 = flow.derivative(t, x)?;
            if d1 < 2.0 / 3.0 {
                return Err(Error::Certification { t, x, derivative: d1 });
            }
        }
    }
    Ok(FlowConstants {
        t_bound,
        m_bound: 1.05 * curvature_max,
        b1,
        tol,
        grid_n,
    })
}

/// `{±s, ±s/2, ±s/4, ±s/8}`
pub fn signed_dyadic_times(s: f64) -> [f64; 8] {
    [s, -s, s / 2.0, -s / 2.0, s / 4.0, -s / 4.0, s / 8.0, -s / 8.0]
}
