use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::{Analyzer, DIMENSION_DEPTH_CAP};
use crate::error::{Error, Result};
use crate::map::LN_3;
use crate::numerics::compensated_sum;
use crate::symbolic::enumerate_intervals;

/// Bisection stopping width in `s`.
const BOWEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DimensionMethod {
    /// Root of `Σ |I_ω|^s = 1`.
    Bowen,
    /// Slope of the dyadic box count.
    Box,
}

impl fmt::Display for DimensionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DimensionMethod::Bowen => "bowen",
            DimensionMethod::Box => "box",
        })
    }
}

impl FromStr for DimensionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bowen" => Ok(DimensionMethod::Bowen),
            "box" => Ok(DimensionMethod::Box),
            _ => Err(Error::Precondition(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimensionEstimate {
    pub depth: usize,
    pub method: DimensionMethod,
    pub s: f64,
    /// `ln 2 / ln(3 e^{B1 T})`
    pub s_lower: f64,
    /// `ln 2 / ln(3 e^{-B1 T})`
    pub s_upper: f64,
}

/// `Σ exp(s ℓ_i)`, compensated.
fn pressure_sum(log_sizes: &[f64], s: f64) -> f64 {
    compensated_sum(log_sizes.iter().map(|&l| (s * l).exp()))
}

/// Root of `Σ |I_ω|^s = 1` on `[0, 1]` by bisection.
pub(crate) fn bowen_root(log_sizes: &[f64]) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, 1.0);
    if pressure_sum(log_sizes, lo) < 1.0 || pressure_sum(log_sizes, hi) > 1.0 {
        return Err(Error::Bracket { lo, hi });
    }
    while hi - lo > BOWEN_TOL {
        let mid = 0.5 * (lo + hi);
        if pressure_sum(log_sizes, mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Least-squares slope of `ln N(2^{-j})` against `j ln 2` over the meshes no
/// finer than the largest interval.
pub(crate) fn box_slope(intervals: &[(f64, f64)]) -> Result<f64> {
    let largest = intervals.iter().map(|(a, b)| b - a).fold(0.0, f64::max);
    let j_max = (-largest.log2()).floor() as i32;
    if j_max < 3 {
        return Err(Error::Precondition("depth too shallow for a box count".into()));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for j in 1..=j_max {
        let scale = 2f64.powi(j);
        let mut count = 0u64;
        let mut last: Option<i64> = None;
        for &(a, b) in intervals {
            let first = (a * scale).floor() as i64;
            let end = ((b * scale).ceil() as i64 - 1).max(first);
            let from = match last {
                Some(l) if l >= first => l + 1,
                _ => first,
            };
            if end >= from {
                count += (end - from + 1) as u64;
                last = Some(end);
            }
        }
        xs.push(j as f64 * std::f64::consts::LN_2);
        ys.push((count as f64).ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

impl Analyzer {
    /// Dimension of the repeller from the `2^depth` basic intervals.
    pub fn dimension_estimate(&self, depth: usize, method: DimensionMethod) -> Result<DimensionEstimate> {
        if depth > DIMENSION_DEPTH_CAP {
            return Err(Error::DepthCap {
                depth,
                cap: DIMENSION_DEPTH_CAP,
            });
        }
        if depth == 0 {
            return Err(Error::Precondition("depth must be at least 1".into()));
        }
        let intervals = enumerate_intervals(&self.map, depth, self.exec)?;
        let s = match method {
            DimensionMethod::Bowen => {
                let logs: Vec<f64> = intervals.iter().map(|i| i.log_size).collect();
                bowen_root(&logs)?
            }
            DimensionMethod::Box => {
                let spans: Vec<(f64, f64)> = intervals.iter().map(|i| (i.left.raw(), i.right.raw())).collect();
                box_slope(&spans)?
            }
        };
        let (s_lower, s_upper) = self.dimension_bracket();
        Ok(DimensionEstimate {
            depth,
            method,
            s,
            s_lower,
            s_upper,
        })
    }

    /// Dimensions of the linear Cantor sets with slopes `3 e^{±B1 T}`.
    pub fn dimension_bracket(&self) -> (f64, f64) {
        let c = self.map.constants();
        let spread = c.b1 * c.t_bound;
        let ln2 = std::f64::consts::LN_2;
        (ln2 / (LN_3 + spread), ln2 / (LN_3 - spread))
    }
}
