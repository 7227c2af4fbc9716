//! The cookie-cutter map `F : [0,1/3] ∪ [2/3,1] → [0,1]`.
//!
//! With `J_n = [2/3^{n+1}, 1/3^n]`, `A_n(x) = 3^{n+1}x - 2` and
//! `B_n(u) = (u+2)/3^n`:
//!
//! ```text
//! F(x) = B_n ∘ φ_{t_n} ∘ A_n (x)   x ∈ J_n, n ≥ 1
//!      = 3x                        x ∈ [0,1/3] outside every J_n
//!      = 3x - 2                    x ∈ [2/3, 1]
//! ```
//!
//! where `t_n = (-1/2)^k T` for `2^k ≤ n < 2^{k+1}`.
//!
//! Points are carried as [`ScaledPoint`]s: which `J_n` (or gap) they sit in
//! plus a coordinate on the unit scale of that piece. `F` acts on the locus
//! index and the local coordinate separately, so deep points never lose
//! digits to the `3^{-n}` scale.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{Flow, FlowConstants};

pub const LN_3: f64 = 1.098_612_288_668_109_8;

/// Relative slack for snapping a raw point onto a `J_n` endpoint.
const SNAP: f64 = 4.0 * f64::EPSILON;

/// Largest power of three exactly representable in `f64`.
const MAX_EXACT_POW3: i32 = 33;

/// `3^k`, exact for `0 ≤ k ≤ 33`.
pub fn pow3(k: i32) -> f64 {
    if (0..=MAX_EXACT_POW3).contains(&k) {
        let mut p = 1.0;
        for _ in 0..k {
            p *= 3.0;
        }
        p
    } else {
        3f64.powi(k)
    }
}

/// A point of `[0, 1]` in local coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ScaledPoint {
    Zero,
    /// `x = (u + 2) / 3^{n+1} ∈ J_n`, `u ∈ [0, 1]`.
    InJ {
        n: u32,
        u: f64,
    },
    /// `x = v / 3^n`, `v ∈ (1/3, 2/3)`: the open gap between `J_{n+1}` and `J_n`.
    Gap {
        n: u32,
        v: f64,
    },
    /// `x = v ∈ (1/3, 2/3)`, outside the domain of `F`.
    Hole {
        v: f64,
    },
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

impl ScaledPoint {
    pub fn from_raw(x: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain {
                what: "x",
                value: x,
                expected: "[0, 1]",
            });
        }
        if x == 0.0 {
            return Ok(Self::Zero);
        }
        let u = 3.0f64.mul_add(x, -2.0);
        if u >= -SNAP {
            return Ok(Self::InJ {
                n: 0,
                u: u.clamp(0.0, 1.0),
            });
        }
        // Invariant at level n: x < 2/3^n, i.e. below J_{n-1}.
        // `scaled = x * 3^offset` absorbs powers of three once they stop being exact.
        let mut scaled = x;
        let mut offset = 0i32;
        let mut n = 1u32;
        loop {
            let mut k = n as i32 - offset;
            if k + 1 > MAX_EXACT_POW3 {
                scaled *= pow3(30);
                offset += 30;
                k -= 30;
            }
            if pow3(k).mul_add(scaled, -1.0) > SNAP {
                let v = scaled * pow3(k - 1);
                return Ok(if n == 1 {
                    Self::Hole { v }
                } else {
                    Self::Gap { n: n - 1, v }
                });
            }
            let u = pow3(k + 1).mul_add(scaled, -2.0);
            if u >= -SNAP {
                return Ok(Self::InJ {
                    n,
                    u: u.clamp(0.0, 1.0),
                });
            }
            n += 1;
        }
    }

    /// The real value, correctly rounded for `InJ` loci up to `n = 32`.
    pub fn raw(&self) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::InJ { n, u } => {
                let k = n as i32 + 1;
                let p = pow3(k);
                if k > MAX_EXACT_POW3 {
                    return (u + 2.0) / p;
                }
                let (s, e) = two_sum(u, 2.0);
                let q = s / p;
                let r = (-q).mul_add(p, s) + e;
                q + r / p
            }
            Self::Gap { n, v } => v / pow3(n as i32),
            Self::Hole { v } => v,
        }
    }

    pub fn is_hole(&self) -> bool {
        matches!(self, Self::Hole { .. })
    }

    /// `b - a`, computed in the common locus when there is one.
    pub fn displacement(a: &Self, b: &Self) -> f64 {
        match (*a, *b) {
            (Self::InJ { n: na, u: ua }, Self::InJ { n: nb, u: ub }) if na == nb => (ub - ua) / pow3(na as i32 + 1),
            (Self::Gap { n: na, v: va }, Self::Gap { n: nb, v: vb }) if na == nb => (vb - va) / pow3(na as i32),
            (Self::Hole { v: va }, Self::Hole { v: vb }) => vb - va,
            (Self::Zero, _) => b.raw(),
            (_, Self::Zero) => -a.raw(),
            _ => b.raw() - a.raw(),
        }
    }

    /// `ln |b - a|`, avoiding cancellation when both points share a locus.
    pub fn log_distance(a: &Self, b: &Self) -> f64 {
        let (a, b) = match (a, b) {
            (_, Self::Zero) => (b, a),
            _ => (a, b),
        };
        match (*a, *b) {
            (Self::InJ { n: na, u: ua }, Self::InJ { n: nb, u: ub }) if na == nb => {
                (ub - ua).abs().ln() - (na as f64 + 1.0) * LN_3
            }
            (Self::Gap { n: na, v: va }, Self::Gap { n: nb, v: vb }) if na == nb => {
                (vb - va).abs().ln() - na as f64 * LN_3
            }
            (Self::Hole { v: va }, Self::Hole { v: vb }) => (vb - va).abs().ln(),
            (Self::Zero, Self::InJ { n, u }) => (u + 2.0).ln() - (n as f64 + 1.0) * LN_3,
            (Self::Zero, Self::Gap { n, v }) => v.ln() - n as f64 * LN_3,
            (Self::Zero, Self::Hole { v }) => v.ln(),
            (Self::Zero, Self::Zero) => f64::NEG_INFINITY,
            _ => (b.raw() - a.raw()).abs().ln(),
        }
    }

    /// The point `x + delta`, staying in the current locus when possible.
    pub fn shifted(&self, delta: f64) -> Result<Self> {
        match *self {
            Self::InJ { n, u } => {
                let u2 = u + delta * pow3(n as i32 + 1);
                if (0.0..=1.0).contains(&u2) {
                    return Ok(Self::InJ { n, u: u2 });
                }
            }
            Self::Gap { n, v } => {
                let v2 = v + delta * pow3(n as i32);
                if v2 > 1.0 / 3.0 && v2 < 2.0 / 3.0 {
                    return Ok(Self::Gap { n, v: v2 });
                }
            }
            Self::Hole { v } => {
                let v2 = v + delta;
                if v2 > 1.0 / 3.0 && v2 < 2.0 / 3.0 {
                    return Ok(Self::Hole { v: v2 });
                }
            }
            Self::Zero => {}
        }
        Self::from_raw(self.raw() + delta)
    }

    /// Left piece `[0, 1/3]` (false) or right piece `[2/3, 1]` (true).
    fn in_right_piece(&self) -> bool {
        matches!(self, Self::InJ { n: 0, .. })
    }
}

/// `J_n` as scaled endpoints; `|J_n| = 3^{-(n+1)}`.
pub fn interval_j(n: u32) -> (ScaledPoint, ScaledPoint) {
    (ScaledPoint::InJ { n, u: 0.0 }, ScaledPoint::InJ { n, u: 1.0 })
}

/// `A_n(x) = 3^{n+1} x - 2` on `J_n`.
pub fn affine_a(n: u32, x: f64) -> Result<f64> {
    let u = pow3(n as i32 + 1).mul_add(x, -2.0);
    if !(-SNAP..=1.0 + SNAP).contains(&u) {
        return Err(Error::Domain {
            what: "x",
            value: x,
            expected: "J_n",
        });
    }
    Ok(u.clamp(0.0, 1.0))
}

/// `B_n(u) = (u + 2) / 3^n`, mapping `[0, 1]` onto `J_{n-1}`.
pub fn affine_b(n: u32, u: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Precondition("B_n needs n ≥ 1".into()));
    }
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::Domain {
            what: "u",
            value: u,
            expected: "[0, 1]",
        });
    }
    Ok(ScaledPoint::InJ { n: n - 1, u }.raw())
}

/// The flow times `t_n` and their partial sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSchedule {
    t_bound: f64,
}

impl TimeSchedule {
    pub fn new(t_bound: f64) -> Self {
        Self { t_bound }
    }

    pub fn t_bound(&self) -> f64 {
        self.t_bound
    }

    /// `k = ⌊log₂ n⌋`, in integer arithmetic.
    pub fn level(n: u64) -> u32 {
        assert!(n >= 1, "flow times are indexed from 1");
        63 - n.leading_zeros()
    }

    /// `t_n = (-1/2)^k T`.
    pub fn flow_time(&self, n: u64) -> f64 {
        let k = Self::level(n);
        let mag = self.t_bound * 2f64.powi(-(k as i32));
        if k.is_multiple_of(2) {
            mag
        } else {
            -mag
        }
    }

    /// `s_n / T` as an exact dyadic rational.
    fn cumulative_fraction(n: u64) -> f64 {
        let k = Self::level(n);
        let frac = (n - (1u64 << k) + 1) as f64 * 2f64.powi(-(k as i32));
        if k.is_multiple_of(2) {
            frac
        } else {
            1.0 - frac
        }
    }

    /// `s_n = t_1 + ... + t_n`, in closed form.
    pub fn cumulative_time(&self, n: u64) -> f64 {
        Self::cumulative_fraction(n) * self.t_bound
    }

    /// `t_{m+1} + ... + t_n` for `m ≤ n`.
    pub fn time_between(&self, m: u64, n: u64) -> f64 {
        let upper = Self::cumulative_fraction(n);
        let lower = if m == 0 { 0.0 } else { Self::cumulative_fraction(m) };
        (upper - lower) * self.t_bound
    }
}

/// `log (F^k)'` split as `threes · ln 3 + flow`, where `flow` sums the
/// `ln φ'` factors. The split keeps affine stretches exact.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct LogSlope {
    pub threes: u64,
    pub flow: f64,
}

impl LogSlope {
    pub fn value(&self) -> f64 {
        self.threes as f64 * LN_3 + self.flow
    }

    pub fn push(&mut self, flow_log: f64) {
        self.threes += 1;
        self.flow += flow_log;
    }
}

/// `F` built on a certified flow family.
#[derive(Debug, Clone, Copy)]
pub struct CookieMap {
    constants: FlowConstants,
    flow: Flow,
    schedule: TimeSchedule,
}

impl CookieMap {
    pub fn new(constants: FlowConstants) -> Self {
        Self {
            constants,
            flow: constants.flow(),
            schedule: TimeSchedule::new(constants.t_bound),
        }
    }

    pub fn constants(&self) -> &FlowConstants {
        &self.constants
    }

    pub fn flow(&self) -> &Flow {
        &self.flow
    }

    pub fn schedule(&self) -> &TimeSchedule {
        &self.schedule
    }

    /// `φ_t(u)` and `φ'_t(u)`, skipping the integrator for `t = 0`.
    pub(crate) fn flow_pair(&self, t: f64, u: f64) -> Result<(f64, f64)> {
        self.flow.position_and_derivative(t, u)
    }

    /// One application of `F` together with `ln φ'` of the step
    /// (`0` on affine pieces).
    pub fn step(&self, p: &ScaledPoint) -> Result<(ScaledPoint, f64)> {
        match *p {
            ScaledPoint::Zero => Ok((ScaledPoint::Zero, 0.0)),
            ScaledPoint::InJ { n: 0, u } => Ok((ScaledPoint::from_raw(u)?, 0.0)),
            ScaledPoint::InJ { n, u } => {
                let (y, d) = self.flow_pair(self.schedule.flow_time(n as u64), u)?;
                Ok((ScaledPoint::InJ { n: n - 1, u: y }, d.ln()))
            }
            ScaledPoint::Gap { n: 1, v } => Ok((ScaledPoint::Hole { v }, 0.0)),
            ScaledPoint::Gap { n, v } => Ok((ScaledPoint::Gap { n: n - 1, v }, 0.0)),
            ScaledPoint::Hole { v } => Err(Error::Domain {
                what: "x",
                value: v,
                expected: "[0,1/3] ∪ [2/3,1]",
            }),
        }
    }

    pub fn apply(&self, p: &ScaledPoint) -> Result<ScaledPoint> {
        Ok(self.step(p)?.0)
    }

    /// `F'(p)`: `3 φ'_{t_n}(u)` on `J_n`, `n ≥ 1`, and `3` elsewhere.
    pub fn derivative(&self, p: &ScaledPoint) -> Result<f64> {
        match *p {
            ScaledPoint::InJ { n, u } if n >= 1 => {
                Ok(3.0 * self.flow.derivative(self.schedule.flow_time(n as u64), u)?)
            }
            ScaledPoint::Hole { v } => Err(Error::Domain {
                what: "x",
                value: v,
                expected: "[0,1/3] ∪ [2/3,1]",
            }),
            _ => Ok(3.0),
        }
    }

    /// `F^k(p)` and `log (F^k)'(p)`.
    pub fn iterate(&self, p: &ScaledPoint, k: usize) -> Result<(ScaledPoint, LogSlope)> {
        let mut point = *p;
        let mut slope = LogSlope::default();
        for step in 0..k {
            if point.is_hole() {
                return Err(Error::Escape { step });
            }
            let (next, flow_log) = self.step(&point)?;
            slope.push(flow_log);
            point = next;
        }
        Ok((point, slope))
    }

    /// `F` evaluated with plain floating-point arithmetic on the raw value.
    pub fn apply_raw(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) || (x > 1.0 / 3.0 && x < 2.0 / 3.0) {
            return Err(Error::Domain {
                what: "x",
                value: x,
                expected: "[0,1/3] ∪ [2/3,1]",
            });
        }
        if x >= 2.0 / 3.0 {
            return Ok(3.0 * x - 2.0);
        }
        if x == 0.0 {
            return Ok(0.0);
        }
        let mut n = 1;
        loop {
            let left = 2.0 / 3f64.powi(n + 1);
            if x >= left {
                if x > 1.0 / 3f64.powi(n) {
                    return Ok(3.0 * x);
                }
                let u = (3f64.powi(n + 1) * x - 2.0).clamp(0.0, 1.0);
                let y = self.flow.position(self.schedule.flow_time(n as u64), u)?;
                return Ok((y + 2.0) / 3f64.powi(n));
            }
            n += 1;
        }
    }

    /// One-sided difference quotients of `F` at the junctions of `J_n` and
    /// at the origin, for steps `10^{-1}, 10^{-2}, …` down to `h_min`.
    pub fn check_c1_boundary(&self, n: u32, h_min: f64) -> Result<C1Report> {
        if h_min <= 0.0 {
            return Err(Error::Precondition("h_min must be positive".into()));
        }
        let mut steps = Vec::new();
        let mut h = 0.1;
        while h >= h_min * (1.0 - 1e-9) {
            steps.push(h);
            h /= 10.0;
        }
        let (left_end, right_end) = interval_j(n);
        let mut junctions = Vec::new();
        let mut probe = |label: String, at: ScaledPoint, side: Side| -> Result<()> {
            let samples = self.quotients(&at, side, &steps)?;
            if !samples.is_empty() {
                junctions.push(JunctionCheck {
                    label,
                    x: at.raw(),
                    side,
                    samples,
                });
            }
            Ok(())
        };
        probe(format!("1/3^{n}"), right_end, Side::Left)?;
        if n >= 2 {
            probe(format!("1/3^{n}"), right_end, Side::Right)?;
        }
        probe(format!("2/3^{}", n + 1), left_end, Side::Right)?;
        if n >= 1 {
            probe(format!("2/3^{}", n + 1), left_end, Side::Left)?;
        }
        probe("0".into(), ScaledPoint::Zero, Side::Right)?;

        let mut origin_envelope = Vec::new();
        for j in 0..=10u32 {
            let m = 1u32 << j;
            let t = self.schedule.flow_time(m as u64);
            let mut sup = 0.0_f64;
            for i in 0..=128 {
                let u = i as f64 / 128.0;
                let y = self.flow.position(t, u)?;
                sup = sup.max((3.0 * (y + 2.0) / (u + 2.0) - 3.0).abs());
            }
            origin_envelope.push(EnvelopePoint {
                m,
                log3_scale: -(m as f64),
                sup_residual: sup,
            });
        }
        Ok(C1Report {
            n,
            junctions,
            origin_envelope,
        })
    }

    fn quotients(&self, at: &ScaledPoint, side: Side, steps: &[f64]) -> Result<Vec<QuotientSample>> {
        let image = self.apply(at)?;
        let mut out: Vec<QuotientSample> = Vec::new();
        for &h in steps {
            let delta = match side {
                Side::Left => -h,
                Side::Right => h,
            };
            let raw = at.raw() + delta;
            if !(0.0..=1.0).contains(&raw) {
                continue;
            }
            let moved = at.shifted(delta)?;
            if moved.is_hole() || moved.in_right_piece() != at.in_right_piece() {
                continue;
            }
            let dx = ScaledPoint::displacement(at, &moved);
            let dy = ScaledPoint::displacement(&image, &self.apply(&moved)?);
            let quotient = dy / dx;
            let residual = (quotient - 3.0).abs();
            let rate = out.last().and_then(|prev| {
                (prev.residual > 0.0 && residual > 0.0).then(|| (prev.residual / residual).ln() / (prev.h / h).ln())
            });
            out.push(QuotientSample {
                h,
                quotient,
                residual,
                rate,
            });
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuotientSample {
    pub h: f64,
    pub quotient: f64,
    pub residual: f64,
    /// Observed order `ln(r_prev/r)/ln(h_prev/h)`.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JunctionCheck {
    pub label: String,
    pub x: f64,
    pub side: Side,
    pub samples: Vec<QuotientSample>,
}

impl JunctionCheck {
    pub fn final_residual(&self) -> f64 {
        self.samples.last().map_or(f64::NAN, |s| s.residual)
    }
}

/// `sup_{u} |F(h)/h - 3|` over `h ∈ J_m`: the worst right-sided quotient at
/// the origin on the scale `h ≈ 3^{-m}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopePoint {
    pub m: u32,
    /// `log_3` of the step scale.
    pub log3_scale: f64,
    pub sup_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct C1Report {
    pub n: u32,
    pub junctions: Vec<JunctionCheck>,
    pub origin_envelope: Vec<EnvelopePoint>,
}

impl C1Report {
    pub fn max_final_residual(&self) -> f64 {
        self.junctions
            .iter()
            .map(JunctionCheck::final_residual)
            .fold(0.0, f64::max)
    }
}

/// `ln 2 / ln 3`, the dimension of the middle-thirds Cantor set.
pub fn middle_thirds_dimension() -> f64 {
    LN_2 / LN_3
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::DEFAULT_TOL;
    use proptest::prelude::*;

    fn unit_map() -> CookieMap {
        CookieMap::new(FlowConstants {
            t_bound: 1.0,
            m_bound: 0.66,
            b1: 0.0776,
            tol: DEFAULT_TOL,
            grid_n: 1024,
        })
    }

    fn ulps(a: f64, b: f64) -> u64 {
        (a.to_bits() as i64 - b.to_bits() as i64).unsigned_abs()
    }

    #[test]
    fn ln3_constant() {
        assert_eq!(LN_3, 3f64.ln());
    }

    #[test]
    fn j_intervals() {
        let (l, r) = interval_j(0);
        assert_eq!((l.raw(), r.raw()), (2.0 / 3.0, 1.0));
        let (l, r) = interval_j(1);
        assert_eq!((l.raw(), r.raw()), (2.0 / 9.0, 1.0 / 3.0));
        for n in 0..=10 {
            let (l, r) = interval_j(n);
            let size = ScaledPoint::displacement(&l, &r);
            assert!((size * pow3(n as i32 + 1) - 1.0).abs() < 1e-15);
            assert!((ScaledPoint::log_distance(&l, &r) + (n as f64 + 1.0) * LN_3).abs() < 1e-14);
        }
    }

    #[test]
    fn affine_maps() {
        let b = affine_b(2, 0.37).unwrap();
        assert!((affine_a(1, b).unwrap() - 0.37).abs() <= 2.0 * f64::EPSILON);
        assert_eq!(affine_a(0, 2.0 / 3.0).unwrap(), 0.0);
        assert_eq!(affine_a(0, 1.0).unwrap(), 1.0);
        assert_eq!(affine_b(1, 0.0).unwrap(), 2.0 / 3.0);
        assert!(affine_a(0, 0.5).is_err());
        assert!(affine_b(1, 1.5).is_err());
    }

    #[test]
    fn schedule_values() {
        let s = TimeSchedule::new(1.0);
        assert_eq!(s.flow_time(1), 1.0);
        assert_eq!(s.flow_time(2), -0.5);
        assert_eq!(s.flow_time(3), -0.5);
        for n in 4..8 {
            assert_eq!(s.flow_time(n), 0.25);
        }
        assert_eq!(s.cumulative_time(3), 0.0);
        assert_eq!(TimeSchedule::level(1 << 40), 40);
        assert_eq!(TimeSchedule::level((1 << 40) - 1), 39);
    }

    #[test]
    fn cumulative_time_matches_direct_summation() {
        for &t_bound in &[1.0, 0.7, 0.123] {
            let s = TimeSchedule::new(t_bound);
            let unit = TimeSchedule::new(1.0);
            let mut dyadic_sum = 0.0;
            for n in 1..=1_000_000u64 {
                dyadic_sum += unit.flow_time(n);
                let closed = s.cumulative_time(n);
                assert!(ulps(closed, dyadic_sum * t_bound) <= 1 || closed == dyadic_sum * t_bound);
                assert!((0.0..=t_bound).contains(&closed), "n = {n}");
            }
        }
    }

    #[test]
    fn block_sums_alternate() {
        let s = TimeSchedule::new(1.0);
        for k in 0..20u32 {
            let lo = 1u64 << k;
            let hi = (1u64 << (k + 1)) - 1;
            let sum = s.time_between(lo - 1, hi);
            assert_eq!(sum, if k % 2 == 0 { 1.0 } else { -1.0 });
        }
    }

    #[test]
    fn from_raw_loci() {
        assert_eq!(ScaledPoint::from_raw(0.0).unwrap(), ScaledPoint::Zero);
        assert!(matches!(ScaledPoint::from_raw(0.5).unwrap(), ScaledPoint::Hole { .. }));
        assert!(matches!(
            ScaledPoint::from_raw(0.15).unwrap(),
            ScaledPoint::Gap { n: 1, .. }
        ));
        assert!(matches!(
            ScaledPoint::from_raw(0.3).unwrap(),
            ScaledPoint::InJ { n: 1, .. }
        ));
        assert!(matches!(
            ScaledPoint::from_raw(0.9).unwrap(),
            ScaledPoint::InJ { n: 0, .. }
        ));
        assert_eq!(
            ScaledPoint::from_raw(2.0 / 3.0).unwrap(),
            ScaledPoint::InJ { n: 0, u: 0.0 }
        );
        assert!(ScaledPoint::from_raw(-0.1).is_err());
        // deep points beyond the exact powers of three
        let deep = ScaledPoint::from_raw(1e-30).unwrap();
        assert!((deep.raw() / 1e-30 - 1.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn raw_round_trip_within_one_ulp(x in 1e-14f64..1.0) {
            let p = ScaledPoint::from_raw(x).unwrap();
            prop_assert!(ulps(p.raw(), x) <= 1, "x = {x:e}, p = {p:?}");
        }

        #[test]
        fn scaled_round_trip_deep(n in 1u32..30, u in 0.0f64..=1.0) {
            let x = ScaledPoint::InJ { n, u }.raw();
            let back = ScaledPoint::from_raw(x).unwrap();
            match back {
                ScaledPoint::InJ { n: m, u: w } => {
                    prop_assert_eq!(m, n);
                    prop_assert!((w - u).abs() < 1e-14);
                }
                other => prop_assert!(false, "unexpected locus {other:?}"),
            }
        }
    }

    #[test]
    fn f_examples() {
        let map = unit_map();
        assert_eq!(map.apply(&ScaledPoint::from_raw(1.0).unwrap()).unwrap().raw(), 1.0);
        for n in 1..=10 {
            let x = ScaledPoint::InJ { n, u: 1.0 };
            let y = map.apply(&x).unwrap();
            assert_eq!(y, ScaledPoint::InJ { n: n - 1, u: 1.0 });
            assert!(ulps(y.raw(), 1.0 / 3f64.powi(n as i32 - 1)) <= 1);
        }
        let gap = map.apply(&ScaledPoint::from_raw(0.15).unwrap()).unwrap();
        assert!((gap.raw() - 0.45).abs() < 1e-15);
        let mid = map.apply(&ScaledPoint::InJ { n: 1, u: 0.5 }).unwrap();
        let oracle = affine_b(1, map.flow().position(1.0, 0.5).unwrap()).unwrap();
        assert!((mid.raw() - oracle).abs() < 1e-15);
        assert!(map.apply(&ScaledPoint::Hole { v: 0.5 }).is_err());
    }

    #[test]
    fn f_derivative_examples() {
        let map = unit_map();
        assert_eq!(map.derivative(&ScaledPoint::InJ { n: 0, u: 0.4 }).unwrap(), 3.0);
        assert_eq!(map.derivative(&ScaledPoint::Gap { n: 2, v: 0.5 }).unwrap(), 3.0);
        let d = map.derivative(&ScaledPoint::InJ { n: 1, u: 0.5 }).unwrap();
        assert!((d / 3.0 - map.flow().derivative(1.0, 0.5).unwrap()).abs() < 1e-15);
        assert!((d / 3.0 - 1.0).abs() < 0.08);
    }

    #[test]
    fn conjugation_and_expansion() {
        let map = unit_map();
        for n in 1..=8u32 {
            for i in 0..=16 {
                let u = i as f64 / 16.0;
                let lhs = map
                    .apply(&ScaledPoint::from_raw(affine_b(n + 1, u).unwrap()).unwrap())
                    .unwrap();
                let rhs = affine_b(n, map.flow().position(map.schedule().flow_time(n as u64), u).unwrap()).unwrap();
                assert!((lhs.raw() - rhs).abs() <= 1e-12 * rhs);
                let slope = map.derivative(&ScaledPoint::InJ { n, u }).unwrap();
                assert!(slope >= 2.0);
            }
        }
    }

    #[test]
    fn monotone_on_each_piece() {
        let map = unit_map();
        let mut prev = -1.0;
        for i in 0..=3000 {
            let x = i as f64 / 9000.0;
            let y = map.apply_raw(x).unwrap();
            assert!(y > prev, "x = {x}");
            prev = y;
        }
        let mut prev = -1.0;
        for i in 0..=1000 {
            let x = 2.0 / 3.0 + i as f64 / 3000.0;
            let y = map.apply_raw(x.min(1.0)).unwrap();
            assert!(y > prev);
            prev = y;
        }
    }

    #[test]
    fn raw_and_scaled_agree() {
        let map = unit_map();
        for n in 1..=25u32 {
            for i in 0..=10 {
                let p = ScaledPoint::InJ { n, u: i as f64 / 10.0 };
                let scaled = map.apply(&p).unwrap().raw();
                let raw = map.apply_raw(p.raw()).unwrap();
                assert!((scaled - raw).abs() <= 1e-12 * raw, "n = {n}, i = {i}");
            }
        }
    }

    #[test]
    fn iterate_on_right_branch_is_exact() {
        let map = unit_map();
        let p = ScaledPoint::from_raw(1.0 - 1e-9).unwrap();
        let (_, slope) = map.iterate(&p, 7).unwrap();
        assert_eq!(slope.threes, 7);
        assert_eq!(slope.flow, 0.0);
        assert_eq!(slope.value(), 7.0 * LN_3);
    }

    #[test]
    fn iterate_reports_escape() {
        let map = unit_map();
        let p = ScaledPoint::Gap { n: 2, v: 0.5 };
        assert_eq!(map.iterate(&p, 5).unwrap_err(), Error::Escape { step: 2 });
    }

    #[test]
    fn gap_quotient_is_three() {
        let map = unit_map();
        let at = ScaledPoint::from_raw(0.15).unwrap();
        for h in [1e-2, 1e-4, 1e-6] {
            let q = map.quotients(&at, Side::Right, &[h]).unwrap();
            assert!((q[0].quotient - 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn c1_junctions_converge() {
        let map = unit_map();
        let report = map.check_c1_boundary(0, 1e-9).unwrap();
        let at_two_thirds = report.junctions.iter().find(|j| j.label == "2/3^1").unwrap();
        assert!(at_two_thirds.final_residual() < 1e-5);
        let env: Vec<f64> = report.origin_envelope.iter().map(|e| e.sup_residual).collect();
        assert!(env.windows(2).all(|w| w[1] < w[0]));
    }
}
