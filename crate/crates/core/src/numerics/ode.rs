//! Dormand-Prince 5(4) integrator for small autonomous systems.
//!
//! The state is a fixed-size array so the flow, its first variation and its
//! second variation can be advanced together without allocation.

/// Result of one adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Solution<const N: usize> {
    pub state: [f64; N],
    /// Sum of accepted local error estimates (max-norm over components).
    pub err: f64,
    pub steps: usize,
}

const C2: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// 5th minus embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const MAX_STEPS: usize = 200_000;

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

/// Integrates `y' = rhs(y)` from time 0 to `t_end` (either sign).
///
/// Local errors are controlled per component against `tol * (1 + |y_i|)`.
/// Returns `None` when the controller cannot make progress.
pub fn dopri5<const N: usize, F>(rhs: F, y0: [f64; N], t_end: f64, tol: f64) -> Option<Solution<N>>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let mut y = y0;
    if t_end == 0.0 {
        return Some(Solution {
            state: y,
            err: 0.0,
            steps: 0,
        });
    }
    let dir = t_end.signum();
    let span = t_end.abs();
    let mut t = 0.0_f64;
    let mut h = span.min(0.25);
    let h_min = span * 1e-14;
    let mut k1 = rhs(&y);
    let mut err_sum = 0.0;
    let mut steps = 0;
    let mut last_rejected = false;

    while t < span {
        if steps >= MAX_STEPS {
            return None;
        }
        let last = t + h >= span;
        if last {
            h = span - t;
        }
        let hs = dir * h;
        let k2 = rhs(&axpy(&y, hs, &[(C2, &k1)]));
        let k3 = rhs(&axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(&axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = rhs(&axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = rhs(&axpy(
            &y,
            hs,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ));
        let y_new = axpy(&y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = rhs(&y_new);

        let mut err_norm = 0.0_f64;
        let mut err_abs = 0.0_f64;
        for i in 0..N {
            let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = tol * (1.0 + y[i].abs().max(y_new[i].abs()));
            err_norm = err_norm.max(e.abs() / scale);
            err_abs = err_abs.max(e.abs());
        }
        if !err_norm.is_finite() {
            return None;
        }

        if err_norm <= 1.0 {
            t = if last { span } else { t + h };
            y = y_new;
            k1 = k7;
            err_sum += err_abs;
            steps += 1;
            let mut factor = if err_norm == 0.0 {
                5.0
            } else {
                0.9 * err_norm.powf(-0.2)
            };
            factor = factor.clamp(0.2, 5.0);
            if last_rejected {
                factor = factor.min(1.0);
            }
            h *= factor;
            last_rejected = false;
        } else {
            h *= (0.9 * err_norm.powf(-0.2)).max(0.1);
            last_rejected = true;
            if h < h_min {
                return None;
            }
        }
    }
    Some(Solution {
        state: y,
        err: err_sum,
        steps,
    })
}
