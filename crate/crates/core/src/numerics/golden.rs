//! Golden-section search for one-dimensional extrema.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Location and value of an extremum found by [`maximize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub x: f64,
    pub value: f64,
}

/// Maximizes `f` on `[a, b]` until the bracket is narrower than `xtol`.
///
/// The endpoints are evaluated as well, so the result is never worse than the
/// better endpoint even when `f` is not unimodal on the bracket.
pub fn maximize<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> Extremum {
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut best = Extremum { x: lo, value: f(lo) };
    let fb = f(hi);
    if fb > best.value {
        best = Extremum { x: hi, value: fb };
    }
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > xtol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    for (x, v) in [(x1, f1), (x2, f2)] {
        if v > best.value {
            best = Extremum { x, value: v };
        }
    }
    best
}

/// Minimizes `f` on `[a, b]`; the returned `value` is `f` at the minimizer.
pub fn minimize<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> Extremum {
    let e = maximize(|x| -f(x), a, b, xtol);
    Extremum {
        x: e.x,
        value: -e.value,
    }
}
