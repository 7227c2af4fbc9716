use std::cell::RefCell;
use std::collections::VecDeque;

use serde::Serialize;

use super::{sample_grid, Analyzer, DISTORTION_DEPTH_CAP, MIN_GRID};
use crate::error::{Error, Result};
use crate::map::{CookieMap, ScaledPoint};
use crate::numerics::golden;
use crate::symbolic::{inverse_branch, pullback, walk_suffix_tree, Word};

/// Golden-section stopping width in the normalized coordinate.
const REFINE_XTOL: f64 = 1e-7;

/// Local extrema of the grid refined per side.
const REFINE_CANDIDATES: usize = 3;

/// Distortion of `F^k` over one basic interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WordDistortion {
    pub word: Word,
    /// `sup (F^k)' / inf (F^k)'` over `I_ω`.
    pub ratio: f64,
    /// `ln ratio`
    pub log_spread: f64,
    /// Normalized coordinates `F^k(x)` of the maximizer and minimizer.
    pub u_max: f64,
    pub u_min: f64,
}

/// `C_k = max_{ω ∈ Ω_k}` distortion, against the block-product bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistortionReport {
    pub depth: usize,
    pub c_k: f64,
    pub argmax: Word,
    pub c_theory: f64,
    pub grid: usize,
    /// Per-word ratios in lexicographic order.
    #[serde(skip)]
    pub per_word: Vec<f64>,
}

/// Samples `(u, log-flow part of (F^k)')` carried down the suffix tree.
pub(crate) type GridState = Vec<(ScaledPoint, f64)>;

pub(crate) fn grid_root(us: &[f64]) -> Result<GridState> {
    us.iter().map(|&u| Ok((ScaledPoint::from_raw(u)?, 0.0))).collect()
}

pub(crate) fn grid_step(map: &CookieMap, state: &GridState, symbol: u8) -> Result<GridState> {
    state
        .iter()
        .map(|(p, acc)| {
            let (q, l) = inverse_branch(map, symbol, p)?;
            Ok((q, acc + l))
        })
        .collect()
}

/// Log-flow part of `log (F^k)'` at `f_ω(u)`.
pub(crate) fn log_slope_at(map: &CookieMap, word: &Word, u: f64) -> Result<f64> {
    Ok(pullback(map, word, &ScaledPoint::from_raw(u)?)?.1.flow)
}

/// Golden-section search that surfaces the first evaluation error.
fn refine<F>(f: F, lo: f64, hi: f64, maximize: bool) -> Result<golden::Extremum>
where
    F: Fn(f64) -> Result<f64>,
{
    let failure = RefCell::new(None);
    let eval = |u: f64| match f(u) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let ext = if maximize {
        golden::maximize(eval, lo, hi, REFINE_XTOL)
    } else {
        golden::minimize(eval, lo, hi, REFINE_XTOL)
    };
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(ext),
    }
}

/// Grid extremes of `logs` refined by golden-section search on the two
/// neighbouring grid cells of the best few local extrema.
pub(crate) fn refine_extremes<F>(us: &[f64], logs: &[f64], f: F) -> Result<(golden::Extremum, golden::Extremum)>
where
    F: Fn(f64) -> Result<f64>,
{
    let last = us.len() - 1;
    let grid_best = |sign: f64| {
        let i = (0..=last).fold(0, |b, i| if sign * logs[i] > sign * logs[b] { i } else { b });
        golden::Extremum {
            x: us[i],
            value: logs[i],
        }
    };
    let mut hi = grid_best(1.0);
    let mut lo = grid_best(-1.0);
    if hi.value == lo.value {
        return Ok((hi, lo));
    }
    for i in local_extrema(logs, 1.0) {
        let r = refine(&f, us[i.saturating_sub(1)], us[(i + 1).min(last)], true)?;
        if r.value > hi.value {
            hi = r;
        }
    }
    for i in local_extrema(logs, -1.0) {
        let r = refine(&f, us[i.saturating_sub(1)], us[(i + 1).min(last)], false)?;
        if r.value < lo.value {
            lo = r;
        }
    }
    Ok((hi, lo))
}

/// Indices of the `REFINE_CANDIDATES` largest local maxima of `sign · v`,
/// skipping neighbours of an index already taken.
fn local_extrema(v: &[f64], sign: f64) -> Vec<usize> {
    let last = v.len() - 1;
    let mut idx: Vec<usize> = (0..=last)
        .filter(|&i| {
            let here = sign * v[i];
            (i == 0 || here >= sign * v[i - 1]) && (i == last || here >= sign * v[i + 1])
        })
        .collect();
    idx.sort_by(|&a, &b| (sign * v[b]).total_cmp(&(sign * v[a])).then(a.cmp(&b)));
    let mut taken: Vec<usize> = Vec::with_capacity(REFINE_CANDIDATES);
    for i in idx {
        if taken.len() == REFINE_CANDIDATES {
            break;
        }
        if taken.iter().all(|&j| i.abs_diff(j) > 1) {
            taken.push(i);
        }
    }
    taken
}

/// Per-word result of the exhaustive sweep.
pub(crate) struct WordSweep {
    pub distortion: WordDistortion,
    /// `max |L(u) - L(u')|` over sampled pairs with `|u - u'| ≤ 1/r`, per scale.
    pub window_spreads: Vec<f64>,
}

fn word_sweep(map: &CookieMap, word: &Word, us: &[f64], state: &GridState, scales: &[f64]) -> Result<WordSweep> {
    let logs: Vec<f64> = state.iter().map(|(_, l)| *l).collect();
    let (hi, lo) = if word.symbols().contains(&0) {
        refine_extremes(us, &logs, |u| log_slope_at(map, word, u))?
    } else {
        let e = golden::Extremum { x: 0.0, value: 0.0 };
        (e, e)
    };
    let distortion = WordDistortion {
        word: word.clone(),
        ratio: (hi.value - lo.value).exp(),
        log_spread: hi.value - lo.value,
        u_max: hi.x,
        u_min: lo.x,
    };
    let window_spreads = if scales.is_empty() {
        Vec::new()
    } else {
        let mut pts: Vec<(f64, f64)> = us.iter().copied().zip(logs).collect();
        pts.push((hi.x, hi.value));
        pts.push((lo.x, lo.value));
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        scales.iter().map(|&r| max_window_spread(&pts, 1.0 / r)).collect()
    };
    Ok(WordSweep {
        distortion,
        window_spreads,
    })
}

/// `max (max L - min L)` over windows `[u - width, u]` of points sorted by `u`.
pub(crate) fn max_window_spread(pts: &[(f64, f64)], width: f64) -> f64 {
    let mut maxq: VecDeque<usize> = VecDeque::new();
    let mut minq: VecDeque<usize> = VecDeque::new();
    let mut start = 0;
    let mut best = 0.0_f64;
    for (j, &(u, v)) in pts.iter().enumerate() {
        while maxq.back().is_some_and(|&i| pts[i].1 <= v) {
            maxq.pop_back();
        }
        maxq.push_back(j);
        while minq.back().is_some_and(|&i| pts[i].1 >= v) {
            minq.pop_back();
        }
        minq.push_back(j);
        while u - pts[start].0 > width * (1.0 + 1e-12) {
            start += 1;
        }
        while maxq.front().is_some_and(|&i| i < start) {
            maxq.pop_front();
        }
        while minq.front().is_some_and(|&i| i < start) {
            minq.pop_front();
        }
        best = best.max(pts[maxq[0]].1 - pts[minq[0]].1);
    }
    best
}

impl Analyzer {
    /// Distortion of `F^k` over `I_ω`, sampled at `grid` points uniform in
    /// `F^k(x)` (plus the points of [`sample_grid`]) and refined around the
    /// extremes.
    pub fn distortion(&self, word: &Word, grid: usize) -> Result<WordDistortion> {
        if grid < MIN_GRID {
            return Err(Error::Precondition(format!("grid must be at least {MIN_GRID}")));
        }
        let us = sample_grid(grid);
        let mut state = grid_root(&us)?;
        for &s in word.symbols().iter().rev() {
            state = grid_step(&self.map, &state, s)?;
        }
        Ok(word_sweep(&self.map, word, &us, &state, &[])?.distortion)
    }

    /// Exhaustive sweep over all words of length `1..=k_max`.
    pub(crate) fn sweep(&self, k_max: usize, grid: usize, scales: &[f64]) -> Result<Vec<Vec<WordSweep>>> {
        if grid < MIN_GRID {
            return Err(Error::Precondition(format!("grid must be at least {MIN_GRID}")));
        }
        let us = sample_grid(grid);
        let map = &self.map;
        let levels = walk_suffix_tree(
            self.exec,
            k_max,
            grid_root(&us)?,
            &|st: &GridState, s| grid_step(map, st, s),
            &|w: &Word, st: &GridState| {
                if w.is_empty() {
                    return Ok(None);
                }
                word_sweep(map, w, &us, st, scales).map(Some)
            },
        )?;
        Ok(levels.into_iter().skip(1).collect())
    }

    /// `C_k` for `k = 1..=k_max` with the bound `Π (1 + 27 M 2^{-i-2})`.
    ///
    /// Fails with [`Error::BoundViolation`] if any `C_k` exceeds the bound.
    pub fn bd_sweep(&self, k_max: usize, grid: usize) -> Result<Vec<DistortionReport>> {
        if k_max > DISTORTION_DEPTH_CAP {
            return Err(Error::DepthCap {
                depth: k_max,
                cap: DISTORTION_DEPTH_CAP,
            });
        }
        let c_theory = self.map.constants().distortion_bound();
        let levels = self.sweep(k_max, grid, &[])?;
        let mut reports = Vec::with_capacity(k_max);
        for (i, level) in levels.into_iter().enumerate() {
            let depth = i + 1;
            let per_word: Vec<f64> = level.iter().map(|w| w.distortion.ratio).collect();
            let best = level.iter().fold(
                &level[0],
                |b, w| if w.distortion.ratio > b.distortion.ratio { w } else { b },
            );
            let c_k = best.distortion.ratio;
            if c_k > c_theory {
                return Err(Error::BoundViolation {
                    depth,
                    observed: c_k,
                    bound: c_theory,
                });
            }
            reports.push(DistortionReport {
                depth,
                c_k,
                argmax: best.distortion.word.clone(),
                c_theory,
                grid,
                per_word,
            });
        }
        Ok(reports)
    }
}
