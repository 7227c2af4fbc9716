//! Distortion, strong-distortion and dimension analyses of the cookie-cutter
//! map.

mod dimension;
mod distortion;
mod lemma3;
mod lemmas;
mod sbd;

pub use dimension::{DimensionEstimate, DimensionMethod};
pub use distortion::{DistortionReport, WordDistortion};
pub use lemma3::{Lemma3Report, Lemma3Violation};
pub use lemmas::{LemmaRow, LemmaTable};
pub use sbd::{FlowDerivativeExtremes, SbdProfile, SbdWitness};

use crate::exec::Exec;
use crate::map::CookieMap;

/// Largest depth for the exhaustive distortion sweep.
pub const DISTORTION_DEPTH_CAP: usize = 16;

/// Largest depth for the exhaustive strong-distortion profile.
pub const PROFILE_DEPTH_CAP: usize = 14;

/// Largest depth for dimension estimates.
pub const DIMENSION_DEPTH_CAP: usize = 16;

/// Smallest admissible sampling grid.
pub const MIN_GRID: usize = 33;

/// Entry point for all analyses; holds the map and the execution mode.
#[derive(Debug, Clone, Copy)]
pub struct Analyzer {
    map: CookieMap,
    exec: Exec,
}

impl Analyzer {
    pub fn new(map: CookieMap) -> Self {
        Self {
            map,
            exec: Exec::default(),
        }
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn map(&self) -> &CookieMap {
        &self.map
    }

    pub fn exec(&self) -> Exec {
        self.exec
    }
}

/// `u_i = i / (grid - 1)`.
pub(crate) fn unit_grid(grid: usize) -> Vec<f64> {
    let last = (grid - 1) as f64;
    (0..grid).map(|i| i as f64 / last).collect()
}

/// Levels `J_m` near the origin that get their own samples.
const DEEP_LEVELS: i32 = 30;
const POINTS_PER_LEVEL: usize = 5;

/// Uniform grid plus a few points in each `J_m`, `m ≤ 30`, sorted.
///
/// Words ending in zeros pull `u ∈ J_m` back through flows of varying time,
/// so their slope has features on every scale `3^{-m}` near `u = 0`.
pub(crate) fn sample_grid(grid: usize) -> Vec<f64> {
    let mut us = unit_grid(grid);
    for m in 1..=DEEP_LEVELS {
        let scale = crate::map::pow3(-(m + 1));
        for j in 0..POINTS_PER_LEVEL {
            let v = j as f64 / (POINTS_PER_LEVEL - 1) as f64;
            us.push((2.0 + v) * scale);
        }
    }
    us.sort_by(f64::total_cmp);
    us.dedup();
    us
}
