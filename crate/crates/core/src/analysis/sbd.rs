use serde::Serialize;

use super::distortion::refine_extremes;
use super::{unit_grid, Analyzer, MIN_GRID, PROFILE_DEPTH_CAP};
use crate::error::{Error, Result};
use crate::map::{ScaledPoint, LN_3};

/// Grid used to locate the extremizers of `φ'_T`.
const EXTREMES_GRID: usize = 1025;

/// Grid used for the witness distortion.
const WITNESS_GRID: usize = 257;

/// Witness depths folded into every profile.
const WITNESS_FAMILY: [u32; 3] = [2, 4, 6];

/// Extremizers of `u ↦ φ'_t(u)` on `[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowDerivativeExtremes {
    pub t: f64,
    pub alpha: f64,
    pub beta: f64,
    pub max_derivative: f64,
    pub min_derivative: f64,
}

impl FlowDerivativeExtremes {
    pub fn ratio(&self) -> f64 {
        self.max_derivative / self.min_derivative
    }
}

/// `F^{2^k}` on `J_{2^{k+1}-1}`, a map onto `J_{2^k-1}` whose distortion does
/// not shrink with the image.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SbdWitness {
    pub k: u32,
    /// `n` of the domain `J_n`
    pub domain_index: u64,
    /// `n` of the image `J_n`
    pub image_index: u64,
    /// `ln |J_{2^k - 1}| = -2^k ln 3`
    pub image_log_size: f64,
    /// Sampled and refined distortion over the domain.
    pub ratio: f64,
    /// `(F^{2^k})'` ratio at the images of `α` and `β` in the domain.
    pub pair_ratio: f64,
    /// `φ'_T(α) / φ'_T(β)`
    pub limit_ratio: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `(limit_ratio - 1) / 2`
    pub delta: f64,
}

/// Empirical strong-distortion sequence at one scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SbdProfile {
    pub r: f64,
    pub beta_hat: f64,
    /// Word or witness attaining `beta_hat`.
    pub source: String,
}

impl Analyzer {
    /// `α = argmax φ'_t`, `β = argmin φ'_t`.
    pub fn flow_derivative_extremes(&self, t: f64) -> Result<FlowDerivativeExtremes> {
        let flow = self.map.flow();
        let us = unit_grid(EXTREMES_GRID);
        let log_d = |u: f64| Ok(flow.derivative(t, u)?.ln());
        let logs = self
            .exec
            .map(&us, |&u| log_d(u))
            .into_iter()
            .collect::<Result<Vec<f64>>>()?;
        let (hi, lo) = refine_extremes(&us, &logs, log_d)?;
        Ok(FlowDerivativeExtremes {
            t,
            alpha: hi.x,
            beta: lo.x,
            max_derivative: hi.value.exp(),
            min_derivative: lo.value.exp(),
        })
    }

    /// The witness of depth `k` (even, `2..=6`).
    pub fn sbd_witness(&self, k: u32) -> Result<SbdWitness> {
        let ext = self.flow_derivative_extremes(self.map.schedule().t_bound())?;
        self.witness_with(k, &ext)
    }

    fn witness_with(&self, k: u32, ext: &FlowDerivativeExtremes) -> Result<SbdWitness> {
        if !k.is_multiple_of(2) || !(2..=6).contains(&k) {
            return Err(Error::Precondition(format!(
                "witness depth must be even in 2..=6, got {k}"
            )));
        }
        let steps = 1usize << k;
        let domain = (1u64 << (k + 1)) - 1;
        let image = (1u64 << k) - 1;
        let log_slope = |u: f64| -> Result<f64> {
            let start = ScaledPoint::InJ { n: domain as u32, u };
            let (end, slope) = self.map.iterate(&start, steps)?;
            debug_assert!(matches!(end, ScaledPoint::InJ { n, .. } if n as u64 == image));
            Ok(slope.flow)
        };
        let us = unit_grid(WITNESS_GRID);
        let logs = self
            .exec
            .map(&us, |&u| log_slope(u))
            .into_iter()
            .collect::<Result<Vec<f64>>>()?;
        let (hi, lo) = refine_extremes(&us, &logs, log_slope)?;
        let limit_ratio = ext.ratio();
        Ok(SbdWitness {
            k,
            domain_index: domain,
            image_index: image,
            image_log_size: -(steps as f64) * LN_3,
            ratio: (hi.value - lo.value).exp(),
            pair_ratio: (log_slope(ext.alpha)? - log_slope(ext.beta)?).exp(),
            limit_ratio,
            alpha: ext.alpha,
            beta: ext.beta,
            delta: (limit_ratio - 1.0) / 2.0,
        })
    }

    /// `β̂(r)` for each scale: the largest sampled ratio `(F^k)'(x)/(F^k)'(y)`
    /// with `x, y ∈ I_ω`, `|ω| ≤ k_max` and `|F^k([x,y])| ≤ 1/r`, together
    /// with the witness family.
    pub fn sbd_profile(&self, k_max: usize, scales: &[f64], grid: usize) -> Result<Vec<SbdProfile>> {
        if k_max > PROFILE_DEPTH_CAP {
            return Err(Error::DepthCap {
                depth: k_max,
                cap: PROFILE_DEPTH_CAP,
            });
        }
        if grid < MIN_GRID {
            return Err(Error::Precondition(format!("grid must be at least {MIN_GRID}")));
        }
        if let Some(&r) = scales.iter().find(|&&r| !(r >= 1.0 && r.is_finite())) {
            return Err(Error::Domain {
                what: "r",
                value: r,
                expected: "[1, ∞)",
            });
        }
        let levels = self.sweep(k_max, grid, scales)?;
        let ext = self.flow_derivative_extremes(self.map.schedule().t_bound())?;
        let witnesses = WITNESS_FAMILY
            .iter()
            .map(|&k| self.witness_with(k, &ext))
            .collect::<Result<Vec<_>>>()?;

        let mut profiles = Vec::with_capacity(scales.len());
        for (i, &r) in scales.iter().enumerate() {
            let mut best = SbdProfile {
                r,
                beta_hat: 1.0,
                source: String::new(),
            };
            let mut best_log = 0.0;
            for w in levels.iter().flatten() {
                let s = w.window_spreads[i];
                if s > best_log {
                    best_log = s;
                    best.source = w.distortion.word.to_string();
                }
            }
            best.beta_hat = best_log.exp();
            for w in &witnesses {
                if w.image_log_size <= -r.ln() + 1e-12 && w.ratio > best.beta_hat {
                    best.beta_hat = w.ratio;
                    best.source = format!("witness k={}", w.k);
                }
            }
            profiles.push(best);
        }
        Ok(profiles)
    }
}
