use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::Analyzer;
use crate::error::{Error, Result};
use crate::map::{interval_j, ScaledPoint};
use crate::symbolic::{basic_interval, pullback, Word, DEPTH_CAP};

/// Step at which the difference quotients are judged.
pub const C1_FINAL_STEP: f64 = 1e-9;
pub const C1_TOLERANCE: f64 = 1e-5;
pub const DERIVATIVE_TOLERANCE: f64 = 1e-8;

/// Largest junction index probed for continuity of `F'`.
const C1_MAX_INDEX: u32 = 10;
/// Largest `n` in the derivative identity on `I_{0^n 1 τ}`.
const DERIVATIVE_MAX_INDEX: u32 = 20;
const SAMPLES_PER_INDEX: usize = 100;
const MAX_TAU: usize = 8;
const SEED: u64 = 0x5eed_c00c;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaRow {
    pub lemma: String,
    pub check: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaTable {
    pub depth: usize,
    pub rows: Vec<LemmaRow>,
}

impl LemmaTable {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

fn row(lemma: &str, check: &str, value: f64, threshold: f64, pass: bool) -> LemmaRow {
    LemmaRow {
        lemma: lemma.into(),
        check: check.into(),
        value,
        threshold,
        pass,
    }
}

fn random_word(rng: &mut ChaCha8Rng, max_len: usize) -> Word {
    let len = rng.random_range(0..=max_len);
    Word::new((0..len).map(|_| rng.random_range(0..=1u8)).collect()).expect("binary symbols")
}

impl Analyzer {
    /// Largest final quotient residual over all junctions `n ≤ n_max`.
    pub fn c1_residual(&self, n_max: u32) -> Result<f64> {
        let mut worst = 0.0_f64;
        for n in 0..=n_max {
            worst = worst.max(self.map.check_c1_boundary(n, C1_FINAL_STEP)?.max_final_residual());
        }
        Ok(worst)
    }

    /// Number of `n ≤ n_max` for which the scaled endpoints of `I_{0^n 1}`
    /// differ from those of `J_n` in any bit.
    pub fn interval_identity_mismatches(&self, n_max: u32) -> Result<u32> {
        let mut bad = 0;
        for n in 0..=n_max {
            let word = Word::zeros(n as usize).concat(&Word::ones(1));
            let interval = basic_interval(&self.map, &word)?;
            let (a, b) = interval_j(n);
            if interval.left != a || interval.right != b {
                bad += 1;
            }
        }
        Ok(bad)
    }

    /// Largest relative residual of `(F^n)'(x) = 3^n φ'_{s_n}(A_n x)` over
    /// random `x ∈ I_{0^n 1 τ}`, `1 ≤ n ≤ n_max`.
    pub fn derivative_identity_residual(&self, n_max: u32, samples: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let flow = self.map.flow();
        let mut worst = 0.0_f64;
        for n in 1..=n_max {
            let head = Word::zeros(n as usize).concat(&Word::ones(1));
            for _ in 0..samples {
                let tau = random_word(&mut rng, MAX_TAU);
                let v: f64 = rng.random();
                let (x, _) = pullback(&self.map, &head.concat(&tau), &ScaledPoint::from_raw(v)?)?;
                let ScaledPoint::InJ { n: m, u } = x else {
                    return Err(Error::Precondition(format!("pullback left J_{n}")));
                };
                debug_assert_eq!(m, n);
                let (_, slope) = self.map.iterate(&x, n as usize)?;
                let direct = flow.derivative(self.map.schedule().cumulative_time(n as u64), u)?;
                let residual = (slope.flow - direct.ln()).exp_m1().abs();
                worst = worst.max(residual);
            }
        }
        Ok(worst)
    }

    /// Largest `|log (F^n)' - n ln 3|` over random `x ∈ I_{1^n τ}`.
    pub fn affine_branch_residual(&self, n_max: u32, samples: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0_f64;
        for n in 1..=n_max {
            for _ in 0..samples {
                let word = Word::ones(n as usize).concat(&random_word(&mut rng, MAX_TAU));
                let v: f64 = rng.random();
                let (x, _) = pullback(&self.map, &word, &ScaledPoint::from_raw(v)?)?;
                let (_, slope) = self.map.iterate(&x, n as usize)?;
                if slope.threes != n as u64 {
                    return Err(Error::Precondition("iterate miscounted steps".into()));
                }
                worst = worst.max(slope.flow.abs());
            }
        }
        Ok(worst)
    }

    /// One row per checked identity; `depth` bounds the interval checks and
    /// the total word length for the size bound.
    pub fn verify_lemmas(&self, depth: usize) -> Result<LemmaTable> {
        if depth > DEPTH_CAP {
            return Err(Error::DepthCap { depth, cap: DEPTH_CAP });
        }
        if depth == 0 {
            return Err(Error::Precondition("depth must be at least 1".into()));
        }
        let mut rows = Vec::new();

        let c1 = self.c1_residual(C1_MAX_INDEX.min(depth as u32))?;
        rows.push(row(
            "1",
            "max final quotient residual",
            c1,
            C1_TOLERANCE,
            c1 <= C1_TOLERANCE,
        ));

        let bad = self.interval_identity_mismatches(depth as u32)?;
        rows.push(row("2", "I_{0^n 1} != J_n count", bad as f64, 0.0, bad == 0));

        let d = self.derivative_identity_residual(DERIVATIVE_MAX_INDEX, SAMPLES_PER_INDEX, SEED)?;
        rows.push(row(
            "2",
            "max relative derivative residual",
            d,
            DERIVATIVE_TOLERANCE,
            d <= DERIVATIVE_TOLERANCE,
        ));

        let a = self.affine_branch_residual(depth as u32, SAMPLES_PER_INDEX, SEED + 1)?;
        rows.push(row("2", "max |log (F^n)' - n ln 3| on I_{1^n tau}", a, 0.0, a == 0.0));

        let l3 = self.lemma3_check_total(depth)?;
        rows.push(row(
            "3",
            "min slack factor",
            l3.min_slack,
            1.0,
            l3.passed() && l3.min_slack > 1.0,
        ));

        Ok(LemmaTable { depth, rows })
    }
}
