use serde::Serialize;

use super::Analyzer;
use crate::error::{Error, Result};
use crate::map::LN_3;
use crate::symbolic::{pull_endpoints, unit_endpoints, walk_suffix_tree, Endpoints, Word, DEPTH_CAP};

/// Relative slack granted to the size bound.
const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma3Violation {
    pub n: u32,
    pub tau: Word,
    pub log_size: f64,
    pub log_bound: f64,
}

/// Result of checking `|I_{0^n 1 τ}| ≤ 3^{1-n} 2^{-|τ|-2}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma3Report {
    pub checked: u64,
    pub violations: Vec<Lemma3Violation>,
    /// `min bound / |I|` over all checked intervals.
    pub min_slack: f64,
    pub tightest_n: u32,
    pub tightest_tau: Word,
}

impl Lemma3Report {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Default)]
struct Partial {
    checked: u64,
    violations: Vec<Lemma3Violation>,
    min_log_slack: f64,
    tightest: Option<(u32, Word)>,
}

fn log_bound(n: u32, k: usize) -> f64 {
    (1.0 - n as f64) * LN_3 - (k as f64 + 2.0) * std::f64::consts::LN_2
}

impl Analyzer {
    /// All `n ≤ n_max` and `τ` with `|τ| ≤ k_max`.
    pub fn lemma3_check(&self, n_max: u32, k_max: usize) -> Result<Lemma3Report> {
        let total = n_max as usize + 1 + k_max;
        if total > DEPTH_CAP {
            return Err(Error::DepthCap {
                depth: total,
                cap: DEPTH_CAP,
            });
        }
        self.lemma3_run(k_max, |_| n_max)
    }

    /// All `(n, τ)` with `n + 1 + |τ| ≤ total`.
    pub fn lemma3_check_total(&self, total: usize) -> Result<Lemma3Report> {
        if total > DEPTH_CAP {
            return Err(Error::DepthCap {
                depth: total,
                cap: DEPTH_CAP,
            });
        }
        if total == 0 {
            return Err(Error::Precondition("total depth must be at least 1".into()));
        }
        self.lemma3_run(total - 1, |k| (total - 1 - k) as u32)
    }

    fn lemma3_run<N>(&self, k_max: usize, n_max_for: N) -> Result<Lemma3Report>
    where
        N: Fn(usize) -> u32 + Sync,
    {
        let map = &self.map;
        let levels = walk_suffix_tree(
            self.exec,
            k_max,
            unit_endpoints(),
            &|e: &Endpoints, s| pull_endpoints(map, s, e),
            &|tau: &Word, e: &Endpoints| {
                let k = tau.len();
                let mut part = Partial {
                    min_log_slack: f64::INFINITY,
                    ..Partial::default()
                };
                let mut cur = pull_endpoints(map, 1, e)?;
                for n in 0..=n_max_for(k) {
                    let log_size = crate::map::ScaledPoint::log_distance(&cur.0, &cur.1);
                    let bound = log_bound(n, k);
                    let slack = bound - log_size;
                    part.checked += 1;
                    if slack < part.min_log_slack {
                        part.min_log_slack = slack;
                        part.tightest = Some((n, tau.clone()));
                    }
                    if log_size > bound + BOUND_SLACK.ln_1p() {
                        part.violations.push(Lemma3Violation {
                            n,
                            tau: tau.clone(),
                            log_size,
                            log_bound: bound,
                        });
                    }
                    cur = pull_endpoints(map, 0, &cur)?;
                }
                Ok(Some(part))
            },
        )?;

        let mut report = Lemma3Report {
            checked: 0,
            violations: Vec::new(),
            min_slack: f64::INFINITY,
            tightest_n: 0,
            tightest_tau: Word::empty(),
        };
        let mut min_log = f64::INFINITY;
        for part in levels.into_iter().flatten() {
            report.checked += part.checked;
            report.violations.extend(part.violations);
            if part.min_log_slack < min_log {
                min_log = part.min_log_slack;
                if let Some((n, tau)) = part.tightest {
                    report.tightest_n = n;
                    report.tightest_tau = tau;
                }
            }
        }
        report.min_slack = min_log.exp();
        Ok(report)
    }
}
