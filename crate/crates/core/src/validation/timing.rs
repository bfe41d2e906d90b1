//! Direct-LP versus policy screening time on the same forecasts.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::case_io::Forecast;
use crate::mplp::{evaluate_policy, PolicySet, PolicyValue};
use crate::screening::{Screener, SolveSource};

use super::ValidationError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingTable {
    pub forecasts: usize,
    /// Bound evaluations that needed an LP (short-circuited bounds excluded).
    pub bound_evaluations: usize,
    pub lp_ms: f64,
    pub policy_ms: f64,
    /// Evaluations the policy did not cover, solved by LP instead.
    pub fallbacks: usize,
    pub fallback_ms: f64,
    pub lp_ms_per_bound: f64,
    pub policy_ms_per_bound: f64,
    /// `lp_ms / (policy_ms + fallback_ms)`.
    pub speedup: f64,
}

/// Times every LP-requiring bound serially both ways on each forecast and
/// checks that the two classifications agree before reporting anything.
pub fn timing_compare(set: &PolicySet, screener: &Screener, fcs: &[Forecast]) -> Result<TimingTable, ValidationError> {
    let bounds: Vec<_> = screener
        .all_bounds()
        .into_iter()
        .filter(|b| screener.needs_solve(*b))
        .collect();
    let mut t = TimingTable {
        forecasts: fcs.len(),
        ..TimingTable::default()
    };
    for (i, fc) in fcs.iter().enumerate() {
        for &b in &bounds {
            let start = Instant::now();
            let direct = screener.solve_bound(fc, b)?;
            t.lp_ms += start.elapsed().as_secs_f64() * 1e3;

            let start = Instant::now();
            let via_policy = match set.get(b).map(|p| evaluate_policy(p, fc)) {
                Some(PolicyValue::Covered { value, .. }) => {
                    let r = screener.classify(b, value, SolveSource::AffinePolicy);
                    t.policy_ms += start.elapsed().as_secs_f64() * 1e3;
                    r
                }
                _ => {
                    let start = Instant::now();
                    let r = screener.solve_bound(fc, b)?;
                    t.fallbacks += 1;
                    t.fallback_ms += start.elapsed().as_secs_f64() * 1e3;
                    r
                }
            };
            if via_policy.classification != direct.classification {
                return Err(ValidationError::ClassificationMismatch { forecast: i, bound: b });
            }
            t.bound_evaluations += 1;
        }
    }
    if t.bound_evaluations > 0 {
        let n = t.bound_evaluations as f64;
        t.lp_ms_per_bound = t.lp_ms / n;
        t.policy_ms_per_bound = (t.policy_ms + t.fallback_ms) / n;
        let fast = t.policy_ms + t.fallback_ms;
        t.speedup = if fast > 0.0 { t.lp_ms / fast } else { f64::INFINITY };
    }
    Ok(t)
}
