//! Per-bound policies for a screener, hybrid screening and the policy store.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::case_io::Forecast;
use crate::lp::LpProblem;
use crate::screening::{BoundResult, Classification, ScreeningResult, Screener, SolveSource};
use crate::uc_models::LineBound;

use super::{
    build_parametric, enumerate_regions, evaluate_policy, AffinePolicy, ExploreOptions, MplpError, ParameterSet,
    PolicyStatus, PolicyValue,
};

pub const SCHEMA_TAG: &str = "mplp-policy/1";

/// Policies for every bound of one screener that needs an LP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySet {
    pub schema: String,
    pub n_buses: usize,
    pub policies: Vec<AffinePolicy>,
}

impl PolicySet {
    pub fn is_complete(&self) -> bool {
        self.policies.iter().all(|p| p.status == PolicyStatus::Complete)
    }

    pub fn get(&self, bound: LineBound) -> Option<&AffinePolicy> {
        self.policies.iter().find(|p| p.bound == Some(bound))
    }

    pub fn region_count(&self) -> usize {
        self.policies.iter().map(|p| p.regions.len()).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("policy set serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, MplpError> {
        let de = &mut serde_json::Deserializer::from_str(s);
        let set: PolicySet = serde_path_to_error::deserialize(de).map_err(|e| MplpError::Store(e.to_string()))?;
        if set.schema != SCHEMA_TAG {
            return Err(MplpError::Store(format!(
                "schema tag {:?}, expected {SCHEMA_TAG:?}",
                set.schema
            )));
        }
        Ok(set)
    }
}

/// Policy of an arbitrary forecast-parametric LP over `ps`.
pub fn policy_from_template(
    template: &dyn Fn(&Forecast) -> LpProblem,
    base: &Forecast,
    varying: Vec<usize>,
    ps: &ParameterSet,
    opts: &ExploreOptions,
) -> Result<AffinePolicy, MplpError> {
    let plp = build_parametric(template, base, &varying)?;
    let ex = enumerate_regions(&plp, ps, opts)?;
    Ok(AffinePolicy {
        bound: None,
        method: None,
        varying_buses: ps.varying.clone(),
        varying_index: varying,
        ps: ps.clone(),
        base_forecast: base.values().to_vec(),
        regions: ex.regions,
        status: ex.status,
        uncovered: ex.uncovered,
    })
}

/// Policy for one bound of `screener` around `base`.
pub fn build_policy(
    screener: &Screener,
    base: &Forecast,
    bound: LineBound,
    ps: &ParameterSet,
    opts: &ExploreOptions,
) -> Result<AffinePolicy, MplpError> {
    let varying = ps.indices(screener.net)?;
    if base.len() != screener.net.n_buses() {
        return Err(MplpError::Mismatch(format!(
            "forecast has {} entries for {} buses",
            base.len(),
            screener.net.n_buses()
        )));
    }
    let template = |fc: &Forecast| screener.bound_lp(fc, bound);
    let mut pol = policy_from_template(&template, base, varying, ps, opts)?;
    pol.bound = Some(bound);
    pol.method = Some(screener.method.tag());
    Ok(pol)
}

/// Policies for every bound that needs an LP, built in parallel.
pub fn build_policies(
    screener: &Screener,
    base: &Forecast,
    ps: &ParameterSet,
    opts: &ExploreOptions,
) -> Result<PolicySet, MplpError> {
    let bounds: Vec<LineBound> = screener
        .all_bounds()
        .into_iter()
        .filter(|b| screener.needs_solve(*b))
        .collect();
    let build = |b: &LineBound| build_policy(screener, base, *b, ps, opts);
    let policies: Vec<Result<AffinePolicy, MplpError>> = if screener.opts.parallel {
        bounds.par_iter().map(build).collect()
    } else {
        bounds.iter().map(build).collect()
    };
    Ok(PolicySet {
        schema: SCHEMA_TAG.to_string(),
        n_buses: screener.net.n_buses(),
        policies: policies.into_iter().collect::<Result<_, _>>()?,
    })
}

fn not_covered(screener: &Screener, bound: LineBound) -> BoundResult {
    BoundResult {
        bound,
        classification: Classification::NonRedundant,
        f_star: None,
        margin: f64::NAN,
        threshold: screener.threshold(bound.line),
        source: SolveSource::None,
        note: Some("forecast not covered by the policy".to_string()),
    }
}

/// Screens `fc` with the policies, solving the direct LP for bounds whose
/// policy does not cover the forecast when `fallback` is set. Without
/// fallback, uncovered bounds are reported conservatively as non-redundant
/// with no extreme flow.
pub fn hybrid_screen(
    set: &PolicySet,
    screener: &Screener,
    fc: &Forecast,
    fallback: bool,
) -> Result<ScreeningResult, MplpError> {
    if set.n_buses != screener.net.n_buses() || fc.len() != screener.net.n_buses() {
        return Err(MplpError::Mismatch("bus count differs".to_string()));
    }
    let tag = screener.method.tag();
    if let Some(p) = set.policies.iter().find(|p| p.method.is_some_and(|m| m != tag)) {
        return Err(MplpError::Mismatch(format!(
            "policy built for {} screening, screener is {}",
            p.method.map_or("?", |m| m.as_str()),
            tag.as_str()
        )));
    }
    let start = Instant::now();
    let one = |b: &LineBound| -> Result<BoundResult, MplpError> {
        if let Some(r) = screener.short_circuit(*b) {
            return Ok(r);
        }
        if let Some(PolicyValue::Covered { value, .. }) = set.get(*b).map(|p| evaluate_policy(p, fc)) {
            return Ok(screener.classify(*b, value, SolveSource::AffinePolicy));
        }
        if fallback {
            Ok(screener.solve_bound(fc, *b)?)
        } else {
            Ok(not_covered(screener, *b))
        }
    };
    let bounds = screener.all_bounds();
    let results: Vec<Result<BoundResult, MplpError>> = if screener.opts.parallel {
        bounds.par_iter().map(one).collect()
    } else {
        bounds.iter().map(one).collect()
    };
    let bounds: Vec<BoundResult> = results.into_iter().collect::<Result<_, _>>()?;
    let lp_solves = bounds.iter().filter(|b| b.source == SolveSource::Lp).count();
    Ok(ScreeningResult {
        method: tag,
        diagnostics: screener.diagnostics(),
        bounds,
        lp_solves,
        elapsed: start.elapsed(),
    })
}
