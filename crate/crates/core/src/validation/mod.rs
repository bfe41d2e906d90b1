//! Monte-Carlo validation of reduced models.
//!
//! Realizations are drawn from the uncertainty model, the reduced model is
//! solved (or its fixed dispatch adjusted by recourse), and the resulting
//! operating point is judged against every constraint of the full
//! deterministic model at the realized demand.

mod timing;

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::case_io::{Forecast, Network, PtdfMatrix};
use crate::milp::{MilpOptions, MilpStatus};
use crate::screening::format_sig9;
use crate::uc_models::{
    all_line_bounds, apply_recourse, build_cc_uc, build_deterministic_uc, build_robust_uc, participation_factors,
    Direction, LineBound, UcError, UcModel, UcSolution, UncertaintyModel, DEFAULT_VERTEX_CAP,
};

pub use timing::{timing_compare, TimingTable};

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("need at least one realization")]
    NoSamples,
    #[error("{family} needs a {needs} uncertainty model")]
    WrongUncertainty { family: Family, needs: &'static str },
    #[error("reduced {family} model has no solution at the forecast ({status:?})")]
    ReducedUnsolved { family: Family, status: MilpStatus },
    #[error("classification mismatch at forecast {forecast}, bound {bound}: timing withheld")]
    ClassificationMismatch { forecast: usize, bound: LineBound },
    #[error(transparent)]
    Uc(#[from] UcError),
    #[error(transparent)]
    Screening(#[from] crate::screening::ScreeningError),
    #[error(transparent)]
    Mplp(#[from] crate::mplp::MplpError),
}

/// Reduced-model families: T1..T3 are the deterministic model reduced by the
/// deterministic, chance-constrained and robust keep-sets, re-solved per
/// realization; T4 and T5 are the chance-constrained and robust models
/// reduced by their own keep-sets, solved once and adjusted by recourse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    T1,
    T2,
    T3,
    T4,
    T5,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "T1" => Ok(Family::T1),
            "T2" => Ok(Family::T2),
            "T3" => Ok(Family::T3),
            "T4" => Ok(Family::T4),
            "T5" => Ok(Family::T5),
            other => Err(format!("unknown model family {other:?} (expected T1..T5)")),
        }
    }
}

/// Draws `n` realized demand vectors, deterministic in `seed`.
///
/// Gaussian: `l = l_hat - w`, `w_i ~ N(0, var_i)` independently.
/// Box: uniform in the box interval on uncertain buses, forecast elsewhere.
pub fn sample_realizations(unc: &UncertaintyModel, fc: &Forecast, n: usize, seed: u64) -> Vec<Forecast> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    match unc {
        UncertaintyModel::Gaussian(g) => {
            let sd: Vec<f64> = g.variances.iter().map(|v| v.max(0.0).sqrt()).collect();
            for _ in 0..n {
                let v = fc
                    .values()
                    .iter()
                    .zip(&sd)
                    .map(|(l, s)| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        if *s > 0.0 {
                            l - s * z
                        } else {
                            *l
                        }
                    })
                    .collect();
                out.push(Forecast(v));
            }
        }
        UncertaintyModel::Box(b) => {
            let (lo, hi) = b.demand_bounds(fc);
            for _ in 0..n {
                let mut v = fc.values().to_vec();
                for &k in &b.uncertain {
                    v[k] = if hi[k] > lo[k] { rng.random_range(lo[k]..=hi[k]) } else { lo[k] };
                }
                out.push(Forecast(v));
            }
        }
    }
    out
}

/// Constraint of the deterministic model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ConstraintId {
    Line { line: usize, dir: Direction },
    UnitMax { unit: usize },
    UnitMin { unit: usize },
    Balance,
}

impl std::fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConstraintId::Line { line, dir } => write!(f, "line {line} {}", dir.as_str()),
            ConstraintId::UnitMax { unit } => write!(f, "unit {unit} max"),
            ConstraintId::UnitMin { unit } => write!(f, "unit {unit} min"),
            ConstraintId::Balance => write!(f, "balance"),
        }
    }
}

/// Violations (amount > `tol`, MW) of the deterministic model's constraints by
/// commitment `u` and dispatch `x` at demand `demand`.
pub fn deterministic_violations(
    net: &Network,
    ptdf: &PtdfMatrix,
    u: &[f64],
    x: &[f64],
    demand: &Forecast,
    tol: f64,
) -> Vec<(ConstraintId, f64)> {
    let mut out = Vec::new();
    for (g, gen) in net.generators.iter().enumerate() {
        let over = x[g] - gen.pmax * u[g];
        if over > tol {
            out.push((ConstraintId::UnitMax { unit: g }, over));
        }
        let under = gen.pmin * u[g] - x[g];
        if under > tol {
            out.push((ConstraintId::UnitMin { unit: g }, under));
        }
    }
    let imbalance = (x.iter().sum::<f64>() - demand.total()).abs();
    if imbalance > tol {
        out.push((ConstraintId::Balance, imbalance));
    }
    let mut inj: Vec<f64> = demand.values().iter().map(|l| -l).collect();
    for (g, &k) in net.generator_bus_indices().iter().enumerate() {
        inj[k] += x[g];
    }
    for (j, f) in ptdf.flows(&inj).into_iter().enumerate() {
        let Some(lim) = net.branches[j].limit.finite() else { continue };
        if f - lim > tol {
            out.push((ConstraintId::Line { line: j, dir: Direction::Upper }, f - lim));
        }
        if -lim - f > tol {
            out.push((ConstraintId::Line { line: j, dir: Direction::Lower }, -lim - f));
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct ValidationOptions {
    pub feasibility_tol: f64,
    /// Solve the full model per realization for the solution gap.
    pub compute_gap: bool,
    pub milp: MilpOptions,
    pub parallel: bool,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            feasibility_tol: 1e-6,
            compute_gap: true,
            milp: MilpOptions {
                gap: 1e-9,
                ..MilpOptions::default()
            },
            parallel: true,
        }
    }
}

/// Outcome for one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub index: usize,
    /// The reduced model had no solution at this realization.
    pub reduced_unsolved: bool,
    pub feasible: bool,
    pub violated_removed: bool,
    pub max_violation: f64,
    pub reduced_objective: Option<f64>,
    pub full_objective: Option<f64>,
    pub gap: Option<f64>,
    pub violations: Vec<ConstraintId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCount {
    pub constraint: ConstraintId,
    pub count: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportTiming {
    pub total_ms: f64,
    pub reduced_solve_ms_mean: f64,
    pub full_solve_ms_mean: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub screening: Option<TimingTable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub family: Family,
    pub seed: u64,
    pub samples: usize,
    pub kept_bounds: usize,
    pub total_bounds: usize,
    /// Realizations where the operating point violates a screened-out bound.
    pub infeasible: usize,
    pub infeasibility_rate: f64,
    /// Realizations violating any deterministic-model constraint, kept or not.
    pub any_violation: usize,
    pub any_violation_rate: f64,
    /// Realizations where the full model itself has no solution.
    pub full_infeasible: usize,
    pub reduced_unsolved: usize,
    pub gap_samples: usize,
    pub mean_gap: f64,
    pub max_gap: f64,
    pub min_gap: f64,
    pub max_violation: f64,
    pub constraint_violations: Vec<ConstraintCount>,
    pub config: serde_json::Value,
    pub outcomes: Vec<SampleOutcome>,
    pub timing: ReportTiming,
}

impl ValidationReport {
    /// JSON text; timing is left out when `with_timing` is false so reports
    /// of identical runs compare byte for byte.
    pub fn to_json(&self, with_timing: bool) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if !with_timing {
            v.as_object_mut().unwrap().remove("timing");
        }
        serde_json::to_string_pretty(&v).expect("report serializes")
    }

    /// One row per realization.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(format_sig9).unwrap_or_default();
        let mut out = String::from("sample,feasible,violated_removed,max_violation,reduced_objective,full_objective,gap\n");
        for o in &self.outcomes {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                o.index,
                o.feasible,
                o.violated_removed,
                format_sig9(o.max_violation),
                opt(o.reduced_objective),
                opt(o.full_objective),
                opt(o.gap)
            );
        }
        out
    }

    pub fn violation_rate(&self, c: ConstraintId) -> f64 {
        self.constraint_violations
            .iter()
            .find(|v| v.constraint == c)
            .map_or(0.0, |v| v.rate)
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

struct Sample {
    outcome: SampleOutcome,
    reduced_time: Duration,
    full_time: Duration,
}

fn is_removed(c: &ConstraintId, keep: &[LineBound]) -> bool {
    match c {
        ConstraintId::Line { line, dir } => !keep.contains(&LineBound { line: *line, dir: *dir }),
        _ => false,
    }
}

fn full_objective(
    net: &Network,
    ptdf: &PtdfMatrix,
    real: &Forecast,
    opts: &ValidationOptions,
) -> Result<(Option<f64>, Duration), UcError> {
    if !opts.compute_gap {
        return Ok((None, Duration::ZERO));
    }
    let t = Instant::now();
    let full = build_deterministic_uc(net, ptdf, real, &all_line_bounds(net))?.solve_with(&opts.milp)?;
    let obj = full.is_optimal().then_some(full.objective);
    Ok((obj, t.elapsed()))
}

#[allow(clippy::too_many_arguments)]
fn judge(
    net: &Network,
    ptdf: &PtdfMatrix,
    keep: &[LineBound],
    index: usize,
    u: &[f64],
    x: &[f64],
    real: &Forecast,
    reduced_objective: f64,
    full: Option<f64>,
    tol: f64,
) -> SampleOutcome {
    let viol = deterministic_violations(net, ptdf, u, x, real, tol);
    let feasible = viol.is_empty();
    let gap = match (feasible, full) {
        (true, Some(f)) => Some((reduced_objective - f) / f.abs().max(1.0)),
        _ => None,
    };
    SampleOutcome {
        index,
        reduced_unsolved: false,
        feasible,
        violated_removed: viol.iter().any(|(c, _)| is_removed(c, keep)),
        max_violation: viol.iter().map(|(_, a)| *a).fold(0.0, f64::max),
        reduced_objective: Some(reduced_objective),
        full_objective: full,
        gap,
        violations: viol.into_iter().map(|(c, _)| c).collect(),
    }
}

fn dispatch_cost(net: &Network, x: &[f64]) -> f64 {
    net.generators.iter().zip(x).map(|(g, v)| g.cost * v).sum()
}

/// Runs one family over the given realizations.
#[allow(clippy::too_many_arguments)]
pub fn validate_reduced(
    family: Family,
    net: &Network,
    ptdf: &PtdfMatrix,
    fc: &Forecast,
    unc: Option<&UncertaintyModel>,
    keep: &[LineBound],
    realizations: &[Forecast],
    seed: u64,
    opts: &ValidationOptions,
) -> Result<ValidationReport, ValidationError> {
    if realizations.is_empty() {
        return Err(ValidationError::NoSamples);
    }
    let start = Instant::now();
    let tol = opts.feasibility_tol;

    // T4/T5: one reduced solve at the forecast, then recourse per realization
    let fixed: Option<(UcSolution, Vec<f64>)> = match family {
        Family::T4 => {
            let Some(UncertaintyModel::Gaussian(g)) = unc else {
                return Err(ValidationError::WrongUncertainty { family, needs: "Gaussian" });
            };
            let sol = build_cc_uc(net, ptdf, fc, g, keep)?.solve_with(&opts.milp)?;
            Some((sol, g.alpha.clone()))
        }
        Family::T5 => {
            let Some(UncertaintyModel::Box(b)) = unc else {
                return Err(ValidationError::WrongUncertainty { family, needs: "box" });
            };
            let sol = build_robust_uc(net, ptdf, fc, b, keep, DEFAULT_VERTEX_CAP)?.solve_with(&opts.milp)?;
            Some((sol, participation_factors(net)))
        }
        _ => None,
    };
    if let Some((sol, _)) = &fixed {
        if !sol.is_optimal() && sol.status != MilpStatus::NodeLimit {
            return Err(ValidationError::ReducedUnsolved {
                family,
                status: sol.status,
            });
        }
    }

    let run = |(i, real): (usize, &Forecast)| -> Result<Sample, UcError> {
        let (full, full_time) = full_objective(net, ptdf, real, opts)?;
        match &fixed {
            Some((sol, alpha)) => {
                let t = Instant::now();
                let x = apply_recourse(&sol.x, alpha, real);
                let cost = dispatch_cost(net, &x);
                let outcome = judge(net, ptdf, keep, i, &sol.u, &x, real, cost, full, tol);
                Ok(Sample {
                    outcome,
                    reduced_time: t.elapsed(),
                    full_time,
                })
            }
            None => {
                let t = Instant::now();
                let model: UcModel = build_deterministic_uc(net, ptdf, real, keep)?;
                let sol = model.solve_with(&opts.milp)?;
                let reduced_time = t.elapsed();
                let outcome = if sol.x.is_empty() {
                    SampleOutcome {
                        index: i,
                        reduced_unsolved: true,
                        feasible: false,
                        violated_removed: false,
                        max_violation: 0.0,
                        reduced_objective: None,
                        full_objective: full,
                        gap: None,
                        violations: Vec::new(),
                    }
                } else {
                    judge(net, ptdf, keep, i, &sol.u, &sol.x, real, sol.objective, full, tol)
                };
                Ok(Sample {
                    outcome,
                    reduced_time,
                    full_time,
                })
            }
        }
    };
    let samples: Vec<Sample> = if opts.parallel {
        realizations.par_iter().enumerate().map(run).collect::<Result<_, _>>()?
    } else {
        realizations.iter().enumerate().map(run).collect::<Result<_, _>>()?
    };

    let n = samples.len();
    let rate = |k: usize| k as f64 / n as f64;
    let outcomes: Vec<SampleOutcome> = samples.iter().map(|s| s.outcome.clone()).collect();
    let reduced_unsolved = outcomes.iter().filter(|o| o.reduced_unsolved).count();
    let infeasible = outcomes.iter().filter(|o| o.violated_removed).count();
    let any_violation = outcomes.iter().filter(|o| !o.feasible && !o.reduced_unsolved).count();
    let full_infeasible = if opts.compute_gap {
        outcomes.iter().filter(|o| o.full_objective.is_none()).count()
    } else {
        0
    };
    let gaps: Vec<f64> = outcomes.iter().filter_map(|o| o.gap).collect();
    let mut counts: std::collections::BTreeMap<ConstraintId, usize> = Default::default();
    for o in &outcomes {
        for c in &o.violations {
            *counts.entry(*c).or_default() += 1;
        }
    }
    let total_bounds = all_line_bounds(net).len();
    let config = serde_json::json!({
        "family": family,
        "samples": n,
        "seed": seed,
        "kept_bounds": keep.len(),
        "feasibility_tol": tol,
        "compute_gap": opts.compute_gap,
        "milp_gap": opts.milp.gap,
        "uncertainty": unc.map(describe),
    });
    let mean = |v: Vec<f64>| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    Ok(ValidationReport {
        family,
        seed,
        samples: n,
        kept_bounds: keep.len(),
        total_bounds,
        infeasible,
        infeasibility_rate: rate(infeasible),
        any_violation,
        any_violation_rate: rate(any_violation),
        full_infeasible,
        reduced_unsolved,
        gap_samples: gaps.len(),
        mean_gap: mean(gaps.clone()),
        max_gap: gaps.iter().copied().fold(0.0, f64::max),
        min_gap: gaps.iter().copied().fold(0.0, f64::min),
        max_violation: outcomes.iter().map(|o| o.max_violation).fold(0.0, f64::max),
        constraint_violations: counts
            .into_iter()
            .map(|(constraint, count)| ConstraintCount {
                constraint,
                count,
                rate: rate(count),
            })
            .collect(),
        config,
        timing: ReportTiming {
            total_ms: ms(start.elapsed()),
            reduced_solve_ms_mean: mean(samples.iter().map(|s| ms(s.reduced_time)).collect()),
            full_solve_ms_mean: mean(samples.iter().map(|s| ms(s.full_time)).collect()),
            screening: None,
        },
        outcomes,
    })
}

fn describe(unc: &UncertaintyModel) -> serde_json::Value {
    match unc {
        UncertaintyModel::Box(b) => serde_json::json!({ "box": b }),
        UncertaintyModel::Gaussian(g) => serde_json::json!({ "gaussian": g }),
    }
}
