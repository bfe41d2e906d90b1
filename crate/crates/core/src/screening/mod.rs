//! Line-limit screening.
//!
//! Every bound `(line, direction)` gets one LP: push the flow on that line as
//! far as possible toward its limit while every other line respects its own
//! limit and the commitment binaries are relaxed. If the extreme flow stays
//! strictly inside the limit, the bound can never bind and is redundant.

mod output;
mod problem;

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::case_io::{BusId, Forecast, Network, PtdfMatrix};
use crate::lp::{solve_lp_with, LpProblem, LpStatus, SimplexOptions};
use crate::uc_models::{BoxUncertainty, Direction, GaussianUncertainty, LineBound};

pub use output::format_sig9;
pub use problem::literal_screening_lp;
pub(crate) use problem::Prepared;

#[derive(Debug, Error, PartialEq)]
pub enum ScreeningError {
    #[error("forecast has {got} entries, network has {expected} buses")]
    ForecastLength { got: usize, expected: usize },
    #[error("screening LP for bound {bound} is infeasible: the commitment problem has no feasible dispatch at this forecast")]
    Infeasible { bound: LineBound },
    #[error("screening LP for bound {bound} did not converge")]
    Stalled { bound: LineBound },
    #[error("unit at bus {bus} cannot hold its reserve floor of {reserve} MW")]
    ReserveUnattainable { bus: BusId, reserve: f64 },
    #[error("no generator takes part in balancing")]
    NoParticipation,
    #[error("invalid uncertainty model: {0}")]
    Uncertainty(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScreeningMethod {
    Deterministic,
    Robust {
        unc: BoxUncertainty,
        /// Couple dispatch to the realized demand through participation
        /// factors instead of letting it move freely.
        with_recourse: bool,
    },
    ChanceConstrained(GaussianUncertainty),
}

impl ScreeningMethod {
    pub fn tag(&self) -> MethodTag {
        match self {
            ScreeningMethod::Deterministic => MethodTag::Deterministic,
            ScreeningMethod::Robust { .. } => MethodTag::Robust,
            ScreeningMethod::ChanceConstrained(_) => MethodTag::ChanceConstrained,
        }
    }

    fn validate(&self, net: &Network) -> Result<(), ScreeningError> {
        match self {
            ScreeningMethod::Deterministic => Ok(()),
            ScreeningMethod::Robust { unc, .. } => {
                if unc.beta_lo.len() != net.n_buses() {
                    return Err(ScreeningError::Uncertainty("box size differs from bus count".into()));
                }
                Ok(())
            }
            ScreeningMethod::ChanceConstrained(g) => {
                g.validate(net).map_err(|e| ScreeningError::Uncertainty(e.to_string()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodTag {
    Deterministic,
    Robust,
    ChanceConstrained,
}

impl MethodTag {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodTag::Deterministic => "deterministic",
            MethodTag::Robust => "robust",
            MethodTag::ChanceConstrained => "chance-constrained",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Redundant,
    NonRedundant,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Redundant => "redundant",
            Classification::NonRedundant => "non-redundant",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveSource {
    Lp,
    AffinePolicy,
    /// Decided without solving (unlimited or structurally infeasible line).
    None,
}

impl SolveSource {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveSource::Lp => "lp",
            SolveSource::AffinePolicy => "affine-policy",
            SolveSource::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub bound: LineBound,
    pub classification: Classification,
    /// Extreme flow in the bound's direction, MW.
    pub f_star: Option<f64>,
    /// Distance from the extreme flow to the limit in the bound's direction.
    pub margin: f64,
    /// Limit the bound was judged against (tightened for chance constraints).
    pub threshold: f64,
    pub source: SolveSource,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningResult {
    pub method: MethodTag,
    pub bounds: Vec<BoundResult>,
    pub diagnostics: Vec<String>,
    pub lp_solves: usize,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl ScreeningResult {
    /// Bounds to keep in the reduced model.
    pub fn keep_set(&self) -> Vec<LineBound> {
        self.bounds
            .iter()
            .filter(|b| b.classification == Classification::NonRedundant)
            .map(|b| b.bound)
            .collect()
    }

    pub fn count_non_redundant(&self) -> usize {
        self.keep_set().len()
    }

    pub fn get(&self, bound: LineBound) -> Option<&BoundResult> {
        self.bounds.iter().find(|b| b.bound == bound)
    }

    pub fn classifications(&self) -> Vec<(LineBound, Classification)> {
        self.bounds.iter().map(|b| (b.bound, b.classification)).collect()
    }
}

/// Bounds to keep in a reduced model built from `sr`.
pub fn reduce_model(sr: &ScreeningResult) -> Vec<LineBound> {
    sr.keep_set()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreeningOptions {
    /// Relative redundancy tolerance: redundant iff margin > tol * max(1, limit).
    pub tolerance: f64,
    pub parallel: bool,
    pub simplex: SimplexOptions,
}

impl Default for ScreeningOptions {
    fn default() -> Self {
        ScreeningOptions {
            tolerance: 1e-6,
            parallel: true,
            simplex: SimplexOptions::default(),
        }
    }
}

/// Redundant iff the directional margin to `threshold` exceeds
/// `tolerance * max(1, limit)`; ties stay non-redundant.
pub fn classify_bound(
    bound: LineBound,
    f_star: f64,
    threshold: f64,
    limit: f64,
    tolerance: f64,
    source: SolveSource,
) -> BoundResult {
    let margin = match bound.dir {
        Direction::Upper => threshold - f_star,
        Direction::Lower => threshold + f_star,
    };
    let classification = if margin > tolerance * limit.max(1.0) {
        Classification::Redundant
    } else {
        Classification::NonRedundant
    };
    BoundResult {
        bound,
        classification,
        f_star: Some(f_star),
        margin,
        threshold,
        source,
        note: None,
    }
}

/// Screening state for one network and method, reusable across forecasts.
#[derive(Debug, Clone)]
pub struct Screener<'a> {
    pub net: &'a Network,
    pub ptdf: &'a PtdfMatrix,
    pub method: ScreeningMethod,
    pub opts: ScreeningOptions,
    prep: Prepared,
}

impl<'a> Screener<'a> {
    pub fn new(
        net: &'a Network,
        ptdf: &'a PtdfMatrix,
        method: ScreeningMethod,
        opts: ScreeningOptions,
    ) -> Result<Self, ScreeningError> {
        method.validate(net)?;
        let prep = Prepared::new(net, ptdf, &method)?;
        Ok(Screener {
            net,
            ptdf,
            method,
            opts,
            prep,
        })
    }

    /// Both bounds of every line, line-major.
    pub fn all_bounds(&self) -> Vec<LineBound> {
        (0..self.net.n_lines())
            .flat_map(|j| [LineBound::upper(j), LineBound::lower(j)])
            .collect()
    }

    /// Limit the bound is judged against.
    pub fn threshold(&self, line: usize) -> f64 {
        self.prep.threshold[line]
    }

    /// Whether the bound needs an LP at all.
    pub fn needs_solve(&self, bound: LineBound) -> bool {
        let t = self.prep.threshold[bound.line];
        t.is_finite() && t >= 0.0
    }

    /// The screening LP of `bound` at forecast `fc`.
    pub fn bound_lp(&self, fc: &Forecast, bound: LineBound) -> LpProblem {
        problem::screening_lp(self.net, self.ptdf, &self.prep, &self.method, fc, bound)
    }

    fn check_forecast(&self, fc: &Forecast) -> Result<(), ScreeningError> {
        if fc.len() != self.net.n_buses() {
            return Err(ScreeningError::ForecastLength {
                got: fc.len(),
                expected: self.net.n_buses(),
            });
        }
        Ok(())
    }

    /// Result for a bound that is decided without an LP, if any.
    pub fn short_circuit(&self, bound: LineBound) -> Option<BoundResult> {
        let t = self.prep.threshold[bound.line];
        if !t.is_finite() {
            return Some(BoundResult {
                bound,
                classification: Classification::Redundant,
                f_star: None,
                margin: f64::INFINITY,
                threshold: t,
                source: SolveSource::None,
                note: None,
            });
        }
        if t < 0.0 {
            return Some(BoundResult {
                bound,
                classification: Classification::NonRedundant,
                f_star: None,
                margin: t,
                threshold: t,
                source: SolveSource::None,
                note: Some(format!(
                    "tightened limit {} is negative; line cannot meet its chance constraint",
                    format_sig9(t)
                )),
            });
        }
        None
    }

    /// Classifies an extreme flow value for `bound`.
    pub fn classify(&self, bound: LineBound, f_star: f64, source: SolveSource) -> BoundResult {
        let limit = self.net.branches[bound.line].limit.value();
        classify_bound(bound, f_star, self.prep.threshold[bound.line], limit, self.opts.tolerance, source)
    }

    /// Extreme flow of one bound by LP.
    pub fn extreme_flow(&self, fc: &Forecast, bound: LineBound) -> Result<f64, ScreeningError> {
        let lp = self.bound_lp(fc, bound);
        let sol = solve_lp_with(&lp, &self.opts.simplex).expect("screening LP is well formed");
        match sol.status {
            LpStatus::Optimal => Ok(sol.objective),
            LpStatus::Infeasible => Err(ScreeningError::Infeasible { bound }),
            LpStatus::Unbounded | LpStatus::Stalled => Err(ScreeningError::Stalled { bound }),
        }
    }

    pub fn solve_bound(&self, fc: &Forecast, bound: LineBound) -> Result<BoundResult, ScreeningError> {
        if let Some(r) = self.short_circuit(bound) {
            return Ok(r);
        }
        let f = self.extreme_flow(fc, bound)?;
        Ok(self.classify(bound, f, SolveSource::Lp))
    }

    /// Screens every bound of every line.
    pub fn screen(&self, fc: &Forecast) -> Result<ScreeningResult, ScreeningError> {
        self.check_forecast(fc)?;
        let start = Instant::now();
        let bounds = self.all_bounds();
        let results: Vec<Result<BoundResult, ScreeningError>> = if self.opts.parallel {
            bounds.par_iter().map(|b| self.solve_bound(fc, *b)).collect()
        } else {
            bounds.iter().map(|b| self.solve_bound(fc, *b)).collect()
        };
        let bounds: Vec<BoundResult> = results.into_iter().collect::<Result<_, _>>()?;
        let lp_solves = bounds.iter().filter(|b| b.source == SolveSource::Lp).count();
        Ok(ScreeningResult {
            method: self.method.tag(),
            diagnostics: self.diagnostics(),
            bounds,
            lp_solves,
            elapsed: start.elapsed(),
        })
    }

    pub fn diagnostics(&self) -> Vec<String> {
        self.prep
            .infeasible_lines
            .iter()
            .map(|&j| {
                let br = &self.net.branches[j];
                format!(
                    "line {j} ({}-{}): tightened limit {} < 0, kept as non-redundant and left out of other screening LPs",
                    br.from,
                    br.to,
                    format_sig9(self.prep.threshold[j])
                )
            })
            .collect()
    }
}

pub fn screen_deterministic(
    net: &Network,
    ptdf: &PtdfMatrix,
    fc: &Forecast,
) -> Result<ScreeningResult, ScreeningError> {
    Screener::new(net, ptdf, ScreeningMethod::Deterministic, ScreeningOptions::default())?.screen(fc)
}

pub fn screen_robust(
    net: &Network,
    ptdf: &PtdfMatrix,
    fc: &Forecast,
    unc: &BoxUncertainty,
    with_recourse: bool,
) -> Result<ScreeningResult, ScreeningError> {
    let method = ScreeningMethod::Robust {
        unc: unc.clone(),
        with_recourse,
    };
    Screener::new(net, ptdf, method, ScreeningOptions::default())?.screen(fc)
}

pub fn screen_cc(
    net: &Network,
    ptdf: &PtdfMatrix,
    fc: &Forecast,
    unc: &GaussianUncertainty,
) -> Result<ScreeningResult, ScreeningError> {
    let method = ScreeningMethod::ChanceConstrained(unc.clone());
    Screener::new(net, ptdf, method, ScreeningOptions::default())?.screen(fc)
}
