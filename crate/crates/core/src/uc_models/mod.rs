//! Single-period unit commitment formulations.
//!
//! All three models share the layout: per generator a commitment binary `u`
//! and an output `x`, PTDF-based flow rows for the requested line bounds and
//! one power balance row. The chance-constrained model adds reserves `r` and
//! tightened flow limits; the robust model adds one copy of the bound and flow
//! rows per box vertex, coupled to `x` through the participation factors, and
//! minimizes the worst-case cost through an epigraph variable.

mod uncertainty;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::case_io::{Forecast, Network, PtdfMatrix};
use crate::lp::{LpProblem, Relation};
use crate::milp::{solve_milp_with, MilpError, MilpOptions, MilpProblem, MilpStatus};

pub use uncertainty::{
    apply_recourse, bus_participation, normal_cdf, normal_quantile, participation_factors,
    BoxUncertainty, GaussianUncertainty, VarianceRule,
};

/// Default limit on uncertain buses for vertex enumeration.
pub const DEFAULT_VERTEX_CAP: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum UcError {
    #[error("forecast has {got} entries, network has {expected} buses")]
    ForecastLength { got: usize, expected: usize },
    #[error("line index {0} out of range")]
    BadLine(usize),
    #[error("invalid uncertainty model: {0}")]
    Uncertainty(String),
    #[error("{count} uncertain buses exceed the vertex enumeration cap of {cap}; use fewer uncertain buses")]
    TooManyUncertainBuses { count: usize, cap: usize },
    #[error("tightened limit is negative on lines {0:?}: the chance-constrained model is structurally infeasible")]
    NegativeTightenedLimit(Vec<usize>),
    #[error("no generator takes part in balancing")]
    NoParticipation,
    #[error(transparent)]
    Milp(#[from] MilpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Upper,
    Lower,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Upper => 1.0,
            Direction::Lower => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Upper => "upper",
            Direction::Lower => "lower",
        }
    }
}

/// One side of a line's thermal limit: `flow <= limit` or `flow >= -limit`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LineBound {
    pub line: usize,
    pub dir: Direction,
}

impl LineBound {
    pub fn upper(line: usize) -> Self {
        LineBound {
            line,
            dir: Direction::Upper,
        }
    }

    pub fn lower(line: usize) -> Self {
        LineBound {
            line,
            dir: Direction::Lower,
        }
    }
}

impl fmt::Display for LineBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.dir.as_str())
    }
}

/// Both bounds of every line with a finite limit, line-major.
pub fn all_line_bounds(net: &Network) -> Vec<LineBound> {
    net.branches
        .iter()
        .enumerate()
        .filter(|(_, b)| !b.limit.is_unlimited())
        .flat_map(|(j, _)| [LineBound::upper(j), LineBound::lower(j)])
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum UncertaintyModel {
    Box(BoxUncertainty),
    Gaussian(GaussianUncertainty),
}

/// Variable and row positions of a built model.
#[derive(Debug, Clone, PartialEq)]
pub struct UcLayout {
    pub u: Vec<usize>,
    pub x: Vec<usize>,
    pub r: Option<Vec<usize>>,
    /// Worst-case cost variable of the robust model.
    pub epigraph: Option<usize>,
    /// Flow rows per kept bound (one per scenario for the robust model).
    pub flow_rows: Vec<(LineBound, Vec<usize>)>,
    pub balance_row: usize,
    pub scenarios: Vec<Forecast>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UcModel {
    pub milp: MilpProblem,
    pub layout: UcLayout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UcSolution {
    pub status: MilpStatus,
    pub u: Vec<f64>,
    pub x: Vec<f64>,
    pub r: Option<Vec<f64>>,
    pub objective: f64,
    pub nodes: usize,
    pub elapsed: std::time::Duration,
}

impl UcSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == MilpStatus::Optimal
    }
}

impl UcModel {
    pub fn solve(&self) -> Result<UcSolution, UcError> {
        self.solve_with(&MilpOptions::default())
    }

    pub fn solve_with(&self, opts: &MilpOptions) -> Result<UcSolution, UcError> {
        let s = solve_milp_with(&self.milp, opts)?;
        let pick = |idx: &[usize]| -> Vec<f64> {
            if s.has_solution() {
                idx.iter().map(|&j| s.x[j]).collect()
            } else {
                Vec::new()
            }
        };
        Ok(UcSolution {
            status: s.status,
            u: pick(&self.layout.u),
            x: pick(&self.layout.x),
            r: self.layout.r.as_ref().map(|r| pick(r)),
            objective: s.objective,
            nodes: s.nodes,
            elapsed: s.elapsed,
        })
    }

    pub fn n_flow_rows(&self) -> usize {
        self.layout.flow_rows.iter().map(|(_, rows)| rows.len()).sum()
    }
}

pub(crate) fn check_dims(net: &Network, fc: &Forecast, keep: &[LineBound]) -> Result<(), UcError> {
    if fc.len() != net.n_buses() {
        return Err(UcError::ForecastLength {
            got: fc.len(),
            expected: net.n_buses(),
        });
    }
    if let Some(b) = keep.iter().find(|b| b.line >= net.n_lines()) {
        return Err(UcError::BadLine(b.line));
    }
    Ok(())
}

/// Sorted, deduplicated bounds on lines that have a finite limit.
pub(crate) fn limited(net: &Network, keep: &[LineBound]) -> Vec<LineBound> {
    let mut v: Vec<LineBound> = keep
        .iter()
        .copied()
        .filter(|b| !net.branches[b.line].limit.is_unlimited())
        .collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Commitment and output variables; output bounds allow the zero point.
pub(crate) fn add_units(lp: &mut LpProblem, net: &Network) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let mut u = Vec::new();
    let mut x = Vec::new();
    let mut binaries = Vec::new();
    for g in &net.generators {
        let has_capacity = g.pmax > 0.0 || g.pmin > 0.0;
        let uj = lp.add_var(0.0, if has_capacity { 1.0 } else { 0.0 }, 0.0);
        if has_capacity {
            binaries.push(uj);
        }
        u.push(uj);
        x.push(lp.add_var(g.pmin.min(0.0), g.pmax.max(0.0), g.cost));
    }
    (u, x, binaries)
}

/// Flow coefficient of each generator on line `j`.
fn unit_factors(ptdf: &PtdfMatrix, gen_bus: &[usize], j: usize) -> Vec<f64> {
    gen_bus.iter().map(|&k| ptdf.get(j, k)).collect()
}

fn withdrawal_flow(ptdf: &PtdfMatrix, j: usize, demand: &[f64]) -> f64 {
    ptdf.row(j).iter().zip(demand).map(|(a, l)| a * l).sum()
}

/// Deterministic model: minimize cost under unit bounds, the kept flow bounds
/// and the nominal balance.
pub fn build_deterministic_uc(
    net: &Network,
    ptdf: &PtdfMatrix,
    fc: &Forecast,
    keep: &[LineBound],
) -> Result<UcModel, UcError> {
    let limits: Vec<f64> = net.branches.iter().map(|b| b.limit.value()).collect();
    build_nominal(net, ptdf, fc, keep, &limits, None)
}

/// Chance-constrained deterministic equivalent with reserves and flow limits
/// tightened by `z(1 - eps_f) sigma_f`.
pub fn build_cc_uc(
    net: &Network,
    ptdf: &PtdfMatrix,
    fc: &Forecast,
    unc: &GaussianUncertainty,
    keep: &[LineBound],
) -> Result<UcModel, UcError> {
    unc.validate(net)?;
    let limits = tightened_limits(net, ptdf, unc);
    let bad: Vec<usize> = limited(net, keep)
        .iter()
        .map(|b| b.line)
        .filter(|&j| limits[j] < 0.0)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    if !bad.is_empty() {
        return Err(UcError::NegativeTightenedLimit(bad));
    }
    build_nominal(net, ptdf, fc, keep, &limits, Some(&unc.reserve_floor()))
}

/// Per-line limits reduced by the chance-constraint margin; unlimited lines
/// stay infinite.
pub fn tightened_limits(net: &Network, ptdf: &PtdfMatrix, unc: &GaussianUncertainty) -> Vec<f64> {
    let margin = unc.flow_margin(net, ptdf);
    net.branches
        .iter()
        .zip(margin)
        .map(|(b, m)| b.limit.value() - m)
        .collect()
}

fn build_nominal(
    net: &Network,
    ptdf: &PtdfMatrix,
    fc: &Forecast,
    keep: &[LineBound],
    limits: &[f64],
    reserve_floor: Option<&[f64]>,
) -> Result<UcModel, UcError> {
    check_dims(net, fc, keep)?;
    let mut lp = LpProblem::minimize();
    let (u, x, binaries) = add_units(&mut lp, net);
    let r = reserve_floor.map(|floor| {
        floor
            .iter()
            .map(|f| lp.add_var(*f, f64::INFINITY, 0.0))
            .collect::<Vec<_>>()
    });
    for (g, gen) in net.generators.iter().enumerate() {
        match &r {
            None => {
                lp.add_row(&[(x[g], 1.0), (u[g], -gen.pmax)], Relation::Le, 0.0);
                lp.add_row(&[(x[g], 1.0), (u[g], -gen.pmin)], Relation::Ge, 0.0);
            }
            Some(r) => {
                lp.add_row(&[(x[g], 1.0), (r[g], 1.0), (u[g], -gen.pmax)], Relation::Le, 0.0);
                lp.add_row(&[(x[g], 1.0), (r[g], -1.0), (u[g], -gen.pmin)], Relation::Ge, 0.0);
            }
        }
    }
    let gen_bus = net.generator_bus_indices();
    let mut flow_rows = Vec::new();
    for b in limited(net, keep) {
        let coeffs = unit_factors(ptdf, &gen_bus, b.line);
        let terms: Vec<(usize, f64)> = x.iter().copied().zip(coeffs).collect();
        let base = withdrawal_flow(ptdf, b.line, fc.values());
        let row = match b.dir {
            Direction::Upper => lp.add_row(&terms, Relation::Le, limits[b.line] + base),
            Direction::Lower => lp.add_row(&terms, Relation::Ge, -limits[b.line] + base),
        };
        flow_rows.push((b, vec![row]));
    }
    let all_x: Vec<(usize, f64)> = x.iter().map(|&j| (j, 1.0)).collect();
    let balance_row = lp.add_row(&all_x, Relation::Eq, fc.total());
    Ok(UcModel {
        milp: MilpProblem::new(lp, binaries)?,
        layout: UcLayout {
            u,
            x,
            r,
            epigraph: None,
            flow_rows,
            balance_row,
            scenarios: vec![fc.clone()],
        },
    })
}

/// Robust model over the box vertices with shared commitment and base
/// dispatch; every scenario dispatch is `x + alpha (sum realized - sum forecast)`.
pub fn build_robust_uc(
    net: &Network,
    ptdf: &PtdfMatrix,
    fc: &Forecast,
    unc: &BoxUncertainty,
    keep: &[LineBound],
    cap: usize,
) -> Result<UcModel, UcError> {
    check_dims(net, fc, keep)?;
    if unc.beta_lo.len() != net.n_buses() {
        return Err(UcError::Uncertainty("box size differs from bus count".into()));
    }
    let scenarios = unc.vertices(fc, cap)?;
    let alpha = participation_factors(net);
    if !unc.uncertain.is_empty() && alpha.iter().sum::<f64>() == 0.0 {
        return Err(UcError::NoParticipation);
    }
    let mut lp = LpProblem::minimize();
    let (u, x, binaries) = add_units(&mut lp, net);
    // costs move to the epigraph rows
    for &j in &x {
        lp.objective[j] = 0.0;
    }
    let t = lp.add_var(f64::NEG_INFINITY, f64::INFINITY, 1.0);
    let gen_bus = net.generator_bus_indices();
    let cost_alpha: f64 = net.generators.iter().zip(&alpha).map(|(g, a)| g.cost * a).sum();
    let keep = limited(net, keep);
    let mut flow_rows: Vec<(LineBound, Vec<usize>)> = keep.iter().map(|b| (*b, Vec::new())).collect();
    for sc in &scenarios {
        let delta = sc.total() - fc.total();
        let mut epi: Vec<(usize, f64)> = vec![(t, 1.0)];
        for (g, gen) in net.generators.iter().enumerate() {
            epi.push((x[g], -gen.cost));
            let shift = alpha[g] * delta;
            lp.add_row(&[(x[g], 1.0), (u[g], -gen.pmax)], Relation::Le, -shift);
            lp.add_row(&[(x[g], 1.0), (u[g], -gen.pmin)], Relation::Ge, -shift);
        }
        lp.add_row(&epi, Relation::Ge, cost_alpha * delta);
        for (b, rows) in keep.iter().zip(flow_rows.iter_mut()) {
            let coeffs = unit_factors(ptdf, &gen_bus, b.line);
            let shift: f64 = coeffs.iter().zip(&alpha).map(|(a, al)| a * al).sum::<f64>() * delta;
            let base = withdrawal_flow(ptdf, b.line, sc.values()) - shift;
            let terms: Vec<(usize, f64)> = x.iter().copied().zip(coeffs).collect();
            let limit = net.branches[b.line].limit.value();
            let row = match b.dir {
                Direction::Upper => lp.add_row(&terms, Relation::Le, limit + base),
                Direction::Lower => lp.add_row(&terms, Relation::Ge, -limit + base),
            };
            rows.1.push(row);
        }
    }
    let all_x: Vec<(usize, f64)> = x.iter().map(|&j| (j, 1.0)).collect();
    let balance_row = lp.add_row(&all_x, Relation::Eq, fc.total());
    Ok(UcModel {
        milp: MilpProblem::new(lp, binaries)?,
        layout: UcLayout {
            u,
            x,
            r: None,
            epigraph: Some(t),
            flow_rows,
            balance_row,
            scenarios,
        },
    })
}

/// Line flows produced by a dispatch against a demand vector.
pub fn dispatch_flows(net: &Network, ptdf: &PtdfMatrix, x: &[f64], demand: &[f64]) -> Vec<f64> {
    let mut inj: Vec<f64> = demand.iter().map(|l| -l).collect();
    for (k, xi) in net.generator_bus_indices().into_iter().zip(x) {
        inj[k] += xi;
    }
    ptdf.flows(&inj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case_io::{compute_ptdf, synthetic};

    fn triangle_load(limit: [f64; 3], load: f64) -> (Network, PtdfMatrix, Forecast) {
        let net = synthetic::triangle_with_limits(limit);
        let ptdf = compute_ptdf(&net).unwrap();
        (net, ptdf, Forecast(vec![0.0, 0.0, load]))
    }

    #[test]
    fn loose_triangle_dispatches_cheapest_unit() {
        let (net, ptdf, fc) = triangle_load([1000.0; 3], 150.0);
        let m = build_deterministic_uc(&net, &ptdf, &fc, &all_line_bounds(&net)).unwrap();
        let s = m.solve().unwrap();
        assert!(s.is_optimal());
        assert!((s.x[0] - 150.0).abs() < 1e-6 && s.x[1].abs() < 1e-6);
        assert!((s.objective - 1500.0).abs() < 1e-6);
    }

    #[test]
    fn tight_line_shifts_output_to_second_unit() {
        // with 150 MW at bus 3, L3 carries (2 x1 + x2) / 3; a limit of 80
        // forces x1 = 90, x2 = 60
        let (net, ptdf, fc) = triangle_load([1000.0, 1000.0, 80.0], 150.0);
        let m = build_deterministic_uc(&net, &ptdf, &fc, &all_line_bounds(&net)).unwrap();
        let s = m.solve().unwrap();
        assert!((s.x[0] - 90.0).abs() < 1e-6, "{:?}", s.x);
        assert!((s.x[1] - 60.0).abs() < 1e-6);
        assert!((s.objective - 2100.0).abs() < 1e-6);
    }

    #[test]
    fn limit_sixty_everywhere_is_infeasible() {
        let (net, ptdf, fc) = triangle_load([60.0; 3], 150.0);
        let m = build_deterministic_uc(&net, &ptdf, &fc, &all_line_bounds(&net)).unwrap();
        assert_eq!(m.solve().unwrap().status, MilpStatus::Infeasible);
    }

    #[test]
    fn dropping_flow_rows_relaxes() {
        let (net, ptdf, fc) = triangle_load([1000.0, 1000.0, 80.0], 150.0);
        let full = build_deterministic_uc(&net, &ptdf, &fc, &all_line_bounds(&net)).unwrap();
        let none = build_deterministic_uc(&net, &ptdf, &fc, &[]).unwrap();
        assert_eq!(none.n_flow_rows(), 0);
        assert!(none.solve().unwrap().objective <= full.solve().unwrap().objective + 1e-9);
    }

    #[test]
    fn chance_model_at_median_matches_deterministic() {
        let (net, ptdf, fc) = triangle_load([1000.0, 1000.0, 80.0], 150.0);
        let keep = all_line_bounds(&net);
        let g = GaussianUncertainty::new(&net, vec![1.0; 3], 0.5, 0.5).unwrap();
        let cc = build_cc_uc(&net, &ptdf, &fc, &g, &keep).unwrap().solve().unwrap();
        let det = build_deterministic_uc(&net, &ptdf, &fc, &keep).unwrap().solve().unwrap();
        assert!((cc.objective - det.objective).abs() < 1e-6);
    }

    #[test]
    fn chance_model_reports_negative_limits() {
        let (net, ptdf, fc) = triangle_load([1000.0, 1000.0, 1.0], 150.0);
        let g = GaussianUncertainty::new(&net, vec![100.0; 3], 0.05, 0.05).unwrap();
        let err = build_cc_uc(&net, &ptdf, &fc, &g, &all_line_bounds(&net)).unwrap_err();
        assert_eq!(err, UcError::NegativeTightenedLimit(vec![2]));
    }

    #[test]
    fn robust_without_uncertain_buses_equals_deterministic() {
        let (net, ptdf, fc) = triangle_load([1000.0, 1000.0, 80.0], 150.0);
        let keep = all_line_bounds(&net);
        let unc = BoxUncertainty::certain(3);
        let ro = build_robust_uc(&net, &ptdf, &fc, &unc, &keep, 12).unwrap();
        assert_eq!(ro.layout.scenarios.len(), 1);
        let det = build_deterministic_uc(&net, &ptdf, &fc, &keep).unwrap();
        let (a, b) = (ro.solve().unwrap(), det.solve().unwrap());
        assert!((a.objective - b.objective).abs() < 1e-6);
    }

    #[test]
    fn robust_cost_dominates() {
        let (net, ptdf, fc) = triangle_load([1000.0, 1000.0, 80.0], 150.0);
        let keep = all_line_bounds(&net);
        let unc = BoxUncertainty::uniform(&net, &[3], 0.9, 1.1).unwrap();
        let ro = build_robust_uc(&net, &ptdf, &fc, &unc, &keep, 12).unwrap().solve().unwrap();
        let det = build_deterministic_uc(&net, &ptdf, &fc, &keep).unwrap().solve().unwrap();
        assert!(ro.is_optimal());
        assert!(ro.objective >= det.objective - 1e-6);
    }

    #[test]
    fn dispatch_flow_helper() {
        let (net, ptdf, fc) = triangle_load([1000.0; 3], 150.0);
        let f = dispatch_flows(&net, &ptdf, &[150.0, 0.0, 0.0], fc.values());
        assert!((f[2] - 100.0).abs() < 1e-9 && (f[0] - 50.0).abs() < 1e-9);
    }
}
