//! Angle-based UC and screening for systems split into areas.
//!
//! Flows are written through bus voltage angles, `L = (delta_from - delta_to) / x`,
//! so every constraint touches only the buses of one line and the model splits
//! by area. An area screening LP keeps only its own buses, units and internal
//! lines. Tie-lines enter as flow variables at their boundary buses, bounded by
//! the tie limits: projecting any whole-system point onto the area's variables
//! then satisfies the area LP, which is what makes area screening a
//! relaxation of whole-system screening.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::case_io::{BusId, Forecast, Network};
use crate::lp::{solve_lp_with, LpProblem, LpStatus, Relation, Sense, SimplexOptions};
use crate::milp::{MilpError, MilpProblem, MilpStatus};
use crate::mplp::{policy_from_template, AffinePolicy, ExploreOptions, MplpError, ParameterSet, PolicySet, SCHEMA_TAG};
use crate::screening::{
    classify_bound, BoundResult, Classification, MethodTag, ScreeningResult, SolveSource,
};
use crate::uc_models::{add_units, check_dims, limited, Direction, LineBound, UcError, UcLayout, UcModel};

#[derive(Debug, Error)]
pub enum AreaError {
    #[error("partition: {0}")]
    Partition(String),
    #[error("bus {0} in the partition is not in the network")]
    UnknownBus(BusId),
    #[error("bus {0} has no area")]
    MissingBus(BusId),
    #[error("area {0} is not connected through its internal lines")]
    DisconnectedArea(usize),
    #[error("line {line} is not internal to area {area}")]
    NotInternal { line: usize, area: usize },
    #[error("area {0} does not exist")]
    NoSuchArea(usize),
    #[error("screening LP for {bound} is infeasible")]
    Infeasible { bound: LineBound },
    #[error("screening LP for {bound} did not finish")]
    Stalled { bound: LineBound },
    #[error(transparent)]
    Uc(#[from] UcError),
    #[error(transparent)]
    Milp(#[from] MilpError),
    #[error(transparent)]
    Mplp(#[from] MplpError),
}

/// Assignment of every bus to one area, with derived internal and tie lines.
#[derive(Debug, Clone, PartialEq)]
pub struct AreaPartition {
    /// Area label per bus index, as given by the user.
    pub labels: Vec<usize>,
    /// Sorted distinct labels; `area` arguments index into this list.
    pub areas: Vec<usize>,
    /// Area position per bus index.
    pub area_of: Vec<usize>,
    pub internal: Vec<Vec<usize>>,
    pub ties: Vec<usize>,
}

#[derive(Deserialize)]
struct PartitionFile {
    areas: BTreeMap<String, usize>,
}

impl AreaPartition {
    pub fn new(net: &Network, assignment: &[(BusId, usize)]) -> Result<Self, AreaError> {
        let n = net.n_buses();
        let mut labels: Vec<Option<usize>> = vec![None; n];
        for &(bus, area) in assignment {
            let k = net.bus_index(bus).ok_or(AreaError::UnknownBus(bus))?;
            if labels[k].is_some_and(|a| a != area) {
                return Err(AreaError::Partition(format!("bus {bus} is assigned twice")));
            }
            labels[k] = Some(area);
        }
        let labels: Vec<usize> = labels
            .iter()
            .enumerate()
            .map(|(k, l)| l.ok_or(AreaError::MissingBus(net.buses[k])))
            .collect::<Result<_, _>>()?;
        let areas: Vec<usize> = labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        let area_of: Vec<usize> = labels.iter().map(|l| areas.binary_search(l).unwrap()).collect();
        let mut internal = vec![Vec::new(); areas.len()];
        let mut ties = Vec::new();
        for (j, (f, t)) in net.branch_endpoints().into_iter().enumerate() {
            if area_of[f] == area_of[t] {
                internal[area_of[f]].push(j);
            } else {
                ties.push(j);
            }
        }
        let part = AreaPartition {
            labels,
            areas,
            area_of,
            internal,
            ties,
        };
        for g in 0..part.n_areas() {
            if !part.area_connected(net, g) {
                return Err(AreaError::DisconnectedArea(part.areas[g]));
            }
        }
        Ok(part)
    }

    /// Whole network as one area.
    pub fn single(net: &Network) -> Self {
        let assignment: Vec<(BusId, usize)> = net.buses.iter().map(|b| (*b, 1)).collect();
        AreaPartition::new(net, &assignment).expect("a connected network is one valid area")
    }

    /// Parses `{"areas": {"<bus_id>": <area>, ...}}`.
    pub fn from_json(net: &Network, text: &str) -> Result<Self, AreaError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: PartitionFile =
            serde_path_to_error::deserialize(de).map_err(|e| AreaError::Partition(e.to_string()))?;
        let mut assignment = Vec::with_capacity(file.areas.len());
        for (bus, area) in file.areas {
            let id: BusId = bus
                .trim()
                .parse()
                .map_err(|_| AreaError::Partition(format!("bus id {bus:?} is not an integer")))?;
            assignment.push((id, area));
        }
        AreaPartition::new(net, &assignment)
    }

    pub fn n_areas(&self) -> usize {
        self.areas.len()
    }

    pub fn buses_in(&self, area: usize) -> Vec<usize> {
        (0..self.area_of.len()).filter(|&k| self.area_of[k] == area).collect()
    }

    /// Area whose internal lines contain `line`, `None` for a tie-line.
    pub fn area_of_line(&self, line: usize) -> Option<usize> {
        self.internal.iter().position(|ls| ls.contains(&line))
    }

    fn area_connected(&self, net: &Network, g: usize) -> bool {
        let buses = self.buses_in(g);
        let ends = net.branch_endpoints();
        let mut seen = BTreeSet::from([buses[0]]);
        let mut stack = vec![buses[0]];
        while let Some(b) = stack.pop() {
            for &j in &self.internal[g] {
                let (f, t) = ends[j];
                let other = if f == b {
                    t
                } else if t == b {
                    f
                } else {
                    continue;
                };
                if seen.insert(other) {
                    stack.push(other);
                }
            }
        }
        seen.len() == buses.len()
    }
}

/// How tie-lines appear in an area screening LP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieLines {
    /// Flow variables at the boundary buses, bounded by the tie limits.
    #[default]
    Bounded,
    /// Left out of the boundary balance entirely (the area runs islanded).
    Omitted,
}

/// Variables of an angle formulation over a subset of buses.
struct AngleVars {
    u: Vec<usize>,
    x: Vec<usize>,
    binaries: Vec<usize>,
    delta: Vec<Option<usize>>,
    balance_rows: Vec<usize>,
}

/// Units, angles, optional tie flows and nodal balance for the buses in
/// `scope`. Lines with both ends in scope are modeled through angles.
fn angle_core(
    lp: &mut LpProblem,
    net: &Network,
    fc: &Forecast,
    scope: &[bool],
    ties: &[usize],
    unit_cost: bool,
) -> AngleVars {
    let n = net.n_buses();
    let gen_bus = net.generator_bus_indices();
    // units outside scope are pinned to zero and carry no cost
    let (u, x, binaries) = add_units(lp, net);
    for (g, gen) in net.generators.iter().enumerate() {
        if !scope[gen_bus[g]] {
            lp.lower[u[g]] = 0.0;
            lp.upper[u[g]] = 0.0;
            lp.lower[x[g]] = 0.0;
            lp.upper[x[g]] = 0.0;
            lp.objective[x[g]] = 0.0;
            continue;
        }
        if !unit_cost {
            lp.objective[x[g]] = 0.0;
        }
        lp.add_row(&[(x[g], 1.0), (u[g], -gen.pmax)], Relation::Le, 0.0);
        lp.add_row(&[(x[g], 1.0), (u[g], -gen.pmin)], Relation::Ge, 0.0);
    }
    let binaries: Vec<usize> = binaries
        .into_iter()
        .filter(|&b| u.iter().position(|&v| v == b).is_some_and(|g| scope[gen_bus[g]]))
        .collect();
    let reference = net.reference_index();
    let delta: Vec<Option<usize>> = (0..n)
        .map(|k| {
            scope[k].then(|| {
                if k == reference {
                    lp.add_var(0.0, 0.0, 0.0)
                } else {
                    lp.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0)
                }
            })
        })
        .collect();
    let ends = net.branch_endpoints();
    let tie_vars: Vec<(usize, usize)> = ties
        .iter()
        .map(|&j| {
            let lim = net.branches[j].limit.value();
            (j, lp.add_var(-lim, lim, 0.0))
        })
        .collect();
    let mut balance: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (g, &k) in gen_bus.iter().enumerate() {
        if scope[k] {
            balance[k].push((x[g], 1.0));
        }
    }
    // generation - load = net outflow
    for (j, &(f, t)) in ends.iter().enumerate() {
        let (Some(df), Some(dt)) = (delta[f], delta[t]) else { continue };
        let y = 1.0 / net.branches[j].x;
        balance[f].extend([(df, -y), (dt, y)]);
        balance[t].extend([(df, y), (dt, -y)]);
    }
    for &(j, v) in &tie_vars {
        let (f, t) = ends[j];
        if scope[f] {
            balance[f].push((v, -1.0));
        }
        if scope[t] {
            balance[t].push((v, 1.0));
        }
    }
    let balance_rows = (0..n)
        .filter(|&k| scope[k])
        .map(|k| lp.add_row(&balance[k], Relation::Eq, fc.values()[k]))
        .collect();
    AngleVars {
        u,
        x,
        binaries,
        delta,
        balance_rows,
    }
}

fn flow_terms(net: &Network, delta: &[Option<usize>], line: usize) -> Vec<(usize, f64)> {
    let (f, t) = net.branch_endpoints()[line];
    let y = 1.0 / net.branches[line].x;
    vec![(delta[f].unwrap(), y), (delta[t].unwrap(), -y)]
}

/// Angle-form UC: the MILP with kept flow bounds, plus the angle variables.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleUc {
    pub model: UcModel,
    pub angles: Vec<usize>,
}

/// Angle-form deterministic UC over the whole network with the `keep` bounds.
pub fn build_angle_uc(
    net: &Network,
    fc: &Forecast,
    part: &AreaPartition,
    keep: &[LineBound],
) -> Result<AngleUc, AreaError> {
    check_dims(net, fc, keep)?;
    if part.area_of.len() != net.n_buses() {
        return Err(AreaError::Partition("partition is for another network".into()));
    }
    let mut lp = LpProblem::minimize();
    let scope = vec![true; net.n_buses()];
    let v = angle_core(&mut lp, net, fc, &scope, &[], true);
    let mut flow_rows = Vec::new();
    for b in limited(net, keep) {
        let terms = flow_terms(net, &v.delta, b.line);
        let lim = net.branches[b.line].limit.value();
        let row = match b.dir {
            Direction::Upper => lp.add_row(&terms, Relation::Le, lim),
            Direction::Lower => lp.add_row(&terms, Relation::Ge, -lim),
        };
        flow_rows.push((b, vec![row]));
    }
    let reference_row = v.balance_rows[net.reference_index()];
    Ok(AngleUc {
        model: UcModel {
            milp: MilpProblem::new(lp, v.binaries)?,
            layout: UcLayout {
                u: v.u,
                x: v.x,
                r: None,
                epigraph: None,
                flow_rows,
                balance_row: reference_row,
                scenarios: vec![fc.clone()],
            },
        },
        angles: v.delta.into_iter().map(|d| d.unwrap()).collect(),
    })
}

fn screening_sense(dir: Direction) -> Sense {
    match dir {
        Direction::Upper => Sense::Maximize,
        Direction::Lower => Sense::Minimize,
    }
}

/// Whole-system angle screening LP for `target` with `u` relaxed.
pub fn whole_angle_lp(net: &Network, fc: &Forecast, target: LineBound) -> LpProblem {
    let mut lp = LpProblem::new(screening_sense(target.dir));
    let scope = vec![true; net.n_buses()];
    let v = angle_core(&mut lp, net, fc, &scope, &[], false);
    for j in 0..net.n_lines() {
        if j == target.line {
            continue;
        }
        if let Some(lim) = net.branches[j].limit.finite() {
            let terms = flow_terms(net, &v.delta, j);
            lp.add_row(&terms, Relation::Le, lim);
            lp.add_row(&terms, Relation::Ge, -lim);
        }
    }
    for (var, c) in flow_terms(net, &v.delta, target.line) {
        lp.objective[var] += c;
    }
    lp
}

/// Area-`g` screening LP for an internal line of that area.
pub fn area_lp(
    net: &Network,
    fc: &Forecast,
    part: &AreaPartition,
    area: usize,
    target: LineBound,
    ties: TieLines,
) -> Result<LpProblem, AreaError> {
    if area >= part.n_areas() {
        return Err(AreaError::NoSuchArea(area));
    }
    if !part.internal[area].contains(&target.line) {
        return Err(AreaError::NotInternal {
            line: target.line,
            area: part.areas[area],
        });
    }
    let ends = net.branch_endpoints();
    let scope: Vec<bool> = part.area_of.iter().map(|&a| a == area).collect();
    let tie_lines: Vec<usize> = match ties {
        TieLines::Bounded => part
            .ties
            .iter()
            .copied()
            .filter(|&j| scope[ends[j].0] || scope[ends[j].1])
            .collect(),
        TieLines::Omitted => Vec::new(),
    };
    let mut lp = LpProblem::new(screening_sense(target.dir));
    let v = angle_core(&mut lp, net, fc, &scope, &tie_lines, false);
    for &j in &part.internal[area] {
        if j == target.line {
            continue;
        }
        if let Some(lim) = net.branches[j].limit.finite() {
            let terms = flow_terms(net, &v.delta, j);
            lp.add_row(&terms, Relation::Le, lim);
            lp.add_row(&terms, Relation::Ge, -lim);
        }
    }
    for (var, c) in flow_terms(net, &v.delta, target.line) {
        lp.objective[var] += c;
    }
    Ok(lp)
}

fn decide(net: &Network, lp: &LpProblem, bound: LineBound, opts: &SimplexOptions) -> Result<BoundResult, AreaError> {
    let limit = net.branches[bound.line].limit;
    if limit.is_unlimited() {
        return Ok(BoundResult {
            bound,
            classification: Classification::Redundant,
            f_star: None,
            margin: f64::INFINITY,
            threshold: f64::INFINITY,
            source: SolveSource::None,
            note: None,
        });
    }
    let sol = solve_lp_with(lp, opts).expect("angle screening LP is well formed");
    match sol.status {
        LpStatus::Optimal => Ok(classify_bound(
            bound,
            sol.objective,
            limit.value(),
            limit.value(),
            1e-6,
            SolveSource::Lp,
        )),
        LpStatus::Infeasible => Err(AreaError::Infeasible { bound }),
        _ => Err(AreaError::Stalled { bound }),
    }
}

/// Classification of one bound by the whole-system angle screening LP.
pub fn screen_whole_angle(net: &Network, fc: &Forecast, bound: LineBound) -> Result<BoundResult, AreaError> {
    decide(net, &whole_angle_lp(net, fc, bound), bound, &SimplexOptions::default())
}

/// Classification of an internal bound of `area` by the area screening LP.
pub fn screen_area(
    net: &Network,
    fc: &Forecast,
    part: &AreaPartition,
    area: usize,
    bound: LineBound,
    ties: TieLines,
) -> Result<BoundResult, AreaError> {
    let lp = area_lp(net, fc, part, area, bound, ties)?;
    decide(net, &lp, bound, &SimplexOptions::default())
}

fn both(j: usize) -> [LineBound; 2] {
    [LineBound::upper(j), LineBound::lower(j)]
}

fn collect(bounds: Vec<BoundResult>, start: Instant) -> ScreeningResult {
    let lp_solves = bounds.iter().filter(|b| b.source == SolveSource::Lp).count();
    ScreeningResult {
        method: MethodTag::Deterministic,
        bounds,
        diagnostics: Vec::new(),
        lp_solves,
        elapsed: start.elapsed(),
    }
}

/// Whole-system angle screening of every bound.
pub fn screen_whole(net: &Network, fc: &Forecast) -> Result<ScreeningResult, AreaError> {
    let start = Instant::now();
    let bounds: Vec<LineBound> = (0..net.n_lines()).flat_map(both).collect();
    let results: Vec<BoundResult> = bounds
        .par_iter()
        .map(|b| screen_whole_angle(net, fc, *b))
        .collect::<Result<_, _>>()?;
    Ok(collect(results, start))
}

/// Internal lines screened by their area LP, tie-lines by the whole LP;
/// results come back in line order.
pub fn union_screen(
    net: &Network,
    fc: &Forecast,
    part: &AreaPartition,
    ties: TieLines,
) -> Result<ScreeningResult, AreaError> {
    if fc.len() != net.n_buses() {
        return Err(UcError::ForecastLength {
            got: fc.len(),
            expected: net.n_buses(),
        }
        .into());
    }
    let start = Instant::now();
    let bounds: Vec<LineBound> = (0..net.n_lines()).flat_map(both).collect();
    let results: Vec<BoundResult> = bounds
        .par_iter()
        .map(|b| match part.area_of_line(b.line) {
            Some(g) => screen_area(net, fc, part, g, *b, ties),
            None => screen_whole_angle(net, fc, *b),
        })
        .collect::<Result<_, _>>()?;
    Ok(collect(results, start))
}

/// Affine policies of every internal bound of `area`, parameterized by the
/// forecast at the varying buses of `ps` (which must lie in the area).
pub fn area_policy(
    net: &Network,
    base: &Forecast,
    part: &AreaPartition,
    area: usize,
    ps: &ParameterSet,
    ties: TieLines,
    opts: &ExploreOptions,
) -> Result<PolicySet, AreaError> {
    if area >= part.n_areas() {
        return Err(AreaError::NoSuchArea(area));
    }
    let varying = ps.indices(net)?;
    if let Some(&k) = varying.iter().find(|&&k| part.area_of[k] != area) {
        return Err(AreaError::Partition(format!(
            "varying bus {} is outside area {}",
            net.buses[k], part.areas[area]
        )));
    }
    let bounds: Vec<LineBound> = part.internal[area]
        .iter()
        .filter(|&&j| !net.branches[j].limit.is_unlimited())
        .flat_map(|&j| both(j))
        .collect();
    let policies: Vec<AffinePolicy> = bounds
        .par_iter()
        .map(|b| -> Result<AffinePolicy, AreaError> {
            let template = |fc: &Forecast| area_lp(net, fc, part, area, *b, ties).expect("bound is internal");
            let mut pol = policy_from_template(&template, base, varying.clone(), ps, opts)?;
            pol.bound = Some(*b);
            pol.method = Some(MethodTag::Deterministic);
            Ok(pol)
        })
        .collect::<Result<_, _>>()?;
    Ok(PolicySet {
        schema: SCHEMA_TAG.to_string(),
        n_buses: net.n_buses(),
        policies,
    })
}

/// Bounds whose flow sits at its limit in an optimal angle-UC solution.
pub fn binding_bounds(net: &Network, model: &AngleUc, x: &[f64], tol: f64) -> Vec<LineBound> {
    let ends = net.branch_endpoints();
    let mut out = Vec::new();
    for (j, br) in net.branches.iter().enumerate() {
        let Some(lim) = br.limit.finite() else { continue };
        let (f, t) = ends[j];
        let flow = (x[model.angles[f]] - x[model.angles[t]]) / br.x;
        if flow >= lim - tol * lim.max(1.0) {
            out.push(LineBound::upper(j));
        }
        if flow <= -lim + tol * lim.max(1.0) {
            out.push(LineBound::lower(j));
        }
    }
    out
}

/// Solves the angle UC and returns its full solution vector.
pub fn solve_angle_uc(model: &AngleUc) -> Result<(MilpStatus, f64, Vec<f64>), AreaError> {
    let s = crate::milp::solve_milp(&model.model.milp)?;
    Ok((s.status, s.objective, s.x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case_io::{compute_ptdf, synthetic};
    use crate::uc_models::{all_line_bounds, build_deterministic_uc};

    #[test]
    fn partition_of_two_triangles() {
        let (net, _) = synthetic::two_triangles();
        let part = AreaPartition::new(&net, &synthetic::two_triangles_areas()).unwrap();
        assert_eq!(part.n_areas(), 2);
        assert_eq!(part.internal, vec![vec![0, 1, 2], vec![3, 4, 5]]);
        assert_eq!(part.ties, vec![6]);
        assert_eq!(part.area_of_line(6), None);
        let json = r#"{"areas": {"1": 1, "2": 1, "3": 1, "4": 2, "5": 2, "6": 2}}"#;
        assert_eq!(AreaPartition::from_json(&net, json).unwrap(), part);
    }

    #[test]
    fn partition_errors() {
        let (net, _) = synthetic::two_triangles();
        let missing = r#"{"areas": {"1": 1, "2": 1, "3": 1, "4": 2, "5": 2}}"#;
        assert!(matches!(AreaPartition::from_json(&net, missing), Err(AreaError::MissingBus(6))));
        let unknown = [(1, 1), (2, 1), (3, 1), (4, 2), (5, 2), (6, 2), (9, 2)];
        assert!(matches!(AreaPartition::new(&net, &unknown), Err(AreaError::UnknownBus(9))));
        // buses 1 and 5 are not adjacent
        let split = [(1, 1), (5, 1), (2, 2), (3, 2), (4, 2), (6, 2)];
        assert!(matches!(AreaPartition::new(&net, &split), Err(AreaError::DisconnectedArea(1))));
    }

    #[test]
    fn triangle_angle_uc_matches_ptdf_uc() {
        let net = synthetic::triangle_with_limits([1000.0, 1000.0, 80.0]);
        let ptdf = compute_ptdf(&net).unwrap();
        let fc = Forecast(vec![0.0, 0.0, 150.0]);
        let part = AreaPartition::single(&net);
        let all = all_line_bounds(&net);
        let angle = build_angle_uc(&net, &fc, &part, &all).unwrap();
        let (status, obj, x) = solve_angle_uc(&angle).unwrap();
        assert_eq!(status, MilpStatus::Optimal);
        let ptdf_uc = build_deterministic_uc(&net, &ptdf, &fc, &all).unwrap().solve().unwrap();
        assert!((obj - ptdf_uc.objective).abs() < 1e-6);
        assert!((obj - 2100.0).abs() < 1e-6);
        assert_eq!(x[angle.angles[net.reference_index()]], 0.0);
    }

    #[test]
    fn two_bus_angle_flow_is_ptdf_flow() {
        let net = synthetic::two_bus(1000.0);
        let ptdf = compute_ptdf(&net).unwrap();
        let n = net.n_buses();
        let fc = Forecast((0..n).map(|k| if k == 1 { 40.0 } else { 0.0 }).collect());
        let angle = build_angle_uc(&net, &fc, &AreaPartition::single(&net), &[]).unwrap();
        let (_, _, x) = solve_angle_uc(&angle).unwrap();
        let (f, t) = net.branch_endpoints()[0];
        let flow = (x[angle.angles[f]] - x[angle.angles[t]]) / net.branches[0].x;
        let gen_bus = net.generator_bus_indices();
        let mut inj: Vec<f64> = fc.values().iter().map(|l| -l).collect();
        for (g, &k) in gen_bus.iter().enumerate() {
            inj[k] += x[angle.model.layout.x[g]];
        }
        assert!((flow - ptdf.flows(&inj)[0]).abs() < 1e-9);
    }

    #[test]
    fn whole_angle_matches_ptdf_screening_on_triangle() {
        for l3 in [80.0, 95.0, 1000.0] {
            let net = synthetic::triangle_with_limits([1000.0, 1000.0, l3]);
            let ptdf = compute_ptdf(&net).unwrap();
            let fc = Forecast(vec![0.0, 0.0, 150.0]);
            let ptdf_sr = crate::screening::screen_deterministic(&net, &ptdf, &fc).unwrap();
            let angle_sr = screen_whole(&net, &fc).unwrap();
            assert_eq!(ptdf_sr.classifications(), angle_sr.classifications());
            for (a, b) in ptdf_sr.bounds.iter().zip(&angle_sr.bounds) {
                assert!((a.f_star.unwrap() - b.f_star.unwrap()).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn single_area_union_is_whole_screening() {
        let (net, fc) = synthetic::two_triangles();
        let part = AreaPartition::single(&net);
        let u = union_screen(&net, &fc, &part, TieLines::Bounded).unwrap();
        let w = screen_whole(&net, &fc).unwrap();
        assert_eq!(u.classifications(), w.classifications());
    }

    #[test]
    fn area_lp_rejects_tie_and_foreign_lines() {
        let (net, fc) = synthetic::two_triangles();
        let part = AreaPartition::new(&net, &synthetic::two_triangles_areas()).unwrap();
        assert!(area_lp(&net, &fc, &part, 0, LineBound::upper(6), TieLines::Bounded).is_err());
        assert!(area_lp(&net, &fc, &part, 0, LineBound::upper(3), TieLines::Bounded).is_err());
        assert!(area_lp(&net, &fc, &part, 0, LineBound::upper(0), TieLines::Bounded).is_ok());
    }
}
