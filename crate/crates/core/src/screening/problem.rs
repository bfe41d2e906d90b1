//! Screening LP construction.
//!
//! Relaxing the commitment binaries to `[0, 1]` lets them (and the reserves of
//! the chance-constrained model) be projected out: each unit contributes an
//! output interval, and units on the same bus add up to one bus injection
//! variable. What remains is a small LP in bus injections (plus realized
//! demand on uncertain buses for the robust variants).

use crate::case_io::{Forecast, Network, PtdfMatrix};
use crate::lp::{LpProblem, Relation, Sense};
use crate::uc_models::{
    bus_participation, participation_factors, tightened_limits, BoxUncertainty, Direction,
    GaussianUncertainty, LineBound,
};

use super::{ScreeningError, ScreeningMethod};

/// Output interval of a unit once `u` (and the reserve) is relaxed away.
fn unit_interval(pmin: f64, pmax: f64, reserve: f64) -> Option<(f64, f64)> {
    if reserve <= 0.0 {
        return Some((pmin.min(0.0), pmax.max(0.0)));
    }
    // need (pmax - pmin) u >= 2 r with u <= 1
    let span = pmax - pmin;
    if span <= 0.0 || 2.0 * reserve > span * (1.0 + 1e-12) {
        return None;
    }
    let u0 = (2.0 * reserve / span).min(1.0);
    Some((reserve + (pmin * u0).min(pmin), (pmax * u0).max(pmax) - reserve))
}

/// Forecast-independent data shared by every screening LP of one method.
#[derive(Debug, Clone)]
pub(crate) struct Prepared {
    /// Injection interval per bus, `None` when the bus has no generation.
    pub bus_range: Vec<Option<(f64, f64)>>,
    /// Limit each line is screened against; infinite for unlimited lines.
    pub threshold: Vec<f64>,
    /// Lines whose tightened limit is negative.
    pub infeasible_lines: Vec<usize>,
    /// Per-bus participation, used with recourse.
    pub alpha_bus: Vec<f64>,
}

impl Prepared {
    pub fn new(net: &Network, ptdf: &PtdfMatrix, method: &ScreeningMethod) -> Result<Self, ScreeningError> {
        let n = net.n_buses();
        let reserve: Vec<f64> = match method {
            ScreeningMethod::ChanceConstrained(g) => g.reserve_floor(),
            _ => vec![0.0; net.n_generators()],
        };
        let mut bus_range: Vec<Option<(f64, f64)>> = vec![None; n];
        for ((g, k), r) in net
            .generators
            .iter()
            .zip(net.generator_bus_indices())
            .zip(&reserve)
        {
            let (lo, hi) = unit_interval(g.pmin, g.pmax, *r).ok_or(ScreeningError::ReserveUnattainable {
                bus: g.bus,
                reserve: *r,
            })?;
            if lo == 0.0 && hi == 0.0 {
                continue;
            }
            let entry = bus_range[k].get_or_insert((0.0, 0.0));
            entry.0 += lo;
            entry.1 += hi;
        }
        let threshold: Vec<f64> = match method {
            ScreeningMethod::ChanceConstrained(g) => tightened_limits(net, ptdf, g),
            _ => net.branches.iter().map(|b| b.limit.value()).collect(),
        };
        let infeasible_lines = threshold
            .iter()
            .enumerate()
            .filter(|(_, t)| **t < 0.0)
            .map(|(j, _)| j)
            .collect();
        let alpha_bus = match method {
            ScreeningMethod::Robust { with_recourse: true, .. } => {
                let alpha = participation_factors(net);
                if alpha.iter().sum::<f64>() == 0.0 {
                    return Err(ScreeningError::NoParticipation);
                }
                bus_participation(net, &alpha)
            }
            _ => vec![0.0; n],
        };
        Ok(Prepared {
            bus_range,
            threshold,
            infeasible_lines,
            alpha_bus,
        })
    }
}

/// Screening LP for one bound: optimize the flow on `target.line` (maximize for
/// the upper bound, minimize for the lower) under every other line's limits.
pub(crate) fn screening_lp(
    net: &Network,
    ptdf: &PtdfMatrix,
    prep: &Prepared,
    method: &ScreeningMethod,
    fc: &Forecast,
    target: LineBound,
) -> LpProblem {
    let n = net.n_buses();
    let sense = match target.dir {
        Direction::Upper => Sense::Maximize,
        Direction::Lower => Sense::Minimize,
    };
    let mut lp = LpProblem::new(sense);
    let ell = fc.values();
    let (uncertain, demand_bounds): (Vec<usize>, Option<(Vec<f64>, Vec<f64>)>) = match method {
        ScreeningMethod::Robust { unc, .. } => (unc.uncertain.clone(), Some(realized_bounds(unc, fc))),
        _ => (Vec::new(), None),
    };
    let recourse = matches!(method, ScreeningMethod::Robust { with_recourse: true, .. });

    // injection variables
    let mut inj: Vec<Option<usize>> = vec![None; n];
    for (k, range) in prep.bus_range.iter().enumerate() {
        if let Some((lo, hi)) = range {
            let takes_part = recourse && prep.alpha_bus[k] > 0.0;
            inj[k] = Some(if takes_part {
                lp.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0)
            } else {
                lp.add_var(*lo, *hi, 0.0)
            });
        }
    }
    // realized demand on uncertain buses
    let mut dem: Vec<Option<usize>> = vec![None; n];
    for &b in &uncertain {
        dem[b] = Some(lp.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0));
    }
    let is_uncertain = |b: usize| dem[b].is_some();
    let certain_total: f64 = (0..n).filter(|&b| !is_uncertain(b)).map(|b| ell[b]).sum();
    let uncertain_forecast: f64 = uncertain.iter().map(|&b| ell[b]).sum();

    if let Some((lo, hi)) = &demand_bounds {
        for &b in &uncertain {
            let d = dem[b].unwrap();
            lp.add_row(&[(d, 1.0)], Relation::Ge, lo[b]);
            lp.add_row(&[(d, 1.0)], Relation::Le, hi[b]);
        }
    }

    // flow on line j as a linear expression plus constant
    let flow_expr = |j: usize| -> (Vec<(usize, f64)>, f64) {
        let a = ptdf.row(j);
        let mut terms = Vec::new();
        let mut constant = 0.0;
        let mut shift_coeff = 0.0;
        for b in 0..n {
            if let Some(v) = inj[b] {
                terms.push((v, a[b]));
            }
            if recourse {
                shift_coeff += a[b] * prep.alpha_bus[b];
            }
            match dem[b] {
                Some(d) => terms.push((d, -a[b])),
                None => constant -= a[b] * ell[b],
            }
        }
        if recourse && shift_coeff != 0.0 {
            // + abar * (sum d - sum forecast on uncertain buses)
            for &b in &uncertain {
                terms.push((dem[b].unwrap(), shift_coeff));
            }
            constant -= shift_coeff * uncertain_forecast;
        }
        (terms, constant)
    };

    // realized output of participating buses stays within range
    if recourse {
        for (k, range) in prep.bus_range.iter().enumerate() {
            let (Some((lo, hi)), Some(v)) = (range, inj[k]) else { continue };
            let al = prep.alpha_bus[k];
            if al <= 0.0 {
                continue;
            }
            let mut terms = vec![(v, 1.0)];
            for &b in &uncertain {
                terms.push((dem[b].unwrap(), al));
            }
            lp.add_row(&terms, Relation::Ge, lo + al * uncertain_forecast);
            lp.add_row(&terms, Relation::Le, hi + al * uncertain_forecast);
        }
    }

    // balance
    let mut bal: Vec<(usize, f64)> = inj.iter().flatten().map(|&v| (v, 1.0)).collect();
    if recourse {
        lp.add_row(&bal, Relation::Eq, fc.total());
    } else {
        for &b in &uncertain {
            bal.push((dem[b].unwrap(), -1.0));
        }
        lp.add_row(&bal, Relation::Eq, certain_total);
    }

    for k in 0..net.n_lines() {
        let thr = prep.threshold[k];
        if k == target.line || !thr.is_finite() || thr < 0.0 {
            continue;
        }
        let (terms, constant) = flow_expr(k);
        lp.add_row(&terms, Relation::Le, thr - constant);
        lp.add_row(&terms, Relation::Ge, -thr - constant);
    }

    let (terms, constant) = flow_expr(target.line);
    for (v, a) in terms {
        lp.objective[v] += a;
    }
    lp.objective_offset = constant;
    lp
}

fn realized_bounds(unc: &BoxUncertainty, fc: &Forecast) -> (Vec<f64>, Vec<f64>) {
    unc.demand_bounds(fc)
}

/// The same screening LP written literally over `u`, `x` (and `r`) per unit;
/// used to check the projection.
pub fn literal_screening_lp(
    net: &Network,
    ptdf: &PtdfMatrix,
    fc: &Forecast,
    cc: Option<&GaussianUncertainty>,
    target: LineBound,
) -> LpProblem {
    let sense = match target.dir {
        Direction::Upper => Sense::Maximize,
        Direction::Lower => Sense::Minimize,
    };
    let mut lp = LpProblem::new(sense);
    let floor = cc.map(|g| g.reserve_floor());
    let threshold: Vec<f64> = match cc {
        Some(g) => tightened_limits(net, ptdf, g),
        None => net.branches.iter().map(|b| b.limit.value()).collect(),
    };
    let gen_bus = net.generator_bus_indices();
    let mut xs = Vec::new();
    for (g, gen) in net.generators.iter().enumerate() {
        let u = lp.add_var(0.0, 1.0, 0.0);
        let x = lp.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0);
        let r = floor.as_ref().map(|f| lp.add_var(f[g], f64::INFINITY, 0.0));
        let mut up = vec![(x, 1.0), (u, -gen.pmax)];
        let mut dn = vec![(x, 1.0), (u, -gen.pmin)];
        if let Some(r) = r {
            up.push((r, 1.0));
            dn.push((r, -1.0));
        }
        lp.add_row(&up, Relation::Le, 0.0);
        lp.add_row(&dn, Relation::Ge, 0.0);
        xs.push(x);
    }
    let bal: Vec<(usize, f64)> = xs.iter().map(|&x| (x, 1.0)).collect();
    lp.add_row(&bal, Relation::Eq, fc.total());
    let flow = |j: usize| -> (Vec<(usize, f64)>, f64) {
        let terms = xs.iter().zip(&gen_bus).map(|(&x, &k)| (x, ptdf.get(j, k))).collect();
        let c = -ptdf.row(j).iter().zip(fc.values()).map(|(a, l)| a * l).sum::<f64>();
        (terms, c)
    };
    for k in 0..net.n_lines() {
        if k == target.line || !threshold[k].is_finite() {
            continue;
        }
        let (terms, c) = flow(k);
        lp.add_row(&terms, Relation::Le, threshold[k] - c);
        lp.add_row(&terms, Relation::Ge, -threshold[k] - c);
    }
    let (terms, c) = flow(target.line);
    for (v, a) in terms {
        lp.objective[v] += a;
    }
    lp.objective_offset = c;
    lp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intervals_without_reserve() {
        assert_eq!(unit_interval(20.0, 100.0, 0.0), Some((0.0, 100.0)));
    }

    #[test]
    fn intervals_with_reserve() {
        // u >= 0.1, x in [5, 95]
        assert_eq!(unit_interval(0.0, 100.0, 5.0), Some((5.0, 95.0)));
        // pmin 20: u0 = 10 / 80, lower end 5 + 20 u0
        let (lo, hi) = unit_interval(20.0, 100.0, 5.0).unwrap();
        assert!((lo - 7.5).abs() < 1e-12 && (hi - 95.0).abs() < 1e-12);
        assert_eq!(unit_interval(0.0, 10.0, 6.0), None);
    }
}
