//! Parametric screening LPs.
//!
//! A screening LP depends on the forecast only through its right-hand side
//! and objective constant. Restricting the forecast to a few varying buses
//! inside a polyhedron turns the LP into a multi-parametric LP whose optimal
//! value is piecewise affine over critical regions. Once the regions are
//! enumerated, screening a new forecast is a point location plus a dot product.

mod explore;
mod hybrid;
mod parametric;
mod poly;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::case_io::{BusId, Forecast, Network};
use crate::lp::{ActiveConstraint, LpError};
use crate::screening::{MethodTag, ScreeningError};
use crate::uc_models::LineBound;

pub use explore::{enumerate_regions, ExploreOptions};
pub use hybrid::{build_policies, build_policy, hybrid_screen, policy_from_template, PolicySet, SCHEMA_TAG};
pub use parametric::{build_parametric, ParametricLp};

/// Point-location tolerance on normalized region rows.
pub const COVERAGE_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum MplpError {
    #[error("bus {0} is not in the network")]
    UnknownBus(BusId),
    #[error("varying bus index {0} is out of range")]
    BadIndex(usize),
    #[error("bus {0} is listed twice as varying")]
    DuplicateBus(BusId),
    #[error("parameter set: {0}")]
    ParameterSet(String),
    #[error("parameter set is empty")]
    EmptySet,
    #[error("parameter set has no interior")]
    FlatSet,
    #[error("parameter set is unbounded along coordinate {0}")]
    UnboundedSet(usize),
    #[error("screening LP changes structure with the forecast: {0}")]
    NotRhsParametric(String),
    #[error("screening LP is not affine in the forecast (deviation {0:e})")]
    NotAffine(f64),
    #[error("policy set does not match the screener: {0}")]
    Mismatch(String),
    #[error("policy store: {0}")]
    Store(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Screening(#[from] ScreeningError),
}

/// Polyhedron `{theta : H theta <= h}` over the forecast at `varying` buses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParameterSetFile", into = "ParameterSetFile")]
pub struct ParameterSet {
    pub varying: Vec<BusId>,
    pub h_mat: Vec<Vec<f64>>,
    pub h: Vec<f64>,
}

/// On-disk form: either `H`/`h` or a `lower`/`upper` box.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParameterSetFile {
    Polyhedron {
        varying_buses: Vec<BusId>,
        #[serde(rename = "H")]
        h_mat: Vec<Vec<f64>>,
        h: Vec<f64>,
    },
    Box {
        varying_buses: Vec<BusId>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
}

impl TryFrom<ParameterSetFile> for ParameterSet {
    type Error = MplpError;

    fn try_from(f: ParameterSetFile) -> Result<Self, MplpError> {
        match f {
            ParameterSetFile::Polyhedron { varying_buses, h_mat, h } => ParameterSet::new(varying_buses, h_mat, h),
            ParameterSetFile::Box {
                varying_buses,
                lower,
                upper,
            } => ParameterSet::boxed(varying_buses, &lower, &upper),
        }
    }
}

impl From<ParameterSet> for ParameterSetFile {
    fn from(ps: ParameterSet) -> Self {
        ParameterSetFile::Polyhedron {
            varying_buses: ps.varying,
            h_mat: ps.h_mat,
            h: ps.h,
        }
    }
}

impl ParameterSet {
    pub fn new(varying: Vec<BusId>, h_mat: Vec<Vec<f64>>, h: Vec<f64>) -> Result<Self, MplpError> {
        let p = varying.len();
        if h_mat.len() != h.len() {
            return Err(MplpError::ParameterSet(format!(
                "H has {} rows but h has {} entries",
                h_mat.len(),
                h.len()
            )));
        }
        for (i, row) in h_mat.iter().enumerate() {
            if row.len() != p {
                return Err(MplpError::ParameterSet(format!(
                    "row {i} of H has {} entries, expected {p}",
                    row.len()
                )));
            }
            if row.iter().chain(std::iter::once(&h[i])).any(|v| !v.is_finite()) {
                return Err(MplpError::ParameterSet(format!("row {i} is not finite")));
            }
        }
        for (i, b) in varying.iter().enumerate() {
            if varying[..i].contains(b) {
                return Err(MplpError::DuplicateBus(*b));
            }
        }
        Ok(ParameterSet { varying, h_mat, h })
    }

    /// Axis-aligned box `lower <= theta <= upper`.
    pub fn boxed(varying: Vec<BusId>, lower: &[f64], upper: &[f64]) -> Result<Self, MplpError> {
        let p = varying.len();
        if lower.len() != p || upper.len() != p {
            return Err(MplpError::ParameterSet(format!(
                "box bounds need {p} entries, got {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        let mut h_mat = Vec::with_capacity(2 * p);
        let mut h = Vec::with_capacity(2 * p);
        for k in 0..p {
            let mut row = vec![0.0; p];
            row[k] = 1.0;
            h_mat.push(row.clone());
            h.push(upper[k]);
            row[k] = -1.0;
            h_mat.push(row);
            h.push(-lower[k]);
        }
        ParameterSet::new(varying, h_mat, h)
    }

    /// Box `[lo * l_hat, hi * l_hat]` around the forecast at `varying`.
    pub fn around(net: &Network, fc: &Forecast, varying: Vec<BusId>, lo: f64, hi: f64) -> Result<Self, MplpError> {
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for b in &varying {
            let k = net.bus_index(*b).ok_or(MplpError::UnknownBus(*b))?;
            let (a, c) = (lo * fc.values()[k], hi * fc.values()[k]);
            lower.push(a.min(c));
            upper.push(a.max(c));
        }
        ParameterSet::boxed(varying, &lower, &upper)
    }

    pub fn dim(&self) -> usize {
        self.varying.len()
    }

    /// Bus indices of the varying buses.
    pub fn indices(&self, net: &Network) -> Result<Vec<usize>, MplpError> {
        self.varying
            .iter()
            .map(|b| net.bus_index(*b).ok_or(MplpError::UnknownBus(*b)))
            .collect()
    }

    pub fn contains(&self, theta: &[f64], tol: f64) -> bool {
        self.h_mat
            .iter()
            .zip(&self.h)
            .all(|(row, b)| dot(row, theta) <= b + tol * b.abs().max(1.0))
    }
}

/// Optimal-value law on one critical region: `f* = a_hat . theta + b_hat`
/// for `theta` with `G theta <= g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalRegion {
    #[serde(rename = "G")]
    pub g_mat: Vec<Vec<f64>>,
    pub g: Vec<f64>,
    pub a_hat: Vec<f64>,
    pub b_hat: f64,
    /// Active constraints of the LP solved at the seed point.
    pub active_set: Vec<ActiveConstraint>,
    /// Chebyshev center and radius.
    pub center: Vec<f64>,
    pub radius: f64,
}

impl CriticalRegion {
    pub fn contains(&self, theta: &[f64], tol: f64) -> bool {
        self.g_mat
            .iter()
            .zip(&self.g)
            .all(|(row, b)| dot(row, theta) <= b + tol * b.abs().max(1.0))
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        dot(&self.a_hat, theta) + self.b_hat
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyStatus {
    Complete,
    /// Region cap reached; the regions found are valid but coverage is partial.
    Overflow,
}

/// Piecewise-affine optimal value of one screening bound over a parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinePolicy {
    pub bound: Option<LineBound>,
    pub method: Option<MethodTag>,
    pub varying_buses: Vec<BusId>,
    /// Bus indices matching `varying_buses`.
    pub varying_index: Vec<usize>,
    pub ps: ParameterSet,
    /// Forecast the non-varying buses are fixed at.
    pub base_forecast: Vec<f64>,
    pub regions: Vec<CriticalRegion>,
    pub status: PolicyStatus,
    /// Seed points left uncovered after repeated degenerate solves.
    pub uncovered: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyValue {
    Covered { value: f64, region: usize },
    NotCovered,
}

impl PolicyValue {
    pub fn value(self) -> Option<f64> {
        match self {
            PolicyValue::Covered { value, .. } => Some(value),
            PolicyValue::NotCovered => None,
        }
    }
}

impl AffinePolicy {
    /// Parameter vector of a full forecast, or `None` when a fixed bus differs
    /// from the base forecast.
    pub fn theta_of(&self, fc: &[f64]) -> Option<Vec<f64>> {
        if fc.len() != self.base_forecast.len() {
            return None;
        }
        for (k, (a, b)) in fc.iter().zip(&self.base_forecast).enumerate() {
            if !self.varying_index.contains(&k) && (a - b).abs() > 1e-9 * b.abs().max(1.0) {
                return None;
            }
        }
        Some(self.varying_index.iter().map(|&k| fc[k]).collect())
    }

    /// Value at a parameter vector; the first region containing it wins.
    pub fn evaluate_theta(&self, theta: &[f64]) -> PolicyValue {
        if theta.len() != self.varying_index.len() || !self.ps.contains(theta, COVERAGE_TOL) {
            return PolicyValue::NotCovered;
        }
        for (i, r) in self.regions.iter().enumerate() {
            if r.contains(theta, COVERAGE_TOL) {
                return PolicyValue::Covered {
                    value: r.value(theta),
                    region: i,
                };
            }
        }
        PolicyValue::NotCovered
    }

    /// Number of regions containing `theta`.
    pub fn covering_regions(&self, theta: &[f64], tol: f64) -> usize {
        self.regions.iter().filter(|r| r.contains(theta, tol)).count()
    }
}

/// Evaluates a policy at a full forecast vector.
pub fn evaluate_policy(pol: &AffinePolicy, fc: &Forecast) -> PolicyValue {
    match pol.theta_of(fc.values()) {
        Some(theta) => pol.evaluate_theta(&theta),
        None => PolicyValue::NotCovered,
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{solve_lp, LpProblem, Relation};

    fn tent(fc: &Forecast) -> LpProblem {
        let t = fc.values()[0];
        let mut lp = LpProblem::maximize();
        let f = lp.add_var(f64::NEG_INFINITY, f64::INFINITY, 1.0);
        lp.add_row(&[(f, 1.0)], Relation::Le, t);
        lp.add_row(&[(f, 1.0)], Relation::Le, 2.0 - t);
        lp
    }

    fn policy_for(template: &dyn Fn(&Forecast) -> LpProblem, base: &Forecast, ps: &ParameterSet, idx: Vec<usize>) -> AffinePolicy {
        let plp = build_parametric(template, base, &idx).unwrap();
        let ex = enumerate_regions(&plp, ps, &ExploreOptions::default()).unwrap();
        AffinePolicy {
            bound: None,
            method: None,
            varying_buses: ps.varying.clone(),
            varying_index: idx,
            ps: ps.clone(),
            base_forecast: base.values().to_vec(),
            regions: ex.regions,
            status: ex.status,
            uncovered: ex.uncovered,
        }
    }

    #[test]
    fn tent_has_two_regions() {
        let ps = ParameterSet::boxed(vec![1], &[0.0], &[2.0]).unwrap();
        let pol = policy_for(&tent, &Forecast(vec![0.5]), &ps, vec![0]);
        assert_eq!(pol.regions.len(), 2);
        assert_eq!(pol.status, PolicyStatus::Complete);
        for theta in [0.0, 0.3, 0.99, 1.0, 1.4, 2.0] {
            let v = pol.evaluate_theta(&[theta]).value().unwrap();
            assert!((v - theta.min(2.0 - theta)).abs() < 1e-9, "{theta}: {v}");
        }
        // laws: slope +1 on [0, 1], -1 on [1, 2]
        let mut slopes: Vec<f64> = pol.regions.iter().map(|r| r.a_hat[0]).collect();
        slopes.sort_by(f64::total_cmp);
        assert!((slopes[0] + 1.0).abs() < 1e-12 && (slopes[1] - 1.0).abs() < 1e-12);
        assert_eq!(pol.evaluate_theta(&[2.5]), PolicyValue::NotCovered);
        assert_eq!(pol.evaluate_theta(&[-0.1]), PolicyValue::NotCovered);
    }

    #[test]
    fn shared_facet_values_agree() {
        let ps = ParameterSet::boxed(vec![1], &[0.0], &[2.0]).unwrap();
        let pol = policy_for(&tent, &Forecast(vec![0.5]), &ps, vec![0]);
        let at_kink: Vec<f64> = pol.regions.iter().map(|r| r.value(&[1.0])).collect();
        assert!(pol.covering_regions(&[1.0], COVERAGE_TOL) == 2);
        assert!((at_kink[0] - at_kink[1]).abs() < 1e-5);
    }

    #[test]
    fn rhs_free_of_parameter_gives_one_region() {
        let flat = |_: &Forecast| {
            let mut lp = LpProblem::maximize();
            let a = lp.add_var(0.0, 3.0, 1.0);
            let b = lp.add_var(0.0, 3.0, 2.0);
            lp.add_row(&[(a, 1.0), (b, 1.0)], Relation::Le, 4.0);
            lp
        };
        let ps = ParameterSet::boxed(vec![1, 2], &[0.0, -1.0], &[5.0, 1.0]).unwrap();
        let pol = policy_for(&flat, &Forecast(vec![1.0, 0.0]), &ps, vec![0, 1]);
        assert_eq!(pol.regions.len(), 1);
        assert_eq!(pol.regions[0].a_hat, vec![0.0, 0.0]);
        assert!((pol.regions[0].b_hat - 7.0).abs() < 1e-12);
        assert!(pol.evaluate_theta(&[4.9, -0.9]).value().is_some());
    }

    #[test]
    fn fixed_buses_must_match_base() {
        let ps = ParameterSet::boxed(vec![1], &[0.0], &[2.0]).unwrap();
        let two_bus = |fc: &Forecast| tent(&Forecast(vec![fc.values()[0]]));
        let pol = policy_for(&two_bus, &Forecast(vec![0.5, 7.0]), &ps, vec![0]);
        assert!(evaluate_policy(&pol, &Forecast(vec![1.5, 7.0])).value().is_some());
        assert_eq!(evaluate_policy(&pol, &Forecast(vec![1.5, 7.5])), PolicyValue::NotCovered);
    }

    #[test]
    fn rhs_sensitivities_match_substitution() {
        let ps_lp = |fc: &Forecast| {
            let v = fc.values();
            let mut lp = LpProblem::minimize();
            let x = lp.add_var(0.0, 10.0, 1.0);
            lp.add_row(&[(x, 1.0)], Relation::Ge, 2.0 * v[0] - v[1] + 1.0);
            lp.objective_offset = 3.0 * v[1];
            lp
        };
        let base = Forecast(vec![1.0, 2.0]);
        let plp = build_parametric(&ps_lp, &base, &[0, 1]).unwrap();
        assert_eq!(plp.rhs_sens, vec![vec![2.0, -1.0]]);
        assert_eq!(plp.offset_sens, vec![0.0, 3.0]);
        let theta = [2.5, -1.0];
        let direct = solve_lp(&ps_lp(&plp.forecast_at(&theta))).unwrap();
        let via = solve_lp(&plp.instance(&theta)).unwrap();
        assert!((direct.objective - via.objective).abs() < 1e-12);
    }

    #[test]
    fn nonaffine_template_is_rejected() {
        let bad = |fc: &Forecast| {
            let mut lp = LpProblem::minimize();
            let x = lp.add_var(0.0, 10.0, 1.0);
            lp.add_row(&[(x, 1.0)], Relation::Ge, fc.values()[0].powi(2));
            lp
        };
        assert!(matches!(
            build_parametric(&bad, &Forecast(vec![1.0]), &[0]),
            Err(MplpError::NotAffine(_))
        ));
        let reshaped = |fc: &Forecast| {
            let mut lp = LpProblem::minimize();
            lp.add_var(0.0, fc.values()[0], 1.0);
            lp
        };
        assert!(matches!(
            build_parametric(&reshaped, &Forecast(vec![1.0]), &[0]),
            Err(MplpError::NotRhsParametric(_))
        ));
    }

    #[test]
    fn parameter_set_checks() {
        assert!(ParameterSet::new(vec![1, 1], vec![], vec![]).is_err());
        assert!(ParameterSet::new(vec![1], vec![vec![1.0, 2.0]], vec![1.0]).is_err());
        let half_line = ParameterSet::new(vec![1], vec![vec![1.0]], vec![1.0]).unwrap();
        let plp = build_parametric(&tent, &Forecast(vec![0.5]), &[0]).unwrap();
        assert!(matches!(
            enumerate_regions(&plp, &half_line, &ExploreOptions::default()),
            Err(MplpError::UnboundedSet(0))
        ));
        let empty = ParameterSet::boxed(vec![1], &[1.0], &[0.0]).unwrap();
        assert!(matches!(
            enumerate_regions(&plp, &empty, &ExploreOptions::default()),
            Err(MplpError::EmptySet)
        ));
    }

    #[test]
    fn parameter_set_file_forms() {
        let boxed: ParameterSet = serde_json::from_str(r#"{"varying_buses":[3],"lower":[100],"upper":[200]}"#).unwrap();
        assert_eq!(boxed.h, vec![200.0, -100.0]);
        let text = serde_json::to_string(&boxed).unwrap();
        assert!(text.contains("\"H\""));
        let back: ParameterSet = serde_json::from_str(&text).unwrap();
        assert_eq!(back, boxed);
        assert!(serde_json::from_str::<ParameterSet>(r#"{"varying_buses":[3],"H":[[1,2]],"h":[1]}"#).is_err());
    }
}
