use crate::case_io::Forecast;
use crate::lp::LpProblem;

use super::{dot, MplpError};

/// LP whose right-hand side and objective constant are affine in `theta`,
/// the forecast at the varying buses:
/// `rhs(theta) = rhs_base + F (theta - theta_base)`,
/// `offset(theta) = offset_base + g . (theta - theta_base)`.
#[derive(Debug, Clone)]
pub struct ParametricLp {
    /// Instance at the base forecast.
    pub base: LpProblem,
    pub varying: Vec<usize>,
    pub base_forecast: Vec<f64>,
    pub theta_base: Vec<f64>,
    /// `F`, one row per constraint.
    pub rhs_sens: Vec<Vec<f64>>,
    pub offset_sens: Vec<f64>,
}

impl ParametricLp {
    pub fn dim(&self) -> usize {
        self.varying.len()
    }

    pub fn forecast_at(&self, theta: &[f64]) -> Forecast {
        let mut v = self.base_forecast.clone();
        for (&k, t) in self.varying.iter().zip(theta) {
            v[k] = *t;
        }
        Forecast(v)
    }

    pub fn rhs_at(&self, theta: &[f64]) -> Vec<f64> {
        let delta: Vec<f64> = theta.iter().zip(&self.theta_base).map(|(a, b)| a - b).collect();
        self.base
            .constraints
            .iter()
            .zip(&self.rhs_sens)
            .map(|(c, f)| c.rhs + dot(f, &delta))
            .collect()
    }

    pub fn offset_at(&self, theta: &[f64]) -> f64 {
        let delta: Vec<f64> = theta.iter().zip(&self.theta_base).map(|(a, b)| a - b).collect();
        self.base.objective_offset + dot(&self.offset_sens, &delta)
    }

    /// The LP at parameter `theta`.
    pub fn instance(&self, theta: &[f64]) -> LpProblem {
        let mut lp = self.base.clone();
        for (c, r) in lp.constraints.iter_mut().zip(self.rhs_at(theta)) {
            c.rhs = r;
        }
        lp.objective_offset = self.offset_at(theta);
        lp
    }
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

fn same_structure(a: &LpProblem, b: &LpProblem) -> Result<(), MplpError> {
    let bad = |what: &str| Err(MplpError::NotRhsParametric(what.to_string()));
    if a.sense != b.sense {
        return bad("sense");
    }
    if a.n_vars() != b.n_vars() || a.n_rows() != b.n_rows() {
        return bad("dimensions");
    }
    if a.objective.iter().zip(&b.objective).any(|(x, y)| !close(*x, *y)) {
        return bad("objective");
    }
    let bounds_differ = a
        .lower
        .iter()
        .zip(&b.lower)
        .chain(a.upper.iter().zip(&b.upper))
        .any(|(x, y)| !close(*x, *y));
    if bounds_differ {
        return bad("variable bounds");
    }
    for (i, (ra, rb)) in a.constraints.iter().zip(&b.constraints).enumerate() {
        if ra.relation != rb.relation || ra.coeffs.iter().zip(&rb.coeffs).any(|(x, y)| !close(*x, *y)) {
            return Err(MplpError::NotRhsParametric(format!("row {i}")));
        }
    }
    Ok(())
}

/// Builds the parametric form of `template` around `base`, with the forecast
/// at bus indices `varying` as parameter.
///
/// Sensitivities come from unit perturbations; the structure is checked to be
/// forecast independent and the affine model is checked at one more point.
pub fn build_parametric(
    template: &dyn Fn(&Forecast) -> LpProblem,
    base: &Forecast,
    varying: &[usize],
) -> Result<ParametricLp, MplpError> {
    for (i, &k) in varying.iter().enumerate() {
        if k >= base.len() {
            return Err(MplpError::BadIndex(k));
        }
        if varying[..i].contains(&k) {
            return Err(MplpError::BadIndex(k));
        }
    }
    let lp0 = template(base);
    lp0.validate()?;
    let p = varying.len();
    let m = lp0.n_rows();
    let mut rhs_sens = vec![vec![0.0; p]; m];
    let mut offset_sens = vec![0.0; p];
    for (c, &k) in varying.iter().enumerate() {
        let mut v = base.values().to_vec();
        v[k] += 1.0;
        let lp1 = template(&Forecast(v));
        same_structure(&lp0, &lp1)?;
        for (row, (r0, r1)) in rhs_sens.iter_mut().zip(lp0.constraints.iter().zip(&lp1.constraints)) {
            row[c] = r1.rhs - r0.rhs;
        }
        offset_sens[c] = lp1.objective_offset - lp0.objective_offset;
    }
    let plp = ParametricLp {
        theta_base: varying.iter().map(|&k| base.values()[k]).collect(),
        base: lp0,
        varying: varying.to_vec(),
        base_forecast: base.values().to_vec(),
        rhs_sens,
        offset_sens,
    };
    if p > 0 {
        // affinity check at a point moving every coordinate by a different amount
        let theta: Vec<f64> = plp
            .theta_base
            .iter()
            .enumerate()
            .map(|(c, t)| t + 0.37 * (c as f64 + 1.0) * if c % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let lp2 = template(&plp.forecast_at(&theta));
        same_structure(&plp.base, &lp2)?;
        let predicted = plp.rhs_at(&theta);
        let mut dev: f64 = 0.0;
        for (c, r) in lp2.constraints.iter().zip(&predicted) {
            dev = dev.max((c.rhs - r).abs() / r.abs().max(1.0));
        }
        dev = dev.max((lp2.objective_offset - plp.offset_at(&theta)).abs() / lp2.objective_offset.abs().max(1.0));
        if dev > 1e-9 {
            return Err(MplpError::NotAffine(dev));
        }
    }
    Ok(plp)
}
