use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::UcError;
use crate::case_io::{BusId, Forecast, Network, PtdfMatrix};

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal quantile by bisection on [`normal_cdf`], accurate to 1e-10.
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile level {p} outside (0, 1)");
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    while hi - lo > 1e-11 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Equal shares over participating units with capacity, zero elsewhere.
pub fn participation_factors(net: &Network) -> Vec<f64> {
    let takes_part = |g: &crate::case_io::Generator| g.participates && !g.synthetic && g.pmax > 0.0;
    let count = net.generators.iter().filter(|g| takes_part(g)).count();
    net.generators
        .iter()
        .map(|g| {
            if count > 0 && takes_part(g) {
                1.0 / count as f64
            } else {
                0.0
            }
        })
        .collect()
}

/// Per-bus sums of generator participation factors.
pub fn bus_participation(net: &Network, alpha: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; net.n_buses()];
    for (k, a) in net.generator_bus_indices().into_iter().zip(alpha) {
        out[k] += a;
    }
    out
}

/// Redistributes the mismatch between realized demand and scheduled output
/// over the units by `alpha`, so the adjusted dispatch meets `realized` exactly.
pub fn apply_recourse(x: &[f64], alpha: &[f64], realized: &Forecast) -> Vec<f64> {
    let shortfall = realized.total() - x.iter().sum::<f64>();
    x.iter().zip(alpha).map(|(xi, a)| xi + a * shortfall).collect()
}

/// Box set on realized demand: `beta_lo * forecast <= demand <= beta_hi * forecast`
/// on uncertain buses, demand equal to the forecast elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxUncertainty {
    pub beta_lo: Vec<f64>,
    pub beta_hi: Vec<f64>,
    /// Bus indices (not ids) whose demand varies.
    pub uncertain: Vec<usize>,
}

impl BoxUncertainty {
    pub fn new(beta_lo: Vec<f64>, beta_hi: Vec<f64>, mut uncertain: Vec<usize>) -> Result<Self, UcError> {
        if beta_lo.len() != beta_hi.len() {
            return Err(UcError::Uncertainty("beta vectors differ in length".into()));
        }
        uncertain.sort_unstable();
        uncertain.dedup();
        for (b, (lo, hi)) in beta_lo.iter().zip(&beta_hi).enumerate() {
            let varies = uncertain.binary_search(&b).is_ok();
            if varies && !(*lo <= 1.0 && *hi >= 1.0 && lo.is_finite() && hi.is_finite()) {
                return Err(UcError::Uncertainty(format!(
                    "bus index {b}: need beta_lo <= 1 <= beta_hi, got {lo}, {hi}"
                )));
            }
            if !varies && (*lo != 1.0 || *hi != 1.0) {
                return Err(UcError::Uncertainty(format!(
                    "bus index {b} is certain but has betas {lo}, {hi}"
                )));
            }
        }
        if uncertain.iter().any(|&b| b >= beta_lo.len()) {
            return Err(UcError::Uncertainty("uncertain bus index out of range".into()));
        }
        Ok(BoxUncertainty {
            beta_lo,
            beta_hi,
            uncertain,
        })
    }

    /// Same multipliers on every listed bus.
    pub fn uniform(net: &Network, buses: &[BusId], beta_lo: f64, beta_hi: f64) -> Result<Self, UcError> {
        let n = net.n_buses();
        let mut lo = vec![1.0; n];
        let mut hi = vec![1.0; n];
        let mut idx = Vec::new();
        for b in buses {
            let k = net
                .bus_index(*b)
                .ok_or_else(|| UcError::Uncertainty(format!("unknown bus {b}")))?;
            lo[k] = beta_lo;
            hi[k] = beta_hi;
            idx.push(k);
        }
        Self::new(lo, hi, idx)
    }

    /// No uncertain buses.
    pub fn certain(n_buses: usize) -> Self {
        BoxUncertainty {
            beta_lo: vec![1.0; n_buses],
            beta_hi: vec![1.0; n_buses],
            uncertain: Vec::new(),
        }
    }

    /// Realized-demand interval of every bus; handles negative forecasts.
    pub fn demand_bounds(&self, fc: &Forecast) -> (Vec<f64>, Vec<f64>) {
        let mut lo = fc.values().to_vec();
        let mut hi = fc.values().to_vec();
        for &b in &self.uncertain {
            let a = self.beta_lo[b] * fc.values()[b];
            let c = self.beta_hi[b] * fc.values()[b];
            lo[b] = a.min(c);
            hi[b] = a.max(c);
        }
        (lo, hi)
    }

    /// All `2^K` corner realizations, first uncertain bus varying slowest.
    pub fn vertices(&self, fc: &Forecast, cap: usize) -> Result<Vec<Forecast>, UcError> {
        let k = self.uncertain.len();
        if k > cap {
            return Err(UcError::TooManyUncertainBuses { count: k, cap });
        }
        let (lo, hi) = self.demand_bounds(fc);
        let mut out = Vec::with_capacity(1 << k);
        for mask in 0..(1usize << k) {
            let mut v = fc.values().to_vec();
            for (pos, &b) in self.uncertain.iter().enumerate() {
                let bit = (mask >> (k - 1 - pos)) & 1;
                v[b] = if bit == 0 { lo[b] } else { hi[b] };
            }
            out.push(Forecast(v));
        }
        Ok(out)
    }
}

/// How the flow standard deviation is formed from nodal variances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceRule {
    /// `sum_b a_b^2 (s_b^2 + alpha_b^2 s_total^2)`, treating the nodal error and
    /// the total mismatch as independent.
    #[default]
    Independent,
    /// Exact variance of `sum_b a_b (w_b - alpha_b W)`: `sum_m s_m^2 (a_m - abar)^2`
    /// with `abar = sum_b a_b alpha_b`.
    Exact,
}

/// Zero-mean Gaussian forecast errors with diagonal covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianUncertainty {
    /// Per-bus variance, MW^2.
    pub variances: Vec<f64>,
    pub eps_x: f64,
    pub eps_f: f64,
    /// Per-generator participation factors.
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub rule: VarianceRule,
}

impl GaussianUncertainty {
    /// Gaussian model with default participation factors.
    pub fn new(net: &Network, variances: Vec<f64>, eps_x: f64, eps_f: f64) -> Result<Self, UcError> {
        let g = GaussianUncertainty {
            variances,
            eps_x,
            eps_f,
            alpha: participation_factors(net),
            rule: VarianceRule::default(),
        };
        g.validate(net)?;
        Ok(g)
    }

    pub fn with_rule(mut self, rule: VarianceRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn validate(&self, net: &Network) -> Result<(), UcError> {
        if self.variances.len() != net.n_buses() {
            return Err(UcError::Uncertainty(format!(
                "{} variances for {} buses",
                self.variances.len(),
                net.n_buses()
            )));
        }
        if self.variances.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(UcError::Uncertainty("variances must be finite and non-negative".into()));
        }
        for (name, e) in [("eps_x", self.eps_x), ("eps_f", self.eps_f)] {
            if !(e > 0.0 && e <= 0.5) {
                return Err(UcError::Uncertainty(format!("{name} = {e} outside (0, 0.5]")));
            }
        }
        if self.alpha.len() != net.n_generators() {
            return Err(UcError::Uncertainty("one participation factor per generator".into()));
        }
        let total: f64 = self.alpha.iter().sum();
        if (total - 1.0).abs() > 1e-9 || self.alpha.iter().any(|a| *a < 0.0) {
            return Err(UcError::Uncertainty(format!(
                "participation factors must be non-negative and sum to 1, sum is {total}"
            )));
        }
        Ok(())
    }

    /// Standard deviation of the total mismatch.
    pub fn sigma_total(&self) -> f64 {
        self.variances.iter().sum::<f64>().sqrt()
    }

    /// Reserve floor per generator: `alpha_g z(1 - eps_x) sigma_total`.
    pub fn reserve_floor(&self) -> Vec<f64> {
        let z = normal_quantile(1.0 - self.eps_x);
        let s = self.sigma_total();
        self.alpha.iter().map(|a| a * z * s).collect()
    }

    /// Standard deviation of every line flow under the configured rule.
    pub fn flow_sigma(&self, net: &Network, ptdf: &PtdfMatrix) -> Vec<f64> {
        let alpha_bus = bus_participation(net, &self.alpha);
        let s2_total: f64 = self.variances.iter().sum();
        (0..ptdf.n_lines())
            .map(|j| {
                let a = ptdf.row(j);
                let var: f64 = match self.rule {
                    VarianceRule::Independent => a
                        .iter()
                        .zip(&self.variances)
                        .zip(&alpha_bus)
                        .map(|((ab, s2), al)| ab * ab * (s2 + al * al * s2_total))
                        .sum(),
                    VarianceRule::Exact => {
                        let abar: f64 = a.iter().zip(&alpha_bus).map(|(ab, al)| ab * al).sum();
                        a.iter()
                            .zip(&self.variances)
                            .map(|(ab, s2)| s2 * (ab - abar) * (ab - abar))
                            .sum()
                    }
                };
                var.sqrt()
            })
            .collect()
    }

    /// Flow limit reduction per line: `z(1 - eps_f) sigma_f`.
    pub fn flow_margin(&self, net: &Network, ptdf: &PtdfMatrix) -> Vec<f64> {
        let z = normal_quantile(1.0 - self.eps_f);
        self.flow_sigma(net, ptdf).into_iter().map(|s| z * s).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case_io::{compute_ptdf, synthetic};

    #[test]
    fn quantiles() {
        assert!(normal_quantile(0.5).abs() < 1e-10);
        assert!((normal_quantile(0.95) - 1.6448536269514722).abs() < 1e-9);
        assert!((normal_quantile(0.9) - 1.2815515655446004).abs() < 1e-9);
        assert!((normal_quantile(0.05) + 1.6448536269514722).abs() < 1e-9);
    }

    #[test]
    fn total_sigma_of_unit_variances() {
        let net = synthetic::triangle(1000.0);
        let g = GaussianUncertainty::new(&net, vec![1.0; 3], 0.05, 0.05).unwrap();
        assert!((g.sigma_total() - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn triangle_flow_variance_by_rule() {
        let net = synthetic::triangle(1000.0);
        let ptdf = compute_ptdf(&net).unwrap();
        let g = GaussianUncertainty::new(&net, vec![1.0; 3], 0.05, 0.05).unwrap();
        assert_eq!(bus_participation(&net, &g.alpha), vec![0.5, 0.5, 0.0]);
        let s = g.flow_sigma(&net, &ptdf);
        // (4/9)(1 + 3/4) + (1/9)(1 + 3/4)
        assert!((s[2] * s[2] - 0.97222222222).abs() < 1e-9);
        let exact = g.clone().with_rule(VarianceRule::Exact).flow_sigma(&net, &ptdf);
        // abar = 1/2: (1/6)^2 + (-1/6)^2 + (-1/2)^2
        assert!((exact[2] * exact[2] - 11.0 / 36.0).abs() < 1e-12);
    }

    #[test]
    fn median_level_gives_no_margin() {
        let net = synthetic::triangle(1000.0);
        let ptdf = compute_ptdf(&net).unwrap();
        let g = GaussianUncertainty::new(&net, vec![4.0; 3], 0.5, 0.5).unwrap();
        assert!(g.flow_margin(&net, &ptdf).iter().all(|m| m.abs() < 1e-9));
        assert!(g.reserve_floor().iter().all(|r| r.abs() < 1e-9));
    }

    #[test]
    fn recourse_splits_shortfall() {
        let x = vec![40.0, 50.0, 0.0];
        let realized = Forecast(vec![0.0, 0.0, 100.0]);
        let y = apply_recourse(&x, &[0.5, 0.5, 0.0], &realized);
        assert_eq!(y, vec![45.0, 55.0, 0.0]);
        assert_eq!(apply_recourse(&x, &[0.5, 0.5, 0.0], &Forecast(vec![90.0, 0.0, 0.0])), x);
    }

    #[test]
    fn box_vertices_on_two_buses() {
        let net = synthetic::two_bus(100.0);
        let b = BoxUncertainty::uniform(&net, &[2], 0.9, 1.1).unwrap();
        let fc = Forecast(vec![0.0, 100.0]);
        let v = b.vertices(&fc, 12).unwrap();
        assert_eq!(v.len(), 2);
        assert!((v[0].values()[1] - 90.0).abs() < 1e-9);
        assert!((v[1].values()[1] - 110.0).abs() < 1e-9);
        assert!(matches!(
            b.vertices(&fc, 0),
            Err(UcError::TooManyUncertainBuses { count: 1, cap: 0 })
        ));
    }

    #[test]
    fn negative_forecast_bounds_are_ordered() {
        let b = BoxUncertainty::new(vec![0.8], vec![1.2], vec![0]).unwrap();
        let (lo, hi) = b.demand_bounds(&Forecast(vec![-50.0]));
        assert_eq!((lo[0], hi[0]), (-60.0, -40.0));
    }

    #[test]
    fn bad_betas_rejected() {
        assert!(BoxUncertainty::new(vec![1.1], vec![1.2], vec![0]).is_err());
        assert!(BoxUncertainty::new(vec![0.9], vec![1.2], vec![]).is_err());
    }
}
