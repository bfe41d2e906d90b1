//! Job configuration: command-line flags layered over an optional JSON job file.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use ucscreen::case_io::{compute_ptdf, load_case, BusId, Forecast, Network, PtdfMatrix};
use ucscreen::lp::SimplexOptions;
use ucscreen::screening::{ScreeningMethod, ScreeningOptions};
use ucscreen::uc_models::{BoxUncertainty, GaussianUncertainty, UncertaintyModel, VarianceRule};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Det,
    Ro,
    Cc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleArg {
    Independent,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TiesArg {
    Bounded,
    Omitted,
}

/// Every job setting. Flags win over the job file; unset values fall back to
/// the file, then to built-in defaults.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Job {
    /// JSON job file with any of the settings below (snake_case keys)
    #[arg(long)]
    #[serde(skip)]
    pub job: Option<PathBuf>,

    /// Case file (native JSON or MATPOWER .m)
    #[arg(long, help_heading = "Case")]
    pub case: Option<PathBuf>,
    /// Case format: json or matpower (default: from the extension)
    #[arg(long, help_heading = "Case")]
    pub format: Option<String>,
    /// Per-bus net-demand forecast, comma separated, MW
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, help_heading = "Case")]
    pub load: Option<Vec<f64>>,
    /// Forecast file: JSON array or comma/whitespace separated numbers
    #[arg(long, help_heading = "Case")]
    pub load_file: Option<PathBuf>,

    /// Screening method
    #[arg(long, value_enum, help_heading = "Uncertainty")]
    pub method: Option<MethodArg>,
    /// Box lower multiplier on uncertain buses
    #[arg(long, help_heading = "Uncertainty")]
    pub beta1: Option<f64>,
    /// Box upper multiplier on uncertain buses
    #[arg(long, help_heading = "Uncertainty")]
    pub beta2: Option<f64>,
    /// Uncertain bus ids (default: buses with nonzero forecast)
    #[arg(long, value_delimiter = ',', help_heading = "Uncertainty")]
    pub uncertain: Option<Vec<BusId>>,
    /// Forecast-error standard deviation per bus, MW; one value applies to all buses
    #[arg(long, value_delimiter = ',', help_heading = "Uncertainty")]
    pub sigma: Option<Vec<f64>>,
    /// Generator chance-constraint risk
    #[arg(long, help_heading = "Uncertainty")]
    pub eps_x: Option<f64>,
    /// Line chance-constraint risk
    #[arg(long, help_heading = "Uncertainty")]
    pub eps_f: Option<f64>,
    /// Flow variance rule for chance constraints
    #[arg(long, value_enum, help_heading = "Uncertainty")]
    pub variance_rule: Option<RuleArg>,
    /// Robust screening with participation-factor recourse
    #[arg(long, num_args = 0..=1, default_missing_value = "true", help_heading = "Uncertainty")]
    pub recourse: Option<bool>,

    /// Redundancy tolerance relative to max(1, limit)
    #[arg(long, help_heading = "Tolerances")]
    pub tolerance: Option<f64>,
    /// LP primal feasibility tolerance
    #[arg(long, help_heading = "Tolerances")]
    pub lp_feas_tol: Option<f64>,
    /// LP optimality tolerance
    #[arg(long, help_heading = "Tolerances")]
    pub lp_opt_tol: Option<f64>,
    /// Active-set tolerance
    #[arg(long, help_heading = "Tolerances")]
    pub active_tol: Option<f64>,
    /// Validation feasibility tolerance, MW
    #[arg(long, help_heading = "Tolerances")]
    pub feas_tol: Option<f64>,

    /// MPLP parameter-set file
    #[arg(long, help_heading = "Policies")]
    pub param_set: Option<PathBuf>,
    /// Policy store to evaluate
    #[arg(long, help_heading = "Policies")]
    pub policy: Option<PathBuf>,
    /// Critical-region cap per bound
    #[arg(long, help_heading = "Policies")]
    pub region_cap: Option<usize>,
    /// Fall back to the LP where the policy does not cover the forecast
    #[arg(long, num_args = 0..=1, default_missing_value = "true", help_heading = "Policies")]
    pub hybrid: Option<bool>,
    /// Evaluate a store whose region enumeration hit the cap
    #[arg(long, num_args = 0..=1, default_missing_value = "true", help_heading = "Policies")]
    pub allow_partial: Option<bool>,

    /// Partition file {"areas": {"<bus>": area}}
    #[arg(long, help_heading = "Areas")]
    pub partition: Option<PathBuf>,
    /// Tie-line treatment in area screening LPs
    #[arg(long, value_enum, help_heading = "Areas")]
    pub ties: Option<TiesArg>,
    /// Build per-area policies over LO,HI times the forecast of each loaded area bus
    #[arg(long, value_delimiter = ',', help_heading = "Areas")]
    pub policy_spread: Option<Vec<f64>>,

    /// Reduced-model family T1..T5
    #[arg(long, help_heading = "Validation")]
    pub family: Option<String>,
    /// Number of realizations
    #[arg(long, help_heading = "Validation")]
    pub n: Option<usize>,
    /// Screening result JSON giving the keep-set (default: screen at the forecast)
    #[arg(long, help_heading = "Validation")]
    pub screening: Option<PathBuf>,
    /// Skip full-model solves (no solution gap)
    #[arg(long, num_args = 0..=1, default_missing_value = "true", help_heading = "Validation")]
    pub no_gap: Option<bool>,

    /// RNG seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

macro_rules! layer {
    ($hi:ident, $lo:ident; $($f:ident),* $(,)?) => {
        $( if $hi.$f.is_none() { $hi.$f = $lo.$f; } )*
    };
}

fn rebase(dir: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = dir.join(&*path);
        }
    }
}

impl Job {
    /// Applies the job file under the flags; file paths are taken relative
    /// to the job file's directory.
    pub fn resolve(mut self) -> Result<Job, CliError> {
        let Some(path) = self.job.clone() else { return Ok(self) };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Usage(format!("job file {}: {e}", path.display())))?;
        let mut file: Job = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("job file {}: {e}", path.display())))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        for p in [
            &mut file.case,
            &mut file.load_file,
            &mut file.param_set,
            &mut file.policy,
            &mut file.partition,
            &mut file.screening,
            &mut file.out,
        ] {
            rebase(&dir, p);
        }
        let lo = file;
        let hi = &mut self;
        layer!(hi, lo; case, format, load, load_file, method, beta1, beta2, uncertain, sigma, eps_x, eps_f,
            variance_rule, recourse, tolerance, lp_feas_tol, lp_opt_tol, active_tol, feas_tol, param_set,
            policy, region_cap, hybrid, allow_partial, partition, ties, policy_spread, family, n, screening,
            no_gap, seed, out);
        Ok(self)
    }

    pub fn out_dir(&self) -> Result<PathBuf, CliError> {
        let dir = self.out.clone().unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(dir)
    }

    pub fn network(&self) -> Result<Network, CliError> {
        let path = self.case.as_ref().ok_or_else(|| CliError::Usage("--case is required".into()))?;
        if !path.exists() {
            return Err(CliError::Usage(format!("case file {} not found", path.display())));
        }
        load_case(path, self.format.as_deref()).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn forecast(&self, net: &Network) -> Result<Forecast, CliError> {
        let values = match (&self.load, &self.load_file) {
            (Some(v), None) => v.clone(),
            (None, Some(p)) => read_numbers(p)?,
            (Some(_), Some(_)) => return Err(CliError::Usage("give either --load or --load-file, not both".into())),
            (None, None) => return Err(CliError::Usage("a forecast is required (--load or --load-file)".into())),
        };
        Forecast::new(values, net).map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn simplex(&self) -> SimplexOptions {
        let mut s = SimplexOptions::default();
        if let Some(t) = self.lp_feas_tol {
            s.feasibility_tol = t;
        }
        if let Some(t) = self.lp_opt_tol {
            s.optimality_tol = t;
        }
        if let Some(t) = self.active_tol {
            s.active_tol = t;
        }
        s
    }

    /// Screening options; `parallel` follows the worker count.
    pub fn screening_options(&self) -> ScreeningOptions {
        let mut o = ScreeningOptions {
            simplex: self.simplex(),
            parallel: rayon::current_num_threads() > 1,
            ..ScreeningOptions::default()
        };
        if let Some(t) = self.tolerance {
            o.tolerance = t;
        }
        o
    }

    pub fn has_box(&self) -> bool {
        self.beta1.is_some() || self.beta2.is_some()
    }

    pub fn box_uncertainty(&self, net: &Network, fc: &Forecast) -> Result<BoxUncertainty, CliError> {
        let (Some(b1), Some(b2)) = (self.beta1, self.beta2) else {
            return Err(CliError::Usage("box uncertainty needs --beta1 and --beta2".into()));
        };
        let buses = match &self.uncertain {
            Some(b) => b.clone(),
            None => net
                .buses
                .iter()
                .zip(fc.values())
                .filter(|(_, l)| **l != 0.0)
                .map(|(b, _)| *b)
                .collect(),
        };
        BoxUncertainty::uniform(net, &buses, b1, b2).map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn gaussian(&self, net: &Network) -> Result<GaussianUncertainty, CliError> {
        let sigma = self
            .sigma
            .as_ref()
            .ok_or_else(|| CliError::Usage("chance-constrained settings need --sigma".into()))?;
        let sd = match sigma.len() {
            1 => vec![sigma[0]; net.n_buses()],
            n if n == net.n_buses() => sigma.clone(),
            n => {
                return Err(CliError::Usage(format!(
                    "--sigma has {n} values for {} buses",
                    net.n_buses()
                )))
            }
        };
        let var = sd.iter().map(|s| s * s).collect();
        let g = GaussianUncertainty::new(net, var, self.eps_x.unwrap_or(0.05), self.eps_f.unwrap_or(0.05))
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(match self.variance_rule {
            Some(RuleArg::Exact) => g.with_rule(VarianceRule::Exact),
            _ => g,
        })
    }

    pub fn method(&self) -> MethodArg {
        self.method.unwrap_or(MethodArg::Det)
    }

    pub fn screening_method(&self, net: &Network, fc: &Forecast, m: MethodArg) -> Result<ScreeningMethod, CliError> {
        Ok(match m {
            MethodArg::Det => ScreeningMethod::Deterministic,
            MethodArg::Ro => ScreeningMethod::Robust {
                unc: self.box_uncertainty(net, fc)?,
                with_recourse: self.recourse.unwrap_or(false),
            },
            MethodArg::Cc => ScreeningMethod::ChanceConstrained(self.gaussian(net)?),
        })
    }

    /// Uncertainty model for sampling: box if betas are set, Gaussian otherwise.
    pub fn uncertainty(&self, net: &Network, fc: &Forecast) -> Result<UncertaintyModel, CliError> {
        if self.has_box() {
            Ok(UncertaintyModel::Box(self.box_uncertainty(net, fc)?))
        } else if self.sigma.is_some() {
            Ok(UncertaintyModel::Gaussian(self.gaussian(net)?))
        } else {
            Err(CliError::Usage("sampling needs --beta1/--beta2 or --sigma".into()))
        }
    }
}

pub fn ptdf(net: &Network) -> Result<PtdfMatrix, CliError> {
    compute_ptdf(net).map_err(|e| CliError::Usage(e.to_string()))
}

fn read_numbers(p: &Path) -> Result<Vec<f64>, CliError> {
    let text =
        std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("forecast file {}: {e}", p.display())))?;
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("forecast file {}: {e}", p.display())));
    }
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("forecast file {}: `{s}` is not a number", p.display())))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_job_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("job.json");
        std::fs::write(&path, r#"{"case": "tri.json", "load": [1, 2, 3], "seed": 5, "method": "cc"}"#).unwrap();
        let job = Job {
            job: Some(path),
            seed: Some(9),
            ..Job::default()
        }
        .resolve()
        .unwrap();
        assert_eq!(job.seed, Some(9));
        assert_eq!(job.load, Some(vec![1.0, 2.0, 3.0]));
        assert_eq!(job.method, Some(MethodArg::Cc));
        assert_eq!(job.case, Some(dir.path().join("tri.json")));
    }

    #[test]
    fn unknown_job_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("job.json");
        std::fs::write(&path, r#"{"cases": "x"}"#).unwrap();
        let err = Job {
            job: Some(path),
            ..Job::default()
        }
        .resolve()
        .unwrap_err();
        assert!(matches!(err, CliError::Usage(_)));
    }
}
