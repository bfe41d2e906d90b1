use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use log::info;
use serde_json::json;

use ucscreen::case_io::Network;
use ucscreen::mplp::{build_policies, hybrid_screen, ExploreOptions, ParameterSet, PolicySet};
use ucscreen::multi_area::{area_policy, union_screen, AreaPartition, TieLines};
use ucscreen::screening::{format_sig9, ScreeningResult, Screener};
use ucscreen::uc_models::{Direction, LineBound, UncertaintyModel};
use ucscreen::validation::{sample_realizations, timing_compare, validate_reduced, Family, ValidationOptions};

use crate::config::{ptdf, Job, MethodArg, TiesArg};
use crate::error::CliError;

fn write(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    println!("wrote {name}");
    Ok(())
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

fn write_screening(dir: &Path, stem: &str, sr: &ScreeningResult) -> Result<(), CliError> {
    write(dir, &format!("{stem}.csv"), &sr.to_csv())?;
    write(dir, &format!("{stem}.json"), &pretty(&sr.to_json()))?;
    println!(
        "{} bounds, {} non-redundant, {} LP solves",
        sr.bounds.len(),
        sr.count_non_redundant(),
        sr.lp_solves
    );
    Ok(())
}

/// Wall-clock figures go to their own file so every other output is
/// reproducible byte for byte.
fn write_timing(dir: &Path, v: serde_json::Value) -> Result<(), CliError> {
    let path = dir.join("timing.json");
    std::fs::write(&path, pretty(&v)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    info!("timing: {v}");
    Ok(())
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

pub fn screen(job: &Job) -> Result<(), CliError> {
    let net = job.network()?;
    let fc = job.forecast(&net)?;
    let method = job.screening_method(&net, &fc, job.method())?;
    let out = job.out_dir()?;
    let p = ptdf(&net)?;
    let start = Instant::now();
    let screener = Screener::new(&net, &p, method, job.screening_options())?;
    let sr = screener.screen(&fc)?;
    for d in &sr.diagnostics {
        eprintln!("{d}");
    }
    write_screening(&out, "screening", &sr)?;
    write_timing(&out, json!({ "screening_ms": ms(start) }))
}

fn explore_options(job: &Job) -> ExploreOptions {
    let mut o = ExploreOptions {
        simplex: job.simplex(),
        seed: job.seed.unwrap_or(0),
        ..ExploreOptions::default()
    };
    if let Some(c) = job.region_cap {
        o.region_cap = c;
    }
    o
}

fn read_param_set(job: &Job) -> Result<ParameterSet, CliError> {
    let path = job
        .param_set
        .as_ref()
        .ok_or_else(|| CliError::Usage("--param-set is required".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn mplp_build(job: &Job) -> Result<(), CliError> {
    let net = job.network()?;
    let fc = job.forecast(&net)?;
    let method = job.screening_method(&net, &fc, job.method())?;
    let ps = read_param_set(job)?;
    let out = job.out_dir()?;
    let p = ptdf(&net)?;
    let start = Instant::now();
    let screener = Screener::new(&net, &p, method, job.screening_options())?;
    let set = build_policies(&screener, &fc, &ps, &explore_options(job))?;
    let mut text = set.to_json();
    text.push('\n');
    write(&out, "policy.json", &text)?;
    println!("{} policies, {} regions", set.policies.len(), set.region_count());
    write_timing(&out, json!({ "build_ms": ms(start) }))?;
    if !set.is_complete() {
        return Err(CliError::Overflow(
            "store written but flagged partial; evaluate it only with --allow-partial".into(),
        ));
    }
    Ok(())
}

fn read_policy(job: &Job) -> Result<PolicySet, CliError> {
    let path = job.policy.as_ref().ok_or_else(|| CliError::Usage("--policy is required".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let set = PolicySet::from_json(&text)?;
    if !set.is_complete() && !job.allow_partial.unwrap_or(false) {
        return Err(CliError::Overflow(format!(
            "{} is a partial store; pass --allow-partial to evaluate it",
            path.display()
        )));
    }
    Ok(set)
}

pub fn mplp_eval(job: &Job) -> Result<(), CliError> {
    let net = job.network()?;
    let fc = job.forecast(&net)?;
    let method = job.screening_method(&net, &fc, job.method())?;
    let set = read_policy(job)?;
    let out = job.out_dir()?;
    let p = ptdf(&net)?;
    let start = Instant::now();
    let screener = Screener::new(&net, &p, method, job.screening_options())?;
    let sr = hybrid_screen(&set, &screener, &fc, job.hybrid.unwrap_or(false))?;
    write_screening(&out, "screening", &sr)?;
    write_timing(&out, json!({ "evaluation_ms": ms(start) }))
}

/// Screening method whose keep-set each family reduces by.
fn family_method(f: Family) -> MethodArg {
    match f {
        Family::T1 => MethodArg::Det,
        Family::T2 | Family::T4 => MethodArg::Cc,
        Family::T3 | Family::T5 => MethodArg::Ro,
    }
}

fn read_keep(path: &Path, net: &Network) -> Result<Vec<LineBound>, CliError> {
    let bad = |m: String| CliError::Usage(format!("{}: {m}", path.display()));
    let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let bounds = v["bounds"].as_array().ok_or_else(|| bad("no `bounds` array".into()))?;
    let mut keep = Vec::new();
    for (i, b) in bounds.iter().enumerate() {
        let line = b["line"].as_u64().ok_or_else(|| bad(format!("bounds/{i}: missing line")))? as usize;
        if line >= net.n_lines() {
            return Err(bad(format!("bounds/{i}: line {line} out of range")));
        }
        let dir = match b["direction"].as_str() {
            Some("upper") => Direction::Upper,
            Some("lower") => Direction::Lower,
            _ => return Err(bad(format!("bounds/{i}: direction must be upper or lower"))),
        };
        match b["classification"].as_str() {
            Some("non-redundant") => keep.push(LineBound { line, dir }),
            Some("redundant") => {}
            _ => return Err(bad(format!("bounds/{i}: unknown classification"))),
        }
    }
    Ok(keep)
}

pub fn validate(job: &Job) -> Result<(), CliError> {
    let family: Family = job
        .family
        .as_deref()
        .ok_or_else(|| CliError::Usage("--family is required (T1..T5)".into()))?
        .parse()
        .map_err(CliError::Usage)?;
    let net = job.network()?;
    let fc = job.forecast(&net)?;
    let unc = match family {
        Family::T2 | Family::T4 => UncertaintyModel::Gaussian(job.gaussian(&net)?),
        Family::T3 | Family::T5 => UncertaintyModel::Box(job.box_uncertainty(&net, &fc)?),
        Family::T1 => job.uncertainty(&net, &fc)?,
    };
    let n = job.n.unwrap_or(200);
    let seed = job.seed.unwrap_or(0);
    let out = job.out_dir()?;
    let p = ptdf(&net)?;
    let start = Instant::now();
    let method = job.screening_method(&net, &fc, family_method(family))?;
    let screener = Screener::new(&net, &p, method, job.screening_options())?;
    let keep = match &job.screening {
        Some(path) => read_keep(path, &net)?,
        None => screener.screen(&fc)?.keep_set(),
    };
    let screening_ms = ms(start);
    let reals = sample_realizations(&unc, &fc, n, seed);
    let mut opts = ValidationOptions {
        compute_gap: !job.no_gap.unwrap_or(false),
        parallel: rayon::current_num_threads() > 1,
        ..ValidationOptions::default()
    };
    opts.milp.simplex = job.simplex();
    if let Some(t) = job.feas_tol {
        opts.feasibility_tol = t;
    }
    let mut rep = validate_reduced(family, &net, &p, &fc, Some(&unc), &keep, &reals, seed, &opts)?;
    if job.policy.is_some() {
        let set = read_policy(job)?;
        let probe = &reals[..reals.len().min(20)];
        rep.timing.screening = Some(timing_compare(&set, &screener, probe)?);
    }
    write(&out, "validation.json", &(rep.to_json(false) + "\n"))?;
    write(&out, "validation.csv", &rep.to_csv())?;
    println!(
        "{family}: {} samples, infeasibility rate {}, mean gap {}, full model infeasible on {}",
        rep.samples,
        format_sig9(rep.infeasibility_rate),
        format_sig9(rep.mean_gap),
        rep.full_infeasible
    );
    let mut timing = serde_json::to_value(&rep.timing).expect("timing serializes");
    timing["keep_set_ms"] = json!(screening_ms);
    write_timing(&out, timing)
}

pub fn area(job: &Job) -> Result<(), CliError> {
    let net = job.network()?;
    let fc = job.forecast(&net)?;
    let path = job
        .partition
        .as_ref()
        .ok_or_else(|| CliError::Usage("--partition is required".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let part = AreaPartition::from_json(&net, &text)?;
    let ties = match job.ties {
        Some(TiesArg::Omitted) => TieLines::Omitted,
        _ => TieLines::Bounded,
    };
    let out = job.out_dir()?;
    let start = Instant::now();
    let sr = union_screen(&net, &fc, &part, ties)?;
    write_screening(&out, "union", &sr)?;
    for (g, label) in part.areas.iter().enumerate() {
        let mut csv = String::from("line,direction,classification,f_star,margin\n");
        for b in sr.bounds.iter().filter(|b| part.area_of_line(b.bound.line) == Some(g)) {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                b.bound.line,
                b.bound.dir.as_str(),
                b.classification.as_str(),
                b.f_star.map_or_else(String::new, format_sig9),
                format_sig9(b.margin)
            );
        }
        write(&out, &format!("area_{label}.csv"), &csv)?;
    }
    if let Some(spread) = &job.policy_spread {
        let [lo, hi] = spread[..] else {
            return Err(CliError::Usage("--policy-spread takes LO,HI".into()));
        };
        let opts = explore_options(job);
        for (g, label) in part.areas.iter().enumerate() {
            let varying: Vec<_> = part
                .buses_in(g)
                .into_iter()
                .filter(|&k| fc.values()[k] != 0.0)
                .map(|k| net.buses[k])
                .collect();
            let ps = ParameterSet::around(&net, &fc, varying, lo, hi)?;
            let set = area_policy(&net, &fc, &part, g, &ps, ties, &opts)?;
            let mut text = set.to_json();
            text.push('\n');
            write(&out, &format!("area_{label}_policy.json"), &text)?;
            if !set.is_complete() {
                return Err(CliError::Overflow(format!("area {label} policies are partial")));
            }
        }
    }
    write_timing(&out, json!({ "area_ms": ms(start) }))
}

pub fn ptdf_cmd(job: &Job) -> Result<(), CliError> {
    let net = job.network()?;
    let out = job.out_dir()?;
    let p = ptdf(&net)?;
    let mut csv = String::from("line,from,to");
    for b in &net.buses {
        let _ = write!(csv, ",{b}");
    }
    csv.push('\n');
    for (j, br) in net.branches.iter().enumerate() {
        let _ = write!(csv, "{j},{},{}", br.from, br.to);
        for v in p.row(j) {
            let _ = write!(csv, ",{}", format_sig9(*v));
        }
        csv.push('\n');
    }
    write(&out, "ptdf.csv", &csv)
}
