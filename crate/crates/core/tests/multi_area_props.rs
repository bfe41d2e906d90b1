use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ucscreen::case_io::{compute_ptdf, synthetic, Forecast, Network};
use ucscreen::lp::solve_lp;
use ucscreen::milp::MilpStatus;
use ucscreen::mplp::{evaluate_policy, ExploreOptions, ParameterSet};
use ucscreen::multi_area::{
    area_lp, area_policy, binding_bounds, build_angle_uc, screen_whole, solve_angle_uc, union_screen, AreaError,
    AreaPartition, TieLines,
};
use ucscreen::screening::Classification;
use ucscreen::uc_models::{all_line_bounds, build_deterministic_uc, LineBound};

fn toy_loads(n: usize, seed: u64) -> Vec<Forecast> {
    let (_, fc) = synthetic::two_triangles();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Forecast(fc.values().iter().map(|l| l * rng.random_range(0.5..1.6)).collect()))
        .collect()
}

fn non_redundant(sr: &ucscreen::screening::ScreeningResult) -> Vec<LineBound> {
    sr.keep_set()
}

#[test]
fn angle_and_ptdf_uc_agree_on_random_networks() {
    let mut optimal = 0;
    for seed in 0..50 {
        let (net, fc) = synthetic::generate(&synthetic::GeneratorOptions::with_buses(5 + seed as usize % 4), 900 + seed);
        let ptdf = compute_ptdf(&net).unwrap();
        let all = all_line_bounds(&net);
        let a = build_angle_uc(&net, &fc, &AreaPartition::single(&net), &all).unwrap();
        let (status, obj, _) = solve_angle_uc(&a).unwrap();
        let p = build_deterministic_uc(&net, &ptdf, &fc, &all).unwrap().solve().unwrap();
        assert_eq!(status, p.status, "seed {seed}");
        if status == MilpStatus::Optimal {
            assert!((obj - p.objective).abs() <= 1e-6 * obj.abs().max(1.0), "seed {seed}: {obj} vs {}", p.objective);
            optimal += 1;
        }
    }
    assert!(optimal > 25, "{optimal}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn angle_objective_independent_of_reference(seed in 0u64..10_000, pick in 0usize..6) {
        let (net, fc) = synthetic::generate(&synthetic::GeneratorOptions::with_buses(6), seed);
        let moved = net.with_reference(net.buses[pick]).unwrap();
        let all = all_line_bounds(&net);
        let a = build_angle_uc(&net, &fc, &AreaPartition::single(&net), &all).unwrap();
        let b = build_angle_uc(&moved, &fc, &AreaPartition::single(&moved), &all).unwrap();
        let (sa, oa, _) = solve_angle_uc(&a).unwrap();
        let (sb, ob, _) = solve_angle_uc(&b).unwrap();
        prop_assert_eq!(sa, sb);
        if sa == MilpStatus::Optimal {
            prop_assert!((oa - ob).abs() <= 1e-6 * oa.abs().max(1.0));
        }
    }
}

#[test]
fn inclusion_chain_on_two_triangles() {
    let (net, _) = synthetic::two_triangles();
    let part = AreaPartition::new(&net, &synthetic::two_triangles_areas()).unwrap();
    let all = all_line_bounds(&net);
    let mut solved = 0;
    let mut binding_seen = 0;
    for fc in toy_loads(100, 1) {
        let model = build_angle_uc(&net, &fc, &part, &all).unwrap();
        let (status, obj, x) = solve_angle_uc(&model).unwrap();
        let whole = match screen_whole(&net, &fc) {
            Ok(w) => w,
            Err(AreaError::Infeasible { .. }) => {
                assert_ne!(status, MilpStatus::Optimal);
                continue;
            }
            Err(e) => panic!("{e}"),
        };
        let union = union_screen(&net, &fc, &part, TieLines::Bounded).unwrap();
        let (w, u) = (non_redundant(&whole), non_redundant(&union));
        for b in &w {
            assert!(u.contains(b), "{b} kept by whole screening but not by the area union");
        }
        if status != MilpStatus::Optimal {
            continue;
        }
        solved += 1;
        let binding = binding_bounds(&net, &model, &x, 1e-7);
        binding_seen += binding.len();
        for b in &binding {
            assert!(w.contains(b), "binding {b} screened out by whole screening");
        }
        // the union keep-set reproduces the optimum
        let reduced = build_angle_uc(&net, &fc, &part, &u).unwrap();
        let (rs, robj, _) = solve_angle_uc(&reduced).unwrap();
        assert_eq!(rs, MilpStatus::Optimal);
        assert!((robj - obj).abs() <= 1e-6 * obj.abs().max(1.0), "{robj} vs {obj}");
    }
    assert!(solved > 50, "{solved}");
    assert!(binding_seen > 0);
}

#[test]
fn area_extreme_flow_dominates_whole() {
    let (net, _) = synthetic::two_triangles();
    let part = AreaPartition::new(&net, &synthetic::two_triangles_areas()).unwrap();
    for fc in toy_loads(30, 2) {
        let Ok(whole) = screen_whole(&net, &fc) else { continue };
        let union = union_screen(&net, &fc, &part, TieLines::Bounded).unwrap();
        let mut union_count = 0;
        for (w, u) in whole.bounds.iter().zip(&union.bounds) {
            let sign = w.bound.dir.sign();
            assert!(u.f_star.unwrap() * sign >= w.f_star.unwrap() * sign - 1e-7, "{}", w.bound);
            if u.classification == Classification::Redundant {
                assert_eq!(w.classification, Classification::Redundant);
            }
            union_count += usize::from(u.classification == Classification::NonRedundant);
        }
        assert!(union_count >= whole.count_non_redundant());
    }
}

/// With tie flows dropped from the boundary balance each area runs islanded,
/// which restricts rather than relaxes; on the toy this loses a bound the
/// whole model keeps or makes an area LP infeasible.
#[test]
fn islanded_areas_are_not_a_relaxation() {
    let (net, _) = synthetic::two_triangles();
    let part = AreaPartition::new(&net, &synthetic::two_triangles_areas()).unwrap();
    let mut broken = 0;
    for fc in toy_loads(100, 3) {
        let Ok(whole) = screen_whole(&net, &fc) else { continue };
        match union_screen(&net, &fc, &part, TieLines::Omitted) {
            Err(AreaError::Infeasible { .. }) => broken += 1,
            Err(e) => panic!("{e}"),
            Ok(u) => {
                let keep = u.keep_set();
                if whole.keep_set().iter().any(|b| !keep.contains(b)) {
                    broken += 1;
                }
            }
        }
    }
    assert!(broken > 0);
}

fn area_case() -> (Network, Forecast, AreaPartition) {
    let (net, fc) = synthetic::two_triangles();
    let part = AreaPartition::new(&net, &synthetic::two_triangles_areas()).unwrap();
    (net, fc, part)
}

#[test]
fn area_policy_matches_area_lp() {
    let (net, fc, part) = area_case();
    let ps = ParameterSet::around(&net, &fc, vec![2, 3], 0.5, 1.5).unwrap();
    let set = area_policy(&net, &fc, &part, 0, &ps, TieLines::Bounded, &ExploreOptions::default()).unwrap();
    assert_eq!(set.policies.len(), 6);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for pol in &set.policies {
        let bound = pol.bound.unwrap();
        for _ in 0..50 {
            let mut v = fc.values().to_vec();
            v[1] = rng.random_range(10.0..30.0);
            v[2] = rng.random_range(45.0..135.0);
            let q = Forecast(v);
            let lp = solve_lp(&area_lp(&net, &q, &part, 0, bound, TieLines::Bounded).unwrap()).unwrap();
            match evaluate_policy(pol, &q).value() {
                Some(val) => assert!((val - lp.objective).abs() <= 1e-6 * lp.objective.abs().max(1.0), "{bound}"),
                None => assert!(!lp.is_optimal() || !pol.uncovered.is_empty(), "{bound} uncovered"),
            }
        }
    }
    // a varying bus outside the area is refused
    let foreign = ParameterSet::around(&net, &fc, vec![4], 0.5, 1.5).unwrap();
    assert!(area_policy(&net, &fc, &part, 0, &foreign, TieLines::Bounded, &ExploreOptions::default()).is_err());
}

#[test]
fn area_without_varying_load_gets_single_regions() {
    let (net, fc, part) = area_case();
    // area 2 does not see the forecast at bus 2
    let ps = ParameterSet::around(&net, &fc, vec![], 0.5, 1.5).unwrap();
    let set = area_policy(&net, &fc, &part, 1, &ps, TieLines::Bounded, &ExploreOptions::default()).unwrap();
    assert!(set.policies.iter().all(|p| p.regions.len() == 1));
}
