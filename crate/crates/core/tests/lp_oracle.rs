#[path = "common/oracle.rs"]
mod oracle;

use oracle::{lp_oracle, random_lp, Oracle};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ucscreen::lp::{certify, solve_lp, LpStatus};

#[test]
fn simplex_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    let mut counts = [0usize; 3];
    for case in 0..500 {
        let p = random_lp(&mut rng, 6, 10);
        let sol = solve_lp(&p).unwrap();
        match (lp_oracle(&p), sol.status) {
            (Oracle::Optimal(v), LpStatus::Optimal) => {
                counts[0] += 1;
                assert!(
                    (v - sol.objective).abs() <= 1e-6 * v.abs().max(1.0),
                    "case {case}: oracle {v} simplex {}",
                    sol.objective
                );
                let cert = certify(&p, &sol);
                assert!(cert.holds(), "case {case}: {cert:?}");
            }
            (Oracle::Infeasible, LpStatus::Infeasible) => counts[1] += 1,
            (Oracle::Unbounded, LpStatus::Unbounded) => counts[2] += 1,
            (o, s) => panic!("case {case}: oracle {o:?} simplex {s:?}\n{p:?}"),
        }
    }
    // the generator should exercise every outcome
    assert!(counts.iter().all(|&c| c > 0), "{counts:?}");
}

#[test]
fn repeated_solves_are_bit_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let p = random_lp(&mut rng, 6, 10);
        let a = solve_lp(&p).unwrap();
        let b = solve_lp(&p).unwrap();
        assert_eq!(a.status, b.status);
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    }
}

#[test]
fn larger_problems_carry_optimality_certificates() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut optimal = 0;
    for case in 0..200 {
        let p = random_lp(&mut rng, 40, 60);
        let sol = solve_lp(&p).unwrap();
        assert_ne!(sol.status, LpStatus::Stalled, "case {case}");
        if sol.is_optimal() {
            optimal += 1;
            let cert = certify(&p, &sol);
            assert!(cert.holds(), "case {case}: {cert:?}");
        }
    }
    assert!(optimal > 50);
}
