//! Brute-force reference solvers used to check the simplex and branch-and-bound.
//!
//! The LP oracle enumerates every basic solution of the inequality system
//! (rows and bounds) with its own Gaussian elimination; unboundedness is
//! detected by enlarging an artificial box and seeing the optimum move.
//! The MILP oracle enumerates every binary pattern and solves each fixed
//! pattern as an LP.
#![allow(dead_code)]

use rand::Rng;
use ucscreen::lp::{solve_lp, LpProblem, LpStatus, Relation, Sense};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Oracle {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

const FEAS_TOL: f64 = 1e-7;

fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for k in col..n {
                        a[r][k] -= f * a[col][k];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// All constraints as `g x <= h`, bounds clipped to `[-big, big]`.
fn halfspaces(p: &LpProblem, big: f64) -> Vec<(Vec<f64>, f64)> {
    let n = p.n_vars();
    let mut out = Vec::new();
    for c in &p.constraints {
        let neg: Vec<f64> = c.coeffs.iter().map(|a| -a).collect();
        match c.relation {
            Relation::Le => out.push((c.coeffs.clone(), c.rhs)),
            Relation::Ge => out.push((neg, -c.rhs)),
            Relation::Eq => {
                out.push((c.coeffs.clone(), c.rhs));
                out.push((neg, -c.rhs));
            }
        }
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        out.push((e.clone(), p.upper[j].min(big)));
        e[j] = -1.0;
        out.push((e, -(p.lower[j].max(-big))));
    }
    out
}

fn best_vertex(p: &LpProblem, big: f64) -> Option<f64> {
    let n = p.n_vars();
    let hs = halfspaces(p, big);
    let sign = if p.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let mut best: Option<f64> = None;
    let mut pick: Vec<usize> = (0..n).collect();
    let k = hs.len();
    loop {
        let a: Vec<Vec<f64>> = pick.iter().map(|&i| hs[i].0.clone()).collect();
        let b: Vec<f64> = pick.iter().map(|&i| hs[i].1).collect();
        if let Some(x) = solve_square(a, b) {
            let feasible = hs.iter().all(|(g, h)| {
                let act: f64 = g.iter().zip(&x).map(|(u, v)| u * v).sum();
                act <= h + FEAS_TOL * (1.0 + h.abs())
            });
            if feasible {
                let obj = sign * p.objective_value(&x);
                if best.is_none_or(|b| obj < b) {
                    best = Some(obj);
                }
            }
        }
        // next n-combination of 0..k in lexicographic order
        let mut i = n;
        loop {
            if i == 0 {
                return best.map(|b| sign * b);
            }
            i -= 1;
            if pick[i] < k - n + i {
                break;
            }
        }
        pick[i] += 1;
        for r in i + 1..n {
            pick[r] = pick[r - 1] + 1;
        }
    }
}

pub fn lp_oracle(p: &LpProblem) -> Oracle {
    let Some(a) = best_vertex(p, 1e4) else {
        return Oracle::Infeasible;
    };
    let b = best_vertex(p, 2e4).expect("feasible with a smaller box");
    if (a - b).abs() > 1e-6 * a.abs().max(1.0) {
        Oracle::Unbounded
    } else {
        Oracle::Optimal(a)
    }
}

/// Best objective over every binary pattern of `binaries`, each pattern an LP
/// with the binaries fixed through their bounds and solved by the simplex.
pub fn milp_oracle(p: &LpProblem, binaries: &[usize]) -> Oracle {
    let mut best: Option<f64> = None;
    let sign = if p.sense == Sense::Maximize { -1.0 } else { 1.0 };
    for mask in 0u32..(1u32 << binaries.len()) {
        let mut q = p.clone();
        for (bit, &j) in binaries.iter().enumerate() {
            let v = f64::from((mask >> bit) & 1);
            if v < p.lower[j] || v > p.upper[j] {
                continue;
            }
            q.lower[j] = v;
            q.upper[j] = v;
        }
        if binaries.iter().any(|&j| q.lower[j] != q.upper[j]) {
            continue;
        }
        let sol = solve_lp(&q).expect("valid pattern LP");
        match sol.status {
            LpStatus::Optimal => {
                if best.is_none_or(|b| sign * sol.objective < sign * b) {
                    best = Some(sol.objective);
                }
            }
            LpStatus::Unbounded => return Oracle::Unbounded,
            LpStatus::Infeasible => {}
            LpStatus::Stalled => panic!("pattern LP stalled"),
        }
    }
    best.map_or(Oracle::Infeasible, Oracle::Optimal)
}

/// Random LP with at most `max_vars` variables and `max_rows` rows. Right-hand
/// sides are built around a random point, so most instances are feasible.
pub fn random_lp<R: Rng>(rng: &mut R, max_vars: usize, max_rows: usize) -> LpProblem {
    let n = rng.random_range(1..=max_vars);
    let m = rng.random_range(1..=max_rows);
    let mut p = if rng.random_bool(0.5) {
        LpProblem::minimize()
    } else {
        LpProblem::maximize()
    };
    let mut x0 = Vec::with_capacity(n);
    for _ in 0..n {
        let lo = f64::from(rng.random_range(-10i32..=0));
        let hi = lo + f64::from(rng.random_range(1i32..=15));
        let (l, u) = match rng.random_range(0..10) {
            0 => (f64::NEG_INFINITY, hi),
            1 => (lo, f64::INFINITY),
            _ => (lo, hi),
        };
        let cost = f64::from(rng.random_range(-6i32..=6));
        p.add_var(l, u, cost);
        x0.push(rng.random_range(lo..=hi));
    }
    for _ in 0..m {
        let mut terms: Vec<(usize, f64)> = Vec::new();
        for j in 0..n {
            if rng.random_bool(0.7) {
                terms.push((j, f64::from(rng.random_range(-5i32..=5))));
            }
        }
        let act: f64 = terms.iter().map(|&(j, a)| a * x0[j]).sum();
        let relation = match rng.random_range(0..10) {
            0 => Relation::Eq,
            1..=5 => Relation::Le,
            _ => Relation::Ge,
        };
        let rhs = if rng.random_bool(0.08) {
            f64::from(rng.random_range(-30i32..=30))
        } else {
            match relation {
                Relation::Le => act + rng.random_range(0.0..3.0),
                Relation::Ge => act - rng.random_range(0.0..3.0),
                Relation::Eq => act,
            }
        };
        p.add_row(&terms, relation, rhs);
    }
    p
}

/// Small commitment-style MILP: `k` units with binary status and continuous
/// output, a demand row and a few random side rows.
pub fn random_uc_milp<R: Rng>(rng: &mut R, max_units: usize) -> (LpProblem, Vec<usize>) {
    let k = rng.random_range(1..=max_units);
    let mut p = LpProblem::minimize();
    let mut units = Vec::new();
    let mut total = 0.0;
    for _ in 0..k {
        let pmax = f64::from(rng.random_range(20i32..=120));
        let pmin = if rng.random_bool(0.5) {
            (pmax * rng.random_range(0.1..0.5)).round()
        } else {
            0.0
        };
        let u = p.add_var(0.0, 1.0, f64::from(rng.random_range(0i32..=40)));
        let x = p.add_var(0.0, f64::INFINITY, f64::from(rng.random_range(5i32..=50)));
        p.add_row(&[(x, 1.0), (u, -pmax)], Relation::Le, 0.0);
        p.add_row(&[(x, 1.0), (u, -pmin)], Relation::Ge, 0.0);
        units.push((u, x, pmax));
        total += pmax;
    }
    let demand = (total * rng.random_range(0.2..1.05)).round();
    let xs: Vec<(usize, f64)> = units.iter().map(|&(_, x, _)| (x, 1.0)).collect();
    p.add_row(&xs, Relation::Eq, demand);
    for _ in 0..rng.random_range(0..3) {
        let mut terms: Vec<(usize, f64)> = Vec::new();
        for &(_, x, _) in &units {
            if rng.random_bool(0.5) {
                terms.push((x, f64::from(rng.random_range(-1i32..=1))));
            }
        }
        p.add_row(&terms, Relation::Le, (0.5 * demand).round());
    }
    let binaries = units.iter().map(|&(u, _, _)| u).collect();
    (p, binaries)
}
