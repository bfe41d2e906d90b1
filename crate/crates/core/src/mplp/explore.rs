//! Critical-region enumeration by geometric exploration.
//!
//! Each region is read off the optimal basis at a seed point: with the basis
//! fixed, the basic variables are affine in `theta`, so the region where the
//! basis stays primal feasible is a polyhedron and the optimal value is affine
//! on it (dual feasibility does not depend on `theta` since only the
//! right-hand side moves). Neighbors are found by stepping just across each
//! facet; random fill passes pick up regions whose shared facet was not hit
//! at its center.

use std::collections::{HashSet, VecDeque};

use log::debug;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lp::{solve_lp_with, ColumnState, LpSolution, LpStatus, Relation, SimplexOptions};

use super::poly::{Clean, Poly};
use super::{dot, CriticalRegion, MplpError, ParameterSet, ParametricLp, PolicyStatus};

#[derive(Debug, Clone)]
pub struct ExploreOptions {
    pub region_cap: usize,
    /// Facet step, relative to the parameter-set scale.
    pub step_rel: f64,
    /// Seed perturbation on degenerate solves, relative to the scale.
    pub jitter_rel: f64,
    pub retries: usize,
    /// Random points per fill pass.
    pub fill_samples: usize,
    pub fill_passes: usize,
    pub seed: u64,
    pub simplex: SimplexOptions,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            region_cap: 10_000,
            step_rel: 1e-6,
            jitter_rel: 1e-7,
            retries: 5,
            fill_samples: 256,
            fill_passes: 4,
            seed: 0,
            simplex: SimplexOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Exploration {
    pub regions: Vec<CriticalRegion>,
    pub status: PolicyStatus,
    pub uncovered: Vec<Vec<f64>>,
    pub lp_solves: usize,
    /// Seeds where the LP itself was infeasible.
    pub infeasible_seeds: usize,
}

enum Attempt {
    Region(CriticalRegion, Vec<usize>),
    Infeasible,
    /// The basis of an existing region; the seed sits on its boundary.
    Known,
    Degenerate,
}

struct Explorer<'a> {
    plp: &'a ParametricLp,
    theta_set: Poly,
    bbox: Vec<(f64, f64)>,
    scale: f64,
    opts: &'a ExploreOptions,
    rng: ChaCha8Rng,
    regions: Vec<CriticalRegion>,
    bases: HashSet<Vec<usize>>,
    uncovered: Vec<Vec<f64>>,
    lp_solves: usize,
    infeasible_seeds: usize,
}

fn column_bounds(plp: &ParametricLp, k: usize) -> (f64, f64) {
    let n = plp.base.n_vars();
    if k < n {
        return (plp.base.lower[k], plp.base.upper[k]);
    }
    match plp.base.constraints[k - n].relation {
        Relation::Le => (0.0, f64::INFINITY),
        Relation::Ge => (f64::NEG_INFINITY, 0.0),
        Relation::Eq => (0.0, 0.0),
    }
}

impl<'a> Explorer<'a> {
    fn solve(&mut self, theta: &[f64]) -> LpSolution {
        self.lp_solves += 1;
        solve_lp_with(&self.plp.instance(theta), &self.opts.simplex).expect("parametric instance is well formed")
    }

    fn covered(&self, theta: &[f64]) -> bool {
        let tol = 1e-12;
        self.regions.iter().any(|r| r.contains(theta, tol))
    }

    /// Region of the optimal basis in `sol`, before cleaning.
    fn raw_region(&self, sol: &LpSolution) -> Option<(Poly, Vec<f64>, f64)> {
        let basis = sol.basis.as_ref()?;
        let plp = self.plp;
        let lp = &plp.base;
        let (n, m, p) = (lp.n_vars(), lp.n_rows(), plp.dim());
        let col = |i: usize, k: usize| -> f64 {
            if k < n {
                lp.constraints[i].coeffs[k]
            } else if k - n == i {
                1.0
            } else {
                0.0
            }
        };
        let bmat = DMatrix::from_fn(m, m, |i, c| col(i, basis.basic[c]));
        let lu = bmat.lu();
        // r0 = rhs_base - F theta_base - N v_N
        let mut r0 = DVector::from_fn(m, |i, _| lp.constraints[i].rhs - dot(&plp.rhs_sens[i], &plp.theta_base));
        let is_basic: Vec<bool> = {
            let mut v = vec![false; n + m];
            for &b in &basis.basic {
                v[b] = true;
            }
            v
        };
        let mut nonbasic_cost = 0.0;
        for k in 0..n + m {
            if is_basic[k] {
                continue;
            }
            let v = match basis.state[k] {
                ColumnState::AtLower => column_bounds(plp, k).0,
                ColumnState::AtUpper => column_bounds(plp, k).1,
                _ => basis.values[k],
            };
            if v == 0.0 {
                continue;
            }
            if k < n {
                nonbasic_cost += lp.objective[k] * v;
                for i in 0..m {
                    r0[i] -= lp.constraints[i].coeffs[k] * v;
                }
            } else {
                r0[k - n] -= v;
            }
        }
        let y0 = lu.solve(&r0)?;
        let fmat = DMatrix::from_fn(m, p.max(1), |i, c| if c < p { plp.rhs_sens[i][c] } else { 0.0 });
        let ymat = lu.solve(&fmat)?;
        if y0.iter().chain(ymat.iter()).any(|v| !v.is_finite()) {
            return None;
        }

        let mut poly = self.theta_set.clone();
        let mut a_hat = plp.offset_sens.clone();
        let mut b_hat = nonbasic_cost + lp.objective_offset - dot(&plp.offset_sens, &plp.theta_base);
        for (i, &k) in basis.basic.iter().enumerate() {
            let yrow: Vec<f64> = (0..p).map(|c| ymat[(i, c)]).collect();
            if k < n && lp.objective[k] != 0.0 {
                for (a, y) in a_hat.iter_mut().zip(&yrow) {
                    *a += lp.objective[k] * y;
                }
                b_hat += lp.objective[k] * y0[i];
            }
            let (lo, hi) = column_bounds(plp, k);
            if lo.is_finite() {
                poly.a.push(yrow.iter().map(|v| -v).collect());
                poly.b.push(y0[i] - lo);
            }
            if hi.is_finite() {
                poly.a.push(yrow);
                poly.b.push(hi - y0[i]);
            }
        }
        Some((poly, a_hat, b_hat))
    }

    fn attempt(&mut self, theta: &[f64]) -> Attempt {
        let sol = self.solve(theta);
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Attempt::Infeasible,
            LpStatus::Unbounded | LpStatus::Stalled => return Attempt::Degenerate,
        }
        let Some(basis) = sol.basis.as_ref() else {
            return Attempt::Degenerate;
        };
        let mut key = basis.basic.clone();
        key.sort_unstable();
        if self.bases.contains(&key) {
            return Attempt::Known;
        }
        let Some((mut poly, a_hat, b_hat)) = self.raw_region(&sol) else {
            return Attempt::Degenerate;
        };
        let tol = 1e-9 * self.scale;
        if poly.normalize(tol) == Clean::Empty {
            return Attempt::Degenerate;
        }
        if poly.max_violation(theta) > 1e-6 * self.scale {
            return Attempt::Degenerate;
        }
        let keep = self.theta_set.a.len();
        if poly.remove_redundant(Some(&self.bbox), keep, &self.opts.simplex) == Clean::Empty {
            return Attempt::Degenerate;
        }
        let Some((center, radius)) = poly.chebyshev(None, &self.opts.simplex) else {
            return Attempt::Degenerate;
        };
        if radius <= 1e-9 * self.scale {
            return Attempt::Degenerate;
        }
        let region = CriticalRegion {
            g_mat: poly.a,
            g: poly.b,
            a_hat,
            b_hat,
            active_set: sol.active_set.clone(),
            center,
            radius,
        };
        // the law must reproduce a direct solve at the center
        let check = self.solve(&region.center);
        if check.status != LpStatus::Optimal {
            return Attempt::Degenerate;
        }
        let v = region.value(&region.center);
        if (v - check.objective).abs() > 1e-6 * check.objective.abs().max(1.0) {
            debug!("affine law off by {} at region center", v - check.objective);
            return Attempt::Degenerate;
        }
        Attempt::Region(region, key)
    }

    fn jitter(&mut self, theta: &[f64]) -> Vec<f64> {
        let amp = self.opts.jitter_rel * self.scale;
        theta.iter().map(|t| t + amp * self.rng.random_range(-1.0..1.0)).collect()
    }

    /// Tries to build the region at `seed`; returns true when one was added.
    fn visit(&mut self, seed: &[f64], queue: &mut VecDeque<Vec<f64>>) -> bool {
        let mut theta = seed.to_vec();
        for attempt in 0..=self.opts.retries {
            if attempt > 0 {
                theta = self.jitter(seed);
                if !self.theta_set.contains(&theta, 0.0) {
                    continue;
                }
            }
            match self.attempt(&theta) {
                Attempt::Region(region, key) => {
                    self.push_neighbors(&region, queue);
                    self.regions.push(region);
                    self.bases.insert(key);
                    return true;
                }
                Attempt::Infeasible => {
                    self.infeasible_seeds += 1;
                    return false;
                }
                Attempt::Known => return false,
                Attempt::Degenerate => {}
            }
        }
        debug!("degenerate pocket left uncovered at {seed:?}");
        self.uncovered.push(seed.to_vec());
        false
    }

    fn push_neighbors(&self, region: &CriticalRegion, queue: &mut VecDeque<Vec<f64>>) {
        let poly = Poly {
            a: region.g_mat.clone(),
            b: region.g.clone(),
        };
        let eps = self.opts.step_rel * self.scale;
        for i in 0..poly.a.len() {
            let Some((point, r)) = poly.chebyshev(Some(i), &self.opts.simplex) else {
                continue;
            };
            if r <= 1e-12 * self.scale {
                continue;
            }
            let step: Vec<f64> = point.iter().zip(&poly.a[i]).map(|(t, a)| t + eps * a).collect();
            if self.theta_set.contains(&step, 0.0) {
                queue.push_back(step);
            }
        }
    }

    fn drain(&mut self, queue: &mut VecDeque<Vec<f64>>) -> Result<usize, ()> {
        let mut added = 0;
        while let Some(seed) = queue.pop_front() {
            if self.regions.len() >= self.opts.region_cap {
                return Err(());
            }
            if !self.theta_set.contains(&seed, 0.0) || self.covered(&seed) {
                continue;
            }
            if self.visit(&seed, queue) {
                added += 1;
            }
        }
        Ok(added)
    }

    fn sample(&mut self) -> Option<Vec<f64>> {
        for _ in 0..1000 {
            let t: Vec<f64> = self
                .bbox
                .iter()
                .map(|(lo, hi)| if hi > lo { self.rng.random_range(*lo..*hi) } else { *lo })
                .collect();
            if self.theta_set.contains(&t, 0.0) {
                return Some(t);
            }
        }
        None
    }
}

/// Enumerates the critical regions of `plp` over `ps`.
pub fn enumerate_regions(
    plp: &ParametricLp,
    ps: &ParameterSet,
    opts: &ExploreOptions,
) -> Result<Exploration, MplpError> {
    let p = plp.dim();
    if ps.dim() != p {
        return Err(MplpError::ParameterSet(format!(
            "parameter set has {} coordinates, LP has {p}",
            ps.dim()
        )));
    }
    if p == 0 {
        return Ok(single_point(plp, opts));
    }
    let mut theta_set = Poly {
        a: ps.h_mat.clone(),
        b: ps.h.clone(),
    };
    if theta_set.normalize(0.0) == Clean::Empty {
        return Err(MplpError::EmptySet);
    }
    let bbox = match theta_set.bounding_box(&opts.simplex) {
        Err(()) => return Err(MplpError::EmptySet),
        Ok(b) => b,
    };
    let mut finite_box = Vec::with_capacity(p);
    for (k, (lo, hi)) in bbox.into_iter().enumerate() {
        match (lo, hi) {
            (Some(lo), Some(hi)) => finite_box.push((lo, hi)),
            _ => return Err(MplpError::UnboundedSet(k)),
        }
    }
    let scale = finite_box.iter().map(|(lo, hi)| hi - lo).fold(0.0, f64::max);
    if scale <= 0.0 {
        return Err(MplpError::FlatSet);
    }
    let (center, radius) = theta_set.chebyshev(None, &opts.simplex).ok_or(MplpError::EmptySet)?;
    if radius <= 1e-9 * scale {
        return Err(MplpError::FlatSet);
    }

    let mut ex = Explorer {
        plp,
        theta_set,
        bbox: finite_box,
        scale,
        opts,
        rng: ChaCha8Rng::seed_from_u64(opts.seed),
        regions: Vec::new(),
        bases: HashSet::new(),
        uncovered: Vec::new(),
        lp_solves: 0,
        infeasible_seeds: 0,
    };
    let mut queue = VecDeque::from([center]);
    let mut status = PolicyStatus::Complete;
    'outer: for pass in 0..=opts.fill_passes {
        if pass > 0 {
            let mut found = false;
            for _ in 0..opts.fill_samples {
                let Some(t) = ex.sample() else { break };
                if !ex.covered(&t) {
                    queue.push_back(t);
                    found = true;
                }
            }
            if !found {
                break;
            }
        }
        match ex.drain(&mut queue) {
            Err(()) => {
                status = PolicyStatus::Overflow;
                break 'outer;
            }
            Ok(0) if pass > 0 => break,
            Ok(_) => {}
        }
    }
    debug!(
        "{} regions, {} LP solves, {} infeasible seeds, {} uncovered",
        ex.regions.len(),
        ex.lp_solves,
        ex.infeasible_seeds,
        ex.uncovered.len()
    );
    Ok(Exploration {
        regions: ex.regions,
        status,
        uncovered: ex.uncovered,
        lp_solves: ex.lp_solves,
        infeasible_seeds: ex.infeasible_seeds,
    })
}

/// No varying buses: one region, the whole (zero-dimensional) set.
fn single_point(plp: &ParametricLp, opts: &ExploreOptions) -> Exploration {
    let sol = solve_lp_with(&plp.base, &opts.simplex).expect("parametric instance is well formed");
    let regions = if sol.status == LpStatus::Optimal {
        vec![CriticalRegion {
            g_mat: Vec::new(),
            g: Vec::new(),
            a_hat: Vec::new(),
            b_hat: sol.objective,
            active_set: sol.active_set,
            center: Vec::new(),
            radius: 0.0,
        }]
    } else {
        Vec::new()
    };
    Exploration {
        infeasible_seeds: usize::from(sol.status == LpStatus::Infeasible),
        regions,
        status: PolicyStatus::Complete,
        uncovered: Vec::new(),
        lp_solves: 1,
    }
}
