//! Bounded-variable primal simplex on a dense tableau.
//!
//! Columns are the structural variables, one slack per row and one
//! artificial per row that is not satisfied by the initial nonbasic point.
//! Phase 1 minimizes the sum of artificials; phase 2 the real objective.
//! Pricing is Dantzig's rule and falls back to Bland's rule after a run of
//! degenerate pivots. The tableau is rebuilt from an LU factorization of the
//! basis at a fixed interval and before the solution is read off.

use nalgebra::DMatrix;

use super::{
    active_set, Basis, ColumnState, LpError, LpProblem, LpSolution, LpStatus, Relation, Sense,
    DEFAULT_ACTIVE_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub stall_threshold: usize,
    /// Pivot budget; `None` picks one from the problem size.
    pub max_iterations: Option<usize>,
    pub refactor_interval: usize,
    pub active_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-7,
            pivot_tol: 1e-9,
            stall_threshold: 40,
            max_iterations: None,
            refactor_interval: 60,
            active_tol: DEFAULT_ACTIVE_TOL,
        }
    }
}

pub fn solve_lp(p: &LpProblem) -> Result<LpSolution, LpError> {
    solve_lp_with(p, &SimplexOptions::default())
}

pub fn solve_lp_with(p: &LpProblem, opts: &SimplexOptions) -> Result<LpSolution, LpError> {
    p.validate()?;
    let mut t = Tableau::build(p, opts);
    Ok(t.run(p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

enum StepOutcome {
    Optimal,
    Unbounded,
    Stalled,
}

struct Tableau<'o> {
    opts: &'o SimplexOptions,
    m: usize,
    n: usize,
    ncols: usize,
    /// Original constraint matrix over all columns, row-major.
    orig: Vec<f64>,
    rhs: Vec<f64>,
    /// `B^-1 [A I art]`, row-major.
    t: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<ColumnState>,
    val: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    /// Phase-2 costs in minimization form.
    cost2: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    n_art: usize,
    iterations: usize,
    max_iterations: usize,
    since_refactor: usize,
    degenerate_run: usize,
    bland: bool,
}

impl<'o> Tableau<'o> {
    fn build(p: &LpProblem, opts: &'o SimplexOptions) -> Self {
        let m = p.n_rows();
        let n = p.n_vars();
        let sign = if p.sense == Sense::Maximize { -1.0 } else { 1.0 };

        let mut val = vec![0.0; n + m];
        let mut state = vec![ColumnState::AtLower; n + m];
        let mut lb = Vec::with_capacity(n + 2 * m);
        let mut ub = Vec::with_capacity(n + 2 * m);
        for j in 0..n {
            lb.push(p.lower[j]);
            ub.push(p.upper[j]);
            let (s, v) = initial_nonbasic(p.lower[j], p.upper[j]);
            state[j] = s;
            val[j] = v;
        }
        for c in &p.constraints {
            let (l, u) = match c.relation {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            lb.push(l);
            ub.push(u);
        }

        // residual of each row at the initial nonbasic point decides whether the
        // slack can start basic or an artificial is needed
        let mut basis = vec![usize::MAX; m];
        let mut artificials: Vec<(usize, f64)> = Vec::new();
        for (k, c) in p.constraints.iter().enumerate() {
            let act: f64 = c.coeffs.iter().zip(&val[..n]).map(|(a, v)| a * v).sum();
            let r = c.rhs - act;
            let slack = n + k;
            let fits = c.relation != Relation::Eq && r >= lb[slack] && r <= ub[slack];
            if fits {
                basis[k] = slack;
                state[slack] = ColumnState::Basic;
                val[slack] = r;
            } else {
                state[slack] = if c.relation == Relation::Ge {
                    ColumnState::AtUpper
                } else {
                    ColumnState::AtLower
                };
                val[slack] = 0.0;
                let sigma = if r >= 0.0 { 1.0 } else { -1.0 };
                artificials.push((k, sigma));
            }
        }
        let n_art = artificials.len();
        let ncols = n + m + n_art;
        let mut orig = vec![0.0; m * ncols];
        for (k, c) in p.constraints.iter().enumerate() {
            let row = &mut orig[k * ncols..(k + 1) * ncols];
            row[..n].copy_from_slice(&c.coeffs);
            row[n + k] = 1.0;
        }
        for (i, &(k, sigma)) in artificials.iter().enumerate() {
            let col = n + m + i;
            orig[k * ncols + col] = sigma;
            basis[k] = col;
            lb.push(0.0);
            ub.push(f64::INFINITY);
            state.push(ColumnState::Basic);
            let act: f64 = p.constraints[k].coeffs.iter().zip(&val[..n]).map(|(a, v)| a * v).sum();
            val.push((p.constraints[k].rhs - act).abs());
        }

        let mut cost2 = vec![0.0; ncols];
        for j in 0..n {
            cost2[j] = sign * p.objective[j];
        }
        let max_iterations = opts
            .max_iterations
            .unwrap_or(50 * (m + n) + 1000);

        // the initial basis is the identity up to artificial signs, so the
        // tableau is orig with artificial rows scaled by sigma
        let mut t = orig.clone();
        for &(k, sigma) in &artificials {
            if sigma < 0.0 {
                for v in &mut t[k * ncols..(k + 1) * ncols] {
                    *v = -*v;
                }
            }
        }

        Tableau {
            opts,
            m,
            n,
            ncols,
            orig,
            rhs: p.constraints.iter().map(|c| c.rhs).collect(),
            t,
            basis,
            state,
            val,
            lb,
            ub,
            cost2,
            cost: vec![0.0; ncols],
            d: vec![0.0; ncols],
            n_art,
            iterations: 0,
            max_iterations,
            since_refactor: 0,
            degenerate_run: 0,
            bland: false,
        }
    }

    fn run(&mut self, p: &LpProblem) -> LpSolution {
        let (n, m) = (self.n, self.m);
        if self.n_art > 0 {
            self.set_phase(Phase::One);
            match self.iterate() {
                StepOutcome::Optimal => {}
                // phase 1 is bounded below by zero
                StepOutcome::Unbounded | StepOutcome::Stalled => {
                    return LpSolution::non_optimal(LpStatus::Stalled, self.iterations, n, m)
                }
            }
            if !self.refactor() {
                return LpSolution::non_optimal(LpStatus::Stalled, self.iterations, n, m);
            }
            let infeas: f64 = self.val[n + m..].iter().sum();
            let scale = self.rhs.iter().fold(1.0f64, |a, b| a.max(b.abs()));
            if infeas > self.opts.feasibility_tol * scale {
                return LpSolution::non_optimal(LpStatus::Infeasible, self.iterations, n, m);
            }
            self.drive_out_artificials();
        }
        self.set_phase(Phase::Two);
        for round in 0..4 {
            match self.iterate() {
                StepOutcome::Optimal => {}
                StepOutcome::Unbounded => {
                    return LpSolution::non_optimal(LpStatus::Unbounded, self.iterations, n, m)
                }
                StepOutcome::Stalled => {
                    return LpSolution::non_optimal(LpStatus::Stalled, self.iterations, n, m)
                }
            }
            if !self.refactor() {
                return LpSolution::non_optimal(LpStatus::Stalled, self.iterations, n, m);
            }
            if self.choose_entering().is_none() || round == 3 {
                break;
            }
        }
        self.pivot_in_free_columns();
        if !self.refactor() {
            return LpSolution::non_optimal(LpStatus::Stalled, self.iterations, n, m);
        }
        self.extract(p)
    }

    fn set_phase(&mut self, phase: Phase) {
        let (n, m) = (self.n, self.m);
        match phase {
            Phase::One => {
                self.cost = vec![0.0; self.ncols];
                for c in &mut self.cost[n + m..] {
                    *c = 1.0;
                }
            }
            Phase::Two => self.cost = self.cost2.clone(),
        }
        self.degenerate_run = 0;
        self.bland = false;
        self.recompute_reduced_costs();
    }

    fn recompute_reduced_costs(&mut self) {
        let nc = self.ncols;
        let mut d = self.cost.clone();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = self.cost[b];
            if cb != 0.0 {
                let row = &self.t[i * nc..(i + 1) * nc];
                for (dj, a) in d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        for &b in &self.basis {
            d[b] = 0.0;
        }
        self.d = d;
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.lb[j] == self.ub[j]
    }

    /// Entering column and direction of movement (+1 up, -1 down).
    fn choose_entering(&self) -> Option<(usize, f64)> {
        let tol = self.opts.optimality_tol;
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.ncols {
            if self.is_fixed(j) {
                continue;
            }
            let dj = self.d[j];
            let dir = match self.state[j] {
                ColumnState::Basic => continue,
                ColumnState::AtLower if dj < -tol => 1.0,
                ColumnState::AtUpper if dj > tol => -1.0,
                ColumnState::Free if dj.abs() > tol => -dj.signum(),
                _ => continue,
            };
            if self.bland {
                return Some((j, dir));
            }
            if best.is_none_or(|(_, _, score)| dj.abs() > score) {
                best = Some((j, dir, dj.abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// Step length, leaving row (or `None` for a bound flip) for entering `q`.
    fn ratio_test(&self, q: usize, dir: f64) -> Option<(f64, Option<usize>)> {
        let nc = self.ncols;
        let ptol = self.opts.pivot_tol;
        let mut best_t = f64::INFINITY;
        let mut best_row: Option<usize> = None;
        let mut best_piv = 0.0;
        for i in 0..self.m {
            let a = self.t[i * nc + q] * dir;
            if a.abs() <= ptol {
                continue;
            }
            let b = self.basis[i];
            let ratio = if a > 0.0 {
                if self.lb[b] == f64::NEG_INFINITY {
                    continue;
                }
                ((self.val[b] - self.lb[b]) / a).max(0.0)
            } else {
                if self.ub[b] == f64::INFINITY {
                    continue;
                }
                ((self.ub[b] - self.val[b]) / -a).max(0.0)
            };
            let better = match best_row {
                None => true,
                Some(r) => {
                    if ratio < best_t - 1e-12 {
                        true
                    } else if ratio <= best_t + 1e-12 {
                        if self.bland {
                            b < self.basis[r]
                        } else {
                            a.abs() > best_piv
                        }
                    } else {
                        false
                    }
                }
            };
            if better {
                best_t = ratio;
                best_row = Some(i);
                best_piv = a.abs();
            }
        }
        let span = self.ub[q] - self.lb[q];
        if span.is_finite() && span <= best_t {
            return Some((span, None));
        }
        best_row.map(|r| (best_t, Some(r)))
    }

    fn iterate(&mut self) -> StepOutcome {
        loop {
            if self.iterations >= self.max_iterations {
                return StepOutcome::Stalled;
            }
            if self.since_refactor >= self.opts.refactor_interval && !self.refactor() {
                return StepOutcome::Stalled;
            }
            let Some((q, dir)) = self.choose_entering() else {
                return StepOutcome::Optimal;
            };
            let Some((step, leave)) = self.ratio_test(q, dir) else {
                return StepOutcome::Unbounded;
            };
            self.iterations += 1;
            if step <= 1e-12 {
                self.degenerate_run += 1;
                if self.degenerate_run >= self.opts.stall_threshold {
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
            }
            self.apply_step(q, dir, step, leave);
        }
    }

    fn apply_step(&mut self, q: usize, dir: f64, step: f64, leave: Option<usize>) {
        let nc = self.ncols;
        if step != 0.0 {
            for i in 0..self.m {
                let a = self.t[i * nc + q];
                if a != 0.0 {
                    let b = self.basis[i];
                    self.val[b] -= step * dir * a;
                }
            }
            self.val[q] += step * dir;
        }
        match leave {
            None => {
                if dir > 0.0 {
                    self.state[q] = ColumnState::AtUpper;
                    self.val[q] = self.ub[q];
                } else {
                    self.state[q] = ColumnState::AtLower;
                    self.val[q] = self.lb[q];
                }
            }
            Some(r) => {
                let l = self.basis[r];
                let a = self.t[r * nc + q] * dir;
                if a > 0.0 {
                    self.state[l] = ColumnState::AtLower;
                    self.val[l] = self.lb[l];
                } else {
                    self.state[l] = ColumnState::AtUpper;
                    self.val[l] = self.ub[l];
                }
                self.pivot(r, q);
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let nc = self.ncols;
        let piv = self.t[r * nc + q];
        {
            let row = &mut self.t[r * nc..(r + 1) * nc];
            for v in row.iter_mut() {
                *v /= piv;
            }
        }
        let prow: Vec<f64> = self.t[r * nc..(r + 1) * nc].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * nc + q];
            if f != 0.0 {
                let row = &mut self.t[i * nc..(i + 1) * nc];
                for (v, p) in row.iter_mut().zip(&prow) {
                    *v -= f * p;
                }
                row[q] = 0.0;
            }
        }
        let dq = self.d[q];
        if dq != 0.0 {
            for (dj, p) in self.d.iter_mut().zip(&prow) {
                *dj -= dq * p;
            }
        }
        self.d[q] = 0.0;
        self.basis[r] = q;
        self.state[q] = ColumnState::Basic;
        self.since_refactor += 1;
    }

    /// Rebuilds the tableau, basic values and reduced costs from the original
    /// matrix. Returns false when the basis matrix is numerically singular.
    fn refactor(&mut self) -> bool {
        let (m, nc) = (self.m, self.ncols);
        self.since_refactor = 0;
        if m == 0 {
            self.recompute_reduced_costs();
            return true;
        }
        let bmat = DMatrix::from_fn(m, m, |i, k| self.orig[i * nc + self.basis[k]]);
        let lu = bmat.lu();
        let full = DMatrix::from_fn(m, nc, |i, j| self.orig[i * nc + j]);
        let Some(solved) = lu.solve(&full) else {
            return false;
        };
        if solved.iter().any(|v| !v.is_finite()) {
            return false;
        }
        for i in 0..m {
            for j in 0..nc {
                self.t[i * nc + j] = solved[(i, j)];
            }
        }
        let mut r = nalgebra::DVector::from_column_slice(&self.rhs);
        for j in 0..nc {
            if self.state[j] != ColumnState::Basic && self.val[j] != 0.0 {
                for i in 0..m {
                    r[i] -= self.orig[i * nc + j] * self.val[j];
                }
            }
        }
        let Some(xb) = lu.solve(&r) else {
            return false;
        };
        for (i, &b) in self.basis.iter().enumerate() {
            self.val[b] = xb[i];
        }
        self.recompute_reduced_costs();
        true
    }

    /// Replaces basic artificials (all at zero after phase 1) by real columns,
    /// then pins every artificial to zero.
    fn drive_out_artificials(&mut self) {
        let (n, m, nc) = (self.n, self.m, self.ncols);
        for r in 0..m {
            if self.basis[r] < n + m {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..n + m {
                if self.state[j] == ColumnState::Basic {
                    continue;
                }
                let a = self.t[r * nc + j].abs();
                if a > 1e-7 && best.is_none_or(|(_, b)| a > b) {
                    best = Some((j, a));
                }
            }
            if let Some((j, _)) = best {
                let art = self.basis[r];
                self.pivot(r, j);
                self.state[art] = ColumnState::AtLower;
                self.val[art] = 0.0;
            }
            // otherwise the row is redundant and the artificial stays basic at zero
        }
        for j in n + m..nc {
            self.ub[j] = 0.0;
            if self.state[j] != ColumnState::Basic {
                self.val[j] = 0.0;
            }
        }
        self.refactor();
    }

    /// Moves nonbasic free columns into the basis with zero-cost steps so the
    /// final basis describes the optimal face through bounded columns only.
    fn pivot_in_free_columns(&mut self) {
        for q in 0..self.n {
            if self.state[q] != ColumnState::Free {
                continue;
            }
            for dir in [1.0, -1.0] {
                if let Some((step, Some(r))) = self.ratio_test(q, dir) {
                    if self.d[q].abs() * step <= self.opts.optimality_tol * (1.0 + step) {
                        self.apply_step(q, dir, step, Some(r));
                        break;
                    }
                }
            }
        }
    }

    fn extract(&self, p: &LpProblem) -> LpSolution {
        let (n, m, nc) = (self.n, self.m, self.ncols);
        let sign = if p.sense == Sense::Maximize { -1.0 } else { 1.0 };
        let mut x: Vec<f64> = self.val[..n].to_vec();
        // snap values within tolerance of a bound
        for (j, v) in x.iter_mut().enumerate() {
            let tol = self.opts.feasibility_tol * (1.0 + v.abs());
            if (*v - p.lower[j]).abs() <= tol {
                *v = p.lower[j];
            } else if (*v - p.upper[j]).abs() <= tol {
                *v = p.upper[j];
            }
        }
        // dual prices y = c_B B^-1 via the slack columns of the tableau
        let mut y = vec![0.0; m];
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = self.cost2[b];
            if cb != 0.0 {
                for (k, yk) in y.iter_mut().enumerate() {
                    *yk += cb * self.t[i * nc + n + k];
                }
            }
        }
        let duals: Vec<f64> = y.iter().map(|v| sign * v).collect();
        let reduced_costs: Vec<f64> = (0..n)
            .map(|j| {
                if self.state[j] == ColumnState::Basic {
                    0.0
                } else {
                    sign * self.d[j]
                }
            })
            .collect();
        let has_art_basic = self.basis.iter().any(|&b| b >= n + m);
        let basis = if has_art_basic {
            None
        } else {
            Some(Basis {
                basic: self.basis.clone(),
                state: self.state[..n + m].to_vec(),
                values: self.val[..n + m].to_vec(),
            })
        };
        let active = active_set(p, &x, self.opts.active_tol);
        let objective = p.objective_value(&x);
        LpSolution {
            status: LpStatus::Optimal,
            x,
            objective,
            duals,
            reduced_costs,
            active_set: active,
            basis,
            iterations: self.iterations,
        }
    }
}

fn initial_nonbasic(lower: f64, upper: f64) -> (ColumnState, f64) {
    if lower.is_finite() {
        (ColumnState::AtLower, lower)
    } else if upper.is_finite() {
        (ColumnState::AtUpper, upper)
    } else {
        (ColumnState::Free, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{certify, ActiveConstraint};
    use super::*;

    #[test]
    fn single_variable_lower_row_is_active() {
        let mut p = LpProblem::minimize();
        let x = p.add_var(f64::NEG_INFINITY, f64::INFINITY, 1.0);
        p.add_row(&[(x, 1.0)], Relation::Ge, 1.0);
        p.add_row(&[(x, 1.0)], Relation::Le, 3.0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-9);
        assert_eq!(s.active_set, vec![ActiveConstraint::Row(0)]);
        assert!((s.duals[0] - 1.0).abs() < 1e-9);
        assert!(s.duals[1].abs() < 1e-9);
    }

    #[test]
    fn maximize_sum_under_one_row() {
        let mut p = LpProblem::maximize();
        let x = p.add_var(0.0, f64::INFINITY, 1.0);
        let y = p.add_var(0.0, f64::INFINITY, 1.0);
        p.add_row(&[(x, 1.0), (y, 1.0)], Relation::Le, 2.0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 2.0).abs() < 1e-9);
        assert!((s.duals[0] - 1.0).abs() < 1e-9);
        assert!(certify(&p, &s).holds());
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut p = LpProblem::minimize();
        let x = p.add_var(0.0, 10.0, 1.0);
        p.add_row(&[(x, 1.0)], Relation::Ge, 5.0);
        p.add_row(&[(x, 1.0)], Relation::Le, 4.0);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn open_direction_is_unbounded() {
        let mut p = LpProblem::maximize();
        let x = p.add_var(0.0, f64::INFINITY, 1.0);
        let y = p.add_var(0.0, f64::INFINITY, 0.0);
        p.add_row(&[(x, 1.0), (y, -1.0)], Relation::Le, 1.0);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn degenerate_vertex_with_three_tight_rows() {
        // x + y <= 1, x <= 1, x - y <= 1 all meet at (1, 0)
        let mut p = LpProblem::maximize();
        let x = p.add_var(0.0, f64::INFINITY, 1.0);
        let y = p.add_var(0.0, f64::INFINITY, 0.0);
        p.add_row(&[(x, 1.0), (y, 1.0)], Relation::Le, 1.0);
        p.add_row(&[(x, 1.0)], Relation::Le, 1.0);
        p.add_row(&[(x, 1.0), (y, -1.0)], Relation::Le, 1.0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-9);
        for k in 0..3 {
            assert!(s.active_set.contains(&ActiveConstraint::Row(k)));
        }
        assert!(certify(&p, &s).holds());
    }

    #[test]
    fn equality_rows_and_offset() {
        let mut p = LpProblem::minimize();
        p.objective_offset = 5.0;
        let x = p.add_var(0.0, 10.0, 2.0);
        let y = p.add_var(0.0, 10.0, 3.0);
        p.add_row(&[(x, 1.0), (y, 1.0)], Relation::Eq, 8.0);
        p.add_row(&[(x, 1.0)], Relation::Le, 6.0);
        let s = solve_lp(&p).unwrap();
        assert!((s.objective - (5.0 + 12.0 + 6.0)).abs() < 1e-9);
        assert!((s.duals[0] - 3.0).abs() < 1e-9);
        assert!((s.duals[1] + 1.0).abs() < 1e-9);
        assert!(certify(&p, &s).holds());
        assert!(s.basis.is_some());
    }

    #[test]
    fn free_variables_enter_the_basis() {
        let mut p = LpProblem::minimize();
        let x = p.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0);
        let y = p.add_var(0.0, 4.0, 1.0);
        p.add_row(&[(x, 1.0), (y, -1.0)], Relation::Eq, 0.0);
        p.add_row(&[(x, 1.0)], Relation::Ge, 2.0);
        let s = solve_lp(&p).unwrap();
        assert!((s.x[0] - 2.0).abs() < 1e-9);
        let b = s.basis.unwrap();
        assert_eq!(b.state[0], ColumnState::Basic);
    }

    #[test]
    fn fixed_variable_and_no_rows() {
        let mut p = LpProblem::maximize();
        p.add_var(3.0, 3.0, 1.0);
        p.add_var(-2.0, 5.0, -1.0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.x, vec![3.0, -2.0]);
        assert_eq!(s.objective, 5.0);
    }
}
