//! Best-bound branch-and-bound over binary variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::lp::{solve_lp_with, LpError, LpProblem, LpSolution, LpStatus, Sense, SimplexOptions};

#[derive(Debug, Error, PartialEq)]
pub enum MilpError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("binary index {0} is not a variable")]
    BadIndex(usize),
    #[error("binary variable {0} has bounds outside [0, 1]")]
    BadBounds(usize),
    #[error("gap must be non-negative")]
    NegativeGap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpProblem {
    pub lp: LpProblem,
    pub binaries: Vec<usize>,
}

impl MilpProblem {
    pub fn new(lp: LpProblem, binaries: Vec<usize>) -> Result<Self, MilpError> {
        let p = MilpProblem { lp, binaries };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), MilpError> {
        self.lp.validate()?;
        for &j in &self.binaries {
            if j >= self.lp.n_vars() {
                return Err(MilpError::BadIndex(j));
            }
            if self.lp.lower[j] < 0.0 || self.lp.upper[j] > 1.0 {
                return Err(MilpError::BadBounds(j));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MilpOptions {
    /// Relative optimality gap.
    pub gap: f64,
    /// Maximum number of node relaxations solved.
    pub node_limit: usize,
    pub integrality_tol: f64,
    pub simplex: SimplexOptions,
}

impl Default for MilpOptions {
    fn default() -> Self {
        MilpOptions {
            gap: 1e-6,
            node_limit: 200_000,
            integrality_tol: 1e-6,
            simplex: SimplexOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Node budget exhausted; the incumbent (if any) is returned.
    NodeLimit,
    /// A node relaxation could not be solved.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    pub status: MilpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Best proven bound when the search stopped.
    pub bound: f64,
    pub nodes: usize,
    pub elapsed: Duration,
    /// `(node, objective)` each time the incumbent improved.
    pub incumbents: Vec<(usize, f64)>,
}

impl MilpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == MilpStatus::Optimal
    }

    pub fn has_solution(&self) -> bool {
        !self.x.is_empty()
    }
}

struct Node {
    /// Bound in minimization form.
    key: f64,
    id: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    sol: LpSolution,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // reversed so the max-heap pops the smallest bound, then the oldest node
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key
            .total_cmp(&self.key)
            .then_with(|| other.id.cmp(&self.id))
    }
}

pub fn solve_milp(p: &MilpProblem) -> Result<MilpSolution, MilpError> {
    solve_milp_with(p, &MilpOptions::default())
}

pub fn solve_milp_with(p: &MilpProblem, opts: &MilpOptions) -> Result<MilpSolution, MilpError> {
    p.validate()?;
    if opts.gap < 0.0 {
        return Err(MilpError::NegativeGap);
    }
    let start = Instant::now();
    let sign = if p.lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let mut search = Search {
        p,
        opts,
        sign,
        nodes: 0,
        next_id: 0,
        heap: BinaryHeap::new(),
        incumbent: None,
        incumbents: Vec::new(),
        failure: None,
    };
    search.visit(p.lp.lower.clone(), p.lp.upper.clone());
    let mut limit_hit = false;
    while search.failure.is_none() {
        let Some(node) = search.heap.pop() else { break };
        if search.prunes(node.key) {
            // best-bound order: every remaining node is pruned as well
            search.heap.clear();
            break;
        }
        if search.nodes + 2 > opts.node_limit {
            search.heap.push(node);
            limit_hit = true;
            break;
        }
        let j = search.branching_variable(&node.sol.x).expect("queued nodes are fractional");
        let mut lo = node.lower.clone();
        let mut up = node.upper.clone();
        up[j] = 0.0;
        search.visit(node.lower.clone(), up);
        lo[j] = 1.0;
        search.visit(lo, node.upper);
    }

    let elapsed = start.elapsed();
    let open_bound = search
        .heap
        .iter()
        .map(|n| n.key)
        .fold(f64::INFINITY, f64::min);
    let nodes = search.nodes;
    let incumbents = search.incumbents;
    let status = match (search.failure, &search.incumbent, limit_hit) {
        (Some(s), _, _) => s,
        (None, _, true) => MilpStatus::NodeLimit,
        (None, Some(_), false) => MilpStatus::Optimal,
        (None, None, false) => MilpStatus::Infeasible,
    };
    let (x, objective, inc_key) = match search.incumbent {
        Some((key, x)) => {
            let obj = p.lp.objective_value(&x);
            (x, obj, key)
        }
        None => (Vec::new(), f64::NAN, f64::INFINITY),
    };
    let bound_key = if status == MilpStatus::Optimal {
        inc_key
    } else {
        open_bound.min(inc_key)
    };
    Ok(MilpSolution {
        status,
        x,
        objective,
        bound: sign * bound_key,
        nodes,
        elapsed,
        incumbents,
    })
}

struct Search<'a> {
    p: &'a MilpProblem,
    opts: &'a MilpOptions,
    sign: f64,
    nodes: usize,
    next_id: usize,
    heap: BinaryHeap<Node>,
    incumbent: Option<(f64, Vec<f64>)>,
    incumbents: Vec<(usize, f64)>,
    failure: Option<MilpStatus>,
}

impl Search<'_> {
    fn prunes(&self, key: f64) -> bool {
        match &self.incumbent {
            Some((inc, _)) => key >= inc - self.opts.gap * inc.abs().max(1.0),
            None => false,
        }
    }

    /// Most fractional binary, ties to the lowest index.
    fn branching_variable(&self, x: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for &j in &self.p.binaries {
            let frac = x[j].min(1.0 - x[j]);
            if frac > self.opts.integrality_tol && best.is_none_or(|(bj, bf)| frac > bf || (frac == bf && j < bj)) {
                best = Some((j, frac));
            }
        }
        best.map(|(j, _)| j)
    }

    /// Solves the relaxation with the given bounds; integral solutions update
    /// the incumbent, fractional ones are queued.
    fn visit(&mut self, lower: Vec<f64>, upper: Vec<f64>) {
        let mut lp = self.p.lp.clone();
        lp.lower.clone_from(&lower);
        lp.upper.clone_from(&upper);
        self.nodes += 1;
        let sol = match solve_lp_with(&lp, &self.opts.simplex) {
            Ok(s) => s,
            Err(_) => {
                self.failure = Some(MilpStatus::Stalled);
                return;
            }
        };
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return,
            LpStatus::Unbounded => {
                self.failure = Some(MilpStatus::Unbounded);
                return;
            }
            LpStatus::Stalled => {
                self.failure = Some(MilpStatus::Stalled);
                return;
            }
        }
        let key = self.sign * sol.objective;
        if self.prunes(key) {
            return;
        }
        if self.branching_variable(&sol.x).is_none() {
            let mut x = sol.x;
            for &j in &self.p.binaries {
                x[j] = x[j].round();
            }
            let key = self.sign * self.p.lp.objective_value(&x);
            if self.incumbent.as_ref().is_none_or(|(inc, _)| key < *inc) {
                self.incumbents.push((self.nodes, self.sign * key));
                self.incumbent = Some((key, x));
            }
            return;
        }
        let id = self.next_id;
        self.next_id += 1;
        self.heap.push(Node {
            key,
            id,
            lower,
            upper,
            sol,
        });
    }
}
