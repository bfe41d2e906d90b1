use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{CaseError, Network};

/// Line-by-bus injection shift factors, withdrawal at the reference bus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtdfMatrix {
    n_lines: usize,
    n_buses: usize,
    data: Vec<f64>,
}

impl PtdfMatrix {
    pub fn n_lines(&self) -> usize {
        self.n_lines
    }

    pub fn n_buses(&self) -> usize {
        self.n_buses
    }

    pub fn get(&self, line: usize, bus: usize) -> f64 {
        self.data[line * self.n_buses + bus]
    }

    pub fn row(&self, line: usize) -> &[f64] {
        &self.data[line * self.n_buses..(line + 1) * self.n_buses]
    }

    /// Flow on every line for a nodal injection vector.
    pub fn flows(&self, injection: &[f64]) -> Vec<f64> {
        (0..self.n_lines)
            .map(|j| self.row(j).iter().zip(injection).map(|(a, p)| a * p).sum())
            .collect()
    }
}

/// Reduced susceptance matrix with the reference row and column removed.
fn reduced_susceptance(net: &Network) -> (DMatrix<f64>, Vec<Option<usize>>) {
    let n = net.n_buses();
    let r = net.reference_index();
    let slot: Vec<Option<usize>> = (0..n)
        .map(|i| match i.cmp(&r) {
            std::cmp::Ordering::Less => Some(i),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(i - 1),
        })
        .collect();
    let mut b = DMatrix::<f64>::zeros(n - 1, n - 1);
    for (br, (f, t)) in net.branches.iter().zip(net.branch_endpoints()) {
        let y = 1.0 / br.x;
        if let Some(fi) = slot[f] {
            b[(fi, fi)] += y;
        }
        if let Some(ti) = slot[t] {
            b[(ti, ti)] += y;
        }
        if let (Some(fi), Some(ti)) = (slot[f], slot[t]) {
            b[(fi, ti)] -= y;
            b[(ti, fi)] -= y;
        }
    }
    (b, slot)
}

pub fn compute_ptdf(net: &Network) -> Result<PtdfMatrix, CaseError> {
    let n = net.n_buses();
    let m = net.n_lines();
    let mut data = vec![0.0; m * n];
    if n > 1 {
        let (b, slot) = reduced_susceptance(net);
        let lu = b.lu();
        let inv = lu.try_inverse().ok_or(CaseError::SingularSusceptance)?;
        let x_of = |bus: usize, col: usize| slot[bus].map_or(0.0, |k| inv[(k, col)]);
        for (j, (br, (f, t))) in net.branches.iter().zip(net.branch_endpoints()).enumerate() {
            for i in 0..n {
                if let Some(col) = slot[i] {
                    data[j * n + i] = (x_of(f, col) - x_of(t, col)) / br.x;
                }
            }
        }
    }
    Ok(PtdfMatrix {
        n_lines: m,
        n_buses: n,
        data,
    })
}

/// DC flows from a voltage-angle solve (`B theta = p`, `theta_ref = 0`).
pub fn angle_flows(net: &Network, injection: &[f64]) -> Result<Vec<f64>, CaseError> {
    let n = net.n_buses();
    let mut theta = vec![0.0; n];
    if n > 1 {
        let (b, slot) = reduced_susceptance(net);
        let rhs = DVector::from_iterator(
            n - 1,
            (0..n).filter(|i| slot[*i].is_some()).map(|i| injection[i]),
        );
        let sol = b
            .cholesky()
            .ok_or(CaseError::SingularSusceptance)?
            .solve(&rhs);
        for i in 0..n {
            if let Some(k) = slot[i] {
                theta[i] = sol[k];
            }
        }
    }
    Ok(net
        .branches
        .iter()
        .zip(net.branch_endpoints())
        .map(|(br, (f, t))| (theta[f] - theta[t]) / br.x)
        .collect())
}
