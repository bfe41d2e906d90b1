//! Small polyhedra `{theta : A theta <= b}` in parameter space.

use crate::lp::{solve_lp_with, LpProblem, LpStatus, Relation, SimplexOptions};

use super::dot;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Poly {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Clean {
    Ok,
    Empty,
}

impl Poly {
    pub fn dim(&self) -> usize {
        self.a.first().map_or(0, |r| r.len())
    }

    /// Scales rows to unit norm, dropping constant rows. Returns `Empty` when a
    /// constant row is violated by more than `tol`.
    pub fn normalize(&mut self, tol: f64) -> Clean {
        let mut a = Vec::with_capacity(self.a.len());
        let mut b = Vec::with_capacity(self.b.len());
        for (row, rhs) in self.a.iter().zip(&self.b) {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm <= 1e-12 {
                if *rhs < -tol {
                    return Clean::Empty;
                }
                continue;
            }
            a.push(row.iter().map(|v| v / norm).collect());
            b.push(rhs / norm);
        }
        self.a = a;
        self.b = b;
        Clean::Ok
    }

    pub fn contains(&self, theta: &[f64], tol: f64) -> bool {
        self.a
            .iter()
            .zip(&self.b)
            .all(|(row, b)| dot(row, theta) <= b + tol * b.abs().max(1.0))
    }

    pub fn max_violation(&self, theta: &[f64]) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(row, b)| dot(row, theta) - b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn lp_over(&self, skip: Option<usize>) -> LpProblem {
        let p = self.dim();
        let mut lp = LpProblem::maximize();
        for _ in 0..p {
            lp.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0);
        }
        for (i, (row, rhs)) in self.a.iter().zip(&self.b).enumerate() {
            if Some(i) == skip {
                continue;
            }
            let terms: Vec<(usize, f64)> = row.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
            lp.add_row(&terms, Relation::Le, *rhs);
        }
        lp
    }

    /// Smallest box containing the polyhedron, `None` per coordinate when
    /// unbounded; `Err` when empty.
    pub fn bounding_box(&self, opts: &SimplexOptions) -> Result<Vec<(Option<f64>, Option<f64>)>, ()> {
        let p = self.dim();
        let mut out = Vec::with_capacity(p);
        for k in 0..p {
            let mut ends = [None, None];
            for (slot, sign) in [(1usize, 1.0), (0usize, -1.0)] {
                let mut lp = self.lp_over(None);
                lp.objective[k] = sign;
                let sol = solve_lp_with(&lp, opts).expect("parameter LP is well formed");
                match sol.status {
                    LpStatus::Optimal => ends[slot] = Some(sign * sol.objective),
                    LpStatus::Infeasible => return Err(()),
                    _ => {}
                }
            }
            out.push((ends[0], ends[1]));
        }
        Ok(out)
    }

    /// Drops rows implied by the others; `Empty` when the rows are inconsistent.
    /// Rows already implied by `bbox` (a box containing the polyhedron) go first.
    pub fn remove_redundant(&mut self, bbox: Option<&[(f64, f64)]>, keep_first: usize, opts: &SimplexOptions) -> Clean {
        if let Some(bx) = bbox {
            let mut a = Vec::new();
            let mut b = Vec::new();
            for (i, (row, rhs)) in self.a.iter().zip(&self.b).enumerate() {
                let worst: f64 = row.iter().zip(bx).map(|(v, (lo, hi))| (v * lo).max(v * hi)).sum();
                if i < keep_first || worst > rhs + 1e-9 * rhs.abs().max(1.0) {
                    a.push(row.clone());
                    b.push(*rhs);
                }
            }
            self.a = a;
            self.b = b;
        }
        let mut i = 0;
        while i < self.a.len() {
            let mut lp = self.lp_over(Some(i));
            for (k, v) in self.a[i].iter().enumerate() {
                lp.objective[k] = *v;
            }
            let terms: Vec<(usize, f64)> = self.a[i].iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
            lp.add_row(&terms, Relation::Le, self.b[i] + 1.0);
            let sol = solve_lp_with(&lp, opts).expect("parameter LP is well formed");
            match sol.status {
                LpStatus::Infeasible => return Clean::Empty,
                LpStatus::Optimal if sol.objective <= self.b[i] + 1e-9 * self.b[i].abs().max(1.0) => {
                    self.a.remove(i);
                    self.b.remove(i);
                }
                _ => i += 1,
            }
        }
        Clean::Ok
    }

    /// Chebyshev center and radius (rows must be normalized), optionally with
    /// row `on` held as an equality to get a point deep inside that facet.
    pub fn chebyshev(&self, on: Option<usize>, opts: &SimplexOptions) -> Option<(Vec<f64>, f64)> {
        let p = self.dim();
        let mut lp = LpProblem::maximize();
        for _ in 0..p {
            lp.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0);
        }
        let r = lp.add_var(0.0, f64::INFINITY, 1.0);
        for (i, (row, rhs)) in self.a.iter().zip(&self.b).enumerate() {
            let mut terms: Vec<(usize, f64)> = row.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
            if Some(i) == on {
                lp.add_row(&terms, Relation::Eq, *rhs);
            } else {
                terms.push((r, 1.0));
                lp.add_row(&terms, Relation::Le, *rhs);
            }
        }
        let sol = solve_lp_with(&lp, opts).expect("parameter LP is well formed");
        if sol.status != LpStatus::Optimal {
            return None;
        }
        Some((sol.x[..p].to_vec(), sol.x[r]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square_with_extra() -> Poly {
        Poly {
            a: vec![
                vec![1.0, 0.0],
                vec![-1.0, 0.0],
                vec![0.0, 2.0],
                vec![0.0, -1.0],
                vec![1.0, 1.0],
                vec![0.0, 0.0],
            ],
            b: vec![1.0, 0.0, 2.0, 0.0, 5.0, 3.0],
        }
    }

    #[test]
    fn normalize_and_prune() {
        let mut p = unit_square_with_extra();
        assert_eq!(p.normalize(1e-9), Clean::Ok);
        assert_eq!(p.a.len(), 5);
        assert!((p.b[2] - 1.0).abs() < 1e-12);
        let opts = SimplexOptions::default();
        assert_eq!(p.remove_redundant(None, 0, &opts), Clean::Ok);
        assert_eq!(p.a.len(), 4);
        let (c, r) = p.chebyshev(None, &opts).unwrap();
        assert!((r - 0.5).abs() < 1e-9);
        assert!((c[0] - 0.5).abs() < 1e-9 && (c[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn violated_constant_row_is_empty() {
        let mut p = Poly {
            a: vec![vec![0.0], vec![1.0]],
            b: vec![-1.0, 1.0],
        };
        assert_eq!(p.normalize(1e-9), Clean::Empty);
    }

    #[test]
    fn facet_center() {
        let mut p = unit_square_with_extra();
        p.normalize(1e-9);
        let opts = SimplexOptions::default();
        p.remove_redundant(None, 0, &opts);
        let (c, r) = p.chebyshev(Some(0), &opts).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-9);
        assert!((c[1] - 0.5).abs() < 1e-9);
        assert!((r - 0.5).abs() < 1e-9);
    }

    #[test]
    fn bounding_box_of_triangle() {
        let p = Poly {
            a: vec![vec![-1.0, 0.0], vec![0.0, -1.0], vec![1.0, 1.0]],
            b: vec![0.0, 0.0, 2.0],
        };
        let bx = p.bounding_box(&SimplexOptions::default()).unwrap();
        assert_eq!(bx.len(), 2);
        for (lo, hi) in bx {
            assert!((lo.unwrap()).abs() < 1e-9 && (hi.unwrap() - 2.0).abs() < 1e-9);
        }
    }
}
