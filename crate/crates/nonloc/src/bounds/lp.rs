//! Dense two-phase tableau simplex with Bland's rule.
//!
//! Solves max c·x subject to A x = b, x ≥ 0. Sized for the no-signaling
//! polytopes of a few parties, not for general use.

use crate::{Error, Result};

const PIVOT_TOL: f64 = 1e-10;
const MAX_PIVOTS: usize = 100_000;

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
}

struct Tableau {
    rows: Vec<Vec<f64>>, // each row: coefficients then rhs
    basis: Vec<usize>,
    width: usize, // number of variable columns
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Maximizes `cost` over columns `0..allowed`; Bland's rule throughout.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<()> {
        for _ in 0..MAX_PIVOTS {
            let entering = (0..allowed).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let reduced: f64 = cost[j]
                    - self.rows.iter().zip(&self.basis).map(|(row, &b)| cost[b] * row[j]).sum::<f64>();
                reduced > PIVOT_TOL
            });
            let Some(c) = entering else { return Ok(()) };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][c];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - PIVOT_TOL
                                || ((ratio - br).abs() <= PIVOT_TOL && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::Lp("objective is unbounded".into()));
            };
            self.pivot(r, c);
        }
        Err(Error::Lp(format!("no convergence within {MAX_PIVOTS} pivots")))
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        self.basis.iter().enumerate().map(|(i, &b)| cost[b] * self.rhs(i)).sum()
    }
}

/// max c·x subject to A x = b, x ≥ 0.
pub fn maximize(c: &[f64], a_eq: &[Vec<f64>], b_eq: &[f64]) -> Result<LpSolution> {
    let n = c.len();
    let m = a_eq.len();
    if b_eq.len() != m || a_eq.iter().any(|r| r.len() != n) {
        return Err(Error::Dimension("inconsistent LP shapes".into()));
    }
    // Columns: n structural, m artificial, then rhs.
    let width = n + m;
    let mut rows = Vec::with_capacity(m);
    for (i, (row, &b)) in a_eq.iter().zip(b_eq).enumerate() {
        let s = if b < 0.0 { -1.0 } else { 1.0 };
        let mut r: Vec<f64> = row.iter().map(|v| s * v).collect();
        r.extend((0..m).map(|j| if j == i { 1.0 } else { 0.0 }));
        r.push(s * b);
        rows.push(r);
    }
    let mut t = Tableau { rows, basis: (n..n + m).collect(), width };

    let phase1: Vec<f64> = (0..width).map(|j| if j >= n { -1.0 } else { 0.0 }).collect();
    t.optimize(&phase1, width)?;
    if t.objective(&phase1) < -1e-9 {
        return Err(Error::Lp("infeasible constraints".into()));
    }

    // Drive zero-level artificials out of the basis; drop redundant rows.
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= n {
            match (0..n).find(|&j| t.rows[i][j].abs() > PIVOT_TOL) {
                Some(j) => t.pivot(i, j),
                None => {
                    t.rows.remove(i);
                    t.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    let mut cost = c.to_vec();
    cost.extend(std::iter::repeat_n(0.0, m));
    t.optimize(&cost, n)?;

    let mut x = vec![0.0; n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rhs(i);
        }
    }
    let value = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    Ok(LpSolution { value, x })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lp() {
        // max x + 2y, x + y + s = 4, x + 3y + t = 6 → (3, 1), value 5.
        let c = [1.0, 2.0, 0.0, 0.0];
        let a = vec![vec![1.0, 1.0, 1.0, 0.0], vec![1.0, 3.0, 0.0, 1.0]];
        let sol = maximize(&c, &a, &[4.0, 6.0]).unwrap();
        assert!((sol.value - 5.0).abs() < 1e-12);
        assert!((sol.x[0] - 3.0).abs() < 1e-12 && (sol.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn redundant_rows_and_negative_rhs() {
        // x + y = 1 stated twice, once negated; max x.
        let a = vec![vec![1.0, 1.0], vec![-1.0, -1.0]];
        let sol = maximize(&[1.0, 0.0], &a, &[1.0, -1.0]).unwrap();
        assert!((sol.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert!(maximize(&[1.0, 0.0], &a, &[1.0, 2.0]).is_err());
        let a = vec![vec![1.0, -1.0]];
        assert!(maximize(&[1.0, 0.0], &a, &[0.0]).is_err());
    }
}
