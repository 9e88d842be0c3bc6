//! A small dense two-phase simplex solver.
//!
//! This crate exists to cross-check specialized optimizers against a
//! generic linear-programming formulation. It trades speed for
//! simplicity: reduced costs are recomputed from scratch every pivot and
//! Bland's rule guarantees termination, so it should only be used on
//! small instances (tens of variables).
//!
//! Problems are stated as `min c'x` subject to `Ax {<=,=,>=} b`, `x >= 0`.

/// Constraint comparison operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Eq,
    Ge,
}

/// One linear constraint `a'x (cmp) b`.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub cmp: Cmp,
    pub rhs: f64,
}

/// `min c'x  s.t.  constraints,  x >= 0`.
#[derive(Debug, Clone)]
pub struct Problem {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Solution {
    Optimal { value: f64, x: Vec<f64> },
    Infeasible,
    Unbounded,
}

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;

struct Tableau {
    rows: Vec<Vec<f64>>, // m x (ncols + 1), last entry is the rhs
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.ncols]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v /= piv;
        }
        for i in 0..self.rows.len() {
            if i == row {
                continue;
            }
            let factor = self.rows[i][col];
            if factor != 0.0 {
                for j in 0..=self.ncols {
                    let delta = factor * self.rows[row][j];
                    self.rows[i][j] -= delta;
                }
            }
        }
        self.basis[row] = col;
    }

    /// Minimizes `cost' x` with Bland's rule; returns false on unbounded.
    fn optimize(&mut self, cost: &[f64], banned: &[bool]) -> bool {
        loop {
            // Reduced costs from scratch: z_j = c_j - c_B' B^-1 A_j.
            let mut entering = None;
            for j in 0..self.ncols {
                if banned[j] || self.basis.contains(&j) {
                    continue;
                }
                let mut zj = cost[j];
                for (i, &b) in self.basis.iter().enumerate() {
                    zj -= cost[b] * self.rows[i][j];
                }
                if zj < -PIVOT_TOL {
                    entering = Some(j);
                    break; // Bland: smallest eligible index
                }
            }
            let Some(col) = entering else {
                return true;
            };
            let mut leaving: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][col];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i) / a;
                    let better = match leaving {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - PIVOT_TOL
                                || (ratio < lr + PIVOT_TOL && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leaving = Some((i, ratio));
                    }
                }
            }
            let Some((row, _)) = leaving else {
                return false;
            };
            self.pivot(row, col);
        }
    }
}

/// Solves the problem with the two-phase simplex method.
pub fn solve(p: &Problem) -> Solution {
    let n = p.objective.len();
    let m = p.constraints.len();
    for c in &p.constraints {
        assert_eq!(c.coeffs.len(), n, "constraint arity mismatch");
    }

    // Normalize to b >= 0, then add one slack/surplus per inequality and
    // one artificial per row that lacks an obvious basic column.
    let mut slack_count = 0;
    for c in &p.constraints {
        if c.cmp != Cmp::Eq {
            slack_count += 1;
        }
    }
    let ncols = n + slack_count + m; // worst case: one artificial per row
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut slack_at = n;
    let mut art_at = n + slack_count;
    let mut art_cols = vec![false; ncols];

    for c in &p.constraints {
        let flip = c.rhs < 0.0;
        let sign = if flip { -1.0 } else { 1.0 };
        let cmp = match (c.cmp, flip) {
            (Cmp::Le, true) => Cmp::Ge,
            (Cmp::Ge, true) => Cmp::Le,
            (other, _) => other,
        };
        let mut row = vec![0.0; ncols + 1];
        for j in 0..n {
            row[j] = sign * c.coeffs[j];
        }
        row[ncols] = sign * c.rhs;
        match cmp {
            Cmp::Le => {
                row[slack_at] = 1.0;
                basis.push(slack_at);
                slack_at += 1;
            }
            Cmp::Ge => {
                row[slack_at] = -1.0;
                slack_at += 1;
                row[art_at] = 1.0;
                art_cols[art_at] = true;
                basis.push(art_at);
                art_at += 1;
            }
            Cmp::Eq => {
                row[art_at] = 1.0;
                art_cols[art_at] = true;
                basis.push(art_at);
                art_at += 1;
            }
        }
        rows.push(row);
    }

    let mut t = Tableau { rows, basis, ncols };
    let no_ban = vec![false; ncols];

    // Phase 1: minimize the sum of artificials.
    let phase1_cost: Vec<f64> = (0..ncols).map(|j| if art_cols[j] { 1.0 } else { 0.0 }).collect();
    if art_cols.iter().any(|&b| b) {
        if !t.optimize(&phase1_cost, &no_ban) {
            return Solution::Infeasible; // cannot happen: phase 1 is bounded
        }
        let infeas: f64 = t
            .basis
            .iter()
            .enumerate()
            .filter(|(_, &b)| art_cols[b])
            .map(|(i, _)| t.rhs(i))
            .sum();
        if infeas > FEAS_TOL {
            return Solution::Infeasible;
        }
        // Pivot lingering zero-level artificials out of the basis.
        for i in 0..t.basis.len() {
            if art_cols[t.basis[i]] {
                if let Some(col) = (0..ncols)
                    .find(|&j| !art_cols[j] && t.rows[i][j].abs() > PIVOT_TOL)
                {
                    t.pivot(i, col);
                }
            }
        }
    }

    // Phase 2: the real objective, artificials banned.
    let mut cost = vec![0.0; ncols];
    cost[..n].copy_from_slice(&p.objective);
    if !t.optimize(&cost, &art_cols) {
        return Solution::Unbounded;
    }

    let mut x = vec![0.0; n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rhs(i);
        }
    }
    let value = p.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Solution::Optimal { value, x }
}
