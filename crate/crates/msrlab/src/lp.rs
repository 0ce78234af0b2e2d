//! Exact rational simplex for the tiny linear programs behind witnesses,
//! certificates and garbling kernels.
//!
//! Problems are in standard form: maximize c'x subject to Ax = b, x >= 0.
//! Two-phase method with Bland's rule, all arithmetic in `BigRational`, so
//! feasibility answers are exact and returned points are exact vertices.

use crate::rational::Rat;
use num_traits::{One, Zero};

#[derive(Debug, Clone)]
pub struct StandardLp {
    /// m x n constraint matrix
    pub a: Vec<Vec<Rat>>,
    /// right-hand side, length m
    pub b: Vec<Rat>,
    /// objective, length n
    pub c: Vec<Rat>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<Rat>, value: Rat },
    Infeasible,
    Unbounded,
}

struct Tableau {
    /// m rows of n variable columns plus rhs
    rows: Vec<Vec<Rat>>,
    /// reduced-cost row (length n) plus objective value
    cost: Vec<Rat>,
    basis: Vec<usize>,
    n: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, j: usize) {
        let piv = self.rows[r][j].clone();
        debug_assert!(!piv.is_zero());
        for v in self.rows[r].iter_mut() {
            *v /= &piv;
        }
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let factor = self.rows[i][j].clone();
            if factor.is_zero() {
                continue;
            }
            for k in 0..=self.n {
                let delta = &factor * &self.rows[r][k];
                self.rows[i][k] -= delta;
            }
        }
        let factor = self.cost[j].clone();
        if !factor.is_zero() {
            for k in 0..=self.n {
                let delta = &factor * &self.rows[r][k];
                self.cost[k] -= delta;
            }
        }
        self.basis[r] = j;
    }

    /// Bland's rule iteration until optimal or unbounded.
    fn run(&mut self) -> Result<(), ()> {
        loop {
            // entering: smallest index with positive reduced cost
            let Some(j) = (0..self.n).find(|&j| self.cost[j] > Rat::zero()) else {
                return Ok(());
            };
            // leaving: min ratio, ties to smallest basis variable
            let mut leave: Option<usize> = None;
            let mut best_ratio: Option<Rat> = None;
            for r in 0..self.rows.len() {
                if self.rows[r][j] > Rat::zero() {
                    let ratio = &self.rows[r][self.n] / &self.rows[r][j];
                    let better = match &best_ratio {
                        None => true,
                        Some(cur) => {
                            ratio < *cur
                                || (ratio == *cur
                                    && self.basis[r] < self.basis[leave.unwrap()])
                        }
                    };
                    if better {
                        best_ratio = Some(ratio);
                        leave = Some(r);
                    }
                }
            }
            match leave {
                Some(r) => self.pivot(r, j),
                None => return Err(()), // unbounded
            }
        }
    }
}

pub fn solve(lp: &StandardLp) -> LpOutcome {
    let m = lp.a.len();
    let n = lp.c.len();
    debug_assert!(lp.a.iter().all(|row| row.len() == n));
    debug_assert_eq!(lp.b.len(), m);

    // phase 1: originals plus one artificial per row, rhs made nonnegative
    let total = n + m;
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let mut row: Vec<Rat> = Vec::with_capacity(total + 1);
        let flip = lp.b[i] < Rat::zero();
        for j in 0..n {
            row.push(if flip { -&lp.a[i][j] } else { lp.a[i][j].clone() });
        }
        for k in 0..m {
            row.push(if k == i { Rat::one() } else { Rat::zero() });
        }
        row.push(if flip { -&lp.b[i] } else { lp.b[i].clone() });
        rows.push(row);
    }
    // maximize -(sum of artificials): reduced cost of column j is sum of its
    // entries (artificial columns start at zero)
    let mut cost = vec![Rat::zero(); total + 1];
    for (j, c) in cost.iter_mut().enumerate().take(n) {
        *c = rows.iter().map(|row| row[j].clone()).sum();
    }
    cost[total] = rows.iter().map(|row| row[total].clone()).sum::<Rat>();

    let mut t = Tableau {
        rows,
        cost,
        basis: (n..n + m).collect(),
        n: total,
    };
    t.run().expect("phase 1 is bounded");
    // objective value is -(sum of artificials); stored negated in cost[n]
    if !t.cost[total].is_zero() {
        return LpOutcome::Infeasible;
    }

    // drive remaining artificials out of the basis
    let mut r = 0;
    while r < t.rows.len() {
        if t.basis[r] >= n {
            if let Some(j) = (0..n).find(|&j| !t.rows[r][j].is_zero()) {
                t.pivot(r, j);
                r += 1;
            } else {
                // redundant constraint
                t.rows.remove(r);
                t.basis.remove(r);
            }
        } else {
            r += 1;
        }
    }

    // phase 2 on original columns only
    let m2 = t.rows.len();
    let mut rows2: Vec<Vec<Rat>> = Vec::with_capacity(m2);
    for row in &t.rows {
        let mut r2: Vec<Rat> = row[..n].to_vec();
        r2.push(row[total].clone());
        rows2.push(r2);
    }
    let basis = t.basis.clone();
    let mut cost2 = vec![Rat::zero(); n + 1];
    for j in 0..n {
        let z: Rat = (0..m2).map(|i| &lp.c[basis[i]] * &rows2[i][j]).sum();
        cost2[j] = &lp.c[j] - z;
    }
    let value: Rat = (0..m2).map(|i| &lp.c[basis[i]] * &rows2[i][n]).sum();
    cost2[n] = -value;

    let mut t2 = Tableau {
        rows: rows2,
        cost: cost2,
        basis,
        n,
    };
    if t2.run().is_err() {
        return LpOutcome::Unbounded;
    }

    let mut x = vec![Rat::zero(); n];
    for (i, &bi) in t2.basis.iter().enumerate() {
        x[bi] = t2.rows[i][n].clone();
    }
    let value = -t2.cost[n].clone();
    LpOutcome::Optimal { x, value }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GaussOutcome {
    Unique(Vec<Rat>),
    Inconsistent,
    Underdetermined,
}

/// Exact Gaussian elimination on Ax = b (A is m x n, b length m).
pub fn gauss_solve(a: &[Vec<Rat>], b: &[Rat]) -> GaussOutcome {
    let m = a.len();
    let n = if m == 0 { 0 } else { a[0].len() };
    let mut aug: Vec<Vec<Rat>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let mut pivot_col_of_row = Vec::new();
    let mut row = 0;
    for col in 0..n {
        let Some(pr) = (row..m).find(|&r| !aug[r][col].is_zero()) else {
            continue;
        };
        aug.swap(row, pr);
        let piv = aug[row][col].clone();
        for v in aug[row].iter_mut() {
            *v /= &piv;
        }
        for r in 0..m {
            if r != row && !aug[r][col].is_zero() {
                let factor = aug[r][col].clone();
                for k in 0..=n {
                    let delta = &factor * &aug[row][k];
                    aug[r][k] -= delta;
                }
            }
        }
        pivot_col_of_row.push(col);
        row += 1;
        if row == m {
            break;
        }
    }
    for r in row..m {
        if !aug[r][n].is_zero() {
            return GaussOutcome::Inconsistent;
        }
    }
    if pivot_col_of_row.len() < n {
        return GaussOutcome::Underdetermined;
    }
    let mut x = vec![Rat::zero(); n];
    for (r, &col) in pivot_col_of_row.iter().enumerate() {
        x[col] = aug[r][n].clone();
    }
    GaussOutcome::Unique(x)
}

/// Any nonnegative solution of Ax = b, or None.
pub fn feasible_point(a: Vec<Vec<Rat>>, b: Vec<Rat>) -> Option<Vec<Rat>> {
    let n = a.first().map_or(0, |r| r.len());
    let lp = StandardLp {
        a,
        b,
        c: vec![Rat::zero(); n],
    };
    match solve(&lp) {
        LpOutcome::Optimal { x, .. } => Some(x),
        _ => None,
    }
}
