//! Small dense exact-rational simplex.
//!
//! Solves `max c.x  s.t.  A x <= b, x >= 0` with all `b >= 0`, so the
//! all-slack basis is feasible and no phase-1 is needed. Bland's rule keeps
//! the method finite under degeneracy. Problem sizes here are tiny (tens of
//! variables), so a dense tableau of big rationals is the simplest correct
//! tool.

use num_traits::{Signed, Zero};

use crate::error::Error;
use crate::rational::Rat;
use crate::Result;

/// `max objective . x` subject to `row . x <= rhs` per constraint, `x >= 0`.
/// Every `rhs` must be nonnegative.
#[derive(Debug, Clone)]
pub struct StandardLp {
    pub objective: Vec<Rat>,
    pub constraints: Vec<(Vec<Rat>, Rat)>,
}

/// Optimal value and an optimal vertex.
pub fn maximize(lp: &StandardLp) -> Result<(Rat, Vec<Rat>)> {
    let nv = lp.objective.len();
    let m = lp.constraints.len();
    for (row, rhs) in &lp.constraints {
        if row.len() != nv {
            return Err(Error::LinearProgram("constraint width mismatch".into()));
        }
        if rhs.is_negative() {
            return Err(Error::LinearProgram(
                "negative right-hand side, not in standard form".into(),
            ));
        }
    }

    // Tableau columns: nv structural, m slack, 1 rhs. Row 0 is the
    // objective row starting as -c, so its rhs cell ends at the optimum.
    let cols = nv + m + 1;
    let mut t = vec![vec![Rat::zero(); cols]; m + 1];
    for (j, c) in lp.objective.iter().enumerate() {
        t[0][j] = -c.clone();
    }
    for (i, (row, rhs)) in lp.constraints.iter().enumerate() {
        for (j, a) in row.iter().enumerate() {
            t[i + 1][j] = a.clone();
        }
        t[i + 1][nv + i] = Rat::from_integer(1.into());
        t[i + 1][cols - 1] = rhs.clone();
    }
    let mut basis: Vec<usize> = (nv..nv + m).collect();

    let iter_cap = 50_000;
    for _ in 0..iter_cap {
        // Bland: entering column is the lowest index with a negative
        // objective-row entry.
        let entering = match (0..cols - 1).find(|&j| t[0][j].is_negative()) {
            Some(j) => j,
            None => {
                let mut x = vec![Rat::zero(); nv];
                for (i, &b) in basis.iter().enumerate() {
                    if b < nv {
                        x[b] = t[i + 1][cols - 1].clone();
                    }
                }
                return Ok((t[0][cols - 1].clone(), x));
            }
        };
        // Bland: leaving row minimizes rhs/coefficient, ties by lowest
        // basis variable index.
        let mut leaving: Option<(usize, Rat)> = None;
        for i in 0..m {
            let a = &t[i + 1][entering];
            if a.is_positive() {
                let ratio = &t[i + 1][cols - 1] / a;
                let better = match &leaving {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leaving = Some((i, ratio));
                }
            }
        }
        let (li, _) = leaving.ok_or_else(|| {
            Error::LinearProgram("objective unbounded above".into())
        })?;

        let pivot = t[li + 1][entering].clone();
        for cell in t[li + 1].iter_mut() {
            *cell /= &pivot;
        }
        for r in 0..=m {
            if r == li + 1 {
                continue;
            }
            let factor = t[r][entering].clone();
            if factor.is_zero() {
                continue;
            }
            for j in 0..cols {
                let delta = &factor * &t[li + 1][j];
                t[r][j] -= delta;
            }
        }
        basis[li] = entering;
    }
    Err(Error::LinearProgram("iteration cap exceeded".into()))
}
