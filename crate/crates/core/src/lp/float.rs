//! Floating-point re-solve used to cross-check the exact solver.
//!
//! It works on the dual `max −hᵀy` subject to `−Gᵀy ≤ c`, `y ≥ 0`, where the
//! slack basis is feasible because `c ≥ 0`, and runs a dense primal simplex
//! with Bland's rule over every constraint, deduplicated.

use std::collections::HashSet;

use super::{int_row, LPInstance, Relation};
use crate::error::{Error, Result};

const EPS: f64 = 1e-11;

/// The optimal value of `lp` in floating point.
pub fn solve_f64(lp: &LPInstance) -> Result<f64> {
    let n = lp.variables.len();
    let mut rows = HashSet::new();
    let mut err = None;
    lp.for_each_constraint(|c| match int_row(c) {
        Ok(r) => {
            if c.relation == Relation::Eq {
                rows.insert((r.coeffs.iter().map(|&(j, v)| (j, -v)).collect::<Vec<_>>(), -r.rhs));
            }
            rows.insert((r.coeffs, r.rhs));
        }
        Err(e) => err = Some(e),
    });
    if let Some(e) = err {
        return Err(e);
    }
    let mut rows: Vec<(Vec<(usize, i64)>, i64)> = rows.into_iter().collect();
    rows.sort();
    let m = rows.len();
    let width = m + n;
    // Rows are normalized to unit max-norm, which leaves the primal feasible
    // set unchanged and keeps the tolerances meaningful.
    let norm: Vec<f64> = rows
        .iter()
        .map(|(c, h)| {
            c.iter()
                .map(|&(_, v)| v.unsigned_abs())
                .chain([h.unsigned_abs()])
                .max()
                .unwrap_or(1)
                .max(1) as f64
        })
        .collect();
    // Tableau rows are the n dual constraints; columns are y then slacks.
    let mut a = vec![vec![0.0f64; width]; n];
    for (i, (coeffs, _)) in rows.iter().enumerate() {
        for &(j, v) in coeffs {
            a[j][i] = -(v as f64) / norm[i];
        }
    }
    for (j, row) in a.iter_mut().enumerate() {
        row[m + j] = 1.0;
    }
    let mut rhs = vec![0.0f64; n];
    rhs[lp.objective] = 1.0;
    // Reduced costs of the maximization, objective coefficients −h.
    let mut cost: Vec<f64> = rows
        .iter()
        .zip(&norm)
        .map(|((_, h), w)| -(*h as f64) / w)
        .chain(std::iter::repeat(0.0).take(n))
        .collect();
    let mut value = 0.0f64;
    let mut basis: Vec<usize> = (m..width).collect();
    loop {
        let Some(e) = (0..width).find(|&j| cost[j] > EPS) else {
            break;
        };
        let mut leave: Option<(f64, usize, usize)> = None;
        for r in 0..n {
            if a[r][e] > EPS {
                let ratio = rhs[r] / a[r][e];
                let better = match leave {
                    None => true,
                    Some((b, id, _)) => ratio < b - EPS || (ratio <= b + EPS && basis[r] < id),
                };
                if better {
                    leave = Some((ratio, basis[r], r));
                }
            }
        }
        let Some((_, _, r)) = leave else {
            return Err(Error::Infeasible);
        };
        let piv = a[r][e];
        a[r].iter_mut().for_each(|v| *v /= piv);
        rhs[r] /= piv;
        let prow = a[r].clone();
        for i in 0..n {
            if i != r && a[i][e] != 0.0 {
                let f = a[i][e];
                a[i].iter_mut().zip(&prow).for_each(|(v, p)| *v -= f * p);
                rhs[i] -= f * rhs[r];
            }
        }
        let f = cost[e];
        cost.iter_mut().zip(&prow).for_each(|(v, p)| *v -= f * p);
        value += f * rhs[r];
        basis[r] = e;
    }
    Ok(value)
}
