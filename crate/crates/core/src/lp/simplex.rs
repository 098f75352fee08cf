//! Exact dual simplex over a dictionary, with lazy rows added as cuts.
//!
//! The dictionary is `x_B = β − T·x_N` with objective `z = z0 + d·x_N`. Every
//! program here minimizes one nonnegative variable, so `d ≥ 0` holds at the
//! start and the method never needs a phase one. Pivots follow Bland's rule on
//! both sides, which rules out cycling.

use std::collections::{BTreeMap, HashSet};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use super::{int_row, IntRow, LPInstance, LPSolution, Relation, Scaled};
use crate::error::{Error, Result};
use crate::rational::{to_f64, Q};

/// Rows added per pricing round.
const CUTS_PER_ROUND: usize = 64;
/// Tuples whose float violation exceeds `-SCREEN` are checked exactly.
const SCREEN: f64 = 1e-7;
/// Explicit rows beyond this count are priced lazily like the families.
const EAGER_ROWS: usize = 5000;

#[derive(Clone, Copy)]
enum Place {
    Basic(usize),
    Nonbasic(usize),
}

struct Dictionary {
    n: usize,
    t: Vec<Vec<Q>>,
    beta: Vec<Q>,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
    d: Vec<Q>,
    z0: Q,
    place: Vec<Place>,
    pivots: usize,
}

impl Dictionary {
    fn new(n: usize, objective: usize) -> Dictionary {
        let mut d = vec![Q::zero(); n];
        d[objective] = Q::from_integer(1.into());
        Dictionary {
            n,
            t: Vec::new(),
            beta: Vec::new(),
            basic: Vec::new(),
            nonbasic: (0..n).collect(),
            d,
            z0: Q::zero(),
            place: (0..n).map(Place::Nonbasic).collect(),
            pivots: 0,
        }
    }

    /// Adds `row·x ≤ rhs` with a fresh basic slack.
    fn add_row(&mut self, row: &IntRow) {
        let mut beta = Q::from_integer(row.rhs.into());
        let mut t = vec![Q::zero(); self.n];
        for &(j, c) in &row.coeffs {
            let c = Q::from_integer(c.into());
            match self.place[j] {
                Place::Nonbasic(l) => t[l] += &c,
                Place::Basic(r) => {
                    beta -= &c * &self.beta[r];
                    for (tl, trl) in t.iter_mut().zip(&self.t[r]) {
                        if !trl.is_zero() {
                            *tl -= &c * trl;
                        }
                    }
                }
            }
        }
        let id = self.place.len();
        self.place.push(Place::Basic(self.t.len()));
        self.t.push(t);
        self.beta.push(beta);
        self.basic.push(id);
    }

    fn pivot(&mut self, r: usize, l: usize) {
        self.pivots += 1;
        let a = self.t[r][l].clone();
        let inv = a.recip();
        let mut row = std::mem::take(&mut self.t[r]);
        for (j, v) in row.iter_mut().enumerate() {
            if j != l && !v.is_zero() {
                *v *= &inv;
            }
        }
        row[l] = inv.clone();
        self.beta[r] = &self.beta[r] * &inv;
        for i in 0..self.t.len() {
            if i == r || self.t[i][l].is_zero() {
                continue;
            }
            let f = self.t[i][l].clone();
            let ti = &mut self.t[i];
            for (j, v) in row.iter().enumerate() {
                if j != l && !v.is_zero() {
                    ti[j] -= &f * v;
                }
            }
            ti[l] = -(&f * &row[l]);
            let delta = &f * &self.beta[r];
            self.beta[i] -= delta;
        }
        let dl = self.d[l].clone();
        if !dl.is_zero() {
            self.z0 += &dl * &self.beta[r];
            for (j, v) in row.iter().enumerate() {
                if j != l && !v.is_zero() {
                    self.d[j] -= &dl * v;
                }
            }
            self.d[l] = -(&dl * &row[l]);
        }
        self.t[r] = row;
        let (leaving, entering) = (self.basic[r], self.nonbasic[l]);
        self.basic[r] = entering;
        self.nonbasic[l] = leaving;
        self.place[entering] = Place::Basic(r);
        self.place[leaving] = Place::Nonbasic(l);
    }

    fn run(&mut self) -> Result<()> {
        loop {
            let leave = (0..self.t.len())
                .filter(|&r| self.beta[r].is_negative())
                .min_by_key(|&r| self.basic[r]);
            let Some(r) = leave else { return Ok(()) };
            let mut best: Option<(Q, usize, usize)> = None;
            for (l, trl) in self.t[r].iter().enumerate() {
                if !trl.is_negative() {
                    continue;
                }
                let ratio = &self.d[l] / -trl;
                let better = match &best {
                    None => true,
                    Some((b, id, _)) => ratio < *b || (ratio == *b && self.nonbasic[l] < *id),
                };
                if better {
                    best = Some((ratio, self.nonbasic[l], l));
                }
            }
            let Some((_, _, l)) = best else {
                return Err(Error::Infeasible);
            };
            self.pivot(r, l);
        }
    }

    fn primal(&self) -> Vec<Q> {
        (0..self.n)
            .map(|j| match self.place[j] {
                Place::Basic(r) => self.beta[r].clone(),
                Place::Nonbasic(_) => Q::zero(),
            })
            .collect()
    }
}

fn push_rows(dict: &mut Dictionary, row: IntRow, relation: Relation) {
    dict.add_row(&row);
    if relation == Relation::Eq {
        let neg = IntRow {
            coeffs: row.coeffs.iter().map(|&(j, c)| (j, -c)).collect(),
            rhs: -row.rhs,
        };
        dict.add_row(&neg);
    }
}

/// `H` at a float point `p` indexed by `α` (zero outside the slice).
fn h_float(p: &[f64], big_a: usize, big_b: usize, a: &[usize], b: &[usize]) -> f64 {
    let at = |alpha: usize| p.get(alpha).copied().unwrap_or(0.0);
    let (a_max, i_max) = crate::coupling::argmax(a);
    let (b_max, j_max) = crate::coupling::argmax(b);
    let (pa, pb) = (at(big_a), at(big_b));
    let mut h = (big_a as f64 - a_max as f64 - 1.0) * pa + (big_b as f64 - b_max as f64 - 1.0) * pb;
    for i in 0..a.len() {
        let qa = at(a[i]) - if i_max == Some(i) { pa } else { 0.0 };
        let qb = at(b[i]) - if j_max == Some(i) { pb } else { 0.0 };
        h += a[i] as f64 * qa + b[i] as f64 * qb - qa.min(qb);
    }
    h
}

/// Exactly violated family rows at `x`, with their float violation.
fn price(lp: &LPInstance, x: &[Q]) -> Vec<(f64, IntRow)> {
    let xf: Vec<f64> = x.iter().map(to_f64).collect();
    let scaled = Scaled::new(x);
    let mut out = Vec::new();
    for fam in &lp.families {
        // p as a slice indexed by α.
        let p: Vec<f64> = std::iter::once(0.0).chain(xf[..fam.n_max].iter().copied()).collect();
        fam.for_each_tuple(|a, b, big_a, big_b| {
            let meta = fam.row_meta(a, b, big_a, big_b);
            let rhs = -1.0 + xf[meta.lambda] * fam.m as f64;
            if h_float(&p, big_a, big_b, a, b) - rhs <= -SCREEN {
                return;
            }
            for (_, form) in super::h::h_forms(big_a, big_b, a, b) {
                let c = super::family_constraint(&form, fam.n_max, meta.lambda, fam.m, String::new());
                let row = int_row(&c).expect("integer family row");
                let s = scaled.slack_scaled(&row.coeffs, row.rhs);
                if s < BigInt::zero() {
                    let viol: f64 = row.coeffs.iter().map(|&(j, c)| c as f64 * xf[j]).sum::<f64>() - row.rhs as f64;
                    out.push((viol, row));
                }
            }
        });
    }
    out
}

/// Violated rows of an explicit pool at `x`.
fn price_pool(pool: &[IntRow], x: &[Q]) -> Vec<(f64, IntRow)> {
    if pool.is_empty() {
        return Vec::new();
    }
    let xf: Vec<f64> = x.iter().map(to_f64).collect();
    let scaled = Scaled::new(x);
    pool.iter()
        .filter(|row| scaled.slack_scaled(&row.coeffs, row.rhs) < BigInt::zero())
        .map(|row| {
            let viol: f64 = row.coeffs.iter().map(|&(j, c)| c as f64 * xf[j]).sum::<f64>() - row.rhs as f64;
            (viol, row.clone())
        })
        .collect()
}

pub(super) fn solve_by_generation(lp: &LPInstance) -> Result<LPSolution> {
    let n = lp.variables.len();
    let mut dict = Dictionary::new(n, lp.objective);
    let mut seen = HashSet::new();
    let mut pool = Vec::new();
    for c in &lp.explicit {
        let row = int_row(c)?;
        if lp.explicit.len() <= EAGER_ROWS {
            if seen.insert((row.clone(), c.relation)) {
                push_rows(&mut dict, row, c.relation);
            }
            continue;
        }
        if c.relation == Relation::Eq {
            pool.push(IntRow {
                coeffs: row.coeffs.iter().map(|&(j, a)| (j, -a)).collect(),
                rhs: -row.rhs,
            });
        }
        pool.push(row);
    }
    let mut rounds = 0;
    loop {
        rounds += 1;
        dict.run()?;
        let x = dict.primal();
        let mut cuts = price(lp, &x);
        cuts.extend(price_pool(&pool, &x));
        if cuts.is_empty() {
            let assignment: BTreeMap<String, Q> = lp.variables.iter().cloned().zip(x.iter().cloned()).collect();
            return Ok(LPSolution {
                objective_value: x[lp.objective].clone(),
                assignment,
                slack: BTreeMap::new(),
                rounds,
                pivots: dict.pivots,
                active_rows: dict.t.len(),
            });
        }
        cuts.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut added = 0;
        for (_, row) in cuts {
            if added == CUTS_PER_ROUND {
                break;
            }
            if seen.insert((row.clone(), Relation::Le)) {
                dict.add_row(&row);
                added += 1;
            }
        }
        if added == 0 {
            return Err(Error::Invariant("a violated row was already in the active set".into()));
        }
    }
}
