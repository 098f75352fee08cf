//! Coupling linear programs: builders, an exact solver, slack reports and the
//! mixing-time bound.
//!
//! Instances keep the small constraint blocks explicit and the `H ≤ −1 + λm`
//! blocks as lazily enumerated families, since those grow as `N^{2m}`.

mod build;
mod float;
pub mod h;
mod simplex;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{self, Q};

pub use build::{
    build_mixed_lp, build_mixed_lp_with, build_tight_lp, build_tight_lp_without_p6, build_vigoda_lp,
    build_vigoda_lp_with, expected_observation_tight_set, minimal_dummies, observation_check, trial_assignment,
    tuple_label, ObservationReport, TIGHT_TUPLES,
};
pub use float::solve_f64;
pub use h::{g_surrogate, h_value, h_value_f64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Relation {
    Le,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearConstraint {
    /// Sparse `(variable index, coefficient)` pairs.
    pub coeffs: Vec<(usize, Rational64)>,
    pub relation: Relation,
    pub rhs: Rational64,
    pub label: String,
}

/// How `(a⃗, b⃗)` pairs are enumerated for `m ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Enumeration {
    /// Index pairs `(a_i, b_i)` sorted lexicographically.
    Canonical,
    /// Every ordering.
    Full,
}

/// Which rows of the mixed program are charged to `λ_bad`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BadRows {
    /// `(1,1,3,3)` with `B = 7` and its mirror with `A = 7` only.
    SevenOnly,
    /// Also the unrealizable companions `B = 6` / `A = 6`, which share the
    /// state's tight constraint. This is the default.
    SixAndSeven,
}

/// The `λ` variable a family row is charged to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LambdaRule {
    Single(usize),
    Mixed {
        sing: usize,
        bad: usize,
        good: usize,
        bad_rows: BadRows,
    },
}

/// All rows `H(A,B,a⃗,b⃗) ≤ −1 + λ_s·m` for one `m`, with every `min` expanded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HFamily {
    pub m: usize,
    pub n_max: usize,
    pub enumeration: Enumeration,
    pub lambda: LambdaRule,
}

#[derive(Debug, Clone)]
pub struct LPInstance {
    pub name: String,
    /// Variable names; `p_α` always sits at index `α − 1`.
    pub variables: Vec<String>,
    /// Index of the variable to minimize.
    pub objective: usize,
    pub explicit: Vec<LinearConstraint>,
    pub families: Vec<HFamily>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LPSolution {
    #[serde(with = "rational::serde_q")]
    pub objective_value: Q,
    #[serde(serialize_with = "ser_map")]
    pub assignment: BTreeMap<String, Q>,
    /// Per-constraint slack; empty when the solve skipped it.
    #[serde(serialize_with = "ser_map")]
    pub slack: BTreeMap<String, Q>,
    /// Constraint-generation rounds and pivots, for diagnostics.
    pub rounds: usize,
    pub pivots: usize,
    pub active_rows: usize,
}

fn ser_map<S: serde::Serializer>(m: &BTreeMap<String, Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut out = s.serialize_map(Some(m.len()))?;
    for (k, v) in m {
        out.serialize_entry(k, &rational::fmt(v))?;
    }
    out.end()
}

#[derive(Debug, Clone, Serialize)]
pub struct SlackReport {
    #[serde(serialize_with = "ser_map")]
    pub slack: BTreeMap<String, Q>,
    pub tight: Vec<String>,
    pub violated: Vec<String>,
}

impl SlackReport {
    pub fn is_feasible(&self) -> bool {
        self.violated.is_empty()
    }
}

/// The `λ` variable a tuple's rows use, and their label prefix.
pub(crate) struct RowMeta {
    pub lambda: usize,
    pub prefix: String,
}

impl HFamily {
    /// Calls `f(a, b, A, B)` for every tuple of this family.
    pub(crate) fn for_each_tuple(&self, mut f: impl FnMut(&[usize], &[usize], usize, usize)) {
        let m = self.m;
        let side = self.n_max + 1;
        let mut idx = vec![0usize; m];
        let (mut a, mut b) = (vec![0usize; m], vec![0usize; m]);
        loop {
            for i in 0..m {
                a[i] = idx[i] / side;
                b[i] = idx[i] % side;
            }
            let ok_order = match self.enumeration {
                Enumeration::Canonical => idx.windows(2).all(|w| w[0] <= w[1]),
                Enumeration::Full => true,
            };
            if ok_order && a.iter().any(|&x| x > 0) && b.iter().any(|&x| x > 0) {
                let a_max = *a.iter().max().unwrap();
                let b_max = *b.iter().max().unwrap();
                let (sa, sb): (usize, usize) = (a.iter().sum(), b.iter().sum());
                for big_a in 1 + a_max..=1 + sa {
                    for big_b in 1 + b_max..=1 + sb {
                        f(&a, &b, big_a, big_b);
                    }
                }
            }
            // Odometer over idx in [0, side²)^m.
            let mut i = m;
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                idx[i] += 1;
                if idx[i] < side * side {
                    if self.enumeration == Enumeration::Canonical {
                        for j in i + 1..m {
                            idx[j] = idx[i];
                        }
                    }
                    break;
                }
                idx[i] = 0;
            }
        }
    }

    /// The `λ` variable and label prefix for a tuple.
    pub(crate) fn row_meta(&self, a: &[usize], b: &[usize], big_a: usize, big_b: usize) -> RowMeta {
        let tuple = format!(
            "m={}/a={}/b={}/A={}/B={}",
            self.m,
            vec_label(a),
            vec_label(b),
            big_a,
            big_b
        );
        let (lambda, prefix) = match &self.lambda {
            LambdaRule::Single(l) => (*l, format!("H/{tuple}")),
            LambdaRule::Mixed {
                sing,
                bad,
                good,
                bad_rows,
            } => {
                if self.m == 1 {
                    (*sing, format!("sing/{tuple}"))
                } else if let Some(tag) = bad_tag(a, b, big_a, big_b, *bad_rows) {
                    (*bad, tag)
                } else {
                    (*good, format!("good/{tuple}"))
                }
            }
        };
        RowMeta { lambda, prefix }
    }

    pub fn constraint_count(&self) -> usize {
        let mut n = 0;
        self.for_each_tuple(|_, _, _, _| n += 1);
        n << self.m
    }

    /// Expands every row into a [`LinearConstraint`].
    pub fn for_each_constraint(&self, mut f: impl FnMut(LinearConstraint)) {
        self.for_each_tuple(|a, b, big_a, big_b| {
            let meta = self.row_meta(a, b, big_a, big_b);
            for (mask, form) in h::h_forms(big_a, big_b, a, b) {
                f(family_constraint(
                    &form,
                    self.n_max,
                    meta.lambda,
                    self.m,
                    format!("{}/br={mask}", meta.prefix),
                ));
            }
        });
    }
}

fn bad_tag(a: &[usize], b: &[usize], big_a: usize, big_b: usize, rows: BadRows) -> Option<String> {
    let hit = |x: usize| x == 7 || (rows == BadRows::SixAndSeven && x == 6);
    if a == [1, 1] && b == [3, 3] && hit(big_b) {
        Some(format!("bad/(1,1,3,3,B={big_b})/A={big_a}"))
    } else if a == [3, 3] && b == [1, 1] && hit(big_a) {
        Some(format!("bad/(3,3,1,1,A={big_a})/B={big_b}"))
    } else {
        None
    }
}

pub(crate) fn vec_label(v: &[usize]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(","))
}

/// `Σ form[α]·p_α − m·λ ≤ −1`, dropping `α = 0` and `α > N_max`.
pub(crate) fn family_constraint(
    form: &[i64],
    n_max: usize,
    lambda: usize,
    m: usize,
    label: String,
) -> LinearConstraint {
    let mut coeffs: Vec<(usize, Rational64)> = form
        .iter()
        .enumerate()
        .filter(|&(alpha, &c)| c != 0 && (1..=n_max).contains(&alpha))
        .map(|(alpha, &c)| (alpha - 1, Rational64::from_integer(c)))
        .collect();
    coeffs.push((lambda, Rational64::from_integer(-(m as i64))));
    LinearConstraint {
        coeffs,
        relation: Relation::Le,
        rhs: Rational64::from_integer(-1),
        label,
    }
}

impl LPInstance {
    pub fn variable(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    pub fn constraint_count(&self) -> usize {
        self.explicit.len() + self.families.iter().map(HFamily::constraint_count).sum::<usize>()
    }

    pub fn for_each_constraint(&self, mut f: impl FnMut(&LinearConstraint)) {
        self.explicit.iter().for_each(&mut f);
        for fam in &self.families {
            fam.for_each_constraint(|c| f(&c));
        }
    }

    pub fn constraints(&self) -> Vec<LinearConstraint> {
        let mut out = Vec::with_capacity(self.constraint_count());
        self.for_each_constraint(|c| out.push(c.clone()));
        out
    }

    /// Checks that every constraint references declared variables.
    pub fn validate(&self) -> Result<()> {
        let n = self.variables.len();
        if self.objective >= n {
            return Err(Error::Invariant("objective is not a declared variable".into()));
        }
        let mut bad = None;
        self.for_each_constraint(|c| {
            if bad.is_none() && c.coeffs.iter().any(|&(j, _)| j >= n) {
                bad = Some(c.label.clone());
            }
        });
        match bad {
            Some(label) => Err(Error::Invariant(format!(
                "constraint {label} references an undeclared variable"
            ))),
            None => Ok(()),
        }
    }

    /// Plain-text CPLEX LP format. Coefficients are floating images of the
    /// exact fractions; see [`LPInstance::to_json`] for the exact data.
    pub fn to_cplex(&self) -> String {
        let name = |j: usize| cplex_name(&self.variables[j]);
        let mut out = format!(
            "\\ {}\nMinimize\n obj: {}\nSubject To\n",
            self.name,
            name(self.objective)
        );
        let mut i = 0usize;
        self.for_each_constraint(|c| {
            i += 1;
            let mut line = format!(" c{i}:");
            for &(j, ref a) in &c.coeffs {
                let v = *a.numer() as f64 / *a.denom() as f64;
                let _ = write!(line, " {} {} {}", if v < 0.0 { "-" } else { "+" }, v.abs(), name(j));
            }
            let op = match c.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
            };
            let rhs = *c.rhs.numer() as f64 / *c.rhs.denom() as f64;
            let _ = writeln!(out, "{line} {op} {rhs}");
        });
        out.push_str("Bounds\n");
        for v in &self.variables {
            let _ = writeln!(out, " {} >= 0", cplex_name(v));
        }
        out.push_str("End\n");
        out
    }

    /// Sidecar JSON with exact fractions, in the same row order as the LP file.
    pub fn to_json(&self) -> serde_json::Value {
        let mut rows = Vec::new();
        self.for_each_constraint(|c| {
            let coeffs: serde_json::Map<String, serde_json::Value> = c
                .coeffs
                .iter()
                .map(|(j, a)| (self.variables[*j].clone(), rational::fmt64(a).into()))
                .collect();
            rows.push(serde_json::json!({
                "label": c.label,
                "coeffs": coeffs,
                "relation": match c.relation { Relation::Le => "<=", Relation::Eq => "=" },
                "rhs": rational::fmt64(&c.rhs),
            }));
        });
        serde_json::json!({
            "name": self.name,
            "variables": self.variables,
            "objective": self.variables[self.objective],
            "constraints": rows,
        })
    }
}

impl LPInstance {
    /// Reads the export of [`LPInstance::to_json`]. Every row comes back explicit.
    pub fn from_json(value: &serde_json::Value) -> Result<LPInstance> {
        let bad = |what: &str| Error::Input(format!("LP file: {what}"));
        let str_of = |v: &serde_json::Value, what: &str| v.as_str().map(str::to_string).ok_or_else(|| bad(what));
        let name = str_of(&value["name"], "missing `name`")?;
        let variables: Vec<String> = value["variables"]
            .as_array()
            .ok_or_else(|| bad("missing `variables`"))?
            .iter()
            .map(|v| str_of(v, "variable names must be strings"))
            .collect::<Result<_>>()?;
        let objective_name = str_of(&value["objective"], "missing `objective`")?;
        let index = |v: &str| {
            variables
                .iter()
                .position(|x| x == v)
                .ok_or_else(|| bad(&format!("unknown variable {v:?}")))
        };
        let objective = index(&objective_name)?;
        let mut explicit = Vec::new();
        for row in value["constraints"]
            .as_array()
            .ok_or_else(|| bad("missing `constraints`"))?
        {
            let mut coeffs = Vec::new();
            for (v, a) in row["coeffs"].as_object().ok_or_else(|| bad("row without `coeffs`"))? {
                coeffs.push((
                    index(v)?,
                    rational::parse64(&str_of(a, "coefficients must be strings")?)?,
                ));
            }
            coeffs.sort_by_key(|&(j, _)| j);
            let relation = match row["relation"].as_str() {
                Some("<=") => Relation::Le,
                Some("=") => Relation::Eq,
                _ => return Err(bad("relation must be `<=` or `=`")),
            };
            let rhs = rational::parse64(&str_of(&row["rhs"], "missing `rhs`")?)?;
            let label = str_of(&row["label"], "missing `label`")?;
            explicit.push(LinearConstraint {
                coeffs,
                relation,
                rhs,
                label,
            });
        }
        Ok(LPInstance {
            name,
            variables,
            objective,
            explicit,
            families: Vec::new(),
        })
    }
}

fn cplex_name(v: &str) -> String {
    v.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect()
}

/// An integer row `Σ coeffs·x (≤|=) rhs`, the original divided through by the
/// lcm of its denominators.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct IntRow {
    pub coeffs: Vec<(usize, i64)>,
    pub rhs: i64,
}

pub(crate) fn int_row(c: &LinearConstraint) -> Result<IntRow> {
    let l = row_scale(c);
    let scale = |r: &Rational64| -> Result<i64> {
        r.numer()
            .checked_mul(l / r.denom())
            .ok_or_else(|| Error::Capacity(format!("row {} overflows i64", c.label)))
    };
    let mut coeffs = Vec::with_capacity(c.coeffs.len());
    for (j, a) in &c.coeffs {
        let v = scale(a)?;
        if v != 0 {
            coeffs.push((*j, v));
        }
    }
    coeffs.sort_unstable();
    Ok(IntRow {
        coeffs,
        rhs: scale(&c.rhs)?,
    })
}

/// An assignment over a common denominator, for fast exact row evaluation.
pub(crate) struct Scaled {
    pub num: Vec<BigInt>,
    pub den: BigInt,
    small: Option<(Vec<i128>, i128)>,
}

impl Scaled {
    pub fn new(x: &[Q]) -> Scaled {
        let den = x.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
        let num: Vec<BigInt> = x.iter().map(|v| v.numer() * (&den / v.denom())).collect();
        let small = num
            .iter()
            .map(|v| v.to_i128())
            .collect::<Option<Vec<_>>>()
            .zip(den.to_i128());
        Scaled { num, den, small }
    }

    /// `(rhs − Σ coeffs·x)·den`.
    pub fn slack_scaled(&self, coeffs: &[(usize, i64)], rhs: i64) -> BigInt {
        if let Some((xs, d)) = &self.small {
            let mut acc = Some((rhs as i128).checked_mul(*d));
            for &(j, c) in coeffs {
                acc = acc
                    .and_then(|s| s.and_then(|s| (c as i128).checked_mul(xs[j]).and_then(|t| s.checked_sub(t))))
                    .map(Some);
            }
            if let Some(Some(v)) = acc {
                return BigInt::from(v);
            }
        }
        let mut s = BigInt::from(rhs) * &self.den;
        for &(j, c) in coeffs {
            s -= BigInt::from(c) * &self.num[j];
        }
        s
    }
}

fn assignment_vector(lp: &LPInstance, assignment: &BTreeMap<String, Q>) -> Result<Vec<Q>> {
    lp.variables
        .iter()
        .map(|v| {
            assignment
                .get(v)
                .cloned()
                .ok_or_else(|| Error::Input(format!("assignment misses variable {v}")))
        })
        .collect()
}

/// Exact slack `rhs − lhs` of every constraint, the tight set and any violations.
///
/// An equality row counts as violated when its slack is nonzero.
pub fn slack_report(lp: &LPInstance, assignment: &BTreeMap<String, Q>) -> Result<SlackReport> {
    let x = assignment_vector(lp, assignment)?;
    let scaled = Scaled::new(&x);
    let mut report = SlackReport {
        slack: BTreeMap::new(),
        tight: Vec::new(),
        violated: Vec::new(),
    };
    let mut err = None;
    lp.for_each_constraint(|c| {
        if err.is_some() {
            return;
        }
        let row = match int_row(c) {
            Ok(r) => r,
            Err(e) => {
                err = Some(e);
                return;
            }
        };
        let s = scaled.slack_scaled(&row.coeffs, row.rhs);
        // Undo both scalings.
        let slack = Q::new(s, &scaled.den * BigInt::from(row_scale(c)));
        if slack.is_zero() {
            report.tight.push(c.label.clone());
        } else if slack.is_negative() || c.relation == Relation::Eq {
            report.violated.push(c.label.clone());
        }
        report.slack.insert(c.label.clone(), slack);
    });
    match err {
        Some(e) => Err(e),
        None => Ok(report),
    }
}

/// The lcm of a row's denominators, i.e. the factor [`int_row`] multiplies by.
pub(crate) fn row_scale(c: &LinearConstraint) -> i64 {
    let mut l = *c.rhs.denom();
    for (_, a) in &c.coeffs {
        l = l.lcm(a.denom());
    }
    l
}

/// Solves exactly and reports the slack of every constraint.
pub fn solve(lp: &LPInstance) -> Result<LPSolution> {
    let mut sol = solve_value(lp)?;
    let report = slack_report(lp, &sol.assignment)?;
    if !report.is_feasible() {
        return Err(Error::Invariant(format!(
            "solver returned a point violating {}",
            report.violated[0]
        )));
    }
    sol.slack = report.slack;
    Ok(sol)
}

/// Solves exactly without the per-constraint slack map.
pub fn solve_value(lp: &LPInstance) -> Result<LPSolution> {
    lp.validate()?;
    simplex::solve_by_generation(lp)
}

/// `2⌈2βW/α⌉·⌈ln(n)/α⌉` with `α = (k − λ*d)/(k − d − 2)`, `β = nk/(k − d − 2)`
/// and `W = 2N_max + 1`.
pub fn mixing_time_bound(n: usize, k: usize, d: usize, lambda_star: &Q, n_max: usize) -> Result<BigInt> {
    if k <= d + 2 {
        return Err(Error::Domain(format!("need k > d + 2, got k = {k}, d = {d}")));
    }
    let (nq, kq, dq) = (
        Q::from_integer(n.into()),
        Q::from_integer(k.into()),
        Q::from_integer(d.into()),
    );
    let gap = &kq - &dq - Q::from_integer(2.into());
    let alpha = (&kq - lambda_star * &dq) / &gap;
    if !alpha.is_positive() {
        return Err(Error::Domain(format!(
            "need k > λ*·d, got k = {k}, λ*·d = {}",
            rational::fmt(&(lambda_star * dq))
        )));
    }
    let beta = nq * kq / gap;
    bound_from_parts(n, &alpha, &beta, 2 * n_max + 1)
}

/// `2⌈2βW/α⌉·⌈ln(n)/α⌉` for given `α`, `β` and `W`.
pub fn bound_from_parts(n: usize, alpha: &Q, beta: &Q, w: usize) -> Result<BigInt> {
    if !alpha.is_positive() {
        return Err(Error::Domain("α must be positive".into()));
    }
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    let first = rational::ceil(&(Q::from_integer(2.into()) * beta * Q::from_integer(w.into()) / alpha));
    let second = ((n as f64).ln() / rational::to_f64(alpha)).ceil();
    Ok(BigInt::from(2) * first * BigInt::from(second as u64))
}
