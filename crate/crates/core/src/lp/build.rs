//! Builders for the three programs and the tight-set comparison.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Rational64;
use serde::Serialize;

use super::h::{g_forms, h_forms};
use super::{
    family_constraint, slack_report, vec_label, BadRows, Enumeration, HFamily, LPInstance, LambdaRule,
    LinearConstraint, Relation,
};
use crate::error::{Error, Result};
use crate::probs::FlipProbabilities;
use crate::rational::{qi, Q};

fn r(n: i64) -> Rational64 {
    Rational64::from_integer(n)
}

fn le(coeffs: Vec<(usize, i64)>, rhs: i64, label: String) -> LinearConstraint {
    LinearConstraint {
        coeffs: coeffs
            .into_iter()
            .filter(|&(_, c)| c != 0)
            .map(|(j, c)| (j, r(c)))
            .collect(),
        relation: Relation::Le,
        rhs: r(rhs),
        label,
    }
}

/// Variables `p_1..p_N` followed by `extra`.
fn variables(n_max: usize, extra: &[&str]) -> Vec<String> {
    (1..=n_max)
        .map(|a| format!("p_{a}"))
        .chain(extra.iter().map(|s| s.to_string()))
        .collect()
}

/// `p_1 = 1` and `p_α ≤ p_{α−1}`. Nonnegativity is a variable bound.
fn monotone(n_max: usize) -> Vec<LinearConstraint> {
    let mut out = vec![LinearConstraint {
        coeffs: vec![(0, r(1))],
        relation: Relation::Eq,
        rhs: r(1),
        label: "p_1=1".into(),
    }];
    for alpha in 2..=n_max {
        out.push(le(
            vec![(alpha - 1, 1), (alpha - 2, -1)],
            0,
            format!("mono/alpha={alpha}"),
        ));
    }
    out
}

fn pap(n_max: usize) -> Vec<LinearConstraint> {
    (1..=n_max)
        .map(|alpha| le(vec![(alpha - 1, alpha as i64)], 1, format!("pap/alpha={alpha}")))
        .collect()
}

/// `α·p_{α−2} ≤ 3` for `3 ≤ α ≤ N_max + 2`.
fn cap3(n_max: usize) -> Vec<LinearConstraint> {
    (3..=n_max + 2)
        .map(|alpha| le(vec![(alpha - 3, alpha as i64)], 3, format!("cap3/alpha={alpha}")))
        .collect()
}

/// `(B − b_m)p_B + Σ b_i p_{b_i} ≤ −1 + λm` over sorted `b⃗` with `b_m > 0`, `B = Σ b_i`.
fn sigma_rows(n_max: usize, m_star: usize, lambda: usize) -> Vec<LinearConstraint> {
    let mut out = Vec::new();
    for m in 2..m_star {
        let mut b = vec![0usize; m];
        loop {
            if b[m - 1] > 0 {
                let big_b: usize = b.iter().sum();
                let mut form = vec![0i64; big_b.max(n_max) + 1];
                form[big_b] += (big_b - b[m - 1]) as i64;
                for &bi in &b {
                    form[bi] += bi as i64;
                }
                let label = format!("sigma_v/m={m}/b={}/B={big_b}", vec_label(&b));
                out.push(family_constraint(&form, n_max, lambda, m, label));
            }
            // Next nondecreasing sequence over 0..=n_max.
            let Some(i) = (0..m).rev().find(|&i| b[i] < n_max) else {
                break;
            };
            let v = b[i] + 1;
            b[i..].iter_mut().for_each(|x| *x = v);
        }
    }
    out
}

/// `x ≥ (A − 2)p_A`, `y ≥ g(a, b)` both branches, and `2x + m*·y ≤ −1 + λm*`.
fn dummy_block(n_max: usize, m_star: usize, lambda: usize, x: usize, y: usize) -> Vec<LinearConstraint> {
    let mut out = Vec::new();
    for big_a in 0..=n_max + 1 {
        let mut coeffs = vec![(x, -1)];
        if (1..=n_max).contains(&big_a) {
            coeffs.push((big_a - 1, big_a as i64 - 2));
        }
        out.push(le(coeffs, 0, format!("x/A={big_a}")));
    }
    for a in 0..=n_max {
        for b in a + 1..=n_max {
            for (form, br) in g_forms(a, b).iter().zip(["a", "b"]) {
                let mut coeffs: Vec<(usize, i64)> = form
                    .iter()
                    .enumerate()
                    .filter(|&(al, _)| al >= 1)
                    .map(|(al, &c)| (al - 1, c))
                    .collect();
                coeffs.push((y, -1));
                out.push(le(coeffs, 0, format!("y/a={a}/b={b}/br={br}")));
            }
        }
    }
    out.push(le(
        vec![(x, 2), (y, m_star as i64), (lambda, -(m_star as i64))],
        -1,
        format!("approx/m*={m_star}"),
    ));
    out
}

fn check_params(n_max: usize, m_star: usize) -> Result<()> {
    if n_max == 0 || m_star < 2 {
        return Err(Error::Domain(format!(
            "need N_max ≥ 1 and m* ≥ 2, got {n_max}, {m_star}"
        )));
    }
    Ok(())
}

/// The single-λ program with canonically ordered tuples.
pub fn build_vigoda_lp(n_max: usize, m_star: usize) -> Result<LPInstance> {
    build_vigoda_lp_with(n_max, m_star, Enumeration::Canonical)
}

pub fn build_vigoda_lp_with(n_max: usize, m_star: usize, enumeration: Enumeration) -> Result<LPInstance> {
    check_params(n_max, m_star)?;
    let variables = variables(n_max, &["lambda", "x", "y"]);
    let (lam, x, y) = (n_max, n_max + 1, n_max + 2);
    let mut explicit = monotone(n_max);
    explicit.extend(pap(n_max));
    explicit.extend(sigma_rows(n_max, m_star, lam));
    explicit.extend(dummy_block(n_max, m_star, lam, x, y));
    let families = (1..m_star)
        .map(|m| HFamily {
            m,
            n_max,
            enumeration,
            lambda: LambdaRule::Single(lam),
        })
        .collect();
    Ok(LPInstance {
        name: format!("vigoda/N={n_max}/m*={m_star}"),
        variables,
        objective: lam,
        explicit,
        families,
    })
}

/// The `γ`-mixed program with the default choice of `λ_bad` rows.
pub fn build_mixed_lp(n_max: usize, m_star: usize, gamma: Rational64, cap: bool) -> Result<LPInstance> {
    build_mixed_lp_with(n_max, m_star, gamma, cap, BadRows::SixAndSeven, Enumeration::Canonical)
}

pub fn build_mixed_lp_with(
    n_max: usize,
    m_star: usize,
    gamma: Rational64,
    cap: bool,
    bad_rows: BadRows,
    enumeration: Enumeration,
) -> Result<LPInstance> {
    check_params(n_max, m_star)?;
    if gamma <= r(0) {
        return Err(Error::Domain("γ must be positive".into()));
    }
    let variables = variables(n_max, &["lambda", "lambda_sing", "lambda_bad", "lambda_good", "x", "y"]);
    let (lam, sing, bad, good, x, y) = (n_max, n_max + 1, n_max + 2, n_max + 3, n_max + 4, n_max + 5);
    let mut explicit = monotone(n_max);
    explicit.extend(pap(n_max));
    if cap {
        explicit.extend(cap3(n_max));
    }
    explicit.extend(sigma_rows(n_max, m_star, good));
    explicit.extend(dummy_block(n_max, m_star, good, x, y));
    explicit.push(le(vec![(sing, 1), (lam, -1)], 0, "lambda>=lambda_sing".into()));
    explicit.push(le(vec![(good, 1), (lam, -1)], 0, "lambda>=lambda_good".into()));
    // γ/(γ+1)·λ_bad + 1/(γ+1)·λ_good ≤ λ, times (γ+1)·den(γ).
    let (gn, gd) = (*gamma.numer(), *gamma.denom());
    let sum = gn
        .checked_add(gd)
        .ok_or_else(|| Error::Capacity("γ too large".into()))?;
    explicit.push(le(vec![(bad, gn), (good, gd), (lam, -sum)], 0, "lambda>=mix".into()));
    let lambda = LambdaRule::Mixed {
        sing,
        bad,
        good,
        bad_rows,
    };
    let families = (1..m_star)
        .map(|m| HFamily {
            m,
            n_max,
            enumeration,
            lambda: lambda.clone(),
        })
        .collect();
    Ok(LPInstance {
        name: format!(
            "mixed/N={n_max}/m*={m_star}/gamma={gn}/{gd}{}",
            if cap { "/cap3" } else { "" }
        ),
        variables,
        objective: lam,
        explicit,
        families,
    })
}

/// The five tuples of the small program, as `(A, B, a⃗, b⃗)`.
pub const TIGHT_TUPLES: [(usize, usize, &[usize], &[usize]); 5] = [
    (3, 2, &[2], &[1]),
    (4, 2, &[3], &[1]),
    (5, 2, &[4], &[1]),
    (6, 3, &[3, 3], &[1, 1]),
    (7, 3, &[3, 3], &[1, 1]),
];

/// Five tight rows over `p_1..p_7` with monotonicity and `p_1 = 1`.
pub fn build_tight_lp() -> LPInstance {
    tight(true)
}

/// The same without the row for `(6,3,(3,3),(1,1))`, the only one besides the
/// last that involves `p_6`.
pub fn build_tight_lp_without_p6() -> LPInstance {
    tight(false)
}

fn tight(with_p6: bool) -> LPInstance {
    let n_max = 7;
    let variables = variables(n_max, &["lambda"]);
    let mut explicit = monotone(n_max);
    for &(big_a, big_b, a, b) in TIGHT_TUPLES.iter().filter(|t| with_p6 || t.0 != 6) {
        let tuple = format!("tight/({big_a},{big_b},{},{})", vec_label(a), vec_label(b));
        for (mask, form) in h_forms(big_a, big_b, a, b) {
            explicit.push(family_constraint(
                &form,
                n_max,
                n_max,
                a.len(),
                format!("{tuple}/br={mask}"),
            ));
        }
    }
    let name = if with_p6 { "tight" } else { "tight/without-p6" };
    LPInstance {
        name: name.into(),
        variables,
        objective: n_max,
        explicit,
        families: Vec::new(),
    }
}

/// Smallest feasible `x = max_A (A − 2)p_A` and `y = max_{a<b} g(a, b)`.
pub fn minimal_dummies(probs: &FlipProbabilities, n_max: usize) -> (Q, Q) {
    let x = (0..=n_max + 1)
        .map(|a| qi(a as i64 - 2) * probs.p(a))
        .max()
        .expect("nonempty");
    let mut y = qi(0);
    for a in 0..=n_max {
        for b in a + 1..=n_max {
            y = y.max(super::h::g_surrogate(probs, a, b));
        }
    }
    (x, y)
}

/// `p` from `probs` (zero past its support), every `λ`-type variable at
/// `lambda`, and minimal dummies.
pub fn trial_assignment(lp: &LPInstance, probs: &FlipProbabilities, lambda: &Q) -> BTreeMap<String, Q> {
    let n_max = lp.variables.iter().filter(|v| v.starts_with("p_")).count();
    let (x, y) = minimal_dummies(probs, n_max);
    lp.variables
        .iter()
        .map(|v| {
            let val = match v.as_str() {
                "x" => x.clone(),
                "y" => y.clone(),
                s if s.starts_with("lambda") => lambda.clone(),
                s => probs.p(s[2..].parse().expect("p_α name")),
            };
            (v.clone(), val)
        })
        .collect()
}

/// Tuple-level labels expected to be tight for the alternative vector at
/// `λ = 11/6`, `m* = 3`.
pub fn expected_observation_tight_set(n_max: usize) -> BTreeSet<String> {
    let mut out = BTreeSet::from(["pap/alpha=1".to_string()]);
    let h = |a: &[usize], b: &[usize], big_a: usize, big_b: usize| {
        format!(
            "H/m={}/a={}/b={}/A={big_a}/B={big_b}",
            a.len(),
            vec_label(a),
            vec_label(b)
        )
    };
    for x in 2..=4usize.min(n_max) {
        out.insert(h(&[1], &[x], 2, x + 1));
        out.insert(h(&[x], &[1], x + 1, 2));
    }
    if n_max >= 3 {
        for big in 6..=7 {
            out.insert(h(&[1, 1], &[3, 3], 3, big));
            out.insert(h(&[3, 3], &[1, 1], big, 3));
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ObservationReport {
    pub n_max: usize,
    pub tight: BTreeSet<String>,
    pub expected: BTreeSet<String>,
    pub missing: Vec<String>,
    pub extra: Vec<String>,
    pub violated: Vec<String>,
}

impl ObservationReport {
    pub fn passed(&self) -> bool {
        self.missing.is_empty() && self.extra.is_empty() && self.violated.is_empty()
    }
}

/// Strips the branch suffix, so a tuple is tight when any of its branch rows is.
pub fn tuple_label(label: &str) -> &str {
    label.split("/br=").next().unwrap_or(label)
}

/// Tight pap, `H`, `σ(v)` and approximation constraints of the single-λ
/// program (`m* = 3`) at `probs` and `λ = 11/6`, against the expected set.
pub fn observation_check(probs: &FlipProbabilities, n_max: usize) -> Result<ObservationReport> {
    let lp = build_vigoda_lp(n_max, 3)?;
    let assignment = trial_assignment(&lp, probs, &(qi(11) / qi(6)));
    let report = slack_report(&lp, &assignment)?;
    let in_scope = |l: &str| ["pap/", "H/", "sigma_v/", "approx/"].iter().any(|p| l.starts_with(p));
    let tight: BTreeSet<String> = report
        .tight
        .iter()
        .filter(|l| in_scope(l))
        .map(|l| tuple_label(l).to_string())
        .collect();
    let expected = expected_observation_tight_set(n_max);
    Ok(ObservationReport {
        n_max,
        missing: expected.difference(&tight).cloned().collect(),
        extra: tight.difference(&expected).cloned().collect(),
        violated: report.violated,
        tight,
        expected,
    })
}
