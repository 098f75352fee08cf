//! The per-color bound `H(A, B, a, b)`, the surrogate `g`, and their expansions
//! into linear forms over `p_α`.

use num_traits::Zero;

use crate::coupling::argmax;
use crate::probs::{FlipProbabilities, Weight};
use crate::rational::{qi, Q};

/// `H(A,B,a,b) = (A − a_max − 1)p_A + (B − b_max − 1)p_B + Σ f(u_i)` with
/// `f(u_i) = a_i q_i + b_i q'_i − min(q_i, q'_i)`.
///
/// `i_max` and `j_max` are the lowest maximizing indices. When `a_max = 0` no
/// `q_i` is reduced by `p_A` (the coupling then pairs `S_σ(v,c)` with nothing);
/// likewise for `b`.
pub fn h_value(probs: &FlipProbabilities, big_a: usize, big_b: usize, a: &[usize], b: &[usize]) -> Q {
    h_generic::<Q>(probs, big_a, big_b, a, b)
}

pub fn h_value_f64(probs: &FlipProbabilities, big_a: usize, big_b: usize, a: &[usize], b: &[usize]) -> f64 {
    h_generic::<f64>(probs, big_a, big_b, a, b)
}

fn h_generic<W: Weight>(probs: &FlipProbabilities, big_a: usize, big_b: usize, a: &[usize], b: &[usize]) -> W {
    assert_eq!(a.len(), b.len(), "a and b must have equal length");
    let (a_max, i_max) = argmax(a);
    let (b_max, j_max) = argmax(b);
    let pa = W::prob(probs, big_a);
    let pb = W::prob(probs, big_b);
    let coef = |x: usize, m: usize| W::from_count(x) - W::from_count(m) - W::one();
    let mut h = coef(big_a, a_max) * pa.clone() + coef(big_b, b_max) * pb.clone();
    for i in 0..a.len() {
        let mut qa = W::prob(probs, a[i]);
        if i_max == Some(i) {
            qa = qa - pa.clone();
        }
        let mut qb = W::prob(probs, b[i]);
        if j_max == Some(i) {
            qb = qb - pb.clone();
        }
        let m = if qa < qb { qa.clone() } else { qb.clone() };
        h = h + W::from_count(a[i]) * qa + W::from_count(b[i]) * qb - m;
    }
    h
}

/// `g = a·p_a + b·p_b − min(p_a, p_b)`.
pub fn g_surrogate(probs: &FlipProbabilities, a: usize, b: usize) -> Q {
    let (pa, pb) = (probs.p(a), probs.p(b));
    let m = if pa < pb { pa.clone() } else { pb.clone() };
    qi(a as i64) * pa + qi(b as i64) * pb - m
}

/// A linear form `Σ coef[α]·p_α` with integer coefficients, indexed by `α`.
pub type Form = Vec<i64>;

/// One linear form of `H` per choice of branch in each `min`: bit `i` of the
/// mask selects `q'_i` instead of `q_i` as the subtracted term. The maximum of
/// the forms equals `H`.
pub fn h_forms(big_a: usize, big_b: usize, a: &[usize], b: &[usize]) -> Vec<(u32, Form)> {
    let (a_max, i_max) = argmax(a);
    let (b_max, j_max) = argmax(b);
    let top = [big_a, big_b]
        .into_iter()
        .chain(a.iter().copied())
        .chain(b.iter().copied())
        .max()
        .unwrap_or(0);
    let mut base = vec![0i64; top + 1];
    base[big_a] += big_a as i64 - a_max as i64 - 1;
    base[big_b] += big_b as i64 - b_max as i64 - 1;
    // q_i and q'_i as forms.
    let q_form = |i: usize, sizes: &[usize], parent: usize, at: Option<usize>| {
        let mut f = vec![0i64; top + 1];
        f[sizes[i]] += 1;
        if at == Some(i) {
            f[parent] -= 1;
        }
        f
    };
    let mut qs = Vec::with_capacity(a.len());
    for i in 0..a.len() {
        let qa = q_form(i, a, big_a, i_max);
        let qb = q_form(i, b, big_b, j_max);
        for alpha in 0..=top {
            base[alpha] += a[i] as i64 * qa[alpha] + b[i] as i64 * qb[alpha];
        }
        qs.push((qa, qb));
    }
    let mut out = Vec::with_capacity(1 << a.len());
    for mask in 0..(1u32 << a.len()) {
        let mut f = base.clone();
        for (i, (qa, qb)) in qs.iter().enumerate() {
            let sub = if mask >> i & 1 == 0 { qa } else { qb };
            for alpha in 0..=top {
                f[alpha] -= sub[alpha];
            }
        }
        out.push((mask, f));
    }
    out
}

/// The two branches of `g(a, b)`: subtracting `p_a`, then `p_b`.
pub fn g_forms(a: usize, b: usize) -> [Form; 2] {
    let top = a.max(b);
    let mut base = vec![0i64; top + 1];
    base[a] += a as i64;
    base[b] += b as i64;
    let mut fa = base.clone();
    fa[a] -= 1;
    let mut fb = base;
    fb[b] -= 1;
    [fa, fb]
}

/// Evaluates a form at `probs` (terms with `α = 0` or `α > N_max` vanish).
pub fn eval_form(probs: &FlipProbabilities, f: &[i64]) -> Q {
    f.iter()
        .enumerate()
        .filter(|(_, &c)| c != 0)
        .fold(Q::zero(), |acc, (alpha, &c)| acc + qi(c) * probs.p(alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn known_values() {
        let alt = FlipProbabilities::alt();
        assert_eq!(h_value(&alt, 7, 3, &[3, 3], &[1, 1]), q(8, 3));
        assert_eq!(h_value(&alt, 2, 3, &[1], &[2]), q(5, 6));
        let only1 = FlipProbabilities::singletons();
        assert_eq!(h_value(&only1, 2, 2, &[1], &[1]), qi(1));
        assert_eq!(g_surrogate(&alt, 3, 1), q(4, 3));
        assert_eq!(g_surrogate(&alt, 0, 0), Q::zero());
    }

    #[test]
    fn vigoda_tight_tuple() {
        let vig = FlipProbabilities::vigoda();
        assert_eq!(h_value(&vig, 3, 5, &[1, 1], &[2, 2]), q(8, 3));
    }

    #[test]
    fn forms_max_is_h() {
        let alt = FlipProbabilities::alt();
        for (big_a, big_b, a, b) in [
            (7, 3, vec![3, 3], vec![1, 1]),
            (4, 6, vec![2, 1], vec![0, 5]),
            (3, 2, vec![2], vec![1]),
        ] {
            let best = h_forms(big_a, big_b, &a, &b)
                .iter()
                .map(|(_, f)| eval_form(&alt, f))
                .max()
                .unwrap();
            assert_eq!(best, h_value(&alt, big_a, big_b, &a, &b));
        }
    }
}
