//! The worst-case family: a height-two tree with paired children (`G_1`) and
//! spiders of `d` alternating paths (`G_2`..`G_4`).
//!
//! Colors: `σ(v) = 0`, `τ(v) = 1`, neighbor colors from 2 upward. Vertex `v`
//! is always vertex 0.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Coloring, Graph, NeighboringPair};
use crate::lp::h::h_value;
use crate::probs::FlipProbabilities;
use crate::rational::{qi, Q};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConstructionSpec {
    /// 1 for the tree, `a ∈ {2, 3, 4}` for paths of `a` vertices.
    pub index: usize,
    pub d: usize,
    pub k: usize,
}

impl ConstructionSpec {
    pub fn new(index: usize, d: usize, k: usize) -> Result<ConstructionSpec> {
        let spec = ConstructionSpec { index, d, k };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let ConstructionSpec { index, d, k } = *self;
        if !(1..=4).contains(&index) {
            return Err(Error::Input(format!("construction index must be 1..=4, got {index}")));
        }
        if d < 2 {
            return Err(Error::Input(format!("need d ≥ 2, got {d}")));
        }
        if index == 1 && d % 2 == 1 {
            return Err(Error::Input(format!("the tree construction needs even d, got {d}")));
        }
        let need = if index == 1 { d / 2 + 2 } else { d + 2 };
        if k < need {
            return Err(Error::Input(format!(
                "construction {index} with d = {d} needs k ≥ {need}, got {k}"
            )));
        }
        Ok(())
    }

    /// Number of vertices.
    pub fn n(&self) -> usize {
        match self.index {
            1 => 1 + 3 * self.d,
            a => 1 + self.d * a,
        }
    }

    /// Colors present in `N(v)`.
    pub fn neighbor_colors(&self) -> usize {
        if self.index == 1 {
            self.d / 2
        } else {
            self.d
        }
    }
}

pub fn build_construction(spec: ConstructionSpec) -> Result<NeighboringPair> {
    spec.validate()?;
    let n = spec.n();
    let mut edges = Vec::with_capacity(n - 1);
    let mut sigma = vec![0usize; n];
    if spec.index == 1 {
        let d = spec.d;
        for i in 1..=d {
            edges.push((0, i));
            // Children 2j−1 and 2j share color 2 + (j − 1).
            sigma[i] = 2 + (i - 1) / 2;
            for w in [d + 2 * i - 1, d + 2 * i] {
                edges.push((i, w));
                sigma[w] = 0;
            }
        }
    } else {
        let a = spec.index;
        for i in 0..spec.d {
            let start = 1 + i * a;
            edges.push((0, start));
            for j in 0..a {
                sigma[start + j] = if j % 2 == 0 { 2 + i } else { 0 };
                if j > 0 {
                    edges.push((start + j - 1, start + j));
                }
            }
        }
    }
    let graph = Arc::new(Graph::from_edges(n, &edges)?);
    let mut tau = sigma.clone();
    tau[0] = 1;
    NeighboringPair::new(graph, Coloring::new(sigma, spec.k)?, Coloring::new(tau, spec.k)?)
}

/// Summed contribution of the difference sets, in units of `1/(nk)`:
/// `(d/2)·H(7,3,(3,3),(1,1))` for the tree, `d·H(a+1,2,(a),(1))` for paths.
pub fn analytic_one_step_change(spec: ConstructionSpec, probs: &FlipProbabilities) -> Result<Q> {
    spec.validate()?;
    let d = spec.d as i64;
    Ok(match spec.index {
        1 => qi(d) / qi(2) * h_value(probs, 7, 3, &[3, 3], &[1, 1]),
        a => qi(d) * h_value(probs, a + 1, 2, &[a], &[1]),
    })
}

/// `nk·E[d(σ',τ') − 1]` predicted from the closed forms: every color absent
/// from `N(v)` coalesces with mass one.
pub fn analytic_scaled_change(spec: ConstructionSpec, probs: &FlipProbabilities) -> Result<Q> {
    let absent = (spec.k - spec.neighbor_colors()) as i64;
    Ok(analytic_one_step_change(spec, probs)? - qi(absent))
}

/// All four members for given `d` and `k`, skipping those whose constraints fail.
pub fn family(d: usize, k: usize) -> Vec<ConstructionSpec> {
    (1..=4)
        .filter_map(|index| ConstructionSpec::new(index, d, k).ok())
        .collect()
}

/// Deterministic trial vectors: both named presets, then seeded random
/// vectors satisfying `1 = p_1 ≥ p_2 ≥ … ≥ p_6 ≥ 0` and `α·p_α ≤ 1`.
pub fn trial_vectors(count: usize, seed: u64) -> Vec<FlipProbabilities> {
    use rand::Rng;
    let mut rng = crate::dynamics::replica_rng(seed, 0);
    let mut out = vec![FlipProbabilities::vigoda(), FlipProbabilities::alt()];
    while out.len() < count {
        let mut p = vec![qi(1)];
        for alpha in 2..=6i64 {
            let cap = p.last().unwrap().clone().min(crate::rational::q(1, alpha));
            let u = crate::rational::q(rng.gen_range(0..=1000), 1000);
            p.push(cap * u);
        }
        out.push(FlipProbabilities::new(p).expect("built within the constraints"));
    }
    out.truncate(count);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::signature;
    use crate::graph::is_proper;
    use crate::rational::q;

    #[test]
    fn tree_signature_is_bad() {
        let pair = build_construction(ConstructionSpec::new(1, 2, 4).unwrap()).unwrap();
        assert_eq!(pair.n(), 7);
        let sig = signature(&pair, 2).unwrap();
        assert_eq!(
            (sig.big_a, sig.big_b, sig.a.clone(), sig.b.clone()),
            (7, 3, vec![3, 3], vec![1, 1])
        );
    }

    #[test]
    fn path_signatures() {
        let pair = build_construction(ConstructionSpec::new(2, 3, 5).unwrap()).unwrap();
        for c in 2..5 {
            let sig = signature(&pair, c).unwrap();
            assert_eq!(
                (sig.big_a, sig.big_b, sig.a.clone(), sig.b.clone()),
                (3, 2, vec![2], vec![1])
            );
        }
    }

    #[test]
    fn every_build_is_proper() {
        for d in 2..=6 {
            for k in d + 2..=12 {
                for spec in family(d, k) {
                    let pair = build_construction(spec).unwrap();
                    assert!(
                        is_proper(&pair.graph, &pair.sigma) && is_proper(&pair.graph, &pair.tau),
                        "{spec:?}"
                    );
                    // Children in the tree have degree 3, so Δ exceeds d only at d = 2.
                    let want = if spec.index == 1 { d.max(3) } else { d };
                    assert_eq!((pair.graph.degree(0), pair.graph.d()), (d, want));
                }
            }
        }
    }

    #[test]
    fn closed_forms_at_alt() {
        let alt = FlipProbabilities::alt();
        assert_eq!(
            analytic_one_step_change(ConstructionSpec::new(1, 4, 6).unwrap(), &alt).unwrap(),
            q(16, 3)
        );
        assert_eq!(
            analytic_one_step_change(ConstructionSpec::new(2, 4, 6).unwrap(), &alt).unwrap(),
            q(20, 6)
        );
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(ConstructionSpec::new(1, 3, 10).is_err());
        assert!(ConstructionSpec::new(2, 4, 5).is_err());
        assert!(ConstructionSpec::new(5, 4, 10).is_err());
        assert!(ConstructionSpec::new(1, 4, 4).is_ok());
    }
}
