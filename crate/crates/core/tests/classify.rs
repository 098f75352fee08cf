use std::sync::Arc;

use flipdyn::classify::{
    classify_color, gamma_bound, one_step_stage_masses, stage_transition, stage_walk, state_counts, Stage, StateLabel,
};
use flipdyn::constructions::{build_construction, ConstructionSpec};
use flipdyn::coupling::greedy_coupling_distribution;
use flipdyn::dynamics::replica_rng;
use flipdyn::graph::hamming;
use flipdyn::rational::{q, qi, Q};
use flipdyn::{Coloring, FlipProbabilities, Graph, NeighboringPair};
use num_traits::Zero;
use proptest::prelude::*;

fn vectors() -> [FlipProbabilities; 2] {
    [FlipProbabilities::vigoda(), FlipProbabilities::alt()]
}

fn mass(m: &std::collections::BTreeMap<Stage, Q>, s: Stage) -> Q {
    m.get(&s).cloned().unwrap_or_else(Q::zero)
}

/// Stage-transition bounds on the tree for `d = 2, 4, 6`, with `k` the least
/// integer above `1.833·d + 2`.
#[test]
fn stage_bounds_on_the_tree() {
    for (d, k) in [(2usize, 6usize), (4, 10), (6, 13)] {
        let spec = ConstructionSpec::new(1, d, k).unwrap();
        let pair = build_construction(spec).unwrap();
        let (n, ki, di) = (pair.n() as i64, k as i64, d as i64);
        let nk = n * ki;
        for probs in vectors() {
            let c = 2;
            assert_eq!(classify_color(&pair, c).unwrap(), StateLabel::Bad);
            let first = one_step_stage_masses(&pair, c, &probs, Stage::BadStage).unwrap();
            assert!(mass(&first, Stage::GoodStage) >= q(4 * (ki - di - 1), nk), "d = {d}");
            // Every Good pair reachable in one step.
            let dist = greedy_coupling_distribution(&pair, &probs).unwrap();
            for mv in dist.moves.iter().filter(|m| !m.terminating) {
                let (s2, t2) = mv.apply(&pair.sigma, &pair.tau);
                let next = NeighboringPair::new(pair.graph.clone(), s2, t2).unwrap();
                if classify_color(&next, c).unwrap() != StateLabel::Good {
                    continue;
                }
                let good = one_step_stage_masses(&next, c, &probs, Stage::GoodStage).unwrap();
                assert!(mass(&good, Stage::GoodEnd) >= q(ki - di - 2, nk), "d = {d}");
                assert!(mass(&good, Stage::BadEnd) <= q(5, n), "d = {d}");
            }
        }
    }
}

fn pair(n: usize, edges: &[(usize, usize)], sigma: Vec<usize>, tau: Vec<usize>, k: usize) -> NeighboringPair {
    let g = Arc::new(Graph::from_edges(n, edges).unwrap());
    NeighboringPair::new(g, Coloring::new(sigma, k).unwrap(), Coloring::new(tau, k).unwrap()).unwrap()
}

#[test]
fn construction_counts() {
    for d in [2, 4, 6] {
        let tree = build_construction(ConstructionSpec::new(1, d, 12).unwrap()).unwrap();
        let c = state_counts(&tree).unwrap();
        assert_eq!((c.n_sing, c.n_bad, c.n_good), (0, d / 2, 0));
        for a in 2..=4 {
            let spider = build_construction(ConstructionSpec::new(a, d, 12).unwrap()).unwrap();
            let c = state_counts(&spider).unwrap();
            assert_eq!((c.n_sing, c.n_bad, c.n_good), (d, 0, 0));
            assert_eq!(classify_color(&spider, 2).unwrap(), StateLabel::Sing);
        }
    }
    let iso = pair(3, &[(1, 2)], vec![0, 1, 2], vec![3, 1, 2], 5);
    let c = state_counts(&iso).unwrap();
    assert_eq!((c.n_sing, c.n_bad, c.n_good), (0, 0, 0));
}

#[test]
fn special_color_with_two_neighbors_is_good() {
    let p = pair(3, &[(0, 1), (0, 2)], vec![0, 0, 0], vec![2, 0, 0], 4);
    assert_eq!(classify_color(&p, 0).unwrap(), StateLabel::Good);
}

#[test]
fn transitions() {
    use Stage::*;
    assert_eq!(stage_transition(BadEnd, StateLabel::Good, true, false).unwrap(), BadEnd);
    assert!(stage_transition(GoodEnd, StateLabel::Good, false, false).is_err());
    assert_eq!(
        stage_transition(BadStage, StateLabel::Good, true, true).unwrap(),
        BadEnd
    );
    assert_eq!(
        stage_transition(BadStage, StateLabel::Bad, false, true).unwrap(),
        BadEnd
    );
    assert_eq!(
        stage_transition(BadStage, StateLabel::Good, false, true).unwrap(),
        GoodStage
    );
    assert_eq!(
        stage_transition(GoodStage, StateLabel::Good, true, false).unwrap(),
        GoodEnd
    );
    assert_eq!(
        stage_transition(GoodStage, StateLabel::Sing, false, false).unwrap(),
        BadEnd
    );
}

#[test]
fn recoloring_a_grandchild_leaves_bad() {
    let spec = ConstructionSpec::new(1, 2, 6).unwrap();
    let pair = build_construction(spec).unwrap();
    // Grandchild 3 hangs off child 1; color 5 is unused.
    let mut s = pair.sigma.as_slice().to_vec();
    let mut t = pair.tau.as_slice().to_vec();
    s[3] = 5;
    t[3] = 5;
    let next = NeighboringPair::new(
        pair.graph.clone(),
        Coloring::new(s, 6).unwrap(),
        Coloring::new(t, 6).unwrap(),
    )
    .unwrap();
    assert_eq!(classify_color(&next, 2).unwrap(), StateLabel::Good);
    assert_eq!(
        stage_transition(Stage::BadStage, StateLabel::Good, false, true).unwrap(),
        Stage::GoodStage
    );
}

#[test]
fn walks_end_in_bad_end_when_the_first_move_terminates() {
    let pair = build_construction(ConstructionSpec::new(1, 4, 10).unwrap()).unwrap();
    let probs = FlipProbabilities::vigoda();
    let mut good = 0;
    for r in 0..400 {
        let walk = stage_walk(&pair, 2, &probs, &mut replica_rng(3, r), 100_000).unwrap();
        if walk.steps == 1 {
            assert_eq!(walk.outcome, Stage::BadEnd);
        }
        good += (walk.outcome == Stage::GoodEnd) as usize;
    }
    assert!(good > 0);
}

#[test]
fn first_step_bad_end_contains_the_terminating_mass() {
    let pair = build_construction(ConstructionSpec::new(1, 4, 10).unwrap()).unwrap();
    for probs in vectors() {
        let first = one_step_stage_masses(&pair, 2, &probs, Stage::BadStage).unwrap();
        let term = flipdyn::coupling::terminating_mass(&pair, &probs).unwrap();
        let dist = greedy_coupling_distribution(&pair, &probs).unwrap();
        // BadEnd = terminating moves + non-terminating moves that stay out of Good.
        let mut stay = dist.noop_mass.clone();
        for mv in dist.moves.iter().filter(|m| !m.terminating) {
            let (s2, t2) = mv.apply(&pair.sigma, &pair.tau);
            assert_eq!(hamming(&s2, &t2).unwrap(), 1);
            let next = NeighboringPair::new(pair.graph.clone(), s2, t2).unwrap();
            if classify_color(&next, 2).unwrap() != StateLabel::Good {
                stay += &mv.mass;
            }
        }
        assert_eq!(mass(&first, Stage::BadEnd), term + stay);
    }
}

#[test]
fn gamma_bound_formula() {
    let p2 = q(13, 42);
    let (g, c) = gamma_bound(11, 6, &p2).unwrap();
    let top = qi(11) + qi(12) * &p2;
    assert_eq!(g, qi(6 * 11 - 8) * &top / qi(4 * 3 * 4));
    assert_eq!(c, top / qi(3));
    assert!(gamma_bound(8, 6, &p2).is_err());
}

fn arb_pair() -> impl Strategy<Value = NeighboringPair> {
    (2usize..=8, 2usize..=6).prop_flat_map(|(n, k)| {
        (
            proptest::collection::vec(proptest::bool::weighted(0.4), n * (n - 1) / 2),
            proptest::collection::vec(0..k, n),
            0..n,
            1..k,
            Just((n, k)),
        )
            .prop_map(|(mask, sigma, v, shift, (n, k))| {
                let all: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |w| (u, w))).collect();
                let edges: Vec<_> = all.into_iter().zip(mask).filter(|(_, m)| *m).map(|(e, _)| e).collect();
                let mut tau = sigma.clone();
                tau[v] = (tau[v] + shift) % k;
                pair(n, &edges, sigma, tau, k)
            })
    })
}

proptest! {
    #[test]
    fn counts_partition_the_neighborhood(p in arb_pair()) {
        let c = state_counts(&p).unwrap();
        let good_degree: usize = (0..p.k())
            .filter(|&x| classify_color(&p, x).unwrap() == StateLabel::Good)
            .map(|x| p.delta(x))
            .sum();
        prop_assert_eq!(c.n_sing + 2 * c.n_bad + good_degree, p.graph.degree(p.v));
    }
}
