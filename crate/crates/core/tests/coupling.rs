use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use flipdyn::constructions::{build_construction, family, ConstructionSpec};
use flipdyn::coupling::{
    difference_sets, expected_distance_change, greedy_coupling_distribution, greedy_coupling_step, is_terminating,
    marginals_match, signature, terminating_mass,
};
use flipdyn::dynamics::replica_rng;
use flipdyn::graph::{enumerate_flips, hamming, neighboring_pairs, nonisomorphic_graphs, Flip};
use flipdyn::rational::{q, qi, to_f64, Q};
use flipdyn::{Coloring, FlipProbabilities, Graph, NeighboringPair};
use num_traits::{One, Zero};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn vectors() -> [FlipProbabilities; 2] {
    [FlipProbabilities::vigoda(), FlipProbabilities::alt()]
}

fn all_small_pairs() -> Vec<NeighboringPair> {
    let mut out = Vec::new();
    for n in 1..=4 {
        for g in nonisomorphic_graphs(n).unwrap() {
            let g = Arc::new(g);
            for k in 2..=4 {
                out.extend(neighboring_pairs(&g, k).unwrap());
            }
        }
    }
    out
}

fn pair(n: usize, edges: &[(usize, usize)], sigma: Vec<usize>, tau: Vec<usize>, k: usize) -> NeighboringPair {
    let g = Arc::new(Graph::from_edges(n, edges).unwrap());
    NeighboringPair::new(g, Coloring::new(sigma, k).unwrap(), Coloring::new(tau, k).unwrap()).unwrap()
}

#[test]
fn marginals_are_faithful_on_every_small_pair() {
    let pairs = all_small_pairs();
    // Σ over graphs and k of k^n·n·(k − 1), with 1, 2, 4, 11 graphs on n = 1..4 vertices.
    let expected: usize = [(1, 1), (2, 2), (3, 4), (4, 11)]
        .iter()
        .map(|&(n, graphs)| graphs * (2..=4usize).map(|k| k.pow(n as u32) * n * (k - 1)).sum::<usize>())
        .sum();
    assert_eq!(pairs.len(), expected);
    for probs in vectors() {
        for p in &pairs {
            assert!(marginals_match(p, &probs).unwrap(), "{:?} {:?}", p.sigma, p.tau);
        }
    }
}

#[test]
fn masses_sum_to_one_and_flags_are_consistent() {
    for probs in vectors() {
        for p in all_small_pairs() {
            let dist = greedy_coupling_distribution(&p, &probs).unwrap();
            assert!(dist.total().is_one());
            for m in &dist.moves {
                assert!(m.mass >= Q::zero());
                assert_eq!(m.terminating, is_terminating(&p, m));
                if !m.terminating {
                    let (s2, t2) = m.apply(&p.sigma, &p.tau);
                    assert_eq!(hamming(&s2, &t2).unwrap(), 1);
                }
            }
        }
    }
}

fn assert_in_interval(p: &NeighboringPair, probs: &FlipProbabilities) {
    let (n, k, d) = (p.n() as i64, p.k() as i64, p.graph.d() as i64);
    let mass = terminating_mass(p, probs).unwrap();
    let lo = q(k - d - 2, n * k);
    let hi = (qi(k) + qi(2 * d) * probs.p(2)) / qi(n * k);
    assert!(
        lo <= mass && mass <= hi,
        "{mass} outside [{lo}, {hi}] for {:?} {:?}",
        p.sigma,
        p.tau
    );
}

#[test]
fn terminating_mass_interval() {
    for probs in vectors() {
        for p in all_small_pairs().iter().filter(|p| p.k() > p.graph.d() + 2) {
            assert_in_interval(p, &probs);
        }
        for d in 2..=6 {
            for k in d + 3..=12 {
                for spec in family(d, k) {
                    let p = build_construction(spec).unwrap();
                    if p.k() > p.graph.d() + 2 {
                        assert_in_interval(&p, &probs);
                    }
                }
            }
        }
    }
}

#[test]
fn terminating_mass_examples() {
    let one = pair(1, &[], vec![0], vec![1], 2);
    assert_eq!(terminating_mass(&one, &FlipProbabilities::vigoda()).unwrap(), qi(1));
    // Isolated v: each of the k colors draws v with a coalescing move.
    let iso = pair(3, &[(1, 2)], vec![0, 1, 2], vec![3, 1, 2], 5);
    assert_eq!(terminating_mass(&iso, &FlipProbabilities::vigoda()).unwrap(), q(1, 3));
    let g1 = build_construction(ConstructionSpec::new(1, 2, 5).unwrap()).unwrap();
    assert_in_interval(&g1, &FlipProbabilities::vigoda());
    let g2 = build_construction(ConstructionSpec::new(2, 4, 8).unwrap()).unwrap();
    assert_in_interval(&g2, &FlipProbabilities::vigoda());
}

#[test]
fn single_vertex_moves() {
    let p = pair(1, &[], vec![0], vec![1], 2);
    let dist = greedy_coupling_distribution(&p, &FlipProbabilities::vigoda()).unwrap();
    assert_eq!(dist.moves.len(), 2);
    for m in &dist.moves {
        assert_eq!(m.mass, q(1, 2));
        let (s2, t2) = m.apply(&p.sigma, &p.tau);
        assert_eq!(hamming(&s2, &t2).unwrap(), 0);
    }
    assert_eq!(
        expected_distance_change(&p, &FlipProbabilities::vigoda()).unwrap(),
        qi(-1)
    );
}

#[test]
fn tree_blocks() {
    let p = build_construction(ConstructionSpec::new(1, 2, 5).unwrap()).unwrap();
    let blocks = difference_sets(&p);
    let b = &blocks[&2];
    assert_eq!((b.sigma_v.len(), b.tau_v.len()), (7, 3));
    let mut tau: Vec<_> = b.tau_pieces.iter().map(Flip::len).collect();
    let mut sigma: Vec<_> = b.sigma_pieces.iter().map(Flip::len).collect();
    tau.sort();
    sigma.sort();
    assert_eq!((tau, sigma), (vec![3, 3], vec![1, 1]));
    let sig = signature(&p, 2).unwrap();
    assert_eq!((sig.big_a, sig.big_b, sig.a, sig.b), (7, 3, vec![3, 3], vec![1, 1]));
}

#[test]
fn isolated_v_blocks_are_trivial() {
    let p = pair(3, &[(1, 2)], vec![0, 1, 2], vec![3, 1, 2], 5);
    for (c, b) in difference_sets(&p) {
        assert_eq!(
            (b.sigma_v.set.clone(), b.tau_v.set.clone()),
            (vec![0], vec![0]),
            "color {c}"
        );
        assert!(b.tau_pieces.is_empty() && b.sigma_pieces.is_empty());
    }
}

#[test]
fn zeroed_signature_for_tau_color() {
    // c = τ(v) with δ_c = 1.
    let p = pair(2, &[(0, 1)], vec![0, 1], vec![1, 1], 3);
    let sig = signature(&p, 1).unwrap();
    assert_eq!((sig.delta_c, sig.big_a, sig.big_b), (1, 0, 0));
}

fn arb_pair() -> impl Strategy<Value = NeighboringPair> {
    (2usize..=8, 2usize..=5).prop_flat_map(|(n, k)| {
        let slots = n * (n - 1) / 2;
        (
            proptest::collection::vec(proptest::bool::weighted(0.35), slots),
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
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn difference_sets_are_the_symmetric_difference(p in arb_pair()) {
        let fs: BTreeSet<Flip> = enumerate_flips(&p.graph, &p.sigma).into_iter().map(|e| e.flip).collect();
        let ft: BTreeSet<Flip> = enumerate_flips(&p.graph, &p.tau).into_iter().map(|e| e.flip).collect();
        let mut sigma_side = BTreeSet::new();
        let mut tau_side = BTreeSet::new();
        for b in difference_sets(&p).values() {
            sigma_side.insert(b.sigma_v.clone());
            tau_side.insert(b.tau_v.clone());
            sigma_side.extend(b.sigma_pieces.iter().cloned());
            tau_side.extend(b.tau_pieces.iter().cloned());
        }
        let only_sigma: BTreeSet<Flip> = fs.difference(&ft).cloned().collect();
        let only_tau: BTreeSet<Flip> = ft.difference(&fs).cloned().collect();
        prop_assert_eq!(sigma_side, only_sigma);
        prop_assert_eq!(tau_side, only_tau);
    }

    #[test]
    fn marginals_hold_on_larger_random_pairs(p in arb_pair()) {
        for probs in vectors() {
            prop_assert!(marginals_match(&p, &probs).unwrap());
        }
    }
}

/// Empirical law of sampled steps against the exact distribution, keyed by the
/// resulting pair.
#[test]
fn sampled_steps_match_the_distribution() {
    let p = pair(3, &[(0, 1), (1, 2)], vec![0, 1, 0], vec![2, 1, 0], 3);
    let probs = FlipProbabilities::vigoda();
    let dist = greedy_coupling_distribution(&p, &probs).unwrap();
    let mut exact: BTreeMap<(Vec<usize>, Vec<usize>), Q> = BTreeMap::new();
    let key = |s: &Coloring, t: &Coloring| (s.as_slice().to_vec(), t.as_slice().to_vec());
    *exact.entry(key(&p.sigma, &p.tau)).or_insert_with(Q::zero) += &dist.noop_mass;
    for m in &dist.moves {
        let (s2, t2) = m.apply(&p.sigma, &p.tau);
        *exact.entry(key(&s2, &t2)).or_insert_with(Q::zero) += &m.mass;
    }
    let samples = 1_000_000u64;
    let mut rng = replica_rng(5, 0);
    let mut seen: BTreeMap<(Vec<usize>, Vec<usize>), u64> = BTreeMap::new();
    let (mut change, mut change_sq) = (0i64, 0i64);
    for _ in 0..samples {
        let (s2, t2) = greedy_coupling_step(&p, &probs, &mut rng).unwrap();
        let c = hamming(&s2, &t2).unwrap() as i64 - 1;
        change += c;
        change_sq += c * c;
        *seen.entry(key(&s2, &t2)).or_default() += 1;
    }
    assert!(seen.keys().all(|k| exact.contains_key(k)), "sampled an impossible pair");
    let mut chi2 = 0.0;
    for (k, m) in &exact {
        let e = to_f64(m) * samples as f64;
        let o = *seen.get(k).unwrap_or(&0) as f64;
        chi2 += (o - e).powi(2) / e;
    }
    let df = (exact.len() - 1) as f64;
    let p_value = 1.0 - ChiSquared::new(df).unwrap().cdf(chi2);
    assert!(p_value > 1e-3, "chi-square {chi2} on {df} df, p = {p_value}");
    let n = samples as f64;
    let mean = change as f64 / n;
    let se = ((change_sq as f64 / n - mean * mean) / n).sqrt();
    let exact_change = to_f64(&expected_distance_change(&p, &probs).unwrap());
    assert!(
        (mean - exact_change).abs() < 3.0 * se,
        "{mean} vs {exact_change}, se {se}"
    );
}
