use flipdyn::constructions::{analytic_scaled_change, build_construction, family, trial_vectors, ConstructionSpec};
use flipdyn::coupling::expected_distance_change;
use flipdyn::rational::{qi, Q};
use flipdyn::FlipProbabilities;
use num_traits::Zero;

fn scaled_change(spec: ConstructionSpec, probs: &FlipProbabilities) -> Q {
    let pair = build_construction(spec).unwrap();
    expected_distance_change(&pair, probs).unwrap() * qi((pair.n() * pair.k()) as i64)
}

#[test]
fn closed_forms_match_the_coupling() {
    for probs in [FlipProbabilities::vigoda(), FlipProbabilities::alt()] {
        for d in [2, 4] {
            for k in [d + 3, 2 * d] {
                for spec in family(d, k) {
                    assert_eq!(
                        scaled_change(spec, &probs),
                        analytic_scaled_change(spec, &probs).unwrap(),
                        "{spec:?}"
                    );
                }
            }
        }
    }
}

#[test]
fn no_vector_beats_the_barrier() {
    // k = ⌈(11/6)·6⌉ − 1 = 10 < (11/6)d.
    let (d, k) = (6, 10);
    for probs in trial_vectors(50, 7) {
        let worst = family(d, k)
            .into_iter()
            .map(|s| scaled_change(s, &probs))
            .max()
            .unwrap();
        assert!(
            worst >= Q::zero(),
            "all constructions contract for {:?}",
            probs.values()
        );
    }
}

#[test]
fn trial_vectors_are_deterministic() {
    let a: Vec<_> = trial_vectors(10, 3).iter().map(|p| p.values().to_vec()).collect();
    let b: Vec<_> = trial_vectors(10, 3).iter().map(|p| p.values().to_vec()).collect();
    assert_eq!(a, b);
}
