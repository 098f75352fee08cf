//! Per-color states Sing/Bad/Good, the stage machine for walks started in a Bad
//! state, and the constants `γ` and `C`.

use std::collections::BTreeMap;

use num_traits::Zero;
use rand::Rng;
use serde::Serialize;

use crate::coupling::{greedy_coupling_distribution, signature, BlockInfo, StepKind, Walker};
use crate::error::{Error, Result};
use crate::graph::{hamming, NeighboringPair};
use crate::probs::FlipProbabilities;
use crate::rational::{qi, Q};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum StateLabel {
    Sing,
    Bad,
    Good,
    /// `δ_c = 0`.
    Absent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Stage {
    BadStage,
    GoodStage,
    GoodEnd,
    BadEnd,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StateCounts {
    pub n_sing: usize,
    pub n_bad: usize,
    pub n_good: usize,
}

/// The label of color `c` from its block sizes.
///
/// A color absent from `N(v)` is `Absent` even when it is `σ(v)` or `τ(v)`;
/// present special colors are always `Good`.
pub fn label_from_sizes(
    c: usize,
    special: (usize, usize),
    delta: usize,
    sizes: (usize, usize),
    a: &[usize],
    b: &[usize],
) -> StateLabel {
    if delta == 0 {
        return StateLabel::Absent;
    }
    if c == special.0 || c == special.1 {
        return StateLabel::Good;
    }
    if delta == 1 {
        return StateLabel::Sing;
    }
    let bad = delta == 2
        && ((sizes == (7, 3) && a == [3, 3] && b == [1, 1]) || (sizes == (3, 7) && a == [1, 1] && b == [3, 3]));
    if bad {
        StateLabel::Bad
    } else {
        StateLabel::Good
    }
}

pub(crate) fn label_of_block(b: &BlockInfo, special: (usize, usize)) -> StateLabel {
    label_from_sizes(b.c, special, b.delta, (b.big_a, b.big_b), &b.a, &b.b)
}

pub fn classify_color(pair: &NeighboringPair, c: usize) -> Result<StateLabel> {
    if c >= pair.k() {
        return Err(Error::Input(format!("color {c} out of range for k = {}", pair.k())));
    }
    let delta = pair.delta(c);
    let special = (pair.s(), pair.t());
    if delta == 0 || c == special.0 || c == special.1 {
        return Ok(label_from_sizes(c, special, delta, (0, 0), &[], &[]));
    }
    let sig = signature(pair, c)?;
    Ok(label_from_sizes(
        c,
        special,
        delta,
        (sig.big_a, sig.big_b),
        &sig.a,
        &sig.b,
    ))
}

pub fn state_counts(pair: &NeighboringPair) -> Result<StateCounts> {
    let mut out = StateCounts::default();
    for c in 0..pair.k() {
        out.add(classify_color(pair, c)?);
    }
    Ok(out)
}

impl StateCounts {
    fn add(&mut self, label: StateLabel) {
        match label {
            StateLabel::Sing => self.n_sing += 1,
            StateLabel::Bad => self.n_bad += 1,
            StateLabel::Good => self.n_good += 1,
            StateLabel::Absent => {}
        }
    }
}

/// Counts for the walker's current pair.
pub(crate) fn walker_counts(w: &mut Walker<'_>) -> Result<StateCounts> {
    let special = (w.sigma.get(w.v), w.tau.get(w.v));
    let (ds, dt) = {
        let g = w.graph();
        let v = w.v;
        let count = |c: usize| g.neighbors(v).iter().filter(|&&u| w.sigma.get(u) == c).count();
        (count(special.0), count(special.1))
    };
    let mut out = StateCounts::default();
    for b in w.blocks()? {
        out.add(label_of_block(b, special));
    }
    for (c, delta) in [(special.0, ds), (special.1, dt)] {
        out.add(label_from_sizes(c, special, delta, (0, 0), &[], &[]));
    }
    Ok(out)
}

pub(crate) fn walker_label(w: &mut Walker<'_>, c: usize) -> Result<StateLabel> {
    let special = (w.sigma.get(w.v), w.tau.get(w.v));
    if c == special.0 || c == special.1 {
        let g = w.graph();
        let delta = g.neighbors(w.v).iter().filter(|&&u| w.sigma.get(u) == c).count();
        return Ok(label_from_sizes(c, special, delta, (0, 0), &[], &[]));
    }
    let b = w
        .blocks()?
        .iter()
        .find(|b| b.c == c)
        .expect("one block per ordinary color");
    Ok(label_of_block(b, special))
}

/// One transition of the stage machine.
///
/// `new_label` is the state of the new pair for the tracked color; it is ignored
/// after a terminating move, which may leave the pair at a distance other than 1.
pub fn stage_transition(prev: Stage, new_label: StateLabel, terminating: bool, is_first_step: bool) -> Result<Stage> {
    let next = match prev {
        Stage::GoodEnd => return Err(Error::Usage("the walk already ended in GoodEnd".into())),
        Stage::BadEnd => Stage::BadEnd,
        _ if is_first_step && (terminating || new_label != StateLabel::Good) => Stage::BadEnd,
        Stage::BadStage if !is_first_step => {
            return Err(Error::Usage("a Bad stage can only be left on the first step".into()))
        }
        Stage::GoodStage if terminating => Stage::GoodEnd,
        _ if new_label == StateLabel::Good => Stage::GoodStage,
        _ => Stage::BadEnd,
    };
    Ok(next)
}

/// Applies `mv` to `prev_pair` and advances the stage of color `c`.
pub fn stage_update(
    prev: Stage,
    prev_pair: &NeighboringPair,
    mv: &crate::coupling::CoupledMove,
    c: usize,
    is_first_step: bool,
) -> Result<Stage> {
    let terminating = crate::coupling::is_terminating(prev_pair, mv);
    let (s2, t2) = mv.apply(&prev_pair.sigma, &prev_pair.tau);
    let label = if hamming(&s2, &t2)? == 1 {
        classify_color(&NeighboringPair::new(prev_pair.graph.clone(), s2, t2)?, c)?
    } else {
        StateLabel::Absent
    };
    stage_transition(prev, label, terminating, is_first_step)
}

/// Exact one-step law of the next stage from `pair` in stage `prev`.
pub fn one_step_stage_masses(
    pair: &NeighboringPair,
    c: usize,
    probs: &FlipProbabilities,
    prev: Stage,
) -> Result<BTreeMap<Stage, Q>> {
    let dist = greedy_coupling_distribution(pair, probs)?;
    let first = prev == Stage::BadStage;
    let mut out = BTreeMap::new();
    let own = classify_color(pair, c)?;
    if !dist.noop_mass.is_zero() {
        let s = stage_transition(prev, own, false, first)?;
        *out.entry(s).or_insert_with(Q::zero) += &dist.noop_mass;
    }
    for mv in &dist.moves {
        let s = stage_update(prev, pair, mv, c, first)?;
        *out.entry(s).or_insert_with(Q::zero) += &mv.mass;
    }
    Ok(out)
}

/// Outcome of a stage walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StageWalk {
    /// `GoodEnd` or `BadEnd`.
    pub outcome: Stage,
    /// Steps up to and including the first terminating move.
    pub steps: u64,
}

/// Runs greedy coupling steps from a pair in `Bad(c)` until the first
/// terminating move, tracking the stage of `c`.
pub fn stage_walk<R: Rng + ?Sized>(
    pair: &NeighboringPair,
    c: usize,
    probs: &FlipProbabilities,
    rng: &mut R,
    step_cap: u64,
) -> Result<StageWalk> {
    if classify_color(pair, c)? != StateLabel::Bad {
        return Err(Error::Input(format!("the start pair is not in state Bad({c})")));
    }
    let mut walker = Walker::new(pair, probs)?;
    let mut stage = Stage::BadStage;
    for step in 1..=step_cap {
        let (kind, _) = walker.step(rng)?;
        let terminating = kind == StepKind::Terminating;
        let label = if terminating {
            StateLabel::Absent
        } else {
            walker_label(&mut walker, c)?
        };
        stage = stage_transition(stage, label, terminating, step == 1)?;
        if terminating {
            return Ok(StageWalk {
                outcome: stage,
                steps: step,
            });
        }
    }
    Err(Error::Capacity(format!("no terminating move within {step_cap} steps")))
}

/// `γ = (6k − d − 2)(k + 2p₂d) / (4(k − d − 2)(k − d − 1))` and `C = (k + 2p₂d)/(k − d − 2)`.
pub fn gamma_bound(k: usize, d: usize, p2: &Q) -> Result<(Q, Q)> {
    if k <= d + 2 {
        return Err(Error::Domain(format!("need k > d + 2, got k = {k}, d = {d}")));
    }
    let (k, d) = (qi(k as i64), qi(d as i64));
    let two = qi(2);
    let top = &k + &two * p2 * &d;
    let gap = &k - &d - &two;
    let gamma = (qi(6) * &k - &d - &two) * &top / (qi(4) * &gap * (&k - &d - qi(1)));
    let c = top / gap;
    Ok((gamma, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn labels() {
        let sp = (0, 1);
        assert_eq!(label_from_sizes(2, sp, 0, (1, 1), &[], &[]), StateLabel::Absent);
        assert_eq!(label_from_sizes(0, sp, 0, (0, 0), &[], &[]), StateLabel::Absent);
        assert_eq!(label_from_sizes(0, sp, 2, (0, 0), &[0, 0], &[0, 0]), StateLabel::Good);
        assert_eq!(label_from_sizes(2, sp, 1, (3, 2), &[2], &[1]), StateLabel::Sing);
        assert_eq!(label_from_sizes(2, sp, 2, (7, 3), &[3, 3], &[1, 1]), StateLabel::Bad);
        assert_eq!(label_from_sizes(2, sp, 2, (3, 7), &[1, 1], &[3, 3]), StateLabel::Bad);
        assert_eq!(label_from_sizes(2, sp, 2, (7, 3), &[3, 3], &[1, 0]), StateLabel::Good);
    }

    #[test]
    fn transitions_follow_the_diagram() {
        use Stage::*;
        use StateLabel::*;
        assert_eq!(stage_transition(BadStage, Good, true, true).unwrap(), BadEnd);
        assert_eq!(stage_transition(BadStage, Bad, false, true).unwrap(), BadEnd);
        assert_eq!(stage_transition(BadStage, Good, false, true).unwrap(), GoodStage);
        assert_eq!(stage_transition(GoodStage, Absent, true, false).unwrap(), GoodEnd);
        assert_eq!(stage_transition(GoodStage, Good, false, false).unwrap(), GoodStage);
        assert_eq!(stage_transition(GoodStage, Bad, false, false).unwrap(), BadEnd);
        assert_eq!(stage_transition(GoodStage, Absent, false, false).unwrap(), BadEnd);
        assert_eq!(stage_transition(BadEnd, Good, true, false).unwrap(), BadEnd);
        assert!(matches!(
            stage_transition(GoodEnd, Good, false, false),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            stage_transition(BadStage, Good, false, false),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn gamma_with_zero_p2() {
        let (g, c) = gamma_bound(10, 4, &Q::zero()).unwrap();
        assert_eq!(g, q(54 * 10, 4 * 4 * 5));
        assert_eq!(c, q(10, 4));
        assert!(gamma_bound(6, 4, &Q::zero()).is_err());
    }
}
