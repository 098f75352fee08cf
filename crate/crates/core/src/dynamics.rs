//! The flip chain: sampling steps, exact one-step laws, and tiny stationarity checks.

use std::collections::{HashMap, HashSet};

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{enumerate_flips, is_proper, Bfs, Coloring, Flip, Graph};
use crate::probs::FlipProbabilities;
use crate::rational::{qi, Q};

/// The random stream of replica `replica` under `seed`.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// One step of the chain in the `(v, c)` draw formulation.
pub fn flip_step<R: Rng + ?Sized>(g: &Graph, col: &Coloring, probs: &FlipProbabilities, rng: &mut R) -> Coloring {
    let mut out = col.clone();
    let mut bfs = Bfs::new(g.n());
    let mut buf = Vec::new();
    flip_step_in_place(g, &mut out, probs, rng, &mut bfs, &mut buf);
    out
}

/// Returns the flip performed, if any.
pub(crate) fn flip_step_in_place<R: Rng + ?Sized>(
    g: &Graph,
    col: &mut Coloring,
    probs: &FlipProbabilities,
    rng: &mut R,
    bfs: &mut Bfs,
    buf: &mut Vec<usize>,
) -> Option<(usize, usize)> {
    let v = rng.gen_range(0..g.n());
    let c = rng.gen_range(0..col.k());
    let u: f64 = rng.gen();
    let base = col.get(v);
    if c == base {
        return None;
    }
    buf.clear();
    bfs.component(g, col.as_slice(), v, base, c, buf);
    let alpha = buf.len();
    if u >= probs.pf(alpha) / alpha as f64 {
        return None;
    }
    for &w in buf.iter() {
        let cw = col.get(w);
        col.set(w, if cw == base { c } else { base });
    }
    Some((base, c))
}

/// Exact one-step law: flips with positive mass, plus the no-op mass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlipDistribution {
    pub flips: Vec<(Flip, Q)>,
    pub noop: Q,
}

impl FlipDistribution {
    pub fn total(&self) -> Q {
        self.flips.iter().fold(self.noop.clone(), |acc, (_, m)| acc + m)
    }
}

/// Each distinct alternating component `S` gets mass `p_{|S|}/(nk)`; the rest is no-op.
pub fn flip_step_distribution(g: &Graph, col: &Coloring, probs: &FlipProbabilities) -> FlipDistribution {
    let nk = qi((g.n() * col.k()) as i64);
    let mut flips = Vec::new();
    let mut noop = Q::one();
    for e in enumerate_flips(g, col) {
        let m = probs.p(e.flip.len()) / &nk;
        if m.is_zero() {
            continue;
        }
        noop -= &m;
        flips.push((e.flip, m));
    }
    FlipDistribution { flips, noop }
}

/// Outcome of [`stationary_check_tiny`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StationaryReport {
    pub states: usize,
    /// Ordered pairs `x ≠ y` with `P(x→y) ≠ P(y→x)`.
    pub asymmetric_pairs: usize,
    /// First proper coloring in lexicographic order, if any.
    pub proper_start: Option<Coloring>,
    /// Colorings reachable from the proper start.
    pub reachable: usize,
    pub reachable_all_proper: bool,
    /// Whether the uniform law on the reachable set is stationary.
    pub uniform_stationary: bool,
}

impl StationaryReport {
    pub fn passed(&self) -> bool {
        self.asymmetric_pairs == 0 && self.reachable_all_proper && self.uniform_stationary
    }
}

const MAX_STATES: usize = 1_000_000;

/// Builds the exact transition law over all `k^n` colorings, checks symmetry and
/// that the uniform law on the proper colorings reachable from a proper start is
/// stationary.
pub fn stationary_check_tiny(g: &Graph, k: usize, probs: &FlipProbabilities) -> Result<StationaryReport> {
    let n = g.n();
    let states = (0..n).try_fold(1usize, |acc, _| acc.checked_mul(k).filter(|&s| s <= MAX_STATES));
    let Some(states) = states else {
        return Err(Error::Capacity(format!("{k}^{n} colorings exceed {MAX_STATES}")));
    };
    let decode = |mut x: usize| {
        let mut cs = vec![0; n];
        for c in cs.iter_mut() {
            *c = x % k;
            x /= k;
        }
        Coloring::new(cs, k).expect("in range")
    };
    let encode = |c: &Coloring| c.as_slice().iter().rev().fold(0usize, |acc, &x| acc * k + x);
    let nk = qi((n * k) as i64);
    let mut bfs = Bfs::new(n);
    let mut buf = Vec::new();

    let mut asymmetric = 0;
    let mut proper_start = None;
    for x in 0..states {
        let cx = decode(x);
        if proper_start.is_none() && is_proper(g, &cx) {
            proper_start = Some(cx.clone());
        }
        for (f, m) in flip_step_distribution(g, &cx, probs).flips {
            let cy = f.apply(&cx).expect("component colors");
            // The only flip that can undo f is f itself, so P(y→x) is the mass of
            // f at y if f is still a component there.
            buf.clear();
            bfs.component(
                g,
                cy.as_slice(),
                f.set[0],
                cy.get(f.set[0]),
                other(&f, cy.get(f.set[0])),
                &mut buf,
            );
            buf.sort_unstable();
            let back = if buf == f.set {
                probs.p(f.len()) / &nk
            } else {
                Q::zero()
            };
            if back != m {
                asymmetric += 1;
            }
        }
    }

    let mut reachable = 0;
    let mut all_proper = true;
    let mut uniform = true;
    if let Some(start) = &proper_start {
        let mut seen = HashSet::from([encode(start)]);
        let mut stack = vec![start.clone()];
        let mut inflow: HashMap<usize, Q> = HashMap::new();
        while let Some(cx) = stack.pop() {
            all_proper &= is_proper(g, &cx);
            let dist = flip_step_distribution(g, &cx, probs);
            *inflow.entry(encode(&cx)).or_insert_with(Q::zero) += &dist.noop;
            for (f, m) in dist.flips {
                let cy = f.apply(&cx).expect("component colors");
                let y = encode(&cy);
                *inflow.entry(y).or_insert_with(Q::zero) += m;
                if seen.insert(y) {
                    stack.push(cy);
                }
            }
        }
        reachable = seen.len();
        // Uniform π is stationary iff every column of the restricted matrix sums to 1.
        uniform = seen.iter().all(|y| inflow.get(y).is_some_and(|s| s.is_one()));
    }
    Ok(StationaryReport {
        states,
        asymmetric_pairs: asymmetric,
        proper_start,
        reachable,
        reachable_all_proper: all_proper,
        uniform_stationary: uniform,
    })
}

fn other(f: &Flip, c: usize) -> usize {
    if c == f.pair.0 {
        f.pair.1
    } else {
        f.pair.0
    }
}
