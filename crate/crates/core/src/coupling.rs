//! The greedy one-step coupling and the variable-length coupling built on it.
//!
//! For a neighboring pair with `s = σ(v)` and `t = τ(v)`, every alternating
//! component not touching `v` is shared except the `(t, c)` components of σ next
//! to `v` and the `(s, c)` components of τ next to `v`. Those, together with
//! `S_σ(v,c)` and `S_τ(v,c)`, form one block per color `c ∉ {s, t}`. The
//! `(s, t)` component of `v` has the same vertex set in both colorings.
//!
//! Inside a block the τ-pieces are the components of `S_σ(v,c) − v` and the
//! σ-pieces are the components of `S_τ(v,c) − v`. Each `c`-colored neighbor owns
//! one slot holding the piece on each side that contains it; a piece already
//! owned by an earlier neighbor counts as empty there. In improper pairs some
//! pieces contain no `c`-colored neighbor at all; they get slots of their own
//! after the neighbor slots, τ-pieces first, each ordered by smallest vertex.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{enumerate_flips, hamming, Bfs, Coloring, Flip, Graph, NeighboringPair};
use crate::probs::{FlipProbabilities, Weight};
use crate::rational::{qi, Q};

/// Per-color sizes of the difference block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Signature {
    pub c: usize,
    pub delta_c: usize,
    /// `|S_σ(v,c)|`.
    pub big_a: usize,
    /// `|S_τ(v,c)|`.
    pub big_b: usize,
    /// Sizes of the τ-pieces `S_τ(u_i, σ(v))`, one per slot.
    pub a: Vec<usize>,
    /// Sizes of the σ-pieces `S_σ(u_i, τ(v))`, one per slot.
    pub b: Vec<usize>,
    pub a_max: usize,
    pub b_max: usize,
    /// Lowest index attaining `a_max`; `None` when `a_max = 0`.
    pub i_max: Option<usize>,
    pub j_max: Option<usize>,
}

/// A pair of flips, one per coloring, with its probability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoupledMove {
    pub sigma_flip: Option<Flip>,
    pub tau_flip: Option<Flip>,
    pub mass: Q,
    pub terminating: bool,
}

impl CoupledMove {
    /// The pair after applying both flips.
    pub fn apply(&self, sigma: &Coloring, tau: &Coloring) -> (Coloring, Coloring) {
        let mut s2 = sigma.clone();
        let mut t2 = tau.clone();
        if let Some(f) = &self.sigma_flip {
            f.apply_in_place(&mut s2);
        }
        if let Some(f) = &self.tau_flip {
            f.apply_in_place(&mut t2);
        }
        (s2, t2)
    }
}

/// The exact joint law of one greedy coupling step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingDistribution {
    pub moves: Vec<CoupledMove>,
    pub noop_mass: Q,
}

impl CouplingDistribution {
    pub fn total(&self) -> Q {
        self.moves.iter().fold(self.noop_mass.clone(), |acc, m| acc + &m.mass)
    }

    /// Law of the flip applied to σ, as (flip, mass) with no-op mass separate.
    pub fn sigma_marginal(&self) -> (BTreeMap<Flip, Q>, Q) {
        self.marginal(|m| m.sigma_flip.as_ref())
    }

    pub fn tau_marginal(&self) -> (BTreeMap<Flip, Q>, Q) {
        self.marginal(|m| m.tau_flip.as_ref())
    }

    fn marginal(&self, side: impl Fn(&CoupledMove) -> Option<&Flip>) -> (BTreeMap<Flip, Q>, Q) {
        let mut out: BTreeMap<Flip, Q> = BTreeMap::new();
        let mut noop = self.noop_mass.clone();
        for m in &self.moves {
            match side(m) {
                Some(f) => *out.entry(f.clone()).or_insert_with(Q::zero) += &m.mass,
                None => noop += &m.mass,
            }
        }
        (out, noop)
    }
}

/// The block of color `c ∉ {σ(v), τ(v)}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffBlock {
    pub c: usize,
    /// `S_σ(v,c)`.
    pub sigma_v: Flip,
    /// `S_τ(v,c)`.
    pub tau_v: Flip,
    /// Components of `S_σ(v,c) − v`: flips of τ with colors `(σ(v), c)`.
    pub tau_pieces: Vec<Flip>,
    /// Components of `S_τ(v,c) − v`: flips of σ with colors `(τ(v), c)`.
    pub sigma_pieces: Vec<Flip>,
    /// Per slot, the index into `tau_pieces` and `sigma_pieces` (if nonempty there).
    pub slots: Vec<(Option<usize>, Option<usize>)>,
}

/// The difference blocks for every color other than `σ(v)` and `τ(v)`.
pub fn difference_sets(pair: &NeighboringPair) -> BTreeMap<usize, DiffBlock> {
    let mut scratch = Scratch::new(pair.n());
    let structure = Structure::build(
        &pair.graph,
        pair.sigma.as_slice(),
        pair.tau.as_slice(),
        pair.v,
        pair.k(),
        &mut scratch,
    );
    let flip = |r: SetRef| Flip::new(structure.set(r).to_vec(), r.pair.0, r.pair.1);
    structure
        .blocks
        .iter()
        .map(|b| {
            let block = DiffBlock {
                c: b.c,
                sigma_v: flip(b.x),
                tau_v: flip(b.z),
                tau_pieces: b.a_pieces.iter().map(|&r| flip(r)).collect(),
                sigma_pieces: b.b_pieces.iter().map(|&r| flip(r)).collect(),
                slots: b.slots.clone(),
            };
            (b.c, block)
        })
        .collect()
}

/// The `(σ(v), τ(v))` component of `v`, identical as a vertex set in σ and τ.
pub fn shared_component(pair: &NeighboringPair) -> Flip {
    let mut bfs = Bfs::new(pair.n());
    let mut buf = Vec::new();
    bfs.component(&pair.graph, pair.sigma.as_slice(), pair.v, pair.s(), pair.t(), &mut buf);
    Flip::new(buf, pair.s(), pair.t())
}

/// Signature of color `c`. Requires `δ_c > 0` or `c ∈ {σ(v), τ(v)}`.
///
/// For `c = σ(v)` every σ(v)-colored neighbor's `(σ(v), τ(v))` component is the
/// component of `v` itself, so after removing duplicates `b = (|K|, 0, …)` and
/// `b_max` discounts `v` from the first entry. For `c = τ(v)` the τ-pieces all
/// coincide with `S_τ(v, σ(v))` and are emptied.
pub fn signature(pair: &NeighboringPair, c: usize) -> Result<Signature> {
    if c >= pair.k() {
        return Err(Error::Input(format!("color {c} out of range for k = {}", pair.k())));
    }
    let (s, t, v) = (pair.s(), pair.t(), pair.v);
    let delta_c = pair.delta(c);
    let g = &pair.graph;
    let nbrs: Vec<usize> = g
        .neighbors(v)
        .iter()
        .copied()
        .filter(|&u| pair.sigma.get(u) == c)
        .collect();
    if c == s || c == t {
        let shared = shared_component(pair);
        // Component of each special neighbor in the coloring where it is defined.
        let (col, other) = if c == s { (&pair.sigma, t) } else { (&pair.tau, s) };
        let mut sizes = Vec::with_capacity(nbrs.len());
        let mut seen: Vec<Vec<usize>> = Vec::new();
        let mut first_hit = None;
        let mut bfs = Bfs::new(pair.n());
        for (j, &u) in nbrs.iter().enumerate() {
            let mut buf = Vec::new();
            bfs.component(g, col.as_slice(), u, col.get(u), other, &mut buf);
            buf.sort_unstable();
            let dup = seen.contains(&buf);
            let is_shared = buf == shared.set;
            if is_shared && first_hit.is_none() {
                first_hit = Some(j);
            }
            let keep = !dup && !(c == t && is_shared);
            sizes.push(if keep { buf.len() } else { 0 });
            seen.push(buf);
        }
        let zeros = vec![0; nbrs.len()];
        let sig = if c == s {
            let adjusted: Vec<usize> = sizes
                .iter()
                .enumerate()
                .map(|(j, &x)| x - usize::from(Some(j) == first_hit && x > 0))
                .collect();
            let (b_max, j_max) = argmax(&adjusted);
            Signature {
                c,
                delta_c,
                big_a: 0,
                big_b: shared.len(),
                a: zeros,
                b: sizes,
                a_max: 0,
                b_max,
                i_max: None,
                j_max,
            }
        } else {
            let (a_max, i_max) = argmax(&sizes);
            Signature {
                c,
                delta_c,
                big_a: 0,
                big_b: 0,
                a: sizes,
                b: zeros,
                a_max,
                b_max: 0,
                i_max,
                j_max: None,
            }
        };
        return Ok(sig);
    }
    if delta_c == 0 {
        return Err(Error::Domain(format!("color {c} does not appear around v")));
    }
    let mut scratch = Scratch::new(pair.n());
    let mut st = Structure::default();
    st.push_block(g, pair.sigma.as_slice(), pair.tau.as_slice(), v, s, t, c, &mut scratch);
    let b = &st.blocks[0];
    let (a_max, i_max) = argmax(&b.a);
    let (b_max, j_max) = argmax(&b.b);
    Ok(Signature {
        c,
        delta_c,
        big_a: b.big_a,
        big_b: b.big_b,
        a: b.a.clone(),
        b: b.b.clone(),
        a_max,
        b_max,
        i_max,
        j_max,
    })
}

/// Maximum entry and the lowest index attaining it; index `None` when the max is 0.
pub(crate) fn argmax(xs: &[usize]) -> (usize, Option<usize>) {
    let mut best = (0, None);
    for (i, &x) in xs.iter().enumerate() {
        if x > best.0 {
            best = (x, Some(i));
        }
    }
    best
}

/// Masses of one block, in units of `1/(nk)`, from sizes alone.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BlockMasses<W> {
    pub i_max: Option<usize>,
    pub j_max: Option<usize>,
    /// `S_σ(v,c)` with the largest τ-piece (or nothing).
    pub step1: W,
    /// `S_τ(v,c)` with the largest σ-piece (or nothing).
    pub step2: W,
    /// Per slot: both pieces, τ-piece only, σ-piece only.
    pub slots: Vec<[W; 3]>,
}

pub(crate) fn block_masses<W: Weight>(
    probs: &FlipProbabilities,
    big_a: usize,
    big_b: usize,
    a: &[usize],
    b: &[usize],
) -> Result<BlockMasses<W>> {
    let (_, i_max) = argmax(a);
    let (_, j_max) = argmax(b);
    let pa = W::prob(probs, big_a);
    let pb = W::prob(probs, big_b);
    let mut slots = Vec::with_capacity(a.len());
    for i in 0..a.len() {
        let mut qa = W::prob(probs, a[i]);
        if i_max == Some(i) {
            qa = qa - pa.clone();
        }
        let mut qb = W::prob(probs, b[i]);
        if j_max == Some(i) {
            qb = qb - pb.clone();
        }
        if qa < W::zero() || qb < W::zero() {
            return Err(Error::Invariant(format!(
                "negative coupling mass in block (A={big_a}, B={big_b}, a={a:?}, b={b:?}); probabilities must be nonincreasing"
            )));
        }
        let m = if qa < qb { qa.clone() } else { qb.clone() };
        slots.push([m.clone(), qa - m.clone(), qb - m]);
    }
    Ok(BlockMasses {
        i_max,
        j_max,
        step1: pa,
        step2: pb,
        slots,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct SetRef {
    start: usize,
    len: usize,
    pair: (usize, usize),
}

#[derive(Debug, Clone)]
pub(crate) struct BlockInfo {
    pub c: usize,
    pub delta: usize,
    pub big_a: usize,
    pub big_b: usize,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    x: SetRef,
    z: SetRef,
    a_pieces: Vec<SetRef>,
    b_pieces: Vec<SetRef>,
    slots: Vec<(Option<usize>, Option<usize>)>,
}

/// The sets of all blocks plus the shared `(s, t)` component of `v`, stored in one arena.
#[derive(Debug, Clone, Default)]
pub(crate) struct Structure {
    arena: Vec<usize>,
    pub blocks: Vec<BlockInfo>,
    shared: Option<SetRef>,
}

pub(crate) struct Scratch {
    bfs: Bfs,
    buf: Vec<usize>,
    owner_a: Vec<usize>,
    owner_b: Vec<usize>,
}

impl Scratch {
    pub(crate) fn new(n: usize) -> Scratch {
        Scratch {
            bfs: Bfs::new(n),
            buf: Vec::new(),
            owner_a: vec![0; n],
            owner_b: vec![0; n],
        }
    }
}

impl Structure {
    pub(crate) fn build(g: &Graph, sigma: &[usize], tau: &[usize], v: usize, k: usize, sc: &mut Scratch) -> Structure {
        let mut st = Structure::default();
        st.rebuild(g, sigma, tau, v, k, sc);
        st
    }

    pub(crate) fn rebuild(&mut self, g: &Graph, sigma: &[usize], tau: &[usize], v: usize, k: usize, sc: &mut Scratch) {
        self.arena.clear();
        self.blocks.clear();
        let (s, t) = (sigma[v], tau[v]);
        sc.buf.clear();
        sc.bfs.component(g, sigma, v, s, t, &mut sc.buf);
        self.shared = Some(self.store(&mut sc.buf, (s.min(t), s.max(t))));
        for c in 0..k {
            if c != s && c != t {
                self.push_block(g, sigma, tau, v, s, t, c, sc);
            }
        }
    }

    fn store(&mut self, buf: &mut [usize], pair: (usize, usize)) -> SetRef {
        buf.sort_unstable();
        let start = self.arena.len();
        self.arena.extend_from_slice(buf);
        SetRef {
            start,
            len: buf.len(),
            pair,
        }
    }

    pub(crate) fn set(&self, r: SetRef) -> &[usize] {
        &self.arena[r.start..r.start + r.len]
    }

    /// Components of `whole − v` in `colors` restricted to `(x, y)`, in order of smallest vertex.
    fn pieces(
        &mut self,
        g: &Graph,
        colors: &[usize],
        v: usize,
        whole: SetRef,
        pair: (usize, usize),
        owner: &mut [usize],
        sc_bfs: &mut Bfs,
        buf: &mut Vec<usize>,
    ) -> Vec<SetRef> {
        let mut out = Vec::new();
        sc_bfs.fresh();
        sc_bfs.block(v);
        for idx in 0..whole.len {
            let u = self.arena[whole.start + idx];
            if sc_bfs.seen(u) {
                continue;
            }
            buf.clear();
            sc_bfs.grow(g, colors, u, pair.0, pair.1, buf);
            for &w in buf.iter() {
                owner[w] = out.len();
            }
            out.push(self.store(buf, (pair.0.min(pair.1), pair.0.max(pair.1))));
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn push_block(
        &mut self,
        g: &Graph,
        sigma: &[usize],
        tau: &[usize],
        v: usize,
        s: usize,
        t: usize,
        c: usize,
        sc: &mut Scratch,
    ) {
        let Scratch {
            bfs,
            buf,
            owner_a,
            owner_b,
        } = sc;
        buf.clear();
        bfs.component(g, sigma, v, s, c, buf);
        let x = self.store(buf, (s.min(c), s.max(c)));
        buf.clear();
        bfs.component(g, tau, v, t, c, buf);
        let z = self.store(buf, (t.min(c), t.max(c)));
        let a_pieces = self.pieces(g, sigma, v, x, (s, c), owner_a, bfs, buf);
        let b_pieces = self.pieces(g, tau, v, z, (t, c), owner_b, bfs, buf);
        let mut used_a = vec![false; a_pieces.len()];
        let mut used_b = vec![false; b_pieces.len()];
        let mut slots = Vec::new();
        let mut delta = 0;
        for &u in g.neighbors(v) {
            if sigma[u] != c {
                continue;
            }
            delta += 1;
            // u is colored c next to v, so it lies in both S_σ(v,c) − v and S_τ(v,c) − v.
            let ia = owner_a[u];
            let ib = owner_b[u];
            let sa = (!used_a[ia]).then_some(ia);
            let sb = (!used_b[ib]).then_some(ib);
            used_a[ia] = true;
            used_b[ib] = true;
            slots.push((sa, sb));
        }
        for (i, used) in used_a.iter().enumerate() {
            if !used {
                slots.push((Some(i), None));
            }
        }
        for (j, used) in used_b.iter().enumerate() {
            if !used {
                slots.push((None, Some(j)));
            }
        }
        let a = slots.iter().map(|&(ia, _)| ia.map_or(0, |i| a_pieces[i].len)).collect();
        let b = slots.iter().map(|&(_, ib)| ib.map_or(0, |j| b_pieces[j].len)).collect();
        self.blocks.push(BlockInfo {
            c,
            delta,
            big_a: x.len,
            big_b: z.len,
            a,
            b,
            x,
            z,
            a_pieces,
            b_pieces,
            slots,
        });
    }

    pub(crate) fn shared(&self) -> SetRef {
        self.shared.expect("built")
    }

    /// Total size of the σ-side flips in the blocks plus the shared component.
    pub(crate) fn sigma_weight(&self) -> usize {
        let mut w = self.shared().len;
        for b in &self.blocks {
            w += b.x.len + b.b_pieces.iter().map(|r| r.len).sum::<usize>();
        }
        w
    }

    /// All terminating moves with masses in units of `1/(nk)`.
    pub(crate) fn moves<W: Weight>(&self, probs: &FlipProbabilities, out: &mut Vec<LocalMove<W>>) -> Result<()> {
        out.clear();
        let push = |out: &mut Vec<LocalMove<W>>, sigma: Option<SetRef>, tau: Option<SetRef>, mass: W| {
            if mass > W::zero() {
                out.push(LocalMove { sigma, tau, mass });
            }
        };
        let kset = self.shared();
        let pk = W::prob(probs, kset.len);
        if kset.len == 1 {
            // v alone: flipping it in one coloring only makes the two agree.
            push(out, Some(kset), None, pk.clone());
            push(out, None, Some(kset), pk);
        } else {
            push(out, Some(kset), Some(kset), pk);
        }
        for b in &self.blocks {
            if b.slots.is_empty() {
                let pa = W::prob(probs, b.big_a);
                let pb = W::prob(probs, b.big_b);
                let m = if pa < pb { pa.clone() } else { pb.clone() };
                push(out, Some(b.x), Some(b.z), m.clone());
                push(out, Some(b.x), None, pa - m.clone());
                push(out, None, Some(b.z), pb - m);
                continue;
            }
            let bm = block_masses::<W>(probs, b.big_a, b.big_b, &b.a, &b.b)?;
            let a_of = |i: usize| b.slots[i].0.map(|p| b.a_pieces[p]);
            let b_of = |i: usize| b.slots[i].1.map(|p| b.b_pieces[p]);
            push(out, Some(b.x), bm.i_max.and_then(a_of), bm.step1.clone());
            push(out, bm.j_max.and_then(b_of), Some(b.z), bm.step2.clone());
            for (i, [both, a_only, b_only]) in bm.slots.into_iter().enumerate() {
                push(out, b_of(i), a_of(i), both);
                push(out, None, a_of(i), a_only);
                push(out, b_of(i), None, b_only);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LocalMove<W> {
    sigma: Option<SetRef>,
    tau: Option<SetRef>,
    mass: W,
}

/// True when a σ-flip not containing `v` is also a flip of τ.
fn shared_flip(f: &Flip, v: usize, t: usize, is_nbr: impl Fn(usize) -> bool) -> bool {
    !f.contains(v) && !((f.pair.0 == t || f.pair.1 == t) && f.set.iter().any(|&w| is_nbr(w)))
}

/// Exact law of one greedy coupling step.
pub fn greedy_coupling_distribution(pair: &NeighboringPair, probs: &FlipProbabilities) -> Result<CouplingDistribution> {
    let g = &pair.graph;
    let v = pair.v;
    let nk = qi((pair.n() * pair.k()) as i64);
    let mut sc = Scratch::new(pair.n());
    let st = Structure::build(g, pair.sigma.as_slice(), pair.tau.as_slice(), v, pair.k(), &mut sc);
    let mut local = Vec::new();
    st.moves::<Q>(probs, &mut local)?;
    let flip = |r: SetRef| Flip::new(st.set(r).to_vec(), r.pair.0, r.pair.1);
    let mut moves: Vec<CoupledMove> = local
        .into_iter()
        .map(|m| CoupledMove {
            sigma_flip: m.sigma.map(flip),
            tau_flip: m.tau.map(flip),
            mass: m.mass / &nk,
            terminating: true,
        })
        .collect();
    let t = pair.t();
    let is_nbr = |w: usize| g.has_edge(v, w);
    for e in enumerate_flips(g, &pair.sigma) {
        if !shared_flip(&e.flip, v, t, is_nbr) {
            continue;
        }
        let mass = probs.p(e.flip.len()) / &nk;
        if mass.is_zero() {
            continue;
        }
        moves.push(CoupledMove {
            sigma_flip: Some(e.flip.clone()),
            tau_flip: Some(e.flip),
            mass,
            terminating: false,
        });
    }
    let noop_mass = moves.iter().fold(Q::one(), |acc, m| acc - &m.mass);
    if noop_mass < Q::zero() {
        return Err(Error::Invariant("coupling masses exceed 1".into()));
    }
    Ok(CouplingDistribution { moves, noop_mass })
}

/// Whether both marginals of the greedy coupling equal the one-step laws of
/// the flip chain from `σ` and from `τ`.
pub fn marginals_match(pair: &NeighboringPair, probs: &FlipProbabilities) -> Result<bool> {
    let dist = greedy_coupling_distribution(pair, probs)?;
    let law = |col: &Coloring| {
        let d = crate::dynamics::flip_step_distribution(&pair.graph, col, probs);
        (d.flips.into_iter().collect::<BTreeMap<_, _>>(), d.noop)
    };
    let strip = |(mut m, noop): (BTreeMap<Flip, Q>, Q)| {
        m.retain(|_, q| !q.is_zero());
        (m, noop)
    };
    Ok(strip(dist.sigma_marginal()) == law(&pair.sigma) && strip(dist.tau_marginal()) == law(&pair.tau))
}

/// Whether a move can change the distance: anything other than one identical
/// flip in both colorings that avoids `v`.
pub fn is_terminating(pair: &NeighboringPair, mv: &CoupledMove) -> bool {
    match (&mv.sigma_flip, &mv.tau_flip) {
        (None, None) => false,
        (Some(a), Some(b)) if a == b => a.contains(pair.v),
        _ => true,
    }
}

/// Total mass of terminating moves.
pub fn terminating_mass(pair: &NeighboringPair, probs: &FlipProbabilities) -> Result<Q> {
    let dist = greedy_coupling_distribution(pair, probs)?;
    Ok(dist
        .moves
        .iter()
        .filter(|m| m.terminating)
        .fold(Q::zero(), |acc, m| acc + &m.mass))
}

/// Exact `E[d(σ',τ')] − 1` after one greedy step.
pub fn expected_distance_change(pair: &NeighboringPair, probs: &FlipProbabilities) -> Result<Q> {
    let dist = greedy_coupling_distribution(pair, probs)?;
    let mut acc = Q::zero();
    for m in dist.moves.iter().filter(|m| m.terminating) {
        let (s2, t2) = m.apply(&pair.sigma, &pair.tau);
        let d = hamming(&s2, &t2)? as i64;
        acc += &m.mass * qi(d - 1);
    }
    Ok(acc)
}

/// One sampled greedy coupling step.
pub fn greedy_coupling_step<R: Rng + ?Sized>(
    pair: &NeighboringPair,
    probs: &FlipProbabilities,
    rng: &mut R,
) -> Result<(Coloring, Coloring)> {
    let mut w = Walker::new(pair, probs)?;
    w.step(rng)?;
    Ok((w.sigma, w.tau))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum StepKind {
    Noop,
    Shared,
    Terminating,
}

/// Samples the greedy coupling step by step without materializing the shared flips.
///
/// A draw `(w, c)` whose σ-component is shared is flipped in both colorings with
/// probability `p_α/α`. The remaining draws (those landing on a block or on the
/// `(s, t)` component of `v`, plus the `c = σ(w)` draws) carry total weight
/// `R = n + Σ|F|` over the σ-side block flips; conditional on landing there a
/// terminating move is taken with probability `M/R`, where `M` is the total
/// terminating mass, chosen in proportion to its mass.
pub(crate) struct Walker<'a> {
    g: &'a Graph,
    probs: &'a FlipProbabilities,
    pub sigma: Coloring,
    pub tau: Coloring,
    pub v: usize,
    k: usize,
    nbr: Vec<bool>,
    structure: Structure,
    moves: Vec<LocalMove<f64>>,
    total: f64,
    dirty: bool,
    scratch: Scratch,
    buf: Vec<usize>,
    touched: Vec<usize>,
    pub record: bool,
    pub last: (Option<Vec<usize>>, Option<Vec<usize>>),
}

impl<'a> Walker<'a> {
    pub(crate) fn new(pair: &'a NeighboringPair, probs: &'a FlipProbabilities) -> Result<Walker<'a>> {
        let n = pair.n();
        let mut w = Walker {
            g: &pair.graph,
            probs,
            sigma: pair.sigma.clone(),
            tau: pair.tau.clone(),
            v: pair.v,
            k: pair.k(),
            nbr: vec![false; n],
            structure: Structure::default(),
            moves: Vec::new(),
            total: 0.0,
            dirty: true,
            scratch: Scratch::new(n),
            buf: Vec::new(),
            touched: Vec::new(),
            record: false,
            last: (None, None),
        };
        w.set_v(pair.v);
        w.refresh()?;
        Ok(w)
    }

    fn set_v(&mut self, v: usize) {
        for &u in self.g.neighbors(self.v) {
            self.nbr[u] = false;
        }
        self.v = v;
        for &u in self.g.neighbors(v) {
            self.nbr[u] = true;
        }
    }

    fn refresh(&mut self) -> Result<()> {
        if !self.dirty {
            return Ok(());
        }
        self.structure.rebuild(
            self.g,
            self.sigma.as_slice(),
            self.tau.as_slice(),
            self.v,
            self.k,
            &mut self.scratch,
        );
        self.structure.moves::<f64>(self.probs, &mut self.moves)?;
        self.total = self.moves.iter().map(|m| m.mass).sum();
        self.dirty = false;
        Ok(())
    }

    /// Blocks of the current pair (colors other than `σ(v)`, `τ(v)`).
    pub(crate) fn blocks(&mut self) -> Result<&[BlockInfo]> {
        self.refresh()?;
        Ok(&self.structure.blocks)
    }

    pub(crate) fn graph(&self) -> &'a Graph {
        self.g
    }

    /// Advances one step; returns the kind of move and the new distance.
    pub(crate) fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<(StepKind, usize)> {
        self.refresh()?;
        if self.record {
            self.last = (None, None);
        }
        let n = self.g.n();
        let w = rng.gen_range(0..n);
        let c = rng.gen_range(0..self.k);
        let sw = self.sigma.get(w);
        if c != sw {
            self.buf.clear();
            self.scratch
                .bfs
                .component(self.g, self.sigma.as_slice(), w, sw, c, &mut self.buf);
            let t = self.tau.get(self.v);
            let in_blocks =
                self.buf.contains(&self.v) || ((c == t || sw == t) && self.buf.iter().any(|&x| self.nbr[x]));
            if !in_blocks {
                let alpha = self.buf.len();
                let u: f64 = rng.gen();
                if u < self.probs.pf(alpha) / alpha as f64 {
                    for &x in &self.buf {
                        let cx = self.sigma.get(x);
                        let nc = if cx == sw { c } else { sw };
                        self.sigma.set(x, nc);
                        self.tau.set(x, nc);
                    }
                    if self.record {
                        let mut set = self.buf.clone();
                        set.sort_unstable();
                        self.last = (Some(set.clone()), Some(set));
                    }
                    self.dirty = true;
                    return Ok((StepKind::Shared, 1));
                }
                return Ok((StepKind::Noop, 1));
            }
        }
        let r = (n + self.structure.sigma_weight()) as f64;
        if self.total > r {
            return self.step_exhaustive(rng);
        }
        let u = rng.gen::<f64>() * r;
        if u >= self.total {
            return Ok((StepKind::Noop, 1));
        }
        let idx = self.pick(u);
        Ok((StepKind::Terminating, self.apply(idx)))
    }

    fn pick(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, m) in self.moves.iter().enumerate() {
            acc += m.mass;
            if u < acc {
                return i;
            }
        }
        self.moves.len() - 1
    }

    /// Samples from the full one-step law; used when the block masses are too
    /// large for the rejection scheme above.
    fn step_exhaustive<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<(StepKind, usize)> {
        let t = self.tau.get(self.v);
        let v = self.v;
        let shared: Vec<(Flip, f64)> = enumerate_flips(self.g, &self.sigma)
            .into_iter()
            .filter(|e| shared_flip(&e.flip, v, t, |w| self.nbr[w]))
            .map(|e| {
                let m = self.probs.pf(e.flip.len());
                (e.flip, m)
            })
            .collect();
        let nk = (self.g.n() * self.k) as f64;
        let mut u = rng.gen::<f64>() * nk;
        if u < self.total {
            let idx = self.pick(u);
            return Ok((StepKind::Terminating, self.apply(idx)));
        }
        u -= self.total;
        for (f, m) in shared {
            if u < m {
                f.apply_in_place(&mut self.sigma);
                f.apply_in_place(&mut self.tau);
                if self.record {
                    self.last = (Some(f.set.clone()), Some(f.set));
                }
                self.dirty = true;
                return Ok((StepKind::Shared, 1));
            }
            u -= m;
        }
        Ok((StepKind::Noop, 1))
    }

    /// Applies terminating move `idx`; returns the new distance.
    fn apply(&mut self, idx: usize) -> usize {
        let LocalMove { sigma: sm, tau: tm, .. } = self.moves[idx].clone();
        self.touched.clear();
        self.touched.push(self.v);
        for (side, r) in [(0, sm), (1, tm)] {
            let Some(r) = r else { continue };
            let set = self.structure.set(r);
            let col = if side == 0 { &mut self.sigma } else { &mut self.tau };
            for &x in set {
                let cx = col.get(x);
                col.set(x, if cx == r.pair.0 { r.pair.1 } else { r.pair.0 });
            }
            self.touched.extend_from_slice(set);
        }
        if self.record {
            self.last = (
                sm.map(|r| self.structure.set(r).to_vec()),
                tm.map(|r| self.structure.set(r).to_vec()),
            );
        }
        self.touched.sort_unstable();
        self.touched.dedup();
        let mut diff = 0;
        let mut at = self.v;
        for &x in &self.touched {
            if self.sigma.get(x) != self.tau.get(x) {
                diff += 1;
                at = x;
            }
        }
        if diff == 1 && at != self.v {
            self.set_v(at);
        }
        self.dirty = true;
        diff
    }
}

/// One recorded step of a variable-length coupling run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrajectoryStep {
    pub t: u64,
    #[serde(rename = "move")]
    pub mv: TrajectoryMove,
    pub dist: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrajectoryMove {
    pub sigma: Option<Vec<usize>>,
    pub tau: Option<Vec<usize>>,
}

/// Result of running the greedy coupling until the distance leaves 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TerminationRecord {
    pub t_stop: u64,
    pub final_pair: (Coloring, Coloring),
    pub final_distance: usize,
    pub trajectory: Option<Vec<TrajectoryStep>>,
}

impl TerminationRecord {
    /// The trajectory as JSON lines, one object per step.
    pub fn trajectory_json_lines(&self) -> Option<String> {
        self.trajectory.as_ref().map(|steps| {
            steps
                .iter()
                .map(|s| serde_json::to_string(s).expect("serializable") + "\n")
                .collect()
        })
    }
}

/// `⌈100·nk/(k − d − 2)⌉`.
pub fn default_step_cap(n: usize, k: usize, d: usize) -> Result<u64> {
    if k <= d + 2 {
        return Err(Error::Domain(format!("need k > d + 2, got k = {k}, d = {d}")));
    }
    Ok((100 * n * k).div_ceil(k - d - 2) as u64)
}

/// Runs the greedy coupling until the Hamming distance changes.
pub fn variable_length_coupling<R: Rng + ?Sized>(
    pair: &NeighboringPair,
    probs: &FlipProbabilities,
    rng: &mut R,
    step_cap: u64,
    record: bool,
) -> Result<TerminationRecord> {
    if step_cap == 0 {
        return Err(Error::Input("step cap must be at least 1".into()));
    }
    let mut w = Walker::new(pair, probs)?;
    w.record = record;
    let mut trajectory = record.then(Vec::new);
    for t in 1..=step_cap {
        let (_, dist) = w.step(rng)?;
        if let Some(tr) = trajectory.as_mut() {
            let (sigma, tau) = std::mem::take(&mut w.last);
            tr.push(TrajectoryStep {
                t,
                mv: TrajectoryMove { sigma, tau },
                dist,
            });
        }
        if dist != 1 {
            return Ok(TerminationRecord {
                t_stop: t,
                final_pair: (w.sigma, w.tau),
                final_distance: dist,
                trajectory,
            });
        }
    }
    Err(Error::Capacity(format!("distance still 1 after {step_cap} steps")))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::rational::q;

    fn pair(n: usize, edges: &[(usize, usize)], sigma: Vec<usize>, tau: Vec<usize>, k: usize) -> NeighboringPair {
        let g = Arc::new(Graph::from_edges(n, edges).unwrap());
        NeighboringPair::new(g, Coloring::new(sigma, k).unwrap(), Coloring::new(tau, k).unwrap()).unwrap()
    }

    #[test]
    fn single_vertex_coalesces() {
        let p = pair(1, &[], vec![0], vec![1], 2);
        let dist = greedy_coupling_distribution(&p, &FlipProbabilities::vigoda()).unwrap();
        assert_eq!(dist.moves.len(), 2);
        assert!(dist.moves.iter().all(|m| m.mass == q(1, 2) && m.terminating));
        assert_eq!(dist.noop_mass, Q::zero());
        assert_eq!(
            expected_distance_change(&p, &FlipProbabilities::vigoda()).unwrap(),
            qi(-1)
        );
        assert_eq!(terminating_mass(&p, &FlipProbabilities::vigoda()).unwrap(), qi(1));
    }

    #[test]
    fn isolated_v_has_mass_one_over_n() {
        let p = pair(3, &[(1, 2)], vec![0, 0, 1], vec![2, 0, 1], 5);
        let m = terminating_mass(&p, &FlipProbabilities::alt()).unwrap();
        assert_eq!(m, q(1, 3));
        assert_eq!(
            expected_distance_change(&p, &FlipProbabilities::alt()).unwrap(),
            q(-1, 3)
        );
    }

    #[test]
    fn star_signature() {
        // v = 0 colored 0 / 1, leaves colored 2.
        let p = pair(4, &[(0, 1), (0, 2), (0, 3)], vec![0, 2, 2, 2], vec![1, 2, 2, 2], 4);
        let sig = signature(&p, 2).unwrap();
        assert_eq!((sig.big_a, sig.big_b), (4, 4));
        assert_eq!(sig.a, vec![1, 1, 1]);
        assert_eq!(sig.b, vec![1, 1, 1]);
        assert_eq!(sig.i_max, Some(0));
        assert!(matches!(signature(&p, 3), Err(Error::Domain(_))));
        let st = signature(&p, 1).unwrap();
        assert_eq!((st.big_a, st.big_b), (0, 0));
    }

    #[test]
    fn argmax_uses_lowest_index() {
        assert_eq!(argmax(&[1, 3, 3]), (3, Some(1)));
        assert_eq!(argmax(&[0, 0]), (0, None));
        assert_eq!(argmax(&[]), (0, None));
    }

    #[test]
    fn block_total_with_shared_argmax() {
        // All of a block's mass when both argmaxes sit in slot 0 of a single slot.
        let probs = FlipProbabilities::alt();
        for big_a in 2..=8 {
            for big_b in 2..=8 {
                for a in 1..big_a {
                    for b in 1..big_b {
                        let bm = block_masses::<Q>(&probs, big_a, big_b, &[a], &[b]).unwrap();
                        let total = bm.slots[0].iter().fold(&bm.step1 + &bm.step2, |acc, x| acc + x);
                        let lhs = probs.p(a) + probs.p(big_b);
                        let rhs = probs.p(b) + probs.p(big_a);
                        assert_eq!(total, if lhs > rhs { lhs } else { rhs });
                    }
                }
            }
        }
    }

    #[test]
    fn negative_mass_is_reported() {
        let probs = FlipProbabilities::alt();
        // a piece larger than its parent cannot occur, and would give a negative mass.
        assert!(matches!(
            block_masses::<Q>(&probs, 2, 3, &[3], &[1]),
            Err(Error::Invariant(_))
        ));
    }

    #[test]
    fn trajectory_is_json_lines() {
        let p = pair(1, &[], vec![0], vec![1], 2);
        let mut rng = crate::dynamics::replica_rng(1, 0);
        let rec = variable_length_coupling(&p, &FlipProbabilities::vigoda(), &mut rng, 100, true).unwrap();
        assert_eq!(rec.final_distance, 0);
        let lines = rec.trajectory_json_lines().unwrap();
        assert_eq!(lines.lines().count() as u64, rec.t_stop);
        assert!(lines.lines().last().unwrap().ends_with(r#""dist":0}"#));
    }

    #[test]
    fn step_cap_default() {
        assert_eq!(default_step_cap(10, 8, 4).unwrap(), 4000);
        assert!(default_step_cap(10, 6, 4).is_err());
    }
}
