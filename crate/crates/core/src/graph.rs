//! Graphs, colorings, alternating components and flips.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{input, Error, Result};

/// A simple undirected graph with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    max_degree: usize,
}

impl Graph {
    /// Builds a graph from an edge list. Self-loops and duplicate edges are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Graph> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return input(format!("edge ({u},{v}) out of range for n = {n}"));
            }
            if u == v {
                return input(format!("self-loop at {u}"));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for (u, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return input(format!("duplicate edge at vertex {u}"));
            }
        }
        let max_degree = adj.iter().map(Vec::len).max().unwrap_or(0);
        Ok(Graph { adj, max_degree })
    }

    pub fn empty(n: usize) -> Graph {
        Graph {
            adj: vec![Vec::new(); n],
            max_degree: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    /// Maximum degree `d`.
    pub fn d(&self) -> usize {
        self.max_degree
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (u, list) in self.adj.iter().enumerate() {
            out.extend(list.iter().filter(|&&v| u < v).map(|&v| (u, v)));
        }
        out
    }
}

/// An assignment of colors `0..k` to the vertices; properness is not required.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coloring {
    colors: Vec<usize>,
    k: usize,
}

impl Coloring {
    pub fn new(colors: Vec<usize>, k: usize) -> Result<Coloring> {
        if let Some((v, &c)) = colors.iter().enumerate().find(|(_, &c)| c >= k) {
            return input(format!("vertex {v} has color {c}, but k = {k}"));
        }
        Ok(Coloring { colors, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.colors.len()
    }

    pub fn get(&self, v: usize) -> usize {
        self.colors[v]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.colors
    }

    pub(crate) fn set(&mut self, v: usize, c: usize) {
        self.colors[v] = c;
    }

    /// Colors not used by any neighbor of `v`.
    pub fn available(&self, g: &Graph, v: usize) -> Vec<usize> {
        let mut used = vec![false; self.k];
        for &u in g.neighbors(v) {
            used[self.colors[u]] = true;
        }
        (0..self.k).filter(|&c| !used[c]).collect()
    }
}

/// Two colorings that differ at exactly one vertex `v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighboringPair {
    pub graph: Arc<Graph>,
    pub sigma: Coloring,
    pub tau: Coloring,
    pub v: usize,
}

impl NeighboringPair {
    pub fn new(graph: Arc<Graph>, sigma: Coloring, tau: Coloring) -> Result<NeighboringPair> {
        if sigma.n() != graph.n() || tau.n() != graph.n() {
            return input("coloring length does not match the graph");
        }
        if sigma.k() != tau.k() {
            return input("colorings use different k");
        }
        let diff: Vec<usize> = (0..graph.n()).filter(|&u| sigma.get(u) != tau.get(u)).collect();
        match diff.as_slice() {
            [v] => Ok(NeighboringPair {
                v: *v,
                graph,
                sigma,
                tau,
            }),
            _ => input(format!("colorings differ at {} vertices, expected 1", diff.len())),
        }
    }

    pub fn k(&self) -> usize {
        self.sigma.k()
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// `σ(v)`.
    pub fn s(&self) -> usize {
        self.sigma.get(self.v)
    }

    /// `τ(v)`.
    pub fn t(&self) -> usize {
        self.tau.get(self.v)
    }

    /// Number of neighbors of `v` colored `c` (same under σ and τ).
    pub fn delta(&self, c: usize) -> usize {
        self.graph
            .neighbors(self.v)
            .iter()
            .filter(|&&u| self.sigma.get(u) == c)
            .count()
    }
}

/// Vertices reachable from `v` through vertices colored `col(v)` or `c`.
/// Empty when `c = col(v)`. The result is sorted.
pub fn alternating_component(g: &Graph, col: &Coloring, v: usize, c: usize) -> Result<Vec<usize>> {
    if v >= g.n() || col.n() != g.n() {
        return input(format!("vertex {v} out of range"));
    }
    if c >= col.k() {
        return input(format!("color {c} out of range for k = {}", col.k()));
    }
    if c == col.get(v) {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    Bfs::new(g.n()).component(g, col.as_slice(), v, col.get(v), c, &mut out);
    out.sort_unstable();
    Ok(out)
}

/// Reusable breadth-first search over two-color induced subgraphs.
#[derive(Debug, Clone)]
pub(crate) struct Bfs {
    mark: Vec<u32>,
    stamp: u32,
    queue: VecDeque<usize>,
}

impl Bfs {
    pub(crate) fn new(n: usize) -> Bfs {
        Bfs {
            mark: vec![0; n],
            stamp: 0,
            queue: VecDeque::new(),
        }
    }

    pub(crate) fn fresh(&mut self) {
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.mark.iter_mut().for_each(|m| *m = 0);
            self.stamp = 1;
        }
    }

    pub(crate) fn block(&mut self, v: usize) {
        self.mark[v] = self.stamp;
    }

    pub(crate) fn seen(&self, v: usize) -> bool {
        self.mark[v] == self.stamp
    }

    /// Appends the component of `start` in the subgraph induced by colors `x`, `y`
    /// to `out` (unsorted). Starts a fresh search.
    pub(crate) fn component(
        &mut self,
        g: &Graph,
        colors: &[usize],
        start: usize,
        x: usize,
        y: usize,
        out: &mut Vec<usize>,
    ) {
        self.fresh();
        self.grow(g, colors, start, x, y, out);
    }

    /// Like `component` but keeps vertices marked by earlier calls since the last
    /// `fresh`, so blocked vertices act as removed.
    pub(crate) fn grow(&mut self, g: &Graph, colors: &[usize], start: usize, x: usize, y: usize, out: &mut Vec<usize>) {
        self.mark[start] = self.stamp;
        self.queue.clear();
        self.queue.push_back(start);
        while let Some(u) = self.queue.pop_front() {
            out.push(u);
            for &w in g.neighbors(u) {
                if self.mark[w] != self.stamp && (colors[w] == x || colors[w] == y) {
                    self.mark[w] = self.stamp;
                    self.queue.push_back(w);
                }
            }
        }
    }
}

/// A flip: swap the two colors of `pair` on the vertices of `set`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Flip {
    /// Sorted vertex set.
    pub set: Vec<usize>,
    /// The two colors, smaller first.
    pub pair: (usize, usize),
}

impl Flip {
    pub(crate) fn new(mut set: Vec<usize>, a: usize, b: usize) -> Flip {
        set.sort_unstable();
        Flip {
            set,
            pair: (a.min(b), a.max(b)),
        }
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.set.binary_search(&v).is_ok()
    }

    pub fn apply(&self, col: &Coloring) -> Result<Coloring> {
        flip(col, &self.set, self.pair.0, self.pair.1)
    }

    pub(crate) fn apply_in_place(&self, col: &mut Coloring) {
        let (a, b) = self.pair;
        for &w in &self.set {
            let c = col.get(w);
            col.set(w, if c == a { b } else { a });
        }
    }
}

/// Swaps `base` and `other` on `s`. Every vertex of `s` must carry one of them.
pub fn flip(col: &Coloring, s: &[usize], base: usize, other: usize) -> Result<Coloring> {
    let mut out = col.clone();
    for &w in s {
        if w >= col.n() {
            return input(format!("vertex {w} out of range"));
        }
        let c = col.get(w);
        if c == base {
            out.set(w, other);
        } else if c == other {
            out.set(w, base);
        } else {
            return input(format!("vertex {w} has color {c}, not {base} or {other}"));
        }
    }
    Ok(out)
}

pub fn hamming(a: &Coloring, b: &Coloring) -> Result<usize> {
    if a.n() != b.n() || a.k() != b.k() {
        return input("colorings have different sizes");
    }
    Ok(a.colors.iter().zip(&b.colors).filter(|(x, y)| x != y).count())
}

pub fn is_proper(g: &Graph, col: &Coloring) -> bool {
    g.edges().iter().all(|&(u, v)| col.get(u) != col.get(v))
}

/// A distinct flip together with the number of `(vertex, color)` draws selecting it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlipEntry {
    pub flip: Flip,
    pub draws: usize,
}

/// All alternating components of `col`, one entry per distinct flip. The draws
/// sum to `n·k` minus the `n` draws with `c = col(v)`, which are no-ops.
pub fn enumerate_flips(g: &Graph, col: &Coloring) -> Vec<FlipEntry> {
    let mut seen: BTreeMap<Flip, usize> = BTreeMap::new();
    let mut bfs = Bfs::new(g.n());
    let mut buf = Vec::new();
    // Components are classes of the two-color subgraph; each class is found once
    // per pair and credited with one draw per member.
    for x in 0..col.k() {
        for y in x + 1..col.k() {
            bfs.fresh();
            for w in 0..g.n() {
                let cw = col.get(w);
                if (cw != x && cw != y) || bfs.seen(w) {
                    continue;
                }
                buf.clear();
                bfs.grow(g, col.as_slice(), w, x, y, &mut buf);
                let f = Flip::new(buf.clone(), x, y);
                let draws = f.len();
                seen.insert(f, draws);
            }
        }
    }
    seen.into_iter()
        .map(|(flip, draws)| FlipEntry { flip, draws })
        .collect()
}

/// Contents of the graph/coloring text format.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphFile {
    pub graph: Graph,
    pub sigma: Coloring,
    pub tau: Option<Coloring>,
}

impl GraphFile {
    pub fn parse(text: &str) -> Result<GraphFile> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Input("empty graph file".into()))?;
        let h = ints(header)?;
        let [n, k, m] = h[..] else {
            return input("header must be `n k m`");
        };
        let mut edges = Vec::with_capacity(m);
        for i in 0..m {
            let line = lines
                .next()
                .ok_or_else(|| Error::Input(format!("missing edge {}", i + 1)))?;
            match ints(line)?[..] {
                [u, v] if u < v && v < n => edges.push((u, v)),
                _ => return input(format!("bad edge line {line:?}; need `u v` with u < v < n")),
            }
        }
        let graph = Graph::from_edges(n, &edges)?;
        let coloring = |line: Option<&str>, tag: &str| -> Result<Option<Coloring>> {
            let Some(line) = line else { return Ok(None) };
            let rest = line
                .strip_prefix(tag)
                .ok_or_else(|| Error::Input(format!("expected `{tag}` line, got {line:?}")))?;
            let cs = ints(rest)?;
            if cs.len() != n {
                return input(format!("`{tag}` needs {n} colors, got {}", cs.len()));
            }
            Coloring::new(cs, k).map(Some)
        };
        let sigma = coloring(lines.next(), "sigma")?.ok_or_else(|| Error::Input("missing `sigma` line".into()))?;
        let tau = coloring(lines.next(), "tau")?;
        if let Some(extra) = lines.next() {
            return input(format!("unexpected trailing line {extra:?}"));
        }
        if let Some(t) = &tau {
            if hamming(&sigma, t)? != 1 {
                return input("`tau` must differ from `sigma` at exactly one vertex");
            }
        }
        Ok(GraphFile { graph, sigma, tau })
    }

    pub fn to_text(&self) -> String {
        let edges = self.graph.edges();
        let mut s = format!("{} {} {}\n", self.graph.n(), self.sigma.k(), edges.len());
        for (u, v) in edges {
            let _ = writeln!(s, "{u} {v}");
        }
        let join = |c: &Coloring| c.as_slice().iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        let _ = writeln!(s, "sigma {}", join(&self.sigma));
        if let Some(t) = &self.tau {
            let _ = writeln!(s, "tau {}", join(t));
        }
        s
    }

    pub fn pair(&self) -> Result<NeighboringPair> {
        let tau = self
            .tau
            .clone()
            .ok_or_else(|| Error::Input("file has no `tau` line".into()))?;
        NeighboringPair::new(Arc::new(self.graph.clone()), self.sigma.clone(), tau)
    }
}

/// One graph per isomorphism class on `n` vertices, `n ≤ 6`.
pub fn nonisomorphic_graphs(n: usize) -> Result<Vec<Graph>> {
    if n > 6 {
        return Err(Error::Capacity(format!(
            "graph enumeration is limited to n ≤ 6, got {n}"
        )));
    }
    let slots: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    let perms = permutations(n);
    let index = |u: usize, v: usize| {
        slots
            .iter()
            .position(|&e| e == (u.min(v), u.max(v)))
            .expect("edge slot")
    };
    let relabel: Vec<Vec<usize>> = perms
        .iter()
        .map(|p| slots.iter().map(|&(u, v)| index(p[u], p[v])).collect())
        .collect();
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for mask in 0u32..1 << slots.len() {
        let canon = relabel
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|&(i, _)| mask >> i & 1 == 1)
                    .fold(0u32, |acc, (_, &j)| acc | 1 << j)
            })
            .min()
            .unwrap_or(mask);
        if seen.insert(canon) {
            let edges: Vec<_> = slots
                .iter()
                .enumerate()
                .filter(|&(i, _)| mask >> i & 1 == 1)
                .map(|(_, &e)| e)
                .collect();
            out.push(Graph::from_edges(n, &edges)?);
        }
    }
    Ok(out)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..n {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Every neighboring pair on `g` with `k` colors, proper or not: all `σ ∈ [k]^n`
/// and every single-vertex recoloring `τ`.
pub fn neighboring_pairs(g: &Arc<Graph>, k: usize) -> Result<Vec<NeighboringPair>> {
    let n = g.n();
    let total = (0..n).try_fold(1usize, |acc, _| acc.checked_mul(k).filter(|&s| s <= 1 << 20));
    if total.is_none() {
        return Err(Error::Capacity(format!("{k}^{n} colorings are too many to enumerate")));
    }
    let mut out = Vec::new();
    for x in 0..total.unwrap_or(0) {
        let mut cs = vec![0; n];
        let mut y = x;
        for c in cs.iter_mut() {
            *c = y % k;
            y /= k;
        }
        let sigma = Coloring::new(cs.clone(), k)?;
        for v in 0..n {
            for c in (0..k).filter(|&c| c != cs[v]) {
                let mut ts = cs.clone();
                ts[v] = c;
                out.push(NeighboringPair::new(g.clone(), sigma.clone(), Coloring::new(ts, k)?)?);
            }
        }
    }
    Ok(out)
}

fn ints(line: &str) -> Result<Vec<usize>> {
    line.split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| Error::Input(format!("not a nonnegative integer: {t:?}")))
        })
        .collect()
}
