//! Dependence graphs, exact treewidth and (nice) tree decompositions.
//!
//! Graphs here have at most [`MAX_TW_VERTICES`] vertices, so vertex sets
//! are `u32` bitmasks throughout.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::moves::InterferenceGraph;

pub const MAX_TW_VERTICES: usize = 24;

#[inline]
fn bits(mask: u32) -> impl Iterator<Item = usize> {
    let mut m = mask;
    std::iter::from_fn(move || {
        (m != 0).then(|| {
            let v = m.trailing_zeros() as usize;
            m &= m - 1;
            v
        })
    })
}

/// Simple undirected graph on `0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DepGraph {
    adj: Vec<u32>,
}

impl DepGraph {
    pub fn empty(k: usize) -> Self {
        assert!(k <= MAX_TW_VERTICES, "graphs are limited to {MAX_TW_VERTICES} vertices");
        Self { adj: vec![0; k] }
    }

    pub fn from_edges(k: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Self::empty(k);
        for &(u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    pub fn complete(k: usize) -> Self {
        let all = if k == 32 { u32::MAX } else { (1u32 << k) - 1 };
        Self { adj: (0..k).map(|v| all & !(1 << v)).collect() }
    }

    pub fn cycle(k: usize) -> Self {
        Self::from_edges(k, &(0..k).map(|i| (i, (i + 1) % k)).collect::<Vec<_>>())
    }

    pub fn path(k: usize) -> Self {
        Self::from_edges(k, &(1..k).map(|i| (i - 1, i)).collect::<Vec<_>>())
    }

    /// Adds `{u, v}`; loops are ignored.
    pub fn add_edge(&mut self, u: usize, v: usize) {
        if u != v {
            self.adj[u] |= 1 << v;
            self.adj[v] |= 1 << u;
        }
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.adj.len()
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> u32 {
        self.adj[v]
    }

    pub fn adjacency(&self) -> &[u32] {
        &self.adj
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u] & (1 << v) != 0
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.k()).flat_map(|u| bits(self.adj[u] >> u >> 1).map(move |d| (u, u + 1 + d))).collect()
    }

    pub fn max_degree(&self) -> u32 {
        self.adj.iter().map(|a| a.count_ones()).max().unwrap_or(0)
    }

    pub fn is_connected(&self) -> bool {
        let k = self.k();
        if k == 0 {
            return true;
        }
        let mut seen = 1u32;
        let mut frontier = 1u32;
        while frontier != 0 {
            let v = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let new = self.adj[v] & !seen;
            seen |= new;
            frontier |= new;
        }
        seen.count_ones() as usize == k
    }
}

/// `D = O_b ∪ I_M` on the slots `0..k`. Bit `i` of `order_edges` stands for
/// the order edge `{i, i+1}`.
pub fn dependence_graph(im: &InterferenceGraph, order_edges: u32) -> DepGraph {
    let mut g = DepGraph { adj: im.adjacency().to_vec() };
    for i in bits(order_edges) {
        g.add_edge(i, i + 1);
    }
    g
}

/// Vertices outside `eliminated ∪ {v}` reachable from `v` through
/// `eliminated`: the degree of `v` at its elimination step.
#[inline]
fn elimination_degree(g: &DepGraph, eliminated: u32, v: usize) -> u32 {
    let mut comp = 1u32 << v;
    let mut frontier = comp;
    let mut outside = 0u32;
    while frontier != 0 {
        let u = frontier.trailing_zeros() as usize;
        frontier &= frontier - 1;
        let nb = g.adj[u] & !comp;
        let inner = nb & eliminated;
        outside |= nb & !eliminated;
        comp |= inner;
        frontier |= inner;
    }
    (outside & !comp).count_ones()
}

/// Exact treewidth with a lexicographically smallest optimal elimination
/// order, by dynamic programming over the set of eliminated vertices.
pub fn treewidth_exact(g: &DepGraph) -> Result<(usize, Vec<usize>)> {
    let k = g.k();
    if k > MAX_TW_VERTICES {
        return Err(Error::KOutOfRange { k, min: 0, max: MAX_TW_VERTICES });
    }
    if k == 0 {
        return Ok((0, Vec::new()));
    }
    let full = ((1u64 << k) - 1) as u32;
    // rest[S] = best width achievable for eliminating the complement of S
    let mut rest = vec![u8::MAX; 1usize << k];
    rest[full as usize] = 0;
    for s in (0..full).rev() {
        let mut best = u8::MAX;
        for v in bits(!s & full) {
            let after = rest[(s | 1 << v) as usize];
            if after >= best {
                continue;
            }
            let here = elimination_degree(g, s, v) as u8;
            best = best.min(here.max(after));
        }
        rest[s as usize] = best;
    }
    let width = rest[0];
    let mut order = Vec::with_capacity(k);
    let mut s = 0u32;
    while s != full {
        let v = bits(!s & full)
            .find(|&v| elimination_degree(g, s, v) as u8 <= width && rest[(s | 1 << v) as usize] <= width)
            .expect("an optimal continuation exists");
        order.push(v);
        s |= 1 << v;
    }
    Ok((width as usize, order))
}

/// Width of the decomposition induced by an elimination order.
pub fn elimination_width(g: &DepGraph, order: &[usize]) -> usize {
    let mut s = 0u32;
    let mut w = 0;
    for &v in order {
        w = w.max(elimination_degree(g, s, v) as usize);
        s |= 1 << v;
    }
    w
}

/// A tree decomposition rooted at `root`; `parent[root]` is `None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeDecomposition {
    pub bags: Vec<u32>,
    pub parent: Vec<Option<usize>>,
}

impl TreeDecomposition {
    pub fn width(&self) -> usize {
        self.bags.iter().map(|b| b.count_ones() as usize).max().unwrap_or(1).saturating_sub(1)
    }

    pub fn root(&self) -> Option<usize> {
        self.parent.iter().position(Option::is_none)
    }

    fn children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.bags.len()];
        for (t, p) in self.parent.iter().enumerate() {
            if let Some(p) = p {
                ch[*p].push(t);
            }
        }
        ch
    }
}

/// Fill-in construction: node `i` holds the `i`-th eliminated vertex and
/// its later neighbours in the filled graph; its parent is the node of the
/// earliest-eliminated of those neighbours.
pub fn decomposition_from_order(g: &DepGraph, order: &[usize]) -> Result<TreeDecomposition> {
    let k = g.k();
    let mut pos = vec![usize::MAX; k];
    for (i, &v) in order.iter().enumerate() {
        if v >= k || pos[v] != usize::MAX {
            return Err(Error::Inconsistent(format!("{order:?} is not a permutation of 0..{k}")));
        }
        pos[v] = i;
    }
    if order.len() != k {
        return Err(Error::Inconsistent(format!("{order:?} is not a permutation of 0..{k}")));
    }
    if k == 0 {
        return Ok(TreeDecomposition { bags: vec![0], parent: vec![None] });
    }
    let mut adj = g.adj.clone();
    let mut remaining: u32 = ((1u64 << k) - 1) as u32;
    let mut bags = Vec::with_capacity(k);
    let mut parent = vec![None; k];
    for (i, &v) in order.iter().enumerate() {
        remaining &= !(1 << v);
        let later = adj[v] & remaining;
        for u in bits(later) {
            adj[u] |= later & !(1 << u);
        }
        bags.push(later | 1 << v);
        parent[i] = bits(later).map(|u| pos[u]).min();
    }
    // join the components' roots into one tree
    let roots: Vec<usize> = (0..k).filter(|&i| parent[i].is_none()).collect();
    let last = *roots.last().expect("order is non-empty");
    for &r in &roots[..roots.len() - 1] {
        parent[r] = Some(last);
    }
    Ok(TreeDecomposition { bags, parent })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Leaf,
    Introduce(usize),
    Forget(usize),
    Join,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NiceNode {
    pub kind: NodeKind,
    pub bag: u32,
    pub children: Vec<usize>,
}

/// A nice tree decomposition stored as an arena. Children always have
/// smaller indices than their parent, so index order is a post-order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NiceTreeDecomposition {
    pub nodes: Vec<NiceNode>,
    pub root: usize,
}

impl NiceTreeDecomposition {
    pub fn width(&self) -> usize {
        self.nodes.iter().map(|n| n.bag.count_ones() as usize).max().unwrap_or(1).saturating_sub(1)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn as_tree(&self) -> TreeDecomposition {
        let mut parent = vec![None; self.nodes.len()];
        for (t, node) in self.nodes.iter().enumerate() {
            for &c in &node.children {
                parent[c] = Some(t);
            }
        }
        TreeDecomposition { bags: self.nodes.iter().map(|n| n.bag).collect(), parent }
    }

    /// Text dump: one line per node with id, kind, bag members (1-based)
    /// and children.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph nice {\n");
        for (t, node) in self.nodes.iter().enumerate() {
            let kind = match node.kind {
                NodeKind::Leaf => "leaf".to_string(),
                NodeKind::Introduce(v) => format!("introduce {}", v + 1),
                NodeKind::Forget(v) => format!("forget {}", v + 1),
                NodeKind::Join => "join".to_string(),
            };
            let members: Vec<String> = bits(node.bag).map(|v| (v + 1).to_string()).collect();
            let _ = writeln!(out, "  n{t} [label=\"{t}: {kind} {{{}}}\"];", members.join(","));
            for c in &node.children {
                let _ = writeln!(out, "  n{t} -> n{c};");
            }
        }
        out.push_str("}\n");
        out
    }
}

struct NiceBuilder {
    nodes: Vec<NiceNode>,
}

impl NiceBuilder {
    fn push(&mut self, kind: NodeKind, bag: u32, children: Vec<usize>) -> usize {
        self.nodes.push(NiceNode { kind, bag, children });
        self.nodes.len() - 1
    }

    /// Walks from a node with bag `from` to bag `to`: forget first, then
    /// introduce, both in ascending vertex order.
    fn morph(&mut self, mut top: usize, from: u32, to: u32) -> usize {
        let mut bag = from;
        for v in bits(from & !to) {
            bag &= !(1 << v);
            top = self.push(NodeKind::Forget(v), bag, vec![top]);
        }
        for v in bits(to & !from) {
            bag |= 1 << v;
            top = self.push(NodeKind::Introduce(v), bag, vec![top]);
        }
        top
    }

    fn build(&mut self, d: &TreeDecomposition, children: &[Vec<usize>], t: usize) -> usize {
        let bag = d.bags[t];
        let mut subs: Vec<usize> = Vec::with_capacity(children[t].len());
        for &c in &children[t] {
            let top = self.build(d, children, c);
            subs.push(self.morph(top, d.bags[c], bag));
        }
        let mut it = subs.into_iter();
        match it.next() {
            None => {
                let leaf = self.push(NodeKind::Leaf, 0, Vec::new());
                self.morph(leaf, 0, bag)
            }
            Some(first) => it.fold(first, |acc, s| self.push(NodeKind::Join, bag, vec![acc, s])),
        }
    }
}

/// Converts a rooted tree decomposition into a nice one of equal width.
pub fn to_nice(d: &TreeDecomposition) -> Result<NiceTreeDecomposition> {
    let root = d.root().ok_or_else(|| Error::InvalidDecomposition("no root".into()))?;
    let children = d.children();
    let mut b = NiceBuilder { nodes: Vec::new() };
    let top = b.build(d, &children, root);
    let root = b.morph(top, d.bags[root], 0);
    Ok(NiceTreeDecomposition { nodes: b.nodes, root })
}

/// Nice decomposition of minimum width.
pub fn nice_decomposition(g: &DepGraph) -> Result<NiceTreeDecomposition> {
    let (_, order) = treewidth_exact(g)?;
    to_nice(&decomposition_from_order(g, &order)?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NotATree(String),
    UncoveredVertex(usize),
    UncoveredEdge(usize, usize),
    Disconnected(usize),
    VertexOutOfRange { node: usize },
    BadNode { node: usize, reason: String },
    Separation { child: usize, parent: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotATree(s) => write!(f, "not a rooted tree: {s}"),
            Violation::UncoveredVertex(v) => write!(f, "vertex {} is in no bag", v + 1),
            Violation::UncoveredEdge(u, v) => write!(f, "edge {{{},{}}} is in no bag", u + 1, v + 1),
            Violation::Disconnected(v) => write!(f, "bags holding vertex {} are not connected", v + 1),
            Violation::VertexOutOfRange { node } => write!(f, "node {node} holds a vertex outside the graph"),
            Violation::BadNode { node, reason } => write!(f, "node {node}: {reason}"),
            Violation::Separation { child, parent } => {
                write!(f, "tree edge {child}-{parent} does not separate the graph")
            }
        }
    }
}

/// Outcome of a decomposition check; empty `violations` means valid.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Validation {
    pub violations: Vec<Violation>,
}

impl Validation {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
            Err(Error::InvalidDecomposition(msgs.join("; ")))
        }
    }
}

/// Checks coverage of vertices and edges, connectivity of every vertex's
/// bags, and that every tree edge separates the graph with the two bags'
/// intersection as separator.
pub fn validate_decomposition(g: &DepGraph, d: &TreeDecomposition) -> Validation {
    let mut out = Validation::default();
    let nt = d.bags.len();
    let k = g.k();
    let universe: u32 = if k == 0 { 0 } else { ((1u64 << k) - 1) as u32 };

    let roots: Vec<usize> = (0..nt).filter(|&t| d.parent[t].is_none()).collect();
    if nt == 0 || roots.len() != 1 || d.parent.len() != nt {
        out.violations.push(Violation::NotATree(format!("{} roots among {nt} nodes", roots.len())));
        return out;
    }
    // every node must reach the root without revisiting
    for t in 0..nt {
        let (mut cur, mut steps) = (t, 0);
        while let Some(p) = d.parent[cur] {
            if p >= nt || steps > nt {
                out.violations.push(Violation::NotATree(format!("node {t} does not reach the root")));
                return out;
            }
            cur = p;
            steps += 1;
        }
    }
    for (t, &b) in d.bags.iter().enumerate() {
        if b & !universe != 0 {
            out.violations.push(Violation::VertexOutOfRange { node: t });
        }
    }

    let covered = d.bags.iter().fold(0u32, |a, &b| a | b);
    out.violations.extend(bits(universe & !covered).map(Violation::UncoveredVertex));
    for (u, v) in g.edges() {
        if !d.bags.iter().any(|&b| b & (1 << u) != 0 && b & (1 << v) != 0) {
            out.violations.push(Violation::UncoveredEdge(u, v));
        }
    }
    for v in 0..k {
        let holding = (0..nt).filter(|&t| d.bags[t] & (1 << v) != 0).count();
        let linked = (0..nt)
            .filter(|&t| d.bags[t] & (1 << v) != 0)
            .filter(|&t| d.parent[t].is_some_and(|p| d.bags[p] & (1 << v) != 0))
            .count();
        if holding > 0 && linked + 1 != holding {
            out.violations.push(Violation::Disconnected(v));
        }
    }

    // subtree unions, children before parents
    let depth: Vec<usize> = (0..nt).map(|t| std::iter::successors(d.parent[t], |&p| d.parent[p]).count()).collect();
    let mut by_depth: Vec<usize> = (0..nt).collect();
    by_depth.sort_by_key(|&t| std::cmp::Reverse(depth[t]));
    let mut below = d.bags.clone();
    let mut inside = vec![vec![false; nt]; nt];
    for &t in &by_depth {
        inside[t][t] = true;
        if let Some(p) = d.parent[t] {
            below[p] |= below[t];
            let row = inside[t].clone();
            for (x, &hit) in row.iter().enumerate() {
                if hit {
                    inside[p][x] = true;
                }
            }
        }
    }
    for c in 0..nt {
        let Some(p) = d.parent[c] else { continue };
        let a = below[c];
        let b = (0..nt).filter(|&t| !inside[c][t]).fold(0u32, |acc, t| acc | d.bags[t]);
        let sep = d.bags[c] & d.bags[p];
        let crossing = bits(a & !b).any(|u| g.neighbors(u) & (b & !a) != 0);
        if a & b != sep || crossing {
            out.violations.push(Violation::Separation { child: c, parent: p });
        }
    }
    out
}

/// [`validate_decomposition`] plus the nice-form rules: empty root and
/// leaf bags, and introduce/forget/join nodes that differ from their
/// children exactly as their kind says.
pub fn validate_nice(g: &DepGraph, d: &NiceTreeDecomposition) -> Validation {
    let mut out = validate_decomposition(g, &d.as_tree());
    let bad = |node: usize, reason: &str| Violation::BadNode { node, reason: reason.to_string() };
    if d.nodes.get(d.root).map(|n| n.bag) != Some(0) {
        out.violations.push(bad(d.root, "root bag is not empty"));
    }
    for (t, node) in d.nodes.iter().enumerate() {
        let ch: Vec<u32> = node.children.iter().map(|&c| d.nodes[c].bag).collect();
        let ok = match (node.kind, ch.as_slice()) {
            (NodeKind::Leaf, []) => node.bag == 0,
            (NodeKind::Introduce(v), [c]) => c & (1 << v) == 0 && node.bag == c | (1 << v),
            (NodeKind::Forget(v), [c]) => c & (1 << v) != 0 && node.bag == c & !(1 << v),
            (NodeKind::Join, [a, b]) => *a == node.bag && *b == node.bag,
            _ => false,
        };
        if !ok {
            out.violations.push(bad(t, &format!("{:?} node does not match its children", node.kind)));
        }
        if node.children.iter().any(|&c| c >= t) {
            out.violations.push(bad(t, "child stored after its parent"));
        }
    }
    out
}

/// Shared cache of minimum-width nice decompositions keyed by graph.
#[derive(Debug, Default)]
pub struct DecompCache {
    map: RwLock<HashMap<Vec<u32>, Arc<NiceTreeDecomposition>>>,
}

impl DecompCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_build(&self, g: &DepGraph) -> Result<Arc<NiceTreeDecomposition>> {
        if let Some(d) = self.map.read().expect("cache lock").get(&g.adj) {
            return Ok(Arc::clone(d));
        }
        let d = Arc::new(nice_decomposition(g)?);
        debug_assert!(validate_nice(g, &d).is_valid());
        let mut map = self.map.write().expect("cache lock");
        Ok(Arc::clone(map.entry(g.adj.clone()).or_insert(d)))
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
