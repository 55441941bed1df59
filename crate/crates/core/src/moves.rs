//! Connection patterns, embeddings and k-moves.
//!
//! A k-move removes tour edges `e_{f(0)} < .. < e_{f(k-1)}` and reconnects
//! their `2k` endpoints according to a perfect matching on `0..2k`, the
//! connection pattern. Point `2j` is the left endpoint of the `j`-th removed
//! edge and point `2j + 1` its right endpoint.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Instance, Tour, Weight};

pub const MIN_K: usize = 2;
pub const MAX_K: usize = 12;

/// A perfect matching on the `2k` endpoint slots of a k-move.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ConnectionPattern {
    mate: Vec<u8>,
}

impl ConnectionPattern {
    /// Builds a pattern from 0-based point pairs.
    pub fn from_pairs(k: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        if !(1..=MAX_K).contains(&k) {
            return Err(Error::KOutOfRange { k, min: 1, max: MAX_K });
        }
        let mut mate = vec![u8::MAX; 2 * k];
        if pairs.len() != k {
            return Err(Error::Inconsistent(format!("a {k}-pattern needs {k} pairs, got {}", pairs.len())));
        }
        for &(p, q) in pairs {
            if p >= 2 * k || q >= 2 * k || p == q || mate[p] != u8::MAX || mate[q] != u8::MAX {
                return Err(Error::Inconsistent(format!("pairs do not form a perfect matching on 1..={}", 2 * k)));
            }
            mate[p] = q as u8;
            mate[q] = p as u8;
        }
        Ok(Self { mate })
    }

    /// Builds a pattern from 1-based point pairs, as written in reports.
    pub fn from_one_based(k: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        if pairs.iter().any(|&(p, q)| p == 0 || q == 0) {
            return Err(Error::Inconsistent("pattern points are 1-based".into()));
        }
        let zero: Vec<_> = pairs.iter().map(|&(p, q)| (p - 1, q - 1)).collect();
        Self::from_pairs(k, &zero)
    }

    /// The pattern that re-adds every removed edge.
    pub fn identity(k: usize) -> Self {
        let mate = (0..2 * k).map(|p| (p ^ 1) as u8).collect();
        Self { mate }
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.mate.len() / 2
    }

    #[inline]
    pub fn mate(&self, point: usize) -> usize {
        self.mate[point] as usize
    }

    /// Pairs `(p, q)` with `p < q`, ordered by `p`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.mate.len()).filter_map(move |p| {
            let q = self.mate(p);
            (p < q).then_some((p, q))
        })
    }

    pub fn one_based_pairs(&self) -> Vec<[usize; 2]> {
        self.pairs().map(|(p, q)| [p + 1, q + 1]).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.pairs().all(|(p, q)| q == p + 1 && p % 2 == 0)
    }
}

impl fmt::Debug for ConnectionPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (p, q)) in self.pairs().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{{{},{}}}", p + 1, q + 1)?;
        }
        write!(f, "}}")
    }
}

/// Lazily enumerates every perfect matching on `0..2k` in canonical order:
/// the smallest unmatched point is paired with each larger unmatched point
/// in increasing order, recursively.
pub struct Matchings {
    mate: Vec<u8>,
    stack: Vec<(u8, u8)>,
    fresh: bool,
    done: bool,
}

const FREE: u8 = u8::MAX;

impl Matchings {
    fn fill(&mut self) {
        while let Some(p) = self.mate.iter().position(|&m| m == FREE) {
            let q = (p + 1..self.mate.len()).find(|&q| self.mate[q] == FREE).expect("even count");
            self.mate[p] = q as u8;
            self.mate[q] = p as u8;
            self.stack.push((p as u8, q as u8));
        }
    }
}

impl Iterator for Matchings {
    type Item = ConnectionPattern;

    fn next(&mut self) -> Option<ConnectionPattern> {
        if self.done {
            return None;
        }
        if self.fresh {
            self.fresh = false;
            self.fill();
            return Some(ConnectionPattern { mate: self.mate.clone() });
        }
        while let Some((p, q)) = self.stack.pop() {
            let (p, q) = (p as usize, q as usize);
            self.mate[p] = FREE;
            self.mate[q] = FREE;
            if let Some(r) = (q + 1..self.mate.len()).find(|&r| self.mate[r] == FREE) {
                self.mate[p] = r as u8;
                self.mate[r] = p as u8;
                self.stack.push((p as u8, r as u8));
                self.fill();
                return Some(ConnectionPattern { mate: self.mate.clone() });
            }
        }
        self.done = true;
        None
    }
}

/// All `(2k - 1)!!` perfect matchings on `[2k]` in canonical order.
pub fn enumerate_matchings(k: usize) -> Result<Matchings> {
    if !(MIN_K..=MAX_K).contains(&k) {
        return Err(Error::KOutOfRange { k, min: MIN_K, max: MAX_K });
    }
    Ok(Matchings { mate: vec![FREE; 2 * k], stack: Vec::with_capacity(k), fresh: true, done: false })
}

/// `(2k - 1)!!`.
pub fn matching_count(k: usize) -> u128 {
    (1..=k as u128).map(|i| 2 * i - 1).product()
}

/// Segment of the tour left after removing the k edges, as a node of the
/// contracted pattern graph: point `2j + 1` (right of edge `j`) and point
/// `2j + 2 mod 2k` (left of edge `j + 1`) lie on the same segment.
#[inline]
fn segment_of(point: usize, k: usize) -> usize {
    point.div_ceil(2) % k
}

/// A pattern is valid when contracting each tour segment to a node turns
/// the matching into one cycle through all `k` segments without loops.
pub fn is_valid_pattern(m: &ConnectionPattern) -> bool {
    let k = m.k();
    let mut visited = 0u32;
    let mut seg = 0;
    // enter segment 0 through its point 2k-1 and leave through point 0
    let mut leave = 0usize;
    for _ in 0..k {
        visited |= 1 << seg;
        let arrive = m.mate(leave);
        let next = segment_of(arrive, k);
        if next == seg {
            return false;
        }
        seg = next;
        if seg == 0 {
            break;
        }
        // the other point of the segment
        leave = if arrive % 2 == 1 { (arrive + 1) % (2 * k) } else { (arrive + 2 * k - 1) % (2 * k) };
    }
    seg == 0 && visited.count_ones() as usize == k
}

/// Valid k-patterns in canonical order.
pub fn valid_patterns(k: usize) -> Result<Vec<ConnectionPattern>> {
    Ok(enumerate_matchings(k)?.filter(is_valid_pattern).collect())
}

/// The graph on removed-edge slots `0..k` obtained by merging the two
/// endpoints of every removed edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InterferenceGraph {
    k: usize,
    /// Simple adjacency bitmasks, loops excluded.
    adj: Vec<u32>,
    /// Edges with multiplicity, as sorted `(i, j, count)` with `i < j`.
    multi: Vec<(usize, usize, u8)>,
    /// Slots joined to themselves (a removed edge added back).
    loops: u32,
}

impl InterferenceGraph {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn adjacency(&self) -> &[u32] {
        &self.adj
    }

    /// Simple edges `(i, j)`, `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.multi.iter().map(|&(i, j, _)| (i, j)).collect()
    }

    /// Edges that occur twice: the single-edge components, which stand
    /// for a 2-cycle.
    pub fn doubled_edges(&self) -> Vec<(usize, usize)> {
        self.multi.iter().filter(|e| e.2 == 2).map(|&(i, j, _)| (i, j)).collect()
    }

    pub fn loops(&self) -> u32 {
        self.loops
    }

    /// Connected components of the simple graph with at least one edge.
    pub fn components(&self) -> Vec<u32> {
        let mut seen = 0u32;
        let mut out = Vec::new();
        for v in 0..self.k {
            if seen & (1 << v) != 0 || self.adj[v] == 0 {
                continue;
            }
            let mut comp = 1u32 << v;
            let mut frontier = comp;
            while frontier != 0 {
                let u = frontier.trailing_zeros() as usize;
                frontier &= frontier - 1;
                let new = self.adj[u] & !comp;
                comp |= new;
                frontier |= new;
            }
            seen |= comp;
            out.push(comp);
        }
        out
    }
}

pub fn interference_graph(m: &ConnectionPattern) -> InterferenceGraph {
    let k = m.k();
    let mut adj = vec![0u32; k];
    let mut loops = 0u32;
    let mut multi: Vec<(usize, usize, u8)> = Vec::new();
    for (p, q) in m.pairs() {
        let (i, j) = (p / 2, q / 2);
        if i == j {
            loops |= 1 << i;
            continue;
        }
        let (i, j) = (i.min(j), i.max(j));
        adj[i] |= 1 << j;
        adj[j] |= 1 << i;
        match multi.iter_mut().find(|e| e.0 == i && e.1 == j) {
            Some(e) => e.2 += 1,
            None => multi.push((i, j, 1)),
        }
    }
    multi.sort_unstable();
    InterferenceGraph { k, adj, multi, loops }
}

/// Tour vertex standing at `point` when slot `point / 2` is mapped to
/// tour edge `edge`.
#[inline]
pub fn endpoint(tour: &Tour, point: usize, edge: usize) -> usize {
    if point.is_multiple_of(2) {
        tour.left(edge)
    } else {
        tour.right(edge)
    }
}

/// `w(E^-_f) - w(E^+_f)` for a partial embedding, where `E^+_f` only holds
/// pattern pairs whose both slots are placed.
pub fn gain_partial(inst: &Instance, tour: &Tour, m: &ConnectionPattern, f: &[Option<usize>]) -> Weight {
    debug_assert_eq!(f.len(), m.k());
    let mut gain = 0;
    for e in f.iter().flatten() {
        gain += inst.weight(tour.left(*e), tour.right(*e));
    }
    for (p, q) in m.pairs() {
        if let (Some(ep), Some(eq)) = (f[p / 2], f[q / 2]) {
            gain -= inst.weight(endpoint(tour, p, ep), endpoint(tour, q, eq));
        }
    }
    gain
}

/// Gain of a full embedding.
pub fn gain_full(inst: &Instance, tour: &Tour, m: &ConnectionPattern, f: &[usize]) -> Weight {
    let partial: Vec<Option<usize>> = f.iter().copied().map(Some).collect();
    gain_partial(inst, tour, m, &partial)
}

/// Removed and added edges of a k-move with its gain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KMove {
    /// Tour-edge indices, increasing.
    pub removed: Vec<usize>,
    /// Added vertex pairs, one per pattern pair.
    pub added: Vec<(usize, usize)>,
    pub gain: Weight,
}

impl KMove {
    pub fn from_embedding(inst: &Instance, tour: &Tour, m: &ConnectionPattern, f: &[usize]) -> Self {
        let added = m.pairs().map(|(p, q)| (endpoint(tour, p, f[p / 2]), endpoint(tour, q, f[q / 2]))).collect();
        Self { removed: f.to_vec(), added, gain: gain_full(inst, tour, m, f) }
    }
}

/// JSON k-move report; every index is 1-based.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct MoveReport {
    pub k: usize,
    pub removed: Vec<usize>,
    pub added: Vec<[usize; 2]>,
    pub gain: Weight,
    pub pattern: Vec<[usize; 2]>,
    pub embedding: Vec<usize>,
}

impl MoveReport {
    pub fn new(mv: &KMove, m: &ConnectionPattern, f: &[usize]) -> Self {
        Self {
            k: m.k(),
            removed: mv.removed.iter().map(|e| e + 1).collect(),
            added: mv.added.iter().map(|&(u, v)| [u + 1, v + 1]).collect(),
            gain: mv.gain,
            pattern: m.one_based_pairs(),
            embedding: f.iter().map(|e| e + 1).collect(),
        }
    }
}

/// Applies the move `(f, m)` and returns the new tour. The result is
/// checked to be a Hamiltonian cycle whose weight is exactly the old weight
/// minus the move's gain.
pub fn apply_move(inst: &Instance, tour: &Tour, m: &ConnectionPattern, f: &[usize]) -> Result<(Tour, KMove)> {
    let n = tour.len();
    let k = m.k();
    if f.len() != k {
        return Err(Error::Inconsistent(format!("embedding has {} values for k = {k}", f.len())));
    }
    if f.windows(2).any(|w| w[0] >= w[1]) || f.iter().any(|&e| e >= n) {
        return Err(Error::Inconsistent(format!("embedding {f:?} is not strictly increasing in 0..{n}")));
    }
    if !is_valid_pattern(m) {
        return Err(Error::Inconsistent(format!("pattern {m:?} is not valid")));
    }
    let mv = KMove::from_embedding(inst, tour, m, f);

    const NONE: usize = usize::MAX;
    let mut adj = vec![[NONE; 2]; n];
    let mut link = |u: usize, v: usize| -> Result<()> {
        if u == v {
            return Err(Error::DegenerateMove(format!("added edge is a loop at vertex {}", u + 1)));
        }
        for (a, b) in [(u, v), (v, u)] {
            let slot = adj[a]
                .iter()
                .position(|&x| x == NONE)
                .ok_or_else(|| Error::DegenerateMove(format!("vertex {} would have degree above 2", a + 1)))?;
            adj[a][slot] = b;
        }
        Ok(())
    };
    let mut removed = f.iter().peekable();
    for e in 0..n {
        if removed.peek() == Some(&&e) {
            removed.next();
            continue;
        }
        link(tour.left(e), tour.right(e))?;
    }
    for &(u, v) in &mv.added {
        link(u, v)?;
    }
    if let Some(v) = adj.iter().position(|a| a[1] == NONE) {
        return Err(Error::DegenerateMove(format!("vertex {} has degree below 2", v + 1)));
    }

    let start = tour.order()[0];
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    let (mut prev, mut cur) = (NONE, start);
    loop {
        if std::mem::replace(&mut seen[cur], true) {
            break;
        }
        order.push(cur);
        let next = if adj[cur][0] != prev || adj[cur][0] == adj[cur][1] { adj[cur][0] } else { adj[cur][1] };
        prev = cur;
        cur = next;
    }
    if order.len() != n || cur != start {
        return Err(Error::DegenerateMove(format!(
            "result splits into several cycles (closed after {} of {n} vertices)",
            order.len()
        )));
    }
    let new_tour = Tour::new(order)?;
    let before = inst.tour_weight(tour);
    let after = inst.tour_weight(&new_tour);
    if after != before - mv.gain {
        return Err(Error::DegenerateMove(format!(
            "weight changed by {} but the move's gain is {}",
            before - after,
            mv.gain
        )));
    }
    Ok((new_tour, mv))
}
