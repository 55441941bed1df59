//! Best k-move search by dynamic programming over nice tree decompositions.
//!
//! For a fixed pattern `M` and bucket assignment `b`, `T_t[f]` is the best
//! `gain_M` of a `b`-monotone extension of `f` (an assignment of the bag
//! `X_t`) to all slots below `t`. Tables are filled bottom-up:
//!
//! * leaf: `T[∅] = 0`;
//! * introduce `i`: the child's value plus `w(e_{f(i)})` minus the added
//!   edges between `i` and the bag (at most two);
//! * forget `i`: maximum over the forgotten value;
//! * join: `T_1[f] + T_2[f] - gain_M(f)`, since both children already count
//!   the bag's own removed and added edges.
//!
//! The root holds the maximum `M`-gain over `b`-monotone embeddings. The
//! driver maximizes that over every valid pattern and bucket assignment.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::Serialize;

use crate::buckets::{enumerate_assignments, make_buckets, order_edges, BucketPartition};
use crate::decomp::{dependence_graph, validate_nice, DecompCache, NiceTreeDecomposition, NodeKind};
use crate::error::{Error, Result};
use crate::instance::{Instance, Tour, Weight};
use crate::moves::{apply_move, gain_full, interference_graph, valid_patterns, ConnectionPattern, KMove};
use crate::Rational;

pub const MAX_SEARCH_K: usize = 10;

/// A DP value: `None` when no `b`-monotone extension exists.
type Entry = Option<Weight>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveResult {
    /// Best gain; `None` when no admissible embedding exists.
    pub gain: Option<Weight>,
    /// Removed tour-edge indices (0-based, increasing).
    pub embedding: Option<Vec<usize>>,
    pub pattern: Option<ConnectionPattern>,
    pub kmove: Option<KMove>,
    /// The tour after applying the move, when one was found.
    pub new_tour: Option<Tour>,
}

impl SolveResult {
    fn absent() -> Self {
        Self { gain: None, embedding: None, pattern: None, kmove: None, new_tour: None }
    }

    pub fn is_improving(&self) -> bool {
        self.gain.is_some_and(|g| g > 0)
    }
}

/// Mixed-radix indexing of the assignments of a bag, last slot fastest.
struct Layout {
    slots: Vec<usize>,
    /// `strides[s]` for slot `s`, zero for slots outside the bag.
    strides: Vec<usize>,
    len: usize,
}

impl Layout {
    fn new(bag: u32, sizes: &[usize]) -> Self {
        let slots: Vec<usize> = (0..sizes.len()).filter(|&s| bag & (1 << s) != 0).collect();
        let mut strides = vec![0; sizes.len()];
        let mut len = 1usize;
        for &s in slots.iter().rev() {
            strides[s] = len;
            len = len.checked_mul(sizes[s]).expect("DP table size overflows usize");
        }
        Self { slots, strides, len }
    }

    #[inline]
    fn index(&self, digits: &[usize]) -> usize {
        self.slots.iter().map(|&s| digits[s] * self.strides[s]).sum()
    }
}

/// Walks every assignment of `slots` in index order; `digits` is indexed
/// by slot.
#[inline]
fn advance(slots: &[usize], sizes: &[usize], digits: &mut [usize]) -> bool {
    for &s in slots.iter().rev() {
        digits[s] += 1;
        if digits[s] < sizes[s] {
            return true;
        }
        digits[s] = 0;
    }
    false
}

/// A table kept for inspection, with keys decoded to edge indices.
#[derive(Debug, Clone)]
pub struct DpTable {
    pub node: usize,
    pub bag: Vec<usize>,
    pub entries: Vec<(Vec<usize>, Entry)>,
}

#[derive(Clone)]
struct Problem<'a> {
    inst: &'a Instance,
    tour: &'a Tour,
    pairs: Vec<(usize, usize)>,
    /// Pattern pairs touching slot `i`, each listed once.
    touching: Vec<Vec<(usize, usize)>>,
    lo: Vec<usize>,
    sizes: Vec<usize>,
    order: u32,
}

struct Outcome {
    gain: Entry,
    tables: Vec<DpTable>,
}

impl<'a> Problem<'a> {
    fn new(inst: &'a Instance, tour: &'a Tour, m: &ConnectionPattern, b: &[usize], part: &BucketPartition) -> Self {
        let k = m.k();
        let pairs: Vec<(usize, usize)> = m.pairs().collect();
        let mut touching = vec![Vec::new(); k];
        for &(p, q) in &pairs {
            touching[p / 2].push((p, q));
            if q / 2 != p / 2 {
                touching[q / 2].push((q, p));
            }
        }
        let ranges: Vec<_> = b.iter().map(|&j| part.range(j)).collect();
        Self {
            inst,
            tour,
            pairs,
            touching,
            lo: ranges.iter().map(|r| r.start).collect(),
            sizes: ranges.iter().map(|r| r.len()).collect(),
            order: order_edges(b),
        }
    }

    #[inline]
    fn vertex(&self, point: usize, digits: &[usize]) -> usize {
        let edge = self.lo[point / 2] + digits[point / 2];
        if point.is_multiple_of(2) {
            self.tour.left(edge)
        } else {
            self.tour.right(edge)
        }
    }

    #[inline]
    fn removed_weight(&self, slot: usize, digits: &[usize]) -> Weight {
        let e = self.lo[slot] + digits[slot];
        self.inst.weight(self.tour.left(e), self.tour.right(e))
    }

    /// Order constraints between `i` and its bag neighbours.
    #[inline]
    fn ordered_around(&self, i: usize, bag: u32, digits: &[usize]) -> bool {
        let val = |s: usize| self.lo[s] + digits[s];
        let below = i > 0 && self.order & (1 << (i - 1)) != 0 && bag & (1 << (i - 1)) != 0;
        let above = self.order & (1 << i) != 0 && bag & (1 << (i + 1)) != 0;
        (!below || val(i - 1) < val(i)) && (!above || val(i) < val(i + 1))
    }

    /// `gain_M` of the bag assignment alone.
    fn bag_gain(&self, bag: u32, digits: &[usize]) -> Weight {
        let mut g = 0;
        for s in (0..self.sizes.len()).filter(|&s| bag & (1 << s) != 0) {
            g += self.removed_weight(s, digits);
        }
        for &(p, q) in &self.pairs {
            if bag & (1 << (p / 2)) != 0 && bag & (1 << (q / 2)) != 0 {
                g -= self.inst.weight(self.vertex(p, digits), self.vertex(q, digits));
            }
        }
        g
    }

    fn run(&self, d: &NiceTreeDecomposition, keep_tables: bool) -> Outcome {
        let k = self.sizes.len();
        let mut tables: Vec<Option<Vec<Entry>>> = vec![None; d.nodes.len()];
        let mut kept = Vec::new();
        let mut digits = vec![0usize; k];

        for (t, node) in d.nodes.iter().enumerate() {
            let layout = Layout::new(node.bag, &self.sizes);
            let table: Vec<Entry> = match node.kind {
                NodeKind::Leaf => vec![Some(0)],
                NodeKind::Introduce(i) => {
                    let child_bag = node.bag & !(1 << i);
                    let child_layout = Layout::new(child_bag, &self.sizes);
                    let child = tables[node.children[0]].take().expect("child computed");
                    let mut out = vec![None; layout.len];
                    digits.iter_mut().for_each(|x| *x = 0);
                    let mut idx = 0;
                    loop {
                        if self.ordered_around(i, node.bag, &digits) {
                            if let Some(v) = child[child_layout.index(&digits)] {
                                let mut delta = self.removed_weight(i, &digits);
                                let mut added = 0;
                                for &(p, q) in &self.touching[i] {
                                    if node.bag & (1 << (q / 2)) != 0 {
                                        delta -= self.inst.weight(self.vertex(p, &digits), self.vertex(q, &digits));
                                        added += 1;
                                    }
                                }
                                debug_assert!(added <= 2);
                                out[idx] = Some(v + delta);
                            }
                        }
                        idx += 1;
                        if !advance(&layout.slots, &self.sizes, &mut digits) {
                            break;
                        }
                    }
                    out
                }
                NodeKind::Forget(i) => {
                    let child_bag = node.bag | (1 << i);
                    let child_layout = Layout::new(child_bag, &self.sizes);
                    let child = tables[node.children[0]].take().expect("child computed");
                    let mut out: Vec<Entry> = vec![None; layout.len];
                    digits.iter_mut().for_each(|x| *x = 0);
                    let mut cidx = 0;
                    loop {
                        if let Some(v) = child[cidx] {
                            let pidx = layout.index(&digits);
                            if out[pidx].is_none_or(|cur| v > cur) {
                                out[pidx] = Some(v);
                            }
                        }
                        cidx += 1;
                        if !advance(&child_layout.slots, &self.sizes, &mut digits) {
                            break;
                        }
                    }
                    out
                }
                NodeKind::Join => {
                    let a = tables[node.children[0]].take().expect("child computed");
                    let b = tables[node.children[1]].take().expect("child computed");
                    let mut out = vec![None; layout.len];
                    digits.iter_mut().for_each(|x| *x = 0);
                    let mut idx = 0;
                    loop {
                        if let (Some(x), Some(y)) = (a[idx], b[idx]) {
                            out[idx] = Some(x + y - self.bag_gain(node.bag, &digits));
                        }
                        idx += 1;
                        if !advance(&layout.slots, &self.sizes, &mut digits) {
                            break;
                        }
                    }
                    out
                }
            };
            if keep_tables {
                kept.push(self.decode(t, &layout, &table));
            }
            tables[t] = Some(table);
        }

        let gain = tables[d.root].as_ref().expect("root computed")[0];
        Outcome { gain, tables: kept }
    }

    /// Lexicographically smallest embedding of gain `target`: slots are
    /// fixed left to right, each by binary search on an upper cap.
    fn lex_smallest(&self, d: &NiceTreeDecomposition, target: Weight) -> Vec<usize> {
        let mut p = self.clone();
        for i in 0..p.sizes.len() {
            let lo = p.lo[i];
            let (mut a, mut b) = (lo, lo + p.sizes[i] - 1);
            while a < b {
                let mid = (a + b) / 2;
                p.sizes[i] = mid - lo + 1;
                if p.run(d, false).gain == Some(target) {
                    b = mid;
                } else {
                    a = mid + 1;
                }
            }
            p.lo[i] = a;
            p.sizes[i] = 1;
        }
        debug_assert_eq!(p.run(d, false).gain, Some(target));
        p.lo
    }

    fn decode(&self, node: usize, layout: &Layout, table: &[Entry]) -> DpTable {
        let mut digits = vec![0usize; self.sizes.len()];
        let mut entries = Vec::with_capacity(table.len());
        for &e in table {
            entries.push((layout.slots.iter().map(|&s| self.lo[s] + digits[s]).collect(), e));
            advance(&layout.slots, &self.sizes, &mut digits);
        }
        DpTable { node, bag: layout.slots.clone(), entries }
    }
}

/// Whether some embedding is `b`-monotone: every run of slots chained by
/// order edges must fit in its bucket.
fn assignment_feasible(b: &[usize], part: &BucketPartition) -> bool {
    let mut run = 1;
    for i in 0..b.len() {
        if i > 0 && b[i] == b[i - 1] {
            run += 1;
        } else {
            run = 1;
        }
        if run > part.range(b[i]).len() {
            return false;
        }
    }
    true
}

fn check_inputs(
    inst: &Instance,
    tour: &Tour,
    m: &ConnectionPattern,
    b: &[usize],
    part: &BucketPartition,
) -> Result<()> {
    tour.check_for(inst)?;
    if part.n() != tour.len() {
        return Err(Error::Inconsistent(format!("buckets cover {} edges but the tour has {}", part.n(), tour.len())));
    }
    if b.len() != m.k() || b.windows(2).any(|w| w[0] > w[1]) || b.iter().any(|&j| j >= part.count()) {
        return Err(Error::Inconsistent(format!(
            "{b:?} is not a nondecreasing assignment into {} buckets",
            part.count()
        )));
    }
    if !crate::moves::is_valid_pattern(m) {
        return Err(Error::Inconsistent(format!("pattern {m:?} is not valid")));
    }
    Ok(())
}

/// Maximum `M`-gain over `b`-monotone embeddings, using the supplied nice
/// decomposition of the dependence graph `I_M ∪ O_b`.
pub fn solve_fixed(
    inst: &Instance,
    tour: &Tour,
    m: &ConnectionPattern,
    b: &[usize],
    part: &BucketPartition,
    d: &NiceTreeDecomposition,
) -> Result<SolveResult> {
    check_inputs(inst, tour, m, b, part)?;
    let g = dependence_graph(&interference_graph(m), order_edges(b));
    validate_nice(&g, d).into_result()?;
    if d.nodes.iter().enumerate().any(|(t, node)| node.children.iter().any(|&c| c >= t)) {
        return Err(Error::InvalidDecomposition("children must precede their parent".into()));
    }
    let problem = Problem::new(inst, tour, m, b, part);
    let Some(gain) = problem.run(d, false).gain else { return Ok(SolveResult::absent()) };
    let f = problem.lex_smallest(d, gain);
    let kmove = KMove::from_embedding(inst, tour, m, &f);
    if kmove.gain != gain {
        return Err(Error::Inconsistent(format!("DP gain {gain} but the embedding evaluates to {}", kmove.gain)));
    }
    Ok(SolveResult {
        gain: Some(gain),
        embedding: Some(f),
        pattern: Some(m.clone()),
        kmove: Some(kmove),
        new_tour: None,
    })
}

/// Runs the DP and returns every node's table, for checking the
/// recurrences against their definition.
pub fn dp_tables(
    inst: &Instance,
    tour: &Tour,
    m: &ConnectionPattern,
    b: &[usize],
    part: &BucketPartition,
    d: &NiceTreeDecomposition,
) -> Result<Vec<DpTable>> {
    check_inputs(inst, tour, m, b, part)?;
    Ok(Problem::new(inst, tour, m, b, part).run(d, true).tables)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    /// Maximum gain over everything.
    Best,
    /// First improving move in canonical (pattern, assignment) order.
    First,
}

impl std::str::FromStr for Policy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "best" => Ok(Policy::Best),
            "first" => Ok(Policy::First),
            _ => Err(Error::Inconsistent(format!("unknown policy `{s}` (best|first)"))),
        }
    }
}

/// Bucket exponent used when none is given: the optimal exponents for
/// `k = 5..10`, a single bucket below that.
pub fn default_alpha(k: usize) -> Rational {
    match k {
        5 | 8 => Rational::new(2, 3),
        6 | 7 => Rational::new(3, 4),
        9 | 10 => Rational::new(4, 5),
        _ => Rational::from_integer(1),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Step {
    pub gain: Weight,
    /// Tour weight after the step.
    pub weight: Weight,
}

/// Search engine holding the decomposition cache, shared by successive
/// searches.
#[derive(Debug, Default)]
pub struct Engine {
    cache: DecompCache,
}

impl Engine {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cached_decompositions(&self) -> usize {
        self.cache.len()
    }

    /// Best (or first improving) k-move over all valid patterns and bucket
    /// assignments with buckets of size `ceil(n^alpha)`. Ties go to the
    /// earliest pattern, then assignment, then the lexicographically
    /// smallest embedding.
    pub fn best_move(
        &self,
        inst: &Instance,
        tour: &Tour,
        k: usize,
        alpha: Rational,
        policy: Policy,
    ) -> Result<SolveResult> {
        tour.check_for(inst)?;
        if !(2..=MAX_SEARCH_K).contains(&k) {
            return Err(Error::KOutOfRange { k, min: 2, max: MAX_SEARCH_K });
        }
        let n = inst.n();
        if n < k {
            return Err(Error::InstanceTooSmall { n, k, need: k });
        }
        let part = make_buckets(n, alpha)?;
        let patterns = valid_patterns(k)?;
        let assignments: Vec<_> =
            enumerate_assignments(k, part.count()).filter(|b| assignment_feasible(b, &part)).collect();
        let ims: Vec<_> = patterns.iter().map(interference_graph).collect();
        let tasks = patterns.len() * assignments.len();
        let decomposition = |t: usize| {
            let b = &assignments[t % assignments.len()];
            self.cache.get_or_build(&dependence_graph(&ims[t / assignments.len()], order_edges(b)))
        };

        // task t is (pattern t / |A|, assignment t % |A|), the canonical order
        let earliest = AtomicUsize::new(usize::MAX);
        let gains: Vec<Entry> = (0..tasks)
            .into_par_iter()
            .map(|t| {
                if policy == Policy::First && t > earliest.load(Ordering::Relaxed) {
                    return Ok(None);
                }
                let (pi, ai) = (t / assignments.len(), t % assignments.len());
                let d = decomposition(t)?;
                let gain = Problem::new(inst, tour, &patterns[pi], &assignments[ai], &part).run(&d, false).gain;
                if gain.is_some_and(|g| g > 0) {
                    earliest.fetch_min(t, Ordering::Relaxed);
                }
                Ok(gain)
            })
            .collect::<Result<_>>()?;

        let first = match policy {
            Policy::First => gains.iter().position(|g| g.is_some_and(|g| g > 0)),
            Policy::Best => None,
        };
        let winner = first.or_else(|| {
            let mut best: Option<(usize, Weight)> = None;
            for (t, g) in gains.iter().enumerate() {
                if let Some(g) = *g {
                    if best.is_none_or(|(_, b)| g > b) {
                        best = Some((t, g));
                    }
                }
            }
            best.map(|(t, _)| t)
        });
        let Some(t) = winner else { return Ok(SolveResult::absent()) };
        let gain = gains[t].expect("winner has a gain");
        let m = &patterns[t / assignments.len()];
        let problem = Problem::new(inst, tour, m, &assignments[t % assignments.len()], &part);
        let d = decomposition(t)?;
        let f = problem.lex_smallest(&d, gain);
        let (new_tour, kmove) = apply_move(inst, tour, m, &f)?;
        if kmove.gain != gain || gain_full(inst, tour, m, &f) != gain {
            return Err(Error::Inconsistent(format!("DP gain {gain} but the move evaluates to {}", kmove.gain)));
        }
        Ok(SolveResult {
            gain: Some(gain),
            embedding: Some(f),
            pattern: Some(m.clone()),
            kmove: Some(kmove),
            new_tour: Some(new_tour),
        })
    }

    /// Applies improving k-moves until none is left or `max_steps` moves
    /// were made.
    pub fn local_search(
        &self,
        inst: &Instance,
        tour0: &Tour,
        k: usize,
        alpha: Rational,
        policy: Policy,
        max_steps: usize,
    ) -> Result<(Tour, Vec<Step>)> {
        tour0.check_for(inst)?;
        let mut tour = tour0.clone();
        let mut weight = inst.tour_weight(&tour);
        let mut history = Vec::new();
        while history.len() < max_steps {
            let r = self.best_move(inst, &tour, k, alpha, policy)?;
            if !r.is_improving() {
                break;
            }
            let gain = r.gain.expect("improving");
            let next = r.new_tour.expect("validated move");
            let w = inst.tour_weight(&next);
            debug_assert_eq!(w, weight - gain);
            weight = w;
            tour = next;
            history.push(Step { gain, weight });
        }
        Ok((tour, history))
    }
}

pub fn best_move(inst: &Instance, tour: &Tour, k: usize, alpha: Rational, policy: Policy) -> Result<SolveResult> {
    Engine::new().best_move(inst, tour, k, alpha, policy)
}

pub fn local_search(
    inst: &Instance,
    tour0: &Tour,
    k: usize,
    alpha: Rational,
    policy: Policy,
    max_steps: usize,
) -> Result<(Tour, Vec<Step>)> {
    Engine::new().local_search(inst, tour0, k, alpha, policy, max_steps)
}
