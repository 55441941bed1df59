//! Brute-force reference implementations, deliberately sharing no search
//! code with the DP engine.

use serde::Serialize;

use crate::buckets::BucketPartition;
use crate::decomp::DepGraph;
use crate::error::{Error, Result};
use crate::instance::{Instance, ReductionInput, Tour, Weight};

pub const DEFAULT_MOVE_BUDGET: u128 = 100_000_000;
pub const DEFAULT_EMBEDDING_BUDGET: u128 = 10_000_000;
pub const MAX_BRUTEFORCE_TW: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleResult<W> {
    pub value: Option<Weight>,
    pub witness: Option<W>,
}

/// A move found by exhaustive search, all indices 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NaiveMove {
    pub embedding: Vec<usize>,
    /// Matching on the `2k` endpoints: `2j`, `2j + 1` are the ends of the
    /// `j`-th removed edge.
    pub pattern: Vec<(usize, usize)>,
    pub removed: Vec<(usize, usize)>,
    pub added: Vec<(usize, usize)>,
}

fn matchings(points: usize) -> Vec<Vec<(usize, usize)>> {
    fn rec(free: &mut Vec<usize>, cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if free.is_empty() {
            out.push(cur.clone());
            return;
        }
        let p = free.remove(0);
        for idx in 0..free.len() {
            let q = free.remove(idx);
            cur.push((p, q));
            rec(free, cur, out);
            cur.pop();
            free.insert(idx, q);
        }
        free.insert(0, p);
    }
    let mut out = Vec::new();
    rec(&mut (0..points).collect(), &mut Vec::new(), &mut out);
    out
}

/// Whether tour edges minus `removed` plus `added` form one Hamiltonian
/// cycle on `n` vertices.
fn is_hamiltonian(n: usize, tour_edges: &[(usize, usize)], removed: &[usize], added: &[(usize, usize)]) -> bool {
    let mut adj: Vec<Vec<usize>> = vec![Vec::with_capacity(2); n];
    for (i, &(u, v)) in tour_edges.iter().enumerate() {
        if !removed.contains(&i) {
            adj[u].push(v);
            adj[v].push(u);
        }
    }
    for &(u, v) in added {
        if u == v {
            return false;
        }
        adj[u].push(v);
        adj[v].push(u);
    }
    if adj.iter().any(|a| a.len() != 2) {
        return false;
    }
    let (mut prev, mut cur, mut seen) = (0, adj[0][0], 1);
    while cur != 0 {
        let next = if adj[cur][0] == prev { adj[cur][1] } else { adj[cur][0] };
        prev = cur;
        cur = next;
        seen += 1;
        if seen > n {
            return false;
        }
    }
    // a doubled edge would close a 2-cycle early
    seen == n && adj.iter().all(|a| a[0] != a[1])
}

fn choose(n: u128, r: u128) -> u128 {
    if r > n {
        return 0;
    }
    (0..r).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Maximum gain over every pair (k tour edges, reconnection) that yields a
/// Hamiltonian cycle. Refuses when the search would exceed `budget`
/// candidate evaluations.
pub fn naive_best_move(inst: &Instance, tour: &Tour, k: usize, budget: u128) -> Result<OracleResult<NaiveMove>> {
    tour.check_for(inst)?;
    let n = inst.n();
    if !(2..=8).contains(&k) {
        return Err(Error::KOutOfRange { k, min: 2, max: 8 });
    }
    if n < k {
        return Err(Error::InstanceTooSmall { n, k, need: k });
    }
    // reconnections that close the canonical 2k-cycle with every other
    // edge removed; on any tour the same matchings stay Hamiltonian
    let canon: Vec<(usize, usize)> = (0..2 * k).map(|i| (i, (i + 1) % (2 * k))).collect();
    let canon_removed: Vec<usize> = (0..k).map(|j| 2 * j).collect();
    let patterns: Vec<_> =
        matchings(2 * k).into_iter().filter(|m| is_hamiltonian(2 * k, &canon, &canon_removed, m)).collect();

    let needed = choose(n as u128, k as u128) * patterns.len() as u128;
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }

    let tour_edges: Vec<(usize, usize)> = (0..n).map(|e| (tour.left(e), tour.right(e))).collect();
    let point = |f: &[usize], p: usize| {
        let (l, r) = tour_edges[f[p / 2]];
        if p.is_multiple_of(2) {
            l
        } else {
            r
        }
    };
    let mut best: Option<(Weight, NaiveMove)> = None;
    let mut f: Vec<usize> = (0..k).collect();
    loop {
        let removed_w: Weight = f.iter().map(|&e| inst.weight(tour_edges[e].0, tour_edges[e].1)).sum();
        for m in &patterns {
            let added: Vec<(usize, usize)> = m.iter().map(|&(p, q)| (point(&f, p), point(&f, q))).collect();
            let gain = removed_w - added.iter().map(|&(u, v)| inst.weight(u, v)).sum::<Weight>();
            if best.as_ref().is_some_and(|(g, _)| gain <= *g) || !is_hamiltonian(n, &tour_edges, &f, &added) {
                continue;
            }
            let witness = NaiveMove {
                embedding: f.clone(),
                pattern: m.clone(),
                removed: f.iter().map(|&e| tour_edges[e]).collect(),
                added,
            };
            best = Some((gain, witness));
        }
        let Some(i) = (0..k).rev().find(|&i| f[i] < n - k + i) else { break };
        f[i] += 1;
        for j in i + 1..k {
            f[j] = f[j - 1] + 1;
        }
    }
    Ok(match best {
        Some((g, w)) => OracleResult { value: Some(g), witness: Some(w) },
        None => OracleResult { value: None, witness: None },
    })
}

/// Treewidth as the best elimination order over all permutations.
pub fn treewidth_bruteforce(g: &DepGraph) -> Result<usize> {
    let k = g.k();
    if k > MAX_BRUTEFORCE_TW {
        return Err(Error::KOutOfRange { k, min: 0, max: MAX_BRUTEFORCE_TW });
    }
    if k == 0 {
        return Ok(0);
    }
    let mut base = vec![vec![false; k]; k];
    for (u, v) in g.edges() {
        base[u][v] = true;
        base[v][u] = true;
    }
    let width_of = |order: &[usize]| {
        let mut adj = base.clone();
        let mut gone = vec![false; k];
        let mut width = 0;
        for &v in order {
            let nb: Vec<usize> = (0..k).filter(|&u| !gone[u] && adj[v][u]).collect();
            width = width.max(nb.len());
            for &a in &nb {
                for &b in &nb {
                    if a != b {
                        adj[a][b] = true;
                    }
                }
            }
            gone[v] = true;
        }
        width
    };
    // Heap's algorithm
    let mut perm: Vec<usize> = (0..k).collect();
    let mut c = vec![0; k];
    let mut best = width_of(&perm);
    let mut i = 0;
    while i < k {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(width_of(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(best)
}

/// Maximum gain of pattern `pattern` (0-based point pairs) over embeddings
/// with `f(i)` in bucket `b(i)` and `f(i) < f(i + 1)` whenever
/// `b(i) = b(i + 1)`.
pub fn enumerate_b_monotone_max(
    inst: &Instance,
    tour: &Tour,
    pattern: &[(usize, usize)],
    b: &[usize],
    part: &BucketPartition,
    budget: u128,
) -> Result<OracleResult<Vec<usize>>> {
    tour.check_for(inst)?;
    let k = b.len();
    if pattern.len() != k {
        return Err(Error::Inconsistent(format!("pattern has {} pairs for {k} slots", pattern.len())));
    }
    let ranges: Vec<_> = b.iter().map(|&j| part.range(j)).collect();
    let needed = ranges.iter().map(|r| r.len() as u128).product::<u128>();
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    if ranges.iter().any(|r| r.is_empty()) {
        return Ok(OracleResult { value: None, witness: None });
    }
    let vertex = |f: &[usize], p: usize| if p.is_multiple_of(2) { tour.left(f[p / 2]) } else { tour.right(f[p / 2]) };
    let mut f: Vec<usize> = ranges.iter().map(|r| r.start).collect();
    let mut best: Option<(Weight, Vec<usize>)> = None;
    loop {
        let ok = (1..k).all(|i| b[i] != b[i - 1] || f[i - 1] < f[i]);
        if ok {
            let mut g = 0;
            for &e in &f {
                g += inst.weight(tour.left(e), tour.right(e));
            }
            for &(p, q) in pattern {
                g -= inst.weight(vertex(&f, p), vertex(&f, q));
            }
            if best.as_ref().is_none_or(|(v, _)| g > *v) {
                best = Some((g, f.clone()));
            }
        }
        let Some(i) = (0..k).rev().find(|&i| f[i] + 1 < ranges[i].end) else { break };
        f[i] += 1;
        for j in i + 1..k {
            f[j] = ranges[j].start;
        }
    }
    Ok(match best {
        Some((g, w)) => OracleResult { value: Some(g), witness: Some(w) },
        None => OracleResult { value: None, witness: None },
    })
}

pub const MAX_TRIANGLE_N: usize = 200;

/// Some triangle with negative total weight, if any.
pub fn negative_triangle(g: &ReductionInput) -> Result<Option<[usize; 3]>> {
    let n = g.n();
    if n > MAX_TRIANGLE_N {
        return Err(Error::InvalidInstance(format!(
            "negative-triangle search is limited to n <= {MAX_TRIANGLE_N}, got {n}"
        )));
    }
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                if g.weight(a, b) + g.weight(b, c) + g.weight(a, c) < 0 {
                    return Ok(Some([a, b, c]));
                }
            }
        }
    }
    Ok(None)
}

pub fn has_negative_triangle(g: &ReductionInput) -> Result<bool> {
    negative_triangle(g).map(|t| t.is_some())
}
