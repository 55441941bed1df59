//! Running-time exponents of the bucketed DP and the bucket exponent that
//! minimizes them.
//!
//! For a pattern `M` and bucket exponent `a`, the order-edge sets `A` of
//! size `s` cost `n^((1 - a)(k - s) + a * t[s])`, where `t[s]` is the
//! largest `tw(I_M ∪ A) + 1` over `|A| = s`. Each `s` gives a line in `a`;
//! the exponent for `M` is the minimum over `a ∈ [0, 1]` of their upper
//! envelope, and `c(k)` is the maximum of that over all valid patterns.

use std::collections::{BTreeSet, HashMap};

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::decomp::{dependence_graph, treewidth_exact};
use crate::error::{Error, Result};
use crate::moves::{enumerate_matchings, interference_graph, is_valid_pattern, ConnectionPattern};
use crate::Rational;

/// Largest k whose profile enumeration is attempted at all.
pub const MAX_PROFILE_K: usize = 10;
/// Largest k computed without an explicit opt-in.
pub const MAX_DEFAULT_K: usize = 8;

/// `t[s] = max_{A ⊆ P_k, |A| = s} tw(I_M ∪ A) + 1` for `s = 0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct WidthProfile {
    pub k: usize,
    pub t: Vec<u32>,
}

impl WidthProfile {
    /// The lines `(intercept, slope)` with value `(k - s) + a (t[s] - k + s)`.
    fn lines(&self) -> impl Iterator<Item = (Rational, Rational)> + '_ {
        let k = self.k as i64;
        self.t.iter().enumerate().map(move |(s, &t)| {
            let s = s as i64;
            (Rational::from_integer(k - s), Rational::from_integer(t as i64 - k + s))
        })
    }

    /// Exponent of the DP when every bucket has size `n^alpha`.
    pub fn exponent_at(&self, alpha: Rational) -> Rational {
        self.lines().map(|(c, m)| c + m * alpha).max().expect("k >= 1")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AlphaSolution {
    #[serde(serialize_with = "ser_rational")]
    pub alpha: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub c: Rational,
}

fn ser_rational<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

fn profile_from_adjacency(k: usize, im: &crate::moves::InterferenceGraph) -> WidthProfile {
    let mut t = vec![0u32; k];
    for a in 0u32..(1 << (k - 1)) {
        let g = dependence_graph(im, a);
        let (w, _) = treewidth_exact(&g).expect("k is in range");
        let s = a.count_ones() as usize;
        t[s] = t[s].max(w as u32 + 1);
    }
    WidthProfile { k, t }
}

pub fn width_profile(m: &ConnectionPattern) -> Result<WidthProfile> {
    let k = m.k();
    if !(2..=MAX_PROFILE_K).contains(&k) {
        return Err(Error::KOutOfRange { k, min: 2, max: MAX_PROFILE_K });
    }
    Ok(profile_from_adjacency(k, &interference_graph(m)))
}

/// Minimizes the upper envelope of lines `c + m a` over `a ∈ [0, 1]`.
/// Among minimizers the largest `a` is returned: equal exponent with the
/// fewest buckets.
fn minimize_envelope(lines: &[(Rational, Rational)]) -> AlphaSolution {
    let zero = Rational::zero();
    let one = Rational::one();
    let mut candidates: BTreeSet<Rational> = [zero, one].into_iter().collect();
    for (i, &(c1, m1)) in lines.iter().enumerate() {
        for &(c2, m2) in &lines[i + 1..] {
            if m1 != m2 {
                let a = (c2 - c1) / (m1 - m2);
                if a >= zero && a <= one {
                    candidates.insert(a);
                }
            }
        }
    }
    let value = |a: Rational| lines.iter().map(|&(c, m)| c + m * a).max().expect("non-empty");
    let mut best: Option<AlphaSolution> = None;
    // descending, so strict improvement keeps the largest minimizer
    for a in candidates.into_iter().rev() {
        let v = value(a);
        if best.is_none_or(|b| v < b.c) {
            best = Some(AlphaSolution { alpha: a, c: v });
        }
    }
    best.expect("candidates contain 0 and 1")
}

pub fn optimal_alpha(p: &WidthProfile) -> AlphaSolution {
    minimize_envelope(&p.lines().collect::<Vec<_>>())
}

#[derive(Debug, Clone, Serialize)]
pub struct PatternExponent {
    /// Position among all perfect matchings in canonical order.
    pub matching_index: usize,
    pub pattern: Vec<[usize; 2]>,
    pub profile: Vec<u32>,
    pub optimum: AlphaSolution,
    /// Exponent of this pattern at the global alpha.
    #[serde(serialize_with = "ser_rational")]
    pub at_global_alpha: Rational,
}

#[derive(Debug, Clone, Serialize)]
pub struct CkReport {
    pub k: usize,
    /// `max_M min_a` of the per-pattern exponent.
    #[serde(serialize_with = "ser_rational")]
    pub c: Rational,
    /// The largest single alpha minimizing the exponent over all patterns.
    #[serde(serialize_with = "ser_rational")]
    pub alpha: Rational,
    /// Exponent reached with `alpha` for every pattern.
    #[serde(serialize_with = "ser_rational")]
    pub c_global: Rational,
    pub valid_patterns: usize,
    pub distinct_profiles: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_pattern: Option<Vec<PatternExponent>>,
}

/// Rough count of treewidth evaluations for `k`, for refusal messages.
pub fn ck_cost_estimate(k: usize) -> u128 {
    crate::moves::matching_count(k) * (1u128 << (k - 1))
}

/// Computes `c(k)`, the global alpha and optionally every pattern's own
/// optimum. `k > 8` requires `allow_large`.
pub fn c_of_k(k: usize, per_pattern: bool, allow_large: bool) -> Result<CkReport> {
    if !(2..=MAX_PROFILE_K).contains(&k) || (k > MAX_DEFAULT_K && !allow_large) {
        let max = if allow_large { MAX_PROFILE_K } else { MAX_DEFAULT_K };
        return Err(Error::KOutOfRange { k, min: 2, max });
    }
    // profiles depend only on the interference graph
    let mut graph_of: Vec<(usize, Option<ConnectionPattern>, usize)> = Vec::new();
    let mut graphs: HashMap<Vec<u32>, usize> = HashMap::new();
    let mut reps = Vec::new();
    for (idx, m) in enumerate_matchings(k)?.enumerate() {
        if !is_valid_pattern(&m) {
            continue;
        }
        let im = interference_graph(&m);
        let next = graphs.len();
        let gi = *graphs.entry(im.adjacency().to_vec()).or_insert_with(|| {
            reps.push(im);
            next
        });
        graph_of.push((idx, per_pattern.then_some(m), gi));
    }
    let valid = graph_of.len();
    let profiles: Vec<WidthProfile> = reps.par_iter().map(|im| profile_from_adjacency(k, im)).collect();
    let optima: Vec<AlphaSolution> = profiles.par_iter().map(optimal_alpha).collect();

    let c = optima.iter().map(|o| o.c).max().expect("valid patterns exist");
    let all_lines: BTreeSet<(Rational, Rational)> = profiles.iter().flat_map(|p| p.lines()).collect();
    let global = minimize_envelope(&all_lines.into_iter().collect::<Vec<_>>());

    let per_pattern = per_pattern.then(|| {
        graph_of
            .iter()
            .map(|(idx, m, gi)| PatternExponent {
                matching_index: *idx,
                pattern: m.as_ref().expect("kept when per_pattern").one_based_pairs(),
                profile: profiles[*gi].t.clone(),
                optimum: optima[*gi],
                at_global_alpha: profiles[*gi].exponent_at(global.alpha),
            })
            .collect()
    });
    Ok(CkReport {
        k,
        c,
        alpha: global.alpha,
        c_global: global.c,
        valid_patterns: valid,
        distinct_profiles: profiles.len(),
        per_pattern,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(p, q)
    }

    #[test]
    fn k2_profiles() {
        let two_opt = ConnectionPattern::from_one_based(2, &[(1, 3), (2, 4)]).unwrap();
        assert_eq!(width_profile(&two_opt).unwrap().t, vec![2, 2]);
        let id = ConnectionPattern::identity(2);
        assert_eq!(width_profile(&id).unwrap().t, vec![1, 2]);
    }

    #[test]
    fn degenerate_profile_gives_single_bucket() {
        // every alpha yields c = k; the tie goes to one bucket
        let p = WidthProfile { k: 5, t: vec![5; 5] };
        assert_eq!(optimal_alpha(&p), AlphaSolution { alpha: r(1, 1), c: r(5, 1) });
        assert_eq!(p.exponent_at(r(0, 1)), r(5, 1));
    }

    #[test]
    fn flat_envelope_prefers_larger_alpha() {
        // 6 - 3a and 1 + 4a: c = 4 on [2/3, 3/4]
        let sol = minimize_envelope(&[(r(6, 1), r(-3, 1)), (r(4, 1), r(0, 1)), (r(1, 1), r(4, 1))]);
        assert_eq!(sol, AlphaSolution { alpha: r(3, 4), c: r(4, 1) });
    }

    #[test]
    fn envelope_of_two_lines() {
        // 4 - a and 1 + 3a meet at a = 3/4
        let sol = minimize_envelope(&[(r(4, 1), r(-1, 1)), (r(1, 1), r(3, 1))]);
        assert_eq!(sol, AlphaSolution { alpha: r(3, 4), c: r(13, 4) });
    }

    #[test]
    fn k5_profiles_bounded() {
        for m in crate::moves::valid_patterns(5).unwrap() {
            let p = width_profile(&m).unwrap();
            assert!(p.t.iter().all(|&t| (1..=4).contains(&t)), "{m:?}: {:?}", p.t);
            assert!(p.t[0] <= 3 && p.t[1] <= 3, "{m:?}: {:?}", p.t);
            assert!(p.t.windows(2).all(|w| w[0] <= w[1]), "{m:?}: {:?}", p.t);
        }
    }

    #[test]
    fn small_k_sanity() {
        for k in 2..=5 {
            let rep = c_of_k(k, true, false).unwrap();
            // never worse than the plain n^k search or a single bucket
            assert!(rep.c <= Rational::from_integer(k as i64));
            let pp = rep.per_pattern.as_ref().unwrap();
            let single = pp.iter().map(|p| Rational::from_integer(*p.profile.last().unwrap() as i64)).max().unwrap();
            assert!(rep.c <= single);
            for p in pp {
                assert!(p.optimum.c <= p.at_global_alpha);
            }
            assert_eq!(pp.iter().map(|p| p.at_global_alpha).max().unwrap(), rep.c_global);
        }
        assert!(c_of_k(2, false, false).unwrap().c <= r(2, 1));
        assert!(c_of_k(9, false, false).is_err());
        assert!(c_of_k(11, false, true).is_err());
    }
}
