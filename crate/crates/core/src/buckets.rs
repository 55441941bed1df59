//! Interval buckets over tour-edge indices and bucket assignments.

use num_bigint::BigUint;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::Rational;

/// Partition of edge indices `0..n` into consecutive intervals of equal
/// size `size`, the last possibly shorter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BucketPartition {
    n: usize,
    size: usize,
}

impl BucketPartition {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn count(&self) -> usize {
        self.n.div_ceil(self.size)
    }

    /// Half-open index range of bucket `j` (0-based).
    #[inline]
    pub fn range(&self, j: usize) -> std::ops::Range<usize> {
        let lo = j * self.size;
        lo..(lo + self.size).min(self.n)
    }

    #[inline]
    pub fn bucket_of(&self, edge: usize) -> usize {
        edge / self.size
    }
}

/// `min { m >= 1 : m >= n^alpha }`, exactly.
pub fn ceil_pow(n: usize, alpha: Rational) -> usize {
    let (p, q) = (*alpha.numer() as u32, *alpha.denom() as u32);
    if p == 0 || n <= 1 {
        return 1;
    }
    let target = BigUint::from(n).pow(p);
    let fits = |m: usize| BigUint::from(m).pow(q) >= target;
    let mut m = ((n as f64).powf(p as f64 / q as f64).ceil() as usize).clamp(1, n);
    while m > 1 && fits(m - 1) {
        m -= 1;
    }
    while !fits(m) {
        m += 1;
    }
    m
}

pub fn make_buckets(n: usize, alpha: Rational) -> Result<BucketPartition> {
    if alpha.is_negative() || alpha > Rational::one() {
        return Err(Error::AlphaOutOfRange(alpha.to_string()));
    }
    if n == 0 {
        return Err(Error::InvalidInstance("bucket partition over zero edges".into()));
    }
    Ok(BucketPartition { n, size: ceil_pow(n, alpha) })
}

/// A nondecreasing map from slots `0..k` to bucket ids.
pub type BucketAssignment = Vec<usize>;

/// All nondecreasing maps `[k] -> [n_b]` in lexicographic order.
pub struct Assignments {
    cur: Vec<usize>,
    nb: usize,
    fresh: bool,
}

impl Iterator for Assignments {
    type Item = BucketAssignment;

    fn next(&mut self) -> Option<BucketAssignment> {
        if self.fresh {
            self.fresh = false;
            return (self.nb > 0).then(|| self.cur.clone());
        }
        let i = self.cur.iter().rposition(|&b| b + 1 < self.nb)?;
        let v = self.cur[i] + 1;
        self.cur[i..].iter_mut().for_each(|b| *b = v);
        Some(self.cur.clone())
    }
}

pub fn enumerate_assignments(k: usize, nb: usize) -> Assignments {
    Assignments { cur: vec![0; k], nb, fresh: true }
}

/// `C(nb + k - 1, k)`.
pub fn assignment_count(k: usize, nb: usize) -> u128 {
    binomial((nb + k).saturating_sub(1) as u128, k as u128)
}

pub fn binomial(n: u128, r: u128) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    (0..r).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Order edges `{i, i+1}` with `b(i) = b(i+1)`, as a bitmask where bit `i`
/// stands for `{i, i+1}`.
pub fn order_edges(b: &[usize]) -> u32 {
    b.windows(2).enumerate().filter(|(_, w)| w[0] == w[1]).fold(0, |acc, (i, _)| acc | (1 << i))
}

/// Whether a partial embedding respects its buckets (every placed slot
/// lies in its bucket) and the in-bucket order (consecutive slots sharing
/// a bucket are strictly increasing when both are placed).
pub fn check_b_monotone(b: &[usize], part: &BucketPartition, f: &[Option<usize>]) -> bool {
    debug_assert_eq!(b.len(), f.len());
    let in_bucket = f.iter().zip(b).all(|(fi, &bi)| fi.is_none_or(|e| part.range(bi).contains(&e)));
    let ordered = (0..f.len().saturating_sub(1)).all(|i| match (f[i], f[i + 1]) {
        (Some(x), Some(y)) if b[i] == b[i + 1] => x < y,
        _ => true,
    });
    in_bucket && ordered
}

/// Parses `p/q`, `p` or a decimal like `0.75` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Inconsistent(format!("malformed rational `{s}`"));
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| bad())?;
        let q: i64 = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let digits = frac.len() as u32;
        if digits > 12 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let scale = 10i64.pow(digits);
        let whole: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let f: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let sign = if int.starts_with('-') { -1 } else { 1 };
        return Ok(Rational::new(whole * scale + sign * f, scale));
    }
    Ok(Rational::from_integer(s.parse().map_err(|_| bad())?))
}

/// Approximate `n^alpha` for reporting.
pub fn rational_to_f64(r: Rational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(p, q)
    }

    #[test]
    fn bucket_examples() {
        let one = make_buckets(100, r(1, 1)).unwrap();
        assert_eq!((one.size(), one.count()), (100, 1));
        let half = make_buckets(10, r(1, 2)).unwrap();
        assert_eq!(half.size(), 4);
        assert_eq!(half.count(), 3);
        assert_eq!((0..3).map(|j| half.range(j)).collect::<Vec<_>>(), vec![0..4, 4..8, 8..10]);
        let zero = make_buckets(7, r(0, 1)).unwrap();
        assert_eq!((zero.size(), zero.count()), (1, 7));
        assert!(make_buckets(10, r(3, 2)).is_err());
        assert!(make_buckets(10, r(-1, 2)).is_err());
    }

    #[test]
    fn exact_ceilings_on_perfect_powers() {
        assert_eq!(ceil_pow(16, r(1, 2)), 4);
        assert_eq!(ceil_pow(17, r(1, 2)), 5);
        assert_eq!(ceil_pow(81, r(3, 4)), 27);
        assert_eq!(ceil_pow(82, r(3, 4)), 28);
        assert_eq!(ceil_pow(1000, r(2, 3)), 100);
        assert_eq!(ceil_pow(1001, r(2, 3)), 101);
    }

    #[test]
    fn assignment_examples() {
        let a: Vec<_> = enumerate_assignments(2, 2).collect();
        assert_eq!(a, vec![vec![0, 0], vec![0, 1], vec![1, 1]]);
        assert_eq!(enumerate_assignments(3, 1).count(), 1);
        assert_eq!(enumerate_assignments(2, 3).count(), 6);
        for k in 1..=5 {
            for nb in 1..=6 {
                assert_eq!(enumerate_assignments(k, nb).count() as u128, assignment_count(k, nb));
            }
        }
    }

    #[test]
    fn order_edge_examples() {
        assert_eq!(order_edges(&[0, 0, 1]), 0b01);
        assert_eq!(order_edges(&[0, 1, 2]), 0);
        assert_eq!(order_edges(&[2, 2, 2, 2]), 0b111);
    }

    #[test]
    fn monotone_checks() {
        let part = make_buckets(12, r(1, 2)).unwrap();
        assert!(check_b_monotone(&[0, 0, 1], &part, &[None, None, None]));
        assert!(check_b_monotone(&[0, 0, 1], &part, &[Some(1), Some(2), Some(5)]));
        assert!(!check_b_monotone(&[0, 0, 1], &part, &[Some(2), Some(2), None]));
        assert!(!check_b_monotone(&[0, 0, 1], &part, &[Some(2), Some(1), None]));
        assert!(!check_b_monotone(&[0, 0, 1], &part, &[None, None, Some(1)]));
        // partial embeddings need not be monotone across buckets' gaps
        assert!(check_b_monotone(&[0, 1, 1], &part, &[Some(3), None, Some(4)]));
    }

    #[test]
    fn every_increasing_embedding_has_exactly_one_assignment() {
        for n in 4..=12 {
            let part = make_buckets(n, r(1, 2)).unwrap();
            for k in 1..=4.min(n) {
                let assignments: Vec<_> = enumerate_assignments(k, part.count()).collect();
                let mut f = (0..k).collect::<Vec<_>>();
                loop {
                    let fs: Vec<_> = f.iter().copied().map(Some).collect();
                    let hits: Vec<_> = assignments.iter().filter(|b| check_b_monotone(b, &part, &fs)).collect();
                    assert_eq!(hits.len(), 1, "n={n} f={f:?}");
                    let own: Vec<usize> = f.iter().map(|&e| part.bucket_of(e)).collect();
                    assert_eq!(hits[0], &own);
                    // next combination
                    let Some(i) = (0..k).rev().find(|&i| f[i] < n - k + i) else { break };
                    f[i] += 1;
                    for j in i + 1..k {
                        f[j] = f[j - 1] + 1;
                    }
                }
            }
        }
    }

    #[test]
    fn assignment_count_by_order_edges() {
        // at most nb^(k - |A|) assignments share an order-edge set A
        for nb in 1..=5usize {
            for k in 1..=5usize {
                let mut counts = std::collections::HashMap::new();
                for b in enumerate_assignments(k, nb) {
                    *counts.entry(order_edges(&b)).or_insert(0u64) += 1;
                }
                for (a, c) in counts {
                    assert!(c <= (nb as u64).pow((k - a.count_ones() as usize) as u32));
                }
            }
        }
    }

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("3/4").unwrap(), r(3, 4));
        assert_eq!(parse_rational("1").unwrap(), r(1, 1));
        assert_eq!(parse_rational("0.75").unwrap(), r(3, 4));
        assert!(parse_rational("3/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    proptest! {
        #[test]
        fn full_b_monotone_is_increasing(n in 4usize..30, k in 1usize..5, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let part = make_buckets(n, r(1, 2)).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let f: Vec<Option<usize>> = (0..k).map(|_| Some(rng.gen_range(0..n))).collect();
            let b: Vec<usize> = f.iter().map(|e| part.bucket_of(e.unwrap())).collect();
            if b.windows(2).all(|w| w[0] <= w[1]) && check_b_monotone(&b, &part, &f) {
                prop_assert!(f.windows(2).all(|w| w[0] < w[1]));
            }
        }

        #[test]
        fn ceil_pow_is_minimal(n in 1usize..5000, p in 0i64..=6, q in 1i64..=6) {
            prop_assume!(p <= q);
            let a = r(p, q);
            let s = ceil_pow(n, a);
            let (p, q) = (*a.numer() as u32, *a.denom() as u32);
            let target = BigUint::from(n).pow(p);
            prop_assert!(BigUint::from(s).pow(q) >= target);
            prop_assert!(s == 1 || BigUint::from(s - 1).pow(q) < target);
        }
    }
}
