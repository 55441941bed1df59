use kopt_core::buckets::{check_b_monotone, enumerate_assignments, make_buckets, order_edges};
use kopt_core::decomp::{dependence_graph, nice_decomposition, NiceTreeDecomposition};
use kopt_core::dpengine::{dp_tables, solve_fixed};
use kopt_core::instance::{gen_random, gen_random_tour, Weight};
use kopt_core::moves::{gain_full, gain_partial, interference_graph, valid_patterns};
use kopt_core::oracle::{enumerate_b_monotone_max, DEFAULT_EMBEDDING_BUDGET};
use kopt_core::Rational;

fn subtree_slots(d: &NiceTreeDecomposition, t: usize) -> u32 {
    let node = &d.nodes[t];
    node.children.iter().fold(node.bag, |acc, &c| acc | subtree_slots(d, c))
}

/// Bucket exponents giving 1, 2, 3 and 4 buckets on 8 edges, and 1..3 on 10.
fn exponents(n: usize) -> Vec<Rational> {
    match n {
        8 => vec![Rational::from_integer(1), Rational::new(2, 3), Rational::new(1, 2), Rational::new(1, 3)],
        _ => vec![Rational::from_integer(1), Rational::new(2, 3), Rational::new(1, 2)],
    }
}

#[test]
fn every_table_entry_is_the_definitional_max() {
    let n = 7;
    for seed in 0..3u64 {
        let inst = gen_random(n, seed, 50).unwrap();
        let tour = gen_random_tour(n, seed).unwrap();
        for k in 2..=3 {
            for alpha in [Rational::from_integer(1), Rational::new(1, 2)] {
                let part = make_buckets(n, alpha).unwrap();
                for m in valid_patterns(k).unwrap() {
                    for b in enumerate_assignments(k, part.count()) {
                        let g = dependence_graph(&interference_graph(&m), order_edges(&b));
                        let d = nice_decomposition(&g).unwrap();
                        for table in dp_tables(&inst, &tour, &m, &b, &part, &d).unwrap() {
                            let below = subtree_slots(&d, table.node);
                            for (key, entry) in &table.entries {
                                let mut best: Option<Weight> = None;
                                // all extensions of key to the slots below the node
                                let free: Vec<usize> =
                                    (0..k).filter(|&s| below & (1 << s) != 0 && !table.bag.contains(&s)).collect();
                                let mut ext = vec![0usize; free.len()];
                                loop {
                                    let mut f = vec![None; k];
                                    for (s, &v) in table.bag.iter().zip(key) {
                                        f[*s] = Some(v);
                                    }
                                    for (s, &v) in free.iter().zip(&ext) {
                                        f[*s] = Some(part.range(b[*s]).start + v);
                                    }
                                    if check_b_monotone(&b, &part, &f) {
                                        let g = gain_partial(&inst, &tour, &m, &f);
                                        best = Some(best.map_or(g, |x: Weight| x.max(g)));
                                    }
                                    let Some(i) =
                                        (0..free.len()).rev().find(|&i| ext[i] + 1 < part.range(b[free[i]]).len())
                                    else {
                                        break;
                                    };
                                    ext[i] += 1;
                                    ext[i + 1..].iter_mut().for_each(|x| *x = 0);
                                }
                                assert_eq!(*entry, best, "m={m:?} b={b:?} node={} key={key:?}", table.node);
                            }
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn solve_fixed_matches_enumeration_up_to_k4() {
    for n in [8, 10] {
        let inst = gen_random(n, n as u64, 200).unwrap();
        let tour = gen_random_tour(n, 11).unwrap();
        for alpha in exponents(n) {
            let part = make_buckets(n, alpha).unwrap();
            for k in 2..=4 {
                for m in valid_patterns(k).unwrap() {
                    let pairs: Vec<_> = m.pairs().collect();
                    for b in enumerate_assignments(k, part.count()) {
                        let g = dependence_graph(&interference_graph(&m), order_edges(&b));
                        let d = nice_decomposition(&g).unwrap();
                        let dp = solve_fixed(&inst, &tour, &m, &b, &part, &d).unwrap();
                        let ex = enumerate_b_monotone_max(&inst, &tour, &pairs, &b, &part, DEFAULT_EMBEDDING_BUDGET)
                            .unwrap();
                        assert_eq!(dp.gain, ex.value, "n={n} m={m:?} b={b:?}");
                        if let Some(f) = &dp.embedding {
                            assert_eq!(gain_full(&inst, &tour, &m, f), dp.gain.unwrap());
                            // the enumeration keeps the first maximum in lexicographic order
                            assert_eq!(Some(f), ex.witness.as_ref());
                        }
                    }
                }
            }
        }
    }
}
