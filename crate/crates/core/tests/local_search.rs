use kopt_core::dpengine::{local_search, Engine, Policy};
use kopt_core::instance::{gen_random, gen_random_tour, Instance, Tour};
use kopt_core::oracle::{naive_best_move, DEFAULT_MOVE_BUDGET};
use kopt_core::Rational;

#[test]
fn crossed_square_converges_in_one_step() {
    let inst = Instance::from_coords(vec![(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)]).unwrap();
    let tour = Tour::from_one_based(&[1, 3, 2, 4]).unwrap();
    let (t, hist) = local_search(&inst, &tour, 2, Rational::from_integer(1), Policy::Best, 10).unwrap();
    assert_eq!(hist.len(), 1);
    assert_eq!(hist[0].gain, 8);
    assert_eq!(inst.tour_weight(&t), 40);
}

#[test]
fn local_optima_are_certified_by_the_oracle() {
    let engine = Engine::new();
    for seed in 0..4u64 {
        for k in 2..=4 {
            for policy in [Policy::Best, Policy::First] {
                let n = 12;
                let inst = gen_random(n, seed, 100).unwrap();
                let tour = gen_random_tour(n, seed).unwrap();
                let w0 = inst.tour_weight(&tour);
                let (t, hist) = engine.local_search(&inst, &tour, k, Rational::from_integer(1), policy, 1000).unwrap();
                let mut prev = w0;
                for s in &hist {
                    assert!(s.gain > 0);
                    assert_eq!(s.weight, prev - s.gain);
                    prev = s.weight;
                }
                assert_eq!(inst.tour_weight(&t), prev);
                assert!(hist.len() as i64 <= w0 - prev);
                let left = naive_best_move(&inst, &t, k, DEFAULT_MOVE_BUDGET).unwrap().value.unwrap();
                assert!(left <= 0, "seed={seed} k={k}");
            }
        }
    }
    assert!(engine.cached_decompositions() > 0);
}

#[test]
fn step_limit_is_respected() {
    let inst = gen_random(14, 9, 1000).unwrap();
    let tour = gen_random_tour(14, 9).unwrap();
    let (_, hist) = local_search(&inst, &tour, 3, Rational::new(3, 4), Policy::First, 2).unwrap();
    assert_eq!(hist.len(), 2);
}
