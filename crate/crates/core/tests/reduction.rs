use kopt_core::dpengine::{best_move, Policy};
use kopt_core::instance::{gen_negative_triangle_reduction, ReductionInput};
use kopt_core::oracle::{has_negative_triangle, naive_best_move, negative_triangle, DEFAULT_MOVE_BUDGET};
use kopt_core::{Error, Rational};

#[test]
fn negative_triangle_gives_improving_four_move() {
    let g = ReductionInput::from_upper_triangle(3, &[1, 1, -3]).unwrap();
    assert_eq!(negative_triangle(&g).unwrap(), Some([0, 1, 2]));
    let (inst, tour) = gen_negative_triangle_reduction(&g, false).unwrap();
    assert_eq!((inst.n(), tour.len()), (12, 12));
    let naive = naive_best_move(&inst, &tour, 4, DEFAULT_MOVE_BUDGET).unwrap();
    assert!(naive.value.unwrap() > 0);
    let dp = best_move(&inst, &tour, 4, Rational::from_integer(1), Policy::Best).unwrap();
    assert_eq!(dp.gain, naive.value);
}

#[test]
fn positive_weights_give_no_improvement() {
    for nonnegative in [false, true] {
        let g = ReductionInput::from_upper_triangle(4, &[1, 2, 3, 1, 2, 3]).unwrap();
        assert!(!has_negative_triangle(&g).unwrap());
        let (inst, tour) = gen_negative_triangle_reduction(&g, nonnegative).unwrap();
        if nonnegative {
            assert!(inst.matrix().iter().all(|&w| w >= 0));
        }
        let naive = naive_best_move(&inst, &tour, 4, DEFAULT_MOVE_BUDGET).unwrap();
        assert!(naive.value.unwrap() <= 0);
        let dp = best_move(&inst, &tour, 4, Rational::new(2, 3), Policy::Best).unwrap();
        assert_eq!(dp.gain, naive.value);
    }
}

#[test]
fn round_trip_on_random_inputs() {
    for seed in 0..12u64 {
        let n = 3 + (seed as usize % 3);
        let g = ReductionInput::random(n, seed, 4).unwrap();
        let (inst, tour) = gen_negative_triangle_reduction(&g, seed % 2 == 0).unwrap();
        let naive = naive_best_move(&inst, &tour, 4, DEFAULT_MOVE_BUDGET).unwrap().value.unwrap();
        assert_eq!(naive > 0, has_negative_triangle(&g).unwrap(), "seed={seed}");
    }
}

#[test]
fn oversized_weights_are_refused() {
    let g = ReductionInput::from_upper_triangle(3, &[1, 1, -(1 << 35)]).unwrap();
    assert!(matches!(gen_negative_triangle_reduction(&g, false), Err(Error::WeightOverflow(_))));
}
