"""Smoke test for the `kopt` extension module.

Build it first with `cargo build -p kopt-py --release`; the script picks up
target/{release,debug}/libkopt.so when `kopt` is not importable.
"""

import os
import shutil
import sys
import tempfile


def load():
    try:
        import kopt
        return kopt
    except ImportError:
        pass
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    for profile in ("release", "debug"):
        lib = os.path.join(root, "target", profile, "libkopt.so")
        if os.path.exists(lib):
            tmp = tempfile.mkdtemp()
            shutil.copy(lib, os.path.join(tmp, "kopt.so"))
            sys.path.insert(0, tmp)
            import kopt
            return kopt
    sys.exit("kopt not built: run `cargo build -p kopt-py --release`")


def main():
    kopt = load()

    sq = kopt.Instance.from_coords([(0, 0), (10, 0), (10, 10), (0, 10)])
    crossed = kopt.Tour([1, 3, 2, 4])
    assert sq.tour_weight(crossed) == 48
    mv = kopt.best_move(sq, crossed, 2)
    assert mv["gain"] == 8 and mv["improving"], mv
    assert sq.tour_weight(mv["tour"]) == 40

    inst = kopt.Instance.random(11, seed=3)
    tour = kopt.Tour.random(11, seed=3)
    for k in (2, 3, 4):
        dp = kopt.best_move(inst, tour, k, alpha="2/3")
        naive = kopt.naive_best_move(inst, tour, k)
        assert dp["gain"] == naive["gain"], (k, dp, naive)

    final, steps = kopt.local_search(inst, tour, 3)
    weights = [w for _, w in steps]
    assert all(b < a for a, b in zip(weights, weights[1:]))
    assert kopt.naive_best_move(inst, final, 3)["gain"] <= 0

    assert kopt.c_of_k(5) == {"k": 5, "c": "11/3", "alpha": "2/3", "valid_patterns": 384}
    assert kopt.treewidth(5, [(i, j) for i in range(1, 6) for j in range(i + 1, 6)]) == 4
    assert len(kopt.patterns(4)) == 48

    red, red_tour = kopt.neg_triangle_instance(3, [1, 1, -3])
    assert red.n == 12 and len(red_tour) == 12
    assert kopt.negative_triangle(3, [1, 1, -3]) == (1, 2, 3)
    assert kopt.best_move(red, red_tour, 4)["improving"]

    try:
        kopt.best_move(inst, tour, 3, alpha="3/2")
    except ValueError:
        pass
    else:
        raise AssertionError("alpha > 1 accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
