"""Smoke test for the pydecoupling extension. Exits non-zero on the first failure."""

import math
import random
import sys

import pydecoupling as pd


def close(a, b, tol):
    return max(abs(u - v) for u, v in zip(a, b)) <= tol


def test_prox():
    l1 = pd.ProxTerm.l1(3, 1.0)
    assert close(l1.prox([2.0, -0.5, -3.0], 1.0), [1.0, 0.0, -2.0], 1e-15)
    h = pd.ProxTerm.hyperplane([1.0, 1.0], 1.0)
    p = h.prox([1.0, 1.0], 0.3)
    assert close(p, [0.5, 0.5], 1e-15)
    assert h.value(p) == 0.0 and math.isinf(h.value([0.0, 0.0]))


def test_constrained_least_squares():
    rng = random.Random(0)
    d, n = 6, 20
    a = [[rng.gauss(0, 1) for _ in range(d)] for _ in range(n)]
    b = [rng.gauss(0, 1) for _ in range(n)]
    f = pd.SmoothTerm.least_squares(a, b, ridge=0.1)
    terms = [pd.ProxTerm.hyperplane([rng.gauss(0, 1) for _ in range(d)], 0.5) for _ in range(3)]
    problem = pd.Problem(f, terms, pd.ProxTerm.l1(d, 0.01))
    ref = pd.reference_solution(problem)
    trace, x, y = pd.solve(problem, "saga", max_iters=20000, stride=1000, seed=1, reference=ref)
    assert len(y) == 3
    gap = sum((u - v) ** 2 for u, v in zip(x, ref.x))
    assert gap < 1e-12, gap
    assert trace[-1]["dist_sq"] < 1e-12
    again, _, _ = pd.solve(problem, "saga", max_iters=20000, stride=1000, seed=1, reference=ref)
    assert [r["dist_sq"] for r in again] == [r["dist_sq"] for r in trace]


def test_builder_and_kaczmarz():
    problem = pd.Problem.from_builder("pd_system", 2, {"d": 20})
    assert problem.dim == 20 and len(problem.fingerprint()) == 64
    w = [[1.0, 0.0], [1.0, 1.0]]
    path = pd.kaczmarz(w, [1.0, 3.0], [0.0, 0.0], 200, seed=3)
    assert len(path) == 201 and close(path[-1], [1.0, 2.0], 1e-10)


def test_errors():
    try:
        pd.Problem.from_builder("pd_system", 0, {"dd": 3})
    except ValueError as e:
        assert "dd" in str(e)
    else:
        raise AssertionError("bad parameter accepted")


def test_check_suite():
    reports = pd.check("key_lemma")
    assert reports and all(passed for _, _, _, passed in reports), reports


def main():
    tests = [test_prox, test_constrained_least_squares, test_builder_and_kaczmarz, test_errors, test_check_suite]
    for t in tests:
        t()
        print(f"{t.__name__}: ok")
    print(f"{len(tests)} passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
