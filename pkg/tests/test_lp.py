import numpy as np
import pytest
from scipy.optimize import linprog

from dbcfstar import lp
from dbcfstar.errors import InfeasibleError


@pytest.mark.parametrize("seed", range(60))
def test_matches_scipy_on_random_feasible_lps(seed):
    rng = np.random.default_rng(seed)
    m, n = rng.integers(2, 5), rng.integers(5, 30)
    A = rng.normal(size=(m, n))
    x0 = rng.uniform(0, 1, size=n) * (rng.uniform(size=n) < 0.5)
    b = A @ x0
    c = rng.uniform(0.1, 2.0, size=n)
    ref = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    got = lp.solve(c, A, b)
    assert got.objective == pytest.approx(ref.fun, abs=1e-8)
    assert np.allclose(A @ got.x, b, atol=1e-8)
    assert np.all(got.x >= 0)
    assert len(got.support()) <= m


def test_infeasible():
    A = np.array([[1.0, 1.0]])
    with pytest.raises(InfeasibleError):
        lp.solve([1, 1], A, [-1.0])


def test_redundant_rows_dropped():
    A = np.array([[1.0, 1.0, 1.0], [2.0, 2.0, 2.0], [1.0, 0.0, -1.0]])
    b = np.array([1.0, 2.0, 0.0])
    res = lp.solve([1.0, 2.0, 3.0], A, b)
    assert res.objective == pytest.approx(2.0)


def test_warm_start_basis():
    A = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
    b = np.array([0.5, 0.5])
    res = lp.solve([1.0, 1.0, 0.5], A, b, basis=np.array([0, 1]))
    assert res.objective == pytest.approx(0.25)
    assert list(res.support()) == [2]


def test_degenerate_problem_terminates():
    # many tied columns at a degenerate vertex
    n = 40
    A = np.vstack([np.ones(n), np.linspace(0, 1, n)])
    b = np.array([1.0, 0.0])
    res = lp.solve(np.linspace(1, 2, n), A, b)
    assert res.objective == pytest.approx(1.0)
