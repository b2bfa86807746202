import numpy as np
import pytest

from dbcfstar import channels as ch
from dbcfstar.encoding import (
    CombinerSpec,
    analytic_rates,
    build_independent_encoding,
    combiner_joint,
    empirical_rates,
    induced_joint,
    report_json,
    simulate_joint,
    simulation_report,
    strategy_joint,
)
from dbcfstar.errors import InvalidInputError

from .conftest import hb


def test_binary_or_table():
    c = CombinerSpec.binary_or([0.5, 0.5], [0.5, 0.5])
    assert c.table.tolist() == [[0, 0], [0, 1]]
    # same as the multiplicative table for n = 1
    m = CombinerSpec.mult(ch.MultTable.prime_field(2), [0.5, 0.5], [0.5, 0.5])
    assert np.array_equal(c.table, m.table)


def test_permutation_row_check():
    with pytest.raises(InvalidInputError, match="bijection"):
        CombinerSpec.permutation([[0, 0], [1, 0]], [0.5, 0.5])


def test_bsc_superposition_rates(bsc_model):
    # X2 uniform, X1 ~ Bern(p): R1 = h(a1 * p) - h(a1), R2 = ln2 - h(a2 * p)
    p = 0.3
    comb = CombinerSpec.group_add(ch.GroupTable.cyclic(2), [1 - p, p], [0.5, 0.5])
    R1, R2 = analytic_rates(bsc_model, comb)

    def conv(a, x):
        return a * (1 - x) + (1 - a) * x

    assert R1 == pytest.approx(hb(conv(0.1, p)) - hb(0.1), abs=1e-12)
    assert R2 == pytest.approx(np.log(2) - hb(conv(0.2, p)), abs=1e-12)


def test_z_natural_encoding_rates(z_model):
    # index 1 (noisy) appears only when both inputs are 1
    a, b = 0.6, 0.7
    comb = CombinerSpec.binary_or([1 - a, a], [1 - b, b])
    J = combiner_joint(comb)
    assert J.sum(axis=0)[1] == pytest.approx(a * b)
    R1, R2 = analytic_rates(z_model, comb)
    # given X2 = 1, X ~ Bern(a) into Z(0.1); given X2 = 0, X = 0
    assert R1 == pytest.approx(b * (hb(0.9 * a) - a * hb(0.9)), abs=1e-12)
    assert R2 == pytest.approx(hb(0.6 * a * b) - b * hb(0.6 * a), abs=1e-12)


def test_simulation_close_and_reproducible(bsc_model):
    comb = CombinerSpec.permutation([[0, 1], [1, 0]], [0.7, 0.3])
    counts = simulate_joint(bsc_model, comb, 300_000, seed=3)
    assert counts.sum() == 300_000
    emp = empirical_rates(counts)
    ana = analytic_rates(bsc_model, comb)
    assert np.allclose(emp, ana, atol=0.01)
    again = simulate_joint(bsc_model, comb, 300_000, seed=3, threads=2)
    assert np.array_equal(counts, again)
    other = simulate_joint(bsc_model, comb, 300_000, seed=4)
    assert not np.array_equal(counts, other)


def test_report_is_byte_stable(z3_model):
    comb = CombinerSpec.group_add(ch.GroupTable.cyclic(3), [0.5, 0.3, 0.2], [1 / 3] * 3)
    a = report_json(simulation_report(z3_model, comb, 50_000, seed=1))
    b = report_json(simulation_report(z3_model, comb, 50_000, seed=1))
    assert a == b


def test_seed_validation(bsc_model):
    comb = CombinerSpec.permutation([[0, 1], [1, 0]], [0.5, 0.5])
    with pytest.raises(InvalidInputError):
        simulate_joint(bsc_model, comb, 10, seed=1.5)
    with pytest.raises(InvalidInputError):
        simulate_joint(bsc_model, comb, 0, seed=1)


def test_independent_encoding_zero_rows():
    J = np.array([[0.2, 0.3, 0.0], [0.0, 0.0, 0.0], [0.1, 0.1, 0.3]])
    enc = build_independent_encoding(J)
    assert enc.filled_rows == (1,)
    assert np.abs(induced_joint(enc) - J).max() <= 1e-15
    assert enc.p_V.sum() == pytest.approx(1.0)


def test_strategy_joint_round_trip():
    w = np.array([0.25, 0.75])
    cols = np.array([[0.4, 0.2], [0.6, 0.8]])
    J = strategy_joint(w, cols)
    enc = build_independent_encoding(J)
    assert np.allclose(enc.conditionals, cols.T)
