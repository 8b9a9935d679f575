import itertools

import numpy as np
import pytest

from magflow.errors import InvalidInputError
from magflow.magnetic import (
    force_from_matrix,
    force_from_two_form,
    heisenberg_force,
    is_closed,
    is_derivation,
    kodaira_thurston_force,
    rank_two_check,
    two_form_matrix,
)
from magflow.nilalgebra import preset

E = np.eye(4)


def test_kt_force_columns():
    a, b, c, rho = 1.5, -2.0, 0.5, 3.0
    F = kodaira_thurston_force(a, b, c, rho)
    np.testing.assert_allclose(F.apply(E[2]), -a * E[0] - b * E[1])
    np.testing.assert_allclose(F.apply(E[0]), rho * E[1] + a * E[2] + c * E[3])


def test_zero_two_form_gives_zero_force():
    h = preset("h3r")
    F = force_from_two_form(np.zeros((4, 4)), h)
    np.testing.assert_array_equal(F.matrix, 0)


def test_rejects_non_antisymmetric():
    h = preset("h3r")
    om = np.zeros((4, 4))
    om[0, 1] = 1.0
    with pytest.raises(InvalidInputError):
        force_from_two_form(om, h)


def test_round_trip_with_general_gram():
    from magflow.nilalgebra import MetricNilpotentAlgebra

    g = np.array([[2.0, 0.5, 0, 0], [0.5, 1.0, 0, 0], [0, 0, 1.0, 0.3], [0, 0, 0.3, 2.0]])
    alg = MetricNilpotentAlgebra(4, [(0, 1, 2, 1)], gram=g)
    rng = np.random.default_rng(1)
    A = rng.normal(size=(4, 4))
    om = A - A.T
    F = force_from_two_form(om, alg)
    assert F.skew_residual() <= 1e-12
    again = force_from_matrix(F.matrix, alg)
    np.testing.assert_allclose(again.omega, om, atol=1e-12)
    for i, j in itertools.product(range(4), repeat=2):
        assert abs(alg.inner(F.apply(E[i]), E[j]) - om[i, j]) <= 1e-12


@pytest.mark.parametrize("params", list(itertools.product([0, 1, -2], repeat=4)))
def test_kt_family_closed_exactly(params):
    F = kodaira_thurston_force(*params)
    res = is_closed(F, F.algebra)
    assert res["closed"] and res["exact"]


def test_e34_not_closed_with_residual():
    h = preset("h3r")
    res = is_closed(two_form_matrix([(2, 3, 1)], 4), h)
    assert not res["closed"] and res["exact"]
    assert res["residuals"] == {(0, 1, 3): -1.0}


def test_any_form_closed_on_abelian():
    ab = preset("abelian", n=4)
    rng = np.random.default_rng(3)
    A = rng.normal(size=(4, 4))
    assert is_closed(A - A.T, ab)["closed"]


def test_derivation_examples():
    h = preset("heisenberg", n=2, k=1)
    assert is_derivation(heisenberg_force([1.0, 2.0], h), h)
    assert is_derivation(np.zeros((4, 4)), preset("h3r"))
    assert is_derivation(kodaira_thurston_force(0, 0, 0, 1.0), preset("h3r"))
    assert not is_derivation(kodaira_thurston_force(1.0, 0, 0, 0), preset("h3r"))


def test_rank_two_examples():
    h = preset("h3r")
    assert rank_two_check(kodaira_thurston_force(1, 1, 0, 1), h)
    assert not rank_two_check(kodaira_thurston_force(0, 1, 1, 0), h)
    assert rank_two_check(np.zeros((4, 4)), h)
    for b, c in itertools.product([0, 1, 3], repeat=2):
        assert rank_two_check(kodaira_thurston_force(2, b, c, 1), h) == (b * c == 0)
    with pytest.raises(InvalidInputError):
        rank_two_check(np.zeros((6, 6)), preset("heisenberg", n=2, k=1))


def test_heisenberg_force_properties():
    h = preset("heisenberg", n=2, k=2)
    F = heisenberg_force([1.5, -0.5], h)
    J = h.j_map(np.eye(7)[4])
    np.testing.assert_allclose(J @ F.matrix, F.matrix @ J, atol=1e-14)
    for idx in (4, 5, 6):
        np.testing.assert_array_equal(F.apply(np.eye(7)[idx]), 0)
    np.testing.assert_allclose(F.apply(np.eye(7)[0]), 1.5 * np.eye(7)[1])
    assert is_closed(F, h)["closed"]
    with pytest.raises(InvalidInputError):
        heisenberg_force([0, 0], h)
    with pytest.raises(InvalidInputError):
        heisenberg_force([1.0], h)


def test_exact_rho_form_is_d_of_e3_dual():
    # rho e12 = -rho d(e^3) with d e^3 (x, y) = -e^3([x, y])
    F = kodaira_thurston_force(0, 0, 0, 2)
    h = F.algebra
    e = np.eye(4)
    for i, j in itertools.product(range(4), repeat=2):
        d_e3 = -h.bracket(e[i], e[j])[2]
        assert F.omega[i, j] == pytest.approx(-2 * d_e3)


def test_kt_force_requires_h3r():
    with pytest.raises(InvalidInputError):
        kodaira_thurston_force(1, 0, 0, 1, preset("heisenberg", n=2, k=0))
