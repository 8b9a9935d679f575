from fractions import Fraction

import numpy as np
import pytest

from magflow.errors import InvalidInputError
from magflow.invariants import (
    Energy,
    MagneticKillingIntegral,
    heisenberg_fj,
    kt_integrals,
    kt_invariants_b0,
    kt_invariants_c0,
    lattice_family,
)
from magflow.lattice import (
    LogLattice,
    f_X,
    gamma_action,
    invariance_suite,
    is_lattice,
    lattice_preset,
    pullback_f_X,
    pullback_integral,
    word_elements,
)
from magflow.magnetic import heisenberg_force, kodaira_thurston_force
from magflow.nilalgebra import preset

E4 = np.eye(4)


def states(seed, count=50, n=4):
    rng = np.random.default_rng(seed)
    return rng.uniform(-2, 2, (count, n)), rng.normal(size=(count, n))


def test_closure_examples():
    h = preset("h3r")
    assert is_lattice(lattice_preset("kt_b0", h)) == {"holds": True, "exact": True, "witness": None}
    res = is_lattice(LogLattice(np.eye(4).astype(int).tolist(), h))
    assert not res["holds"] and res["witness"] == (0, 1)
    assert is_lattice(LogLattice([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, Fraction(1, 2), 0], [0, 0, 0, 1]], h))["holds"]
    for a, b in [(1, 1), (2, 3), (0, 2), (Fraction(1, 2), 5)]:
        assert is_lattice(lattice_preset("kt_c0", h, a=a, b=b))["holds"]
    h5 = preset("heisenberg", n=2, k=2)
    assert is_lattice(lattice_preset("heisenberg", h5))["holds"]


def test_float_generators_use_tolerance():
    h = preset("h3r")
    gens = np.diag([2.0, np.sqrt(2), np.sqrt(2), 1.0])
    res = is_lattice(LogLattice(gens, h))
    assert res["holds"] and not res["exact"]
    res = is_lattice(LogLattice(np.diag([np.sqrt(3), 1.0, 1.0, 1.0]), h))
    assert not res["holds"] and res["witness"] == (0, 1)


def test_rejects_bad_generators():
    h = preset("h3r")
    with pytest.raises(InvalidInputError):
        LogLattice([[1, 0, 0, 0], [2, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]], h)
    with pytest.raises(InvalidInputError):
        LogLattice(np.eye(3), h)
    with pytest.raises(InvalidInputError):
        lattice_preset("kt_c0", h, a=1, b=0)
    with pytest.raises(InvalidInputError):
        lattice_preset("heisenberg", h)


def test_action_is_a_group_action():
    h = preset("h3r")
    rng = np.random.default_rng(0)
    W, V = states(1)
    l1, l2 = rng.normal(size=(2, 4))
    W1, _ = gamma_action(l2, W, V, h)
    W12, _ = gamma_action(l1, W1, V, h)
    Wc, Vc = gamma_action(h.bch_multiply(l1, l2), W, V, h)
    np.testing.assert_allclose(W12, Wc, atol=1e-12)
    np.testing.assert_array_equal(Vc, V)
    np.testing.assert_allclose(gamma_action(np.zeros(4), W, V, h)[0], W)


def test_energy_is_invariant():
    h = preset("h3r")
    W, V = states(2)
    res = invariance_suite([Energy(h)], lattice_preset("kt_b0", h), W, V, np.random.default_rng(3))
    assert res["passes"] and res["residuals"]["E"] == 0.0
    assert len(res["elements"]) == 9


def test_f_X_pullback_examples():
    h = preset("h3r")
    W, _ = states(4)
    g = pullback_f_X(E4[2], E4[0], h)
    np.testing.assert_allclose(g.coef, E4[2] + 0.5 * E4[1])
    assert g.const == 0.0
    rng = np.random.default_rng(5)
    for _ in range(5):
        X, lam = rng.normal(size=(2, 4))
        Wg, _ = gamma_action(lam, W, W, h)
        np.testing.assert_allclose(pullback_f_X(X, lam, h)(W), f_X(X, h)(Wg), atol=1e-12)
    # only the center sees the twist
    lam = rng.normal(size=4)
    np.testing.assert_allclose(pullback_f_X(E4[0], lam, h).coef, E4[0])


def test_integral_pullback_matches_brute_force():
    F = kodaira_thurston_force(1, 2, -1, 0.5)
    W, V = states(6)
    rng = np.random.default_rng(7)
    for _ in range(5):
        xi, lam = rng.normal(size=(2, 4))
        new, const = pullback_integral(xi, lam, F)
        Wg, Vg = gamma_action(lam, W, V, F.algebra)
        np.testing.assert_allclose(
            MagneticKillingIntegral(xi, F)(Wg, Vg), MagneticKillingIntegral(new, F)(W, V) + const, atol=1e-12
        )


def test_kt_families_are_invariant():
    rng = np.random.default_rng(8)
    W, V = states(9)
    for a, c, rho in [(1, 1, 1), (2, 0, 0), (0, 2, 1), (0, 0, 0)]:
        F = kodaira_thurston_force(a, 0, c, rho)
        res = invariance_suite(list(kt_invariants_b0(F).values()), lattice_preset("kt_b0", F.algebra), W, V, rng)
        assert res["passes"], res
    for a, b, rho in [(1, 1, 1), (2, 1, 0), (0, 2, 1)]:
        F = kodaira_thurston_force(a, b, 0, rho)
        lat = lattice_preset("kt_c0", F.algebra, a=a, b=b)
        res = invariance_suite(list(kt_invariants_c0(F).values()), lat, W, V, rng)
        assert res["passes"], res


def test_raw_integral_is_not_invariant():
    F = kodaira_thurston_force(1, 0, 1, 1)
    W, V = states(10)
    res = invariance_suite([kt_integrals(F)["I2"]], lattice_preset("kt_b0", F.algebra), W, V,
                           np.random.default_rng(0))
    assert not res["passes"] and res["residuals"]["I2"] > 1


def test_heisenberg_family_invariant():
    h = preset("heisenberg", n=2, k=1)
    F = heisenberg_force([1.0, -0.5], h)
    W, V = states(11, 50, 6)
    fam = list(heisenberg_fj(F).values())
    res = invariance_suite(fam, lattice_preset("heisenberg", h), W, V, np.random.default_rng(1))
    assert res["passes"], res
    res = invariance_suite(lattice_family(F), lattice_preset("heisenberg", h), W, V, np.random.default_rng(1))
    assert res["passes"], res


def test_word_elements_lie_in_lattice():
    h = preset("h3r")
    lat = lattice_preset("kt_b0", h)
    rng = np.random.default_rng(12)
    for _ in range(10):
        w, label = word_elements(lat, rng)
        coords = lat.coordinates(w)
        np.testing.assert_allclose(coords, np.round(coords), atol=1e-12)
        assert label.count("g") == 3
