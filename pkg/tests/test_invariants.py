import numpy as np
import pytest
import sympy as sp

import oracle
from magflow.errors import InvalidInputError, MismatchedForceError
from magflow.flow import PhaseState, integrate
from magflow.invariants import (
    Energy,
    LeftTensorIntegral,
    MagneticKillingIntegral,
    bump_sine,
    heisenberg_fj,
    heisenberg_integrals,
    kt_integrals,
    kt_invariants_b0,
    kt_invariants_c0,
)
from magflow.magnetic import heisenberg_force, kodaira_thurston_force
from magflow.nilalgebra import preset
from magflow.tensors import SymTensor

E4 = np.eye(4)


def test_energy_examples():
    h = preset("h3r")
    En = Energy(h)
    assert En(np.zeros(4), E4[0] + E4[1]) == pytest.approx(2.0)
    v = np.array([0.3, 1.0, -2.0, 0.5])
    assert En(np.zeros(4), 3 * v) == pytest.approx(9 * En(np.zeros(4), v))


def test_killing_integral_matches_path_integral_oracle():
    rng = np.random.default_rng(0)
    W = rng.uniform(-2, 2, (20, 4))
    V = rng.normal(size=(20, 4))
    Fs, _ = oracle.kt_force_matrix(oracle.a, oracle.b, oracle.c, oracle.rho)
    for params in [(1, 0, 2, 1), (2, -1, 0, 0.5), (0, 3, 1, -2)]:
        F = kodaira_thurston_force(*params)
        subs = dict(zip((oracle.a, oracle.b, oracle.c, oracle.rho), params))
        for xi in [E4[0], E4[1], E4[2], E4[3], [1, -2, 0.5, 3]]:
            expr = oracle.killing_integral_by_path([sp.nsimplify(x) for x in xi], Fs)
            ref = oracle.lambdify_state(expr, subs)
            np.testing.assert_allclose(MagneticKillingIntegral(xi, F)(W, V), ref(W, V), atol=1e-12)


def test_killing_integral_examples():
    W = np.array([0.3, -1.0, 2.0, 0.7])
    V = np.array([1.0, 2.0, -0.5, 0.4])
    F = kodaira_thurston_force(0, 0, 1.5, 2.0)
    assert MagneticKillingIntegral(E4[2], F)(W, V) == pytest.approx(V[2])
    F = kodaira_thurston_force(1.0, 2.0, 1.5, 2.0)
    assert MagneticKillingIntegral(E4[3], F)(W, V) == pytest.approx(V[3] - 1.5 * W[0])
    F = kodaira_thurston_force(2, 0, 0, 1)
    assert MagneticKillingIntegral(E4[1], F)(E4[0], E4[1] + E4[2]) == pytest.approx(0.0, abs=1e-15)


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(1)
    W = rng.uniform(-2, 2, (10, 4))
    V = rng.normal(size=(10, 4))
    F = kodaira_thurston_force(1.5, 0, 0.5, -1)
    Fc = kodaira_thurston_force(0.5, 2, 0, 1)
    ints = (
        [Energy(F.algebra), MagneticKillingIntegral(rng.normal(size=4), F)]
        + list(kt_invariants_b0(F).values())
        + list(kt_invariants_c0(Fc).values())
        + list(kt_invariants_b0(kodaira_thurston_force(0, 0, 1, 1)).values())
    )
    s = 1e-6
    for h in ints:
        gW, gV = h.gradient(W, V)
        for i in range(4):
            d = np.zeros(4)
            d[i] = s
            fdW = (h(W + d, V) - h(W - d, V)) / (2 * s)
            fdV = (h(W, V + d) - h(W, V - d)) / (2 * s)
            np.testing.assert_allclose(gW[:, i], fdW, atol=1e-6, err_msg=h.name)
            np.testing.assert_allclose(gV[:, i], fdV, atol=1e-6, err_msg=h.name)


def test_left_tensor_examples():
    h5 = preset("heisenberg", n=2, k=1)
    S1 = SymTensor.monomial(h5, [0, 0]) + SymTensor.monomial(h5, [1, 1])
    v = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
    assert LeftTensorIntegral(S1)(np.zeros(6), v) == pytest.approx(5.0)
    ints = heisenberg_integrals(heisenberg_force([1.0, 1.0], h5))
    assert ints["Z1"](np.zeros(6), v) == pytest.approx(6.0)
    h = preset("h3r")
    vv = np.array([0.5, 1.0, -2.0, 0.1])
    assert LeftTensorIntegral(SymTensor.metric(h))(np.zeros(4), vv) == pytest.approx(Energy(h)(np.zeros(4), vv))


def test_kt_b0_examples():
    a, c, rho = 2.0, 3.0, 1.0
    F = kodaira_thurston_force(a, 0, c, rho)
    f = kt_invariants_b0(F)
    I = kt_integrals(F)
    rng = np.random.default_rng(2)
    W, V = rng.uniform(-2, 2, (30, 4)), rng.normal(size=(30, 4))
    gW = W + 2 * E4[0] + 0.5 * F.algebra.bracket(2 * E4[0], W)
    np.testing.assert_allclose(I["I3"](gW, V), I["I3"](W, V) - 2 * a)
    np.testing.assert_allclose(f["f3"](gW, V), f["f3"](W, V), atol=1e-12)
    np.testing.assert_allclose(f["f4"](gW, V), f["f4"](W, V), atol=1e-12)
    np.testing.assert_allclose(f["f2"](W, V), I["I2"](W, V) - (I["I3"](W, V) + rho) ** 2 / (2 * a))
    # a = 0: f2 vanishes on the level I3 = -rho
    F0 = kodaira_thurston_force(0, 0, 1, 1)
    assert kt_invariants_b0(F0)["f2"](np.zeros(4), [0.3, 0.5, -1.0, 0.0]) == 0.0
    with pytest.raises(InvalidInputError):
        kt_invariants_b0(kodaira_thurston_force(1, 1, 0, 1))


def test_kt_c0_examples():
    a, b, rho = 1.0, 2.0, 0.5
    F = kodaira_thurston_force(a, b, 0, rho)
    g = kt_invariants_c0(F)
    I = kt_integrals(F)
    rng = np.random.default_rng(3)
    W, V = rng.uniform(-2, 2, (30, 4)), rng.normal(size=(30, 4))
    lam = np.array([0.7, -1.3, 0.4, 0.2])
    gW = F.algebra.bch_multiply(lam, W)
    s = a * lam[0] + b * lam[1]
    lhs = b * I["I1"](gW, V) - a * I["I2"](gW, V)
    rhs = b * I["I1"](W, V) - a * I["I2"](W, V) + (I["I3"](W, V) + rho) * s - 0.5 * s**2
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)
    # g3 sine values
    F1 = kodaira_thurston_force(0, 1, 0, 0)
    g3 = kt_invariants_c0(F1)["g3"]
    assert g3(np.zeros(4), [0, 0, 0.5, 0]) == pytest.approx(0.0, abs=1e-15)
    assert g3(np.zeros(4), [0, 0, 0.25, 0]) == pytest.approx(1.0)
    with pytest.raises(InvalidInputError):
        kt_invariants_c0(kodaira_thurston_force(1, 0, 0, 1))


def test_heisenberg_fj_examples():
    h = preset("heisenberg", n=2, k=1)
    F = heisenberg_force([1.0, -0.5], h)
    ints = heisenberg_integrals(F)
    fj = heisenberg_fj(F)
    rng = np.random.default_rng(4)
    W, V = rng.uniform(-2, 2, (30, 6)), rng.normal(size=(30, 6))
    np.testing.assert_allclose(ints["I3"](W, V), V[:, 4])
    lam = 2 * rng.integers(-2, 3, size=6).astype(float)
    lam[5] = 1.0
    gW = h.bch_multiply(lam, W)
    for j, eta in ((1, 1.0), (2, -0.5)):
        np.testing.assert_allclose(
            ints[f"I{j}"](gW, V), ints[f"I{j}"](W, V) + lam[2 * j - 1] * (V[:, 4] + eta), atol=1e-12
        )
        np.testing.assert_allclose(fj[f"f{j}"](gW, V), fj[f"f{j}"](W, V), atol=1e-12)
    assert fj["f2"](np.zeros(6), [1, 1, 1, 1, 0.5, 0]) == 0.0


def test_bump_sine_limit_is_continuous():
    c = np.array([1e-300, 1e-3, 0.02, 0.05, 0.2])
    val, dx, dc = bump_sine(3.0, c)
    assert np.all(np.isfinite(val)) and np.all(np.isfinite(dc))
    assert val[0] == 0 and abs(val[3]) < 1e-150


def test_mismatched_force_refused():
    F = kodaira_thurston_force(1, 0, 1, 1)
    f2 = kt_invariants_b0(F)["f2"]
    other = kodaira_thurston_force(2, 0, 1, 1)
    with pytest.raises(MismatchedForceError):
        integrate(PhaseState(np.zeros(4), E4[0]), other, 0.1, 0.01, integrals=[f2])
    with pytest.raises(MismatchedForceError):
        MagneticKillingIntegral(E4[0], F).check_force(other)


def test_catalog_conserved_along_trajectories():
    F = kodaira_thurston_force(1, 0, 2, 1)
    ints = [Energy(F.algebra)] + list(kt_integrals(F).values()) + list(kt_invariants_b0(F).values())
    tr = integrate(PhaseState([0.5, -1, 0.2, 1], [2.0, -1.0, 0.5, 1.5]), F, 10.0, 1e-3, integrals=ints,
                   record_every=10)
    for h in ints:
        assert tr.drift(h.name) <= 1e-8, h.name
