"""First integrals of magnetic flows, evaluated on batches of phase states.

Every integral maps ``(W, V)`` arrays of shape ``(..., n)`` to values of shape
``(...)`` and exposes ``gradient(W, V) -> (dW, dV)``, the coordinate partial
derivatives, so that frame differentials and Poisson brackets can use closed
forms instead of finite differences.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError, MismatchedForceError
from .magnetic import LorentzForce
from .nilalgebra import MetricNilpotentAlgebra
from .tensors import (
    SymTensor,
    _potential_quadratic,
    phi_gradient,
    phi_of_tensor,
)

# exp(-1/c^2) underflows to exactly 0.0 below this magnitude
_BUMP_CUTOFF = 0.03


class FirstIntegral:
    """Base class: a named smooth function on the phase space."""

    kind = "generic"

    def __init__(self, name: str, algebra: MetricNilpotentAlgebra, force: LorentzForce | None = None):
        self.name = name
        self.algebra = algebra
        self.force = force

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r})"

    def check_force(self, force: LorentzForce) -> None:
        """Refuse a force other than the one the integral was built for."""
        if self.force is not None and not self.force.same_as(force):
            raise MismatchedForceError(f"{self.name} was built for {self.force!r}, not {force!r}")

    def value(self, W, V):
        raise NotImplementedError

    def gradient(self, W, V):
        raise NotImplementedError

    def __call__(self, W, V):
        W = np.asarray(W, dtype=float)
        V = np.asarray(V, dtype=float)
        return self.value(W, V)

    def describe(self) -> dict:
        return {"name": self.name, "kind": self.kind}


class Energy(FirstIntegral):
    kind = "energy"

    def __init__(self, algebra, name="E"):
        super().__init__(name, algebra)

    def value(self, W, V):
        return self.algebra.inner(V, V)

    def gradient(self, W, V):
        V = np.asarray(V, dtype=float)
        W = np.broadcast_to(np.asarray(W, dtype=float), V.shape)
        return np.zeros_like(W), 2.0 * self.algebra.lower(V)


class MagneticKillingIntegral(FirstIntegral):
    """``I_xi(W, V) = <V, xi - [W, xi]> + f(W)`` with the Killing potential ``f``."""

    kind = "magnetic_killing"

    def __init__(self, xi, force: LorentzForce, name=None):
        algebra = force.algebra
        xi = np.array(xi, dtype=float)
        if xi.shape != (algebra.dim,):
            raise InvalidInputError(f"xi must have dimension {algebra.dim}")
        super().__init__(name or "I[" + ",".join(f"{x:g}" for x in xi) + "]", algebra, force)
        xi.setflags(write=False)
        self.xi = xi
        G = algebra.gram
        self._ad_xi = algebra.ad_matrix(xi)
        self._fxi_low = G @ force.matrix @ xi
        Q = _potential_quadratic(xi, force)
        self._q = 0.5 * (Q + Q.T)

    def potential(self, W):
        W = np.asarray(W, dtype=float)
        return W @ self._fxi_low - 0.5 * np.einsum("...i,ij,...j->...", W, self._q, W)

    def value(self, W, V):
        xibar = self.xi - self.algebra.bracket(W, self.xi)
        return self.algebra.inner(V, xibar) + self.potential(W)

    def gradient(self, W, V):
        W, V = np.broadcast_arrays(np.asarray(W, float), np.asarray(V, float))
        G = self.algebra.gram
        gv = V @ G
        # <V, [xi, W]> = (ad_xi^T G V) . W
        dW = gv @ self._ad_xi + self._fxi_low - W @ self._q
        xibar = self.xi - self.algebra.bracket(W, self.xi)
        return dW, xibar @ G

    def describe(self):
        return {"name": self.name, "kind": self.kind, "xi": self.xi.tolist()}


class LeftTensorIntegral(FirstIntegral):
    """``phi_K(V)`` for a left-invariant symmetric tensor ``K``."""

    kind = "left_tensor"

    def __init__(self, tensor: SymTensor, name=None):
        super().__init__(name or f"phi[deg{tensor.degree}]", tensor.algebra)
        self.tensor = tensor

    def value(self, W, V):
        return np.asarray(phi_of_tensor(self.tensor, V))

    def gradient(self, W, V):
        W, V = np.broadcast_arrays(np.asarray(W, float), np.asarray(V, float))
        return np.zeros_like(W), phi_gradient(self.tensor, V)


class Composite(FirstIntegral):
    """A function ``h(I_1, ..., I_m)`` of other integrals.

    ``fn(vals)`` receives the stacked base values (last axis ``m``) and returns
    ``(value, partials)`` with ``partials`` of the same shape as ``vals``.
    """

    kind = "composite"

    def __init__(self, name, parts, fn, force=None, params=None, kind=None):
        parts = list(parts)
        super().__init__(name, parts[0].algebra, force)
        self.parts = parts
        self._fn = fn
        self.params = dict(params or {})
        if kind:
            self.kind = kind

    def check_force(self, force):
        super().check_force(force)
        for p in self.parts:
            p.check_force(force)

    def _base(self, W, V):
        return np.stack([np.asarray(p(W, V), float) for p in self.parts], axis=-1)

    def value(self, W, V):
        return self._fn(self._base(W, V))[0]

    def gradient(self, W, V):
        _, partials = self._fn(self._base(W, V))
        dW = 0.0
        dV = 0.0
        for k, p in enumerate(self.parts):
            gw, gv = p.gradient(W, V)
            dW = dW + partials[..., k, None] * gw
            dV = dV + partials[..., k, None] * gv
        return dW, dV

    def describe(self):
        return {"name": self.name, "kind": self.kind, "params": _jsonable(self.params)}


def _jsonable(d):
    out = {}
    for k, v in d.items():
        if isinstance(v, (list, tuple)):
            out[k] = [float(x) for x in v]
        else:
            out[k] = float(v) if isinstance(v, (int, float, np.floating, np.integer)) else v
    return out


# -- scalar building blocks ----------------------------------------------------


def bump_sine(x, c):
    """``exp(-1/c^2) sin(pi x / c)`` extended by 0 at ``c = 0``, with partials."""
    x = np.asarray(x, dtype=float)
    c = np.asarray(c, dtype=float)
    x, c = np.broadcast_arrays(x, c)
    live = np.abs(c) > _BUMP_CUTOFF
    cs = np.where(live, c, 1.0)
    damp = np.where(live, np.exp(-1.0 / cs**2), 0.0)
    arg = np.pi * x / cs
    s, co = np.sin(arg), np.cos(arg)
    val = damp * s
    dx = damp * np.pi / cs * co
    dc = damp * (2.0 / cs**3 * s - np.pi * x / cs**2 * co)
    return val, dx, dc


def _sine_period(period):
    """``sin(pi I / period)`` (or the identity when ``period`` is 0)."""
    if period == 0:
        return lambda v: (v[..., 0], np.ones_like(v))

    def fn(v):
        arg = np.pi * v[..., 0] / period
        return np.sin(arg), (np.pi / period * np.cos(arg))[..., None]

    return fn


def _float(x):
    return float(x)


# -- Kodaira-Thurston families ---------------------------------------------------


def _kt_params(force: LorentzForce):
    p = force.params
    if p.get("preset") != "kodaira_thurston":
        raise MismatchedForceError("expected a kodaira_thurston force")
    return tuple(_float(p[k]) for k in ("a", "b", "c", "rho"))


def kt_integrals(force: LorentzForce) -> dict:
    """The magnetic Killing integrals ``I1..I4`` for ``xi = e1..e4``."""
    e = np.eye(4)
    return {f"I{i + 1}": MagneticKillingIntegral(e[i], force, name=f"I{i + 1}") for i in range(4)}


def kt_invariants_b0(force: LorentzForce) -> dict:
    """``f2, f3, f4`` for the case ``b = 0``."""
    a, b, c, rho = _kt_params(force)
    if b != 0:
        raise InvalidInputError("kt_invariants_b0 needs b = 0")
    I = kt_integrals(force)
    params = {"a": a, "c": c, "rho": rho}
    if a != 0:

        def f2(v):
            s = v[..., 1] + rho
            val = v[..., 0] - s**2 / (2 * a)
            return val, np.stack([np.ones_like(s), -s / a], axis=-1)

    else:

        def f2(v):
            val, dx, dc = bump_sine(v[..., 0], v[..., 1] + rho)
            return val, np.stack([dx, dc], axis=-1)

    # the shift is squared as a whole, (I3 + rho)^2, which is what the lattice pullbacks compensate
    formula = "I2 - (I3 + rho)^2 / (2a)" if a != 0 else "exp(-1/(I3 + rho)^2) sin(pi I2 / (I3 + rho))"
    return {
        "f2": Composite("f2", [I["I2"], I["I3"]], f2, force, {**params, "formula": formula}, kind="kt_b0"),
        "f3": Composite("f3", [I["I3"]], _sine_period(a), force, params, kind="kt_b0"),
        "f4": Composite("f4", [I["I4"]], _sine_period(c), force, params, kind="kt_b0"),
    }


def kt_invariants_c0(force: LorentzForce) -> dict:
    """``g2, g3, g4`` for the case ``c = 0, b != 0``."""
    a, b, c, rho = _kt_params(force)
    if c != 0 or b == 0:
        raise InvalidInputError("kt_invariants_c0 needs c = 0 and b != 0")
    I = kt_integrals(force)
    params = {"a": a, "b": b, "rho": rho}

    def g2(v):
        s = v[..., 2] + rho
        val = b * v[..., 0] - a * v[..., 1] + 0.5 * s**2
        ones = np.ones_like(s)
        return val, np.stack([b * ones, -a * ones, s], axis=-1)

    def g3(v):
        arg = 2 * np.pi * v[..., 0]
        return np.sin(arg), (2 * np.pi * np.cos(arg))[..., None]

    return {
        "g2": Composite("g2", [I["I1"], I["I2"], I["I3"]], g2, force, params, kind="kt_c0"),
        "g3": Composite("g3", [I["I3"]], g3, force, params, kind="kt_c0"),
        "g4": Composite("g4", [I["I4"]], lambda v: (v[..., 0], np.ones_like(v)), force, params, kind="kt_c0"),
    }


# -- Heisenberg families ----------------------------------------------------------


def _heis_params(force: LorentzForce):
    algebra = force.algebra
    if algebra.name != "heisenberg" or force.params.get("preset") != "heisenberg":
        raise MismatchedForceError("expected a heisenberg force on a heisenberg algebra")
    return algebra.params["n"], algebra.params["k"], [float(x) for x in force.params["eta"]]


def heisenberg_integrals(force: LorentzForce) -> dict:
    """``I_j`` (``xi = e_{2j-1}``, ``j = 1..n+1``), ``Z_i`` and ``S_j``."""
    n, k, _ = _heis_params(force)
    algebra = force.algebra
    e = np.eye(algebra.dim)
    out = {}
    for j in range(1, n + 2):
        out[f"I{j}"] = MagneticKillingIntegral(e[2 * j - 2], force, name=f"I{j}")
    for i in range(1, k + 1):
        out[f"Z{i}"] = LeftTensorIntegral(SymTensor.vector(algebra, e[2 * n + i]), name=f"Z{i}")
    for j in range(1, n + 1):
        S = SymTensor.monomial(algebra, [2 * j - 2] * 2) + SymTensor.monomial(algebra, [2 * j - 1] * 2)
        out[f"S{j}"] = LeftTensorIntegral(S, name=f"S{j}")
    return out


def heisenberg_fj(force: LorentzForce) -> dict:
    """Lattice-adapted ``f_1..f_n`` and ``f_{n+1} = I_{n+1}``."""
    n, _, eta = _heis_params(force)
    base = heisenberg_integrals(force)
    center = base[f"I{n + 1}"]
    out = {}
    for j in range(1, n + 1):
        ej = eta[j - 1]

        def fj(v, ej=ej):
            val, dx, dc = bump_sine(v[..., 0], v[..., 1] + ej)
            return val, np.stack([dx, dc], axis=-1)

        out[f"f{j}"] = Composite(
            f"f{j}", [base[f"I{j}"], center], fj, force, {"j": j, "eta_j": ej}, kind="heis_fj"
        )
    out[f"f{n + 1}"] = Composite(
        f"f{n + 1}", [center], lambda v: (v[..., 0], np.ones_like(v)), force, {"j": n + 1}, kind="heis_fj"
    )
    return out


# -- families used by the checks --------------------------------------------------


def kt_case(force: LorentzForce) -> str:
    a, b, c, rho = _kt_params(force)
    if b == 0:
        return "kt_b0"
    if c == 0:
        return "kt_c0"
    return "kt_generic"


def proposition_family(force: LorentzForce) -> list:
    """Integrals in involution (without the energy) for a preset scenario."""
    if force.params.get("preset") == "kodaira_thurston":
        case = kt_case(force)
        I = kt_integrals(force)
        if case == "kt_b0":
            return [I["I2"], I["I3"], I["I4"]]
        if case == "kt_c0":
            a, b, _, _ = _kt_params(force)
            xi1 = MagneticKillingIntegral([b, -a, 0, 0], force, name="bI1-aI2")
            return [xi1, I["I3"], I["I4"]]
        raise InvalidInputError("rank-two condition bc = 0 fails; no integrable family")
    if force.params.get("preset") == "heisenberg":
        return list(heisenberg_integrals(force).values())
    raise InvalidInputError("no integral family for this force")


def lattice_family(force: LorentzForce) -> list:
    """Lattice-adapted integrals for a preset scenario."""
    if force.params.get("preset") == "kodaira_thurston":
        case = kt_case(force)
        if case == "kt_b0":
            return list(kt_invariants_b0(force).values())
        if case == "kt_c0":
            return list(kt_invariants_c0(force).values())
        raise InvalidInputError("rank-two condition bc = 0 fails; no lattice family")
    if force.params.get("preset") == "heisenberg":
        n, k, _ = _heis_params(force)
        base = heisenberg_integrals(force)
        return list(heisenberg_fj(force).values()) + [base[f"Z{i}"] for i in range(1, k + 1)] + [
            base[f"S{j}"] for j in range(1, n + 1)
        ]
    raise InvalidInputError("no lattice family for this force")
