"""Left-invariant Lorentz forces and their magnetic 2-forms.

Conventions: ``omega[i, j] = omega(e_i, e_j) = <F e_i, e_j>`` and, for a
left-invariant 2-form, ``d omega(x, y, z) = -omega([x,y],z) + omega([x,z],y)
- omega([y,z],x)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from ._exact import all_exact
from .errors import InvalidInputError
from .nilalgebra import MetricNilpotentAlgebra, preset

SKEW_TOL = 1e-12
CLOSED_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class LorentzForce:
    """Skew endomorphism ``F`` paired with its 2-form.

    ``exact_omega`` keeps the rational 2-form entries (or None) so structural
    checks can run without rounding.
    """

    algebra: MetricNilpotentAlgebra
    matrix: np.ndarray
    omega: np.ndarray
    exact_omega: tuple | None = None
    params: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.algebra.dim

    def apply(self, v):
        """``F v`` (broadcasts over leading axes)."""
        return np.asarray(v, dtype=float) @ self.matrix.T

    def two_form(self, x, y):
        return np.einsum("...i,ij,...j->...", np.asarray(x, float), self.omega, np.asarray(y, float))

    def skew_residual(self) -> float:
        gf = self.algebra.gram @ self.matrix
        return float(np.max(np.abs(gf + gf.T), initial=0.0))

    def same_as(self, other: "LorentzForce", tol: float = 1e-12) -> bool:
        return (
            other is not None
            and other.dim == self.dim
            and bool(np.allclose(self.matrix, other.matrix, rtol=0, atol=tol))
        )

    def __repr__(self):
        label = self.params.get("preset", "two_form")
        return f"LorentzForce({label}, dim={self.dim})"


def two_form_matrix(terms, n: int) -> list:
    """Nested-list antisymmetric matrix for ``sum value * e^i ^ e^j`` (0-based terms).

    Entries keep their input type so rational inputs stay exact.
    """
    omega = [[0] * n for _ in range(n)]
    for entry in terms:
        if len(entry) != 3:
            raise InvalidInputError(f"2-form term must be (i, j, value), got {entry!r}")
        i, j, val = entry
        i, j = int(i), int(j)
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise InvalidInputError(f"bad 2-form index pair ({i}, {j})")
        omega[i][j] = omega[i][j] + val
        omega[j][i] = omega[j][i] - val
    return omega


def force_from_two_form(omega, algebra: MetricNilpotentAlgebra, params=None) -> LorentzForce:
    """The Lorentz force ``F`` with ``<F e_i, e_j> = omega(e_i, e_j)``.

    ``omega`` is an ``n x n`` antisymmetric array-like; use
    :func:`two_form_matrix` to build one from ``(i, j, value)`` terms.
    """
    n = algebra.dim
    if np.shape(omega) != (n, n):
        raise InvalidInputError(f"2-form must be {n}x{n}, got shape {np.shape(omega)}")
    rows = [list(r) for r in omega]
    exact = all_exact(v for r in rows for v in r)
    arr = np.array([[float(v) for v in r] for r in rows])
    if exact is not None:
        mat = [exact[i * n:(i + 1) * n] for i in range(n)]
        if any(mat[i][j] != -mat[j][i] for i in range(n) for j in range(n)):
            raise InvalidInputError("2-form is not antisymmetric")
        exact_omega = tuple(tuple(r) for r in mat)
    else:
        if not np.allclose(arr, -arr.T, rtol=0, atol=SKEW_TOL):
            raise InvalidInputError("2-form is not antisymmetric")
        exact_omega = None
    F = algebra.gram_inv @ arr.T
    arr.setflags(write=False)
    F.setflags(write=False)
    return LorentzForce(algebra, F, arr, exact_omega, dict(params or {}))


def force_from_matrix(F, algebra: MetricNilpotentAlgebra, params=None) -> LorentzForce:
    """Wrap an endomorphism given directly; it must be skew for the inner product."""
    F = np.array(F, dtype=float)
    omega = F.T @ algebra.gram
    if not np.allclose(omega, -omega.T, rtol=0, atol=SKEW_TOL * max(1.0, np.abs(F).max(initial=0))):
        raise InvalidInputError("endomorphism is not skew-symmetric")
    return force_from_two_form(omega, algebra, params)


def is_closed(omega, algebra: MetricNilpotentAlgebra) -> dict:
    """Closedness certificate for a left-invariant 2-form.

    ``omega`` may be a LorentzForce or an ``n x n`` array.  The returned dict carries ``closed``, ``exact``, ``max_residual`` and the
    non-vanishing triples (0-based) with their values.
    """
    if isinstance(omega, LorentzForce):
        exact_rows = omega.exact_omega
        arr = omega.omega
    else:
        f = force_from_two_form(omega, algebra)
        exact_rows, arr = f.exact_omega, f.omega
    n = algebra.dim
    terms = algebra.exact_terms if exact_rows is not None else None
    if terms is not None:
        br: dict[tuple[int, int], dict[int, Fraction]] = {}
        for (i, j, k), c in terms.items():
            br.setdefault((i, j), {})[k] = c
            br.setdefault((j, i), {})[k] = -c

        def om(pair, z):
            return sum((c * exact_rows[k][z] for k, c in br.get(pair, {}).items()), Fraction(0))

        residuals = {}
        for x, y, z in combinations(range(n), 3):
            val = -om((x, y), z) + om((x, z), y) - om((y, z), x)
            if val != 0:
                residuals[(x, y, z)] = float(val)
        worst = max((abs(v) for v in residuals.values()), default=0.0)
        return {"closed": not residuals, "exact": True, "max_residual": worst, "residuals": residuals}

    c = algebra.structure
    # w_br[x, y, z] = omega([e_x, e_y], e_z)
    w_br = np.einsum("xyk,kz->xyz", c, arr)
    d = -w_br + w_br.transpose(0, 2, 1) - w_br.transpose(1, 2, 0)
    residuals = {}
    for x, y, z in combinations(range(n), 3):
        if abs(d[x, y, z]) > CLOSED_TOL:
            residuals[(x, y, z)] = float(d[x, y, z])
    worst = float(np.max(np.abs(d), initial=0.0))
    return {"closed": not residuals, "exact": False, "max_residual": worst, "residuals": residuals}


def is_derivation(force, algebra: MetricNilpotentAlgebra, tol: float = 1e-12) -> bool:
    """True iff ``F[x, y] = [Fx, y] + [x, Fy]`` on all basis pairs."""
    F = force.matrix if isinstance(force, LorentzForce) else np.asarray(force, float)
    e = np.eye(algebra.dim)
    fe = e @ F.T
    lhs = algebra.bracket(e[:, None, :], e[None, :, :]) @ F.T
    rhs = algebra.bracket(fe[:, None, :], e[None, :, :]) + algebra.bracket(e[:, None, :], fe[None, :, :])
    scale = max(1.0, float(np.abs(F).max(initial=0.0)))
    return bool(np.max(np.abs(lhs - rhs), initial=0.0) <= tol * scale)


def pfaffian4(omega) -> object:
    """Pfaffian of a 4x4 antisymmetric array (exact if the entries are Fractions)."""
    w = omega
    return w[0][1] * w[2][3] - w[0][2] * w[1][3] + w[0][3] * w[1][2]


def rank_two_check(omega, algebra: MetricNilpotentAlgebra) -> bool:
    """``omega ^ omega == 0`` for a 4-dimensional algebra (vanishing Pfaffian)."""
    if algebra.dim != 4:
        raise InvalidInputError("rank_two_check applies to 4-dimensional algebras only")
    f = omega if isinstance(omega, LorentzForce) else force_from_two_form(omega, algebra)
    if f.exact_omega is not None:
        return pfaffian4(f.exact_omega) == 0
    return abs(float(pfaffian4(f.omega))) <= CLOSED_TOL


def kodaira_thurston_force(a, b, c, rho, algebra: MetricNilpotentAlgebra | None = None) -> LorentzForce:
    """Force with ``omega = a e13 + b e23 + c e14 + rho e12`` on ``h3 + R``."""
    algebra = algebra or preset("h3r")
    if algebra.dim != 4 or algebra.bracket_terms != {(0, 1, 2): 1} or not algebra.is_identity_gram:
        raise InvalidInputError("kodaira_thurston_force needs the orthonormal h3r algebra")
    terms = [(0, 2, a), (1, 2, b), (0, 3, c), (0, 1, rho)]
    params = {"preset": "kodaira_thurston", "a": a, "b": b, "c": c, "rho": rho}
    return force_from_two_form(two_form_matrix(terms, 4), algebra, params)


def heisenberg_force(eta, algebra: MetricNilpotentAlgebra) -> LorentzForce:
    """``F = sum_i eta_i e_{2i-1} ^ e_{2i}`` on ``h_{2n+1} + R^k``.

    ``x ^ y`` acts as ``x -> y, y -> -x``; ``F`` kills the center and ``R^k``.
    """
    if algebra.name != "heisenberg":
        raise InvalidInputError("heisenberg_force needs a heisenberg preset algebra")
    n = algebra.params["n"]
    eta = list(eta)
    if len(eta) != n:
        raise InvalidInputError(f"expected {n} eta values, got {len(eta)}")
    if all(float(x) == 0.0 for x in eta):
        raise InvalidInputError("eta values must not all vanish")
    terms = [(2 * i, 2 * i + 1, eta[i]) for i in range(n)]
    params = {"preset": "heisenberg", "eta": eta}
    return force_from_two_form(two_form_matrix(terms, algebra.dim), algebra, params)
