"""Symmetric tensors over a metric 2-step nilpotent algebra.

A degree-``l`` tensor is stored as a fully symmetric covariant array ``T`` of
shape ``(n,) * l`` normalised so that the associated polynomial is

    phi_K(V) = T(V, ..., V) / l!

With this choice the symmetric product of monomials is ``e_i . e_j = e_i (x) e_j
+ e_j (x) e_i`` (lowered), ``phi`` is multiplicative, and the metric tensor
``g = sum e_i . e_i`` (orthonormal frame) has ``phi_g(V) = <V, V>``.
"""

from __future__ import annotations

import math
from itertools import permutations
from string import ascii_lowercase

import numpy as np

from .errors import InvalidInputError
from .magnetic import LorentzForce
from .nilalgebra import MetricNilpotentAlgebra

FD_STEP = 1e-5
FD_TOL = 1e-6
KILLING_TOL = 1e-8
SYSTEM_TOL = 1e-10


def symmetrize(arr: np.ndarray) -> np.ndarray:
    """Average of ``arr`` over all permutations of its axes."""
    l = arr.ndim
    if l <= 1:
        return arr.copy()
    perms = list(permutations(range(l)))
    return sum(np.transpose(arr, p) for p in perms) / len(perms)


class SymTensor:
    """Left-invariant symmetric tensor of a fixed degree."""

    __slots__ = ("algebra", "array")

    def __init__(self, algebra: MetricNilpotentAlgebra, array, check: bool = True):
        arr = np.array(array, dtype=float)
        n = algebra.dim
        if arr.shape != (n,) * arr.ndim:
            raise InvalidInputError(f"tensor array must have shape ({n},)*l, got {arr.shape}")
        if check and arr.ndim > 1:
            if not np.allclose(arr, symmetrize(arr), rtol=0, atol=1e-12 * max(1.0, np.abs(arr).max())):
                raise InvalidInputError("tensor array is not symmetric")
        arr.setflags(write=False)
        self.algebra = algebra
        self.array = arr

    @property
    def degree(self) -> int:
        return self.array.ndim

    @property
    def dim(self) -> int:
        return self.algebra.dim

    def __repr__(self):
        return f"SymTensor(degree={self.degree}, dim={self.dim})"

    # -- constructors ------------------------------------------------------

    @classmethod
    def scalar(cls, algebra, value=0.0) -> "SymTensor":
        return cls(algebra, np.asarray(float(value)))

    @classmethod
    def vector(cls, algebra, x) -> "SymTensor":
        """Degree-1 tensor for the algebra vector ``x`` (stored lowered)."""
        return cls(algebra, algebra.lower(x))

    @classmethod
    def zero(cls, algebra, degree: int) -> "SymTensor":
        return cls(algebra, np.zeros((algebra.dim,) * degree), check=False)

    @classmethod
    def metric(cls, algebra) -> "SymTensor":
        return cls(algebra, 2.0 * algebra.gram)

    @classmethod
    def monomial(cls, algebra, indices, coeff=1.0) -> "SymTensor":
        """``coeff * e_{i1} . ... . e_{il}`` for 0-based indices."""
        out = cls.scalar(algebra, coeff)
        for i in indices:
            i = int(i)
            if not 0 <= i < algebra.dim:
                raise InvalidInputError(f"basis index {i} out of range")
            out = sym_product(out, cls.vector(algebra, np.eye(algebra.dim)[i]))
        return out

    @classmethod
    def from_literal(cls, algebra, literal: dict) -> "SymTensor":
        """Parse ``{"degree": l, "terms": [{"indices": [...], "coeff": c}]}`` (1-based)."""
        try:
            degree = int(literal["degree"])
            terms = literal.get("terms", [])
        except (KeyError, TypeError, ValueError, AttributeError):
            raise InvalidInputError("tensor literal needs 'degree' and 'terms'") from None
        if degree < 0:
            raise InvalidInputError("tensor degree must be non-negative")
        out = cls.zero(algebra, degree)
        for term in terms:
            idx = [int(i) - 1 for i in term.get("indices", [])]
            if len(idx) != degree:
                raise InvalidInputError(f"term {term!r} does not have {degree} indices")
            out = out + cls.monomial(algebra, idx, term.get("coeff", 1.0))
        return out

    @classmethod
    def random(cls, algebra, degree: int, rng: np.random.Generator) -> "SymTensor":
        arr = rng.standard_normal((algebra.dim,) * degree)
        return cls(algebra, symmetrize(arr), check=False)

    # -- arithmetic --------------------------------------------------------

    def _same_space(self, other):
        if not isinstance(other, SymTensor) or other.algebra is not self.algebra:
            raise InvalidInputError("tensors live over different algebras")

    def __add__(self, other):
        self._same_space(other)
        if other.degree != self.degree:
            raise InvalidInputError("cannot add tensors of different degree")
        return SymTensor(self.algebra, self.array + other.array, check=False)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rmul__(self, c):
        return SymTensor(self.algebra, float(c) * self.array, check=False)

    def __mul__(self, other):
        if isinstance(other, SymTensor):
            return sym_product(self, other)
        return float(other) * self

    def __call__(self, *vectors):
        """Multilinear evaluation ``T(v1, ..., vl)``."""
        if len(vectors) != self.degree:
            raise InvalidInputError(f"expected {self.degree} arguments")
        out = self.array
        for v in vectors:
            out = np.tensordot(np.asarray(v, float), out, axes=([-1], [0])) if out.ndim else out
        return float(out)

    def norm(self) -> float:
        return float(np.max(np.abs(self.array), initial=0.0))


def sym_product(a: SymTensor, b: SymTensor) -> SymTensor:
    """Symmetric product with ``phi_{a.b} = phi_a * phi_b``."""
    a._same_space(b)
    p, q = a.degree, b.degree
    outer = np.multiply.outer(a.array, b.array)
    return SymTensor(a.algebra, math.comb(p + q, p) * symmetrize(outer), check=False)


def contract(x, k: SymTensor) -> SymTensor:
    """Insert the vector ``x`` into the first slot of ``k``."""
    if k.degree == 0:
        raise InvalidInputError("cannot contract a scalar")
    x = np.asarray(x, dtype=float)
    if x.shape != (k.dim,):
        raise InvalidInputError(f"expected a vector of dimension {k.dim}")
    return SymTensor(k.algebra, np.tensordot(x, k.array, axes=([0], [0])), check=False)


def pairing(a: SymTensor, b: SymTensor) -> float:
    """Inner product ``<a, b> = (1/l!) * full contraction`` using the inverse gram."""
    a._same_space(b)
    if a.degree != b.degree:
        return 0.0
    raised = b.array
    gi = a.algebra.gram_inv
    for axis in range(b.degree):
        raised = np.moveaxis(np.tensordot(gi, raised, axes=([1], [axis])), 0, axis)
    return float(np.sum(a.array * raised)) / math.factorial(a.degree)


def _full_eval(arr: np.ndarray, V: np.ndarray) -> np.ndarray:
    l = arr.ndim
    if l == 0:
        return np.broadcast_to(float(arr), V.shape[:-1]).copy()
    letters = ascii_lowercase[:l]
    spec = letters + "," + ",".join("..." + c for c in letters) + "->..."
    return np.einsum(spec, arr, *([V] * l))


def phi_of_tensor(k: SymTensor, V) -> np.ndarray | float:
    """``phi_K(V) = K(V, ..., V) / l!`` (broadcasts over leading axes of ``V``)."""
    V = np.asarray(V, dtype=float)
    out = _full_eval(k.array, V) / math.factorial(k.degree)
    return float(out) if out.ndim == 0 else out


def phi_gradient(k: SymTensor, V) -> np.ndarray:
    """``d phi_K / d V_i = phi_{e_i -| K}(V)``; shape ``V.shape``."""
    V = np.asarray(V, dtype=float)
    l = k.degree
    if l == 0:
        return np.zeros_like(V)
    if l == 1:
        return np.broadcast_to(k.array, V.shape).copy()
    letters = ascii_lowercase[: l - 1]
    spec = "z" + letters + "," + ",".join("..." + c for c in letters) + "->...z"
    return np.einsum(spec, k.array, *([V] * (l - 1))) / math.factorial(l - 1)


def connection_coefficients(algebra: MetricNilpotentAlgebra) -> np.ndarray:
    """``Gamma[b, c, d]`` with ``nabla_{e_b} e_c = sum_d Gamma[b, c, d] e_d``.

    Levi-Civita connection of the left-invariant metric:
    ``nabla_x y = (1/2)([x, y] - ad^T_x y - ad^T_y x)``.
    """
    e = np.eye(algebra.dim)
    x = e[:, None, :]
    y = e[None, :, :]
    return 0.5 * (algebra.bracket(x, y) - algebra.ad_transpose(x, y) - algebra.ad_transpose(y, x))


def covariant_derivative(k: SymTensor) -> np.ndarray:
    """``D[b, c1..cl] = (nabla_{e_b} K)(e_c1, ..., e_cl)`` for left-invariant ``K``."""
    l = k.degree
    n = k.dim
    gamma = connection_coefficients(k.algebra)
    out = np.zeros((n,) * (l + 1))
    for slot in range(l):
        # -sum_d Gamma[b, c_slot, d] T[..., d, ...]
        moved = np.moveaxis(k.array, slot, 0)
        term = -np.tensordot(gamma, moved, axes=([2], [0]))  # (b, c_slot, rest...)
        out += np.moveaxis(term, 1, slot + 1)
    return out


def d_s(k: SymTensor) -> SymTensor:
    """Symmetric derivative ``sum_i e_i . nabla_{e_i} K`` (orthonormal frame)."""
    D = covariant_derivative(k)
    return SymTensor(k.algebra, (k.degree + 1) * symmetrize(D), check=False)


def f_star(k: SymTensor, force: LorentzForce) -> SymTensor:
    """Derivation extension of ``F``: ``(F_* K)(v..v) = -l K(Fv, v..v)``."""
    if force.algebra is not k.algebra and force.dim != k.dim:
        raise InvalidInputError("force and tensor dimensions differ")
    l = k.degree
    out = np.zeros_like(k.array)
    F = force.matrix
    for slot in range(l):
        moved = np.moveaxis(k.array, slot, -1)
        out -= np.moveaxis(moved @ F, -1, slot)
    return SymTensor(k.algebra, out, check=False)


def check_magnetic_killing(components, force: LorentzForce, tol: float = SYSTEM_TOL) -> dict:
    """Check ``d^s K_i = F_* K_{i+1}`` for ``i = 0..l`` with ``K_{l+1} = 0``.

    ``components`` is ``[K_0, K_1, ..., K_l]`` with ``K_i`` of degree ``i``.
    Returns ``{"passes", "residuals"}`` where ``residuals[m]`` is the max
    coefficient of ``d^s K_{m-1} - F_* K_m`` in degree ``m``.
    """
    comps = list(components)
    if not comps:
        raise InvalidInputError("empty magnetic Killing candidate")
    for i, c in enumerate(comps):
        if c.degree != i:
            raise InvalidInputError(f"component {i} has degree {c.degree}")
    algebra = comps[0].algebra
    residuals = {}
    for i, c in enumerate(comps):
        lhs = d_s(c)
        rhs = f_star(comps[i + 1], force) if i + 1 < len(comps) else SymTensor.zero(algebra, i + 1)
        residuals[i + 1] = (lhs - rhs).norm()
    # degree 0 of the system: F_* K_0 vanishes identically (nothing to check)
    passes = all(r <= tol for r in residuals.values())
    return {"passes": passes, "residuals": residuals}


def killing_candidate_phi(components, V):
    """``sum_i phi_{K_i}(V)`` for a left-invariant candidate."""
    return sum(phi_of_tensor(c, V) for c in components)


def _coerce_samples(W, X, n):
    W = np.atleast_2d(np.asarray(W, dtype=float))
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if W.shape[-1] != n or X.shape[-1] != n:
        raise InvalidInputError("sample dimension mismatch")
    return np.broadcast_arrays(W, X)


def killing_field_values(field, algebra: MetricNilpotentAlgebra, W, X) -> np.ndarray:
    """``<nabla_X Y, X>`` at ``exp(W)`` for a vector field ``Y`` in left trivialisation.

    ``field`` is an algebra vector ``xi`` (meaning the right-invariant field
    ``W -> xi - [W, xi]``) or a callable ``W -> Y(W)`` whose derivative is
    taken by centred differences.
    """
    W, X = _coerce_samples(W, X, algebra.dim)
    wdot = X + 0.5 * algebra.bracket(W, X)
    if callable(field):
        Y = np.asarray(field(W), dtype=float)
        dY = (np.asarray(field(W + FD_STEP * wdot), float) - np.asarray(field(W - FD_STEP * wdot), float)) / (
            2 * FD_STEP
        )
    else:
        xi = np.asarray(field, dtype=float)
        Y = xi - algebra.bracket(W, xi)
        dY = -algebra.bracket(wdot, xi)
    gamma = connection_coefficients(algebra)
    conn = np.einsum("...b,...c,bcd->...d", X, Y, gamma)
    return algebra.inner(dY + conn, X)


def killing_field_check(field, algebra, W, X, tol: float = KILLING_TOL) -> dict:
    vals = killing_field_values(field, algebra, W, X)
    worst = float(np.max(np.abs(vals), initial=0.0))
    return {"passes": worst <= tol, "max_residual": worst}


def killing_potential(xi, force: LorentzForce, W) -> np.ndarray:
    """Potential ``f`` with ``df = (F xi_bar)^flat`` for the right-invariant field of ``xi``.

    ``f(exp W) = <F xi, W> - (1/2) sum_ij <v_i, W><v_j, W><F[v_i, xi], v_j>``
    with ``{v_i}`` an orthonormal basis of the complement of the center.
    """
    algebra = force.algebra
    Q = _potential_quadratic(xi, force)
    W = np.asarray(W, dtype=float)
    lin = algebra.inner(force.apply(xi), W)
    return lin - 0.5 * np.einsum("...i,ij,...j->...", W, Q, W)


def _potential_quadratic(xi, force: LorentzForce) -> np.ndarray:
    algebra = force.algebra
    xi = np.asarray(xi, dtype=float)
    P = algebra.complement_basis
    G = algebra.gram
    # B[i, j] = <F[v_i, xi], v_j>
    br = algebra.bracket(P.T, xi)
    B = force.apply(br) @ G @ P
    return G @ P @ B @ P.T @ G


def killing_potential_gradient(xi, force: LorentzForce, W) -> np.ndarray:
    """Coordinate gradient ``d f / d W``."""
    Q = _potential_quadratic(xi, force)
    W = np.asarray(W, dtype=float)
    lin = force.algebra.lower(force.apply(xi))
    return lin - 0.5 * W @ (Q + Q.T).T


def potential_gradient_check(xi, force: LorentzForce, W, X, step: float = FD_STEP, tol: float = FD_TOL) -> dict:
    """Centred differences of the potential against ``<F xi_bar, X>``."""
    algebra = force.algebra
    W, X = _coerce_samples(W, X, algebra.dim)
    xi = np.asarray(xi, dtype=float)
    wdot = X + 0.5 * algebra.bracket(W, X)
    fd = (killing_potential(xi, force, W + step * wdot) - killing_potential(xi, force, W - step * wdot)) / (
        2 * step
    )
    xibar = xi - algebra.bracket(W, xi)
    expected = algebra.inner(force.apply(xibar), X)
    worst = float(np.max(np.abs(fd - expected), initial=0.0))
    return {"passes": worst <= tol, "max_residual": worst}
