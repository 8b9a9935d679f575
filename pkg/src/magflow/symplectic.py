"""Twisted symplectic form, Hamiltonian fields and Poisson brackets.

Tangent vectors to the phase space at ``(W, V)`` are written in the frame
``(e~_1..e~_n, e*_1..e*_n)``: ``e~_i`` moves the base point by the left
translation flow ``exp(W) exp(t e_i)`` and ``e*_i`` moves the velocity
``V -> V + t e_i``.  A frame vector is a ``2n`` array ``(beta, alpha)`` and a
frame differential is ``(a, b)`` with ``a_i = e~_i(h)``, ``b_i = e*_i(h)``.

Hamiltonian fields are defined by ``Omega^F(X_h, U) = U(h)`` and the bracket by
``{h1, h2} = Omega^F(X_h1, X_h2)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._exact import all_exact
from .errors import InvalidInputError
from .invariants import FirstIntegral, MagneticKillingIntegral
from .magnetic import LorentzForce
from .tensors import SymTensor, phi_gradient

FD_STEP = 1e-3
INVOLUTION_TOL = 1e-6
RANK_CUT = 1e-8
RANK_FRACTION = 0.95
COMMUTE_TOL = 1e-8


@dataclass(frozen=True)
class FrameDifferential:
    """Horizontal (``a``) and vertical (``b``) derivatives, batched."""

    a: np.ndarray
    b: np.ndarray

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.a, self.b], axis=-1)


def _states(W, V, n):
    W = np.asarray(W, dtype=float)
    V = np.asarray(V, dtype=float)
    if W.shape[-1] != n or V.shape[-1] != n:
        raise InvalidInputError(f"states must have dimension {n}")
    return np.broadcast_arrays(W, V)


def _five_point(fun, step):
    return (-fun(2 * step) + 8 * fun(step) - 8 * fun(-step) + fun(-2 * step)) / (12 * step)


def frame_differential(h, W, V, algebra, method: str = "auto", step: float = FD_STEP) -> FrameDifferential:
    """Frame derivatives of ``h`` at the states ``(W, V)``.

    ``method="auto"`` uses ``h.gradient`` when available (chain rule through
    ``d/dt bch(W, t e_i) = e_i + [W, e_i]/2``); ``"fd"`` uses five-point
    centred differences along the two flows.
    """
    W, V = _states(W, V, algebra.dim)
    n = algebra.dim
    e = np.eye(n)
    if method == "auto" and hasattr(h, "gradient"):
        gW, gV = h.gradient(W, V)
        gW = np.broadcast_to(gW, W.shape)
        # columns of the horizontal directions at W: e_i + [W, e_i]/2
        dirs = e + 0.5 * algebra.bracket(W[..., None, :], e)
        a = np.einsum("...ij,...j->...i", dirs, gW)
        return FrameDifferential(a, np.broadcast_to(gV, V.shape).copy())
    if method not in ("auto", "fd"):
        raise InvalidInputError(f"unknown differentiation method {method!r}")
    a = np.empty(W.shape)
    b = np.empty(W.shape)
    for i in range(n):
        a[..., i] = _five_point(lambda t: h(algebra.bch_multiply(W, t * e[i]), V), step)
        b[..., i] = _five_point(lambda t: h(W, V + t * e[i]), step)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise InvalidInputError("non-finite frame differential")
    return FrameDifferential(a, b)


def twisted_form(W, V, force: LorentzForce) -> np.ndarray:
    """``Omega^F`` in the frame: ``[[A, G], [-G, 0]]``, ``A_ij = <V,[e_i,e_j]> + omega_ij``."""
    algebra = force.algebra
    W, V = _states(W, V, algebra.dim)
    n = algebra.dim
    G = algebra.gram
    # <V, [e_i, e_j]> = sum_k c[i,j,k] (G V)_k
    A = np.einsum("ijk,...k->...ij", algebra.structure, V @ G) + force.omega
    out = np.zeros(V.shape[:-1] + (2 * n, 2 * n))
    out[..., :n, :n] = A
    out[..., :n, n:] = G
    out[..., n:, :n] = -G
    return out


def hamiltonian_field(h, W, V, force: LorentzForce, method: str = "auto") -> tuple:
    """Frame components ``(beta, alpha)`` of ``X_h``: horizontal then vertical."""
    algebra = force.algebra
    n = algebra.dim
    d = frame_differential(h, W, V, algebra, method).stacked()
    x = _solve_field(twisted_form(W, V, force), d)
    return x[..., :n], x[..., n:]


def _solve_field(omega, d):
    # Omega(X, U) = X^T Omega U = dh(U)  =>  Omega^T X = d  =>  X = -Omega^{-1} d
    try:
        return -np.linalg.solve(omega, d[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:  # pragma: no cover - nondegenerate by construction
        raise InvalidInputError("twisted form is singular") from exc


def poisson_bracket(h1, h2, W, V, force: LorentzForce, method: str = "auto", step: float = FD_STEP):
    """``{h1, h2}^F = Omega^F(X_h1, X_h2) = dh1(X_h2)``."""
    algebra = force.algebra
    d1 = frame_differential(h1, W, V, algebra, method, step).stacked()
    d2 = frame_differential(h2, W, V, algebra, method, step).stacked()
    x2 = _solve_field(twisted_form(W, V, force), d2)
    return np.einsum("...i,...i->...", d1, x2)


def poisson_left_invariant(L: SymTensor, K: SymTensor, W, V, force: LorentzForce):
    """Closed-form bracket of two left-invariant tensor functions.

    ``{phi_L, phi_K}^F = sum_ij phi_{e_i -| K} phi_{e_j -| L} (<V,[e_i,e_j]> + omega_ij)``
    in an orthonormal frame; for a general gram the raised vertical
    derivatives replace the contractions.
    """
    algebra = force.algebra
    W, V = _states(W, V, algebra.dim)
    gi = algebra.gram_inv
    bl = phi_gradient(L, V) @ gi
    bk = phi_gradient(K, V) @ gi
    n = algebra.dim
    A = twisted_form(W, V, force)[..., :n, :n]
    return np.einsum("...i,...ij,...j->...", bk, A, bl)


def commutation_criterion(xi1, xi2, force: LorentzForce) -> bool:
    """``[xi1, xi2] = 0`` and ``omega(xi1, xi2) = 0`` (exact for rational input)."""
    algebra = force.algebra
    x1 = all_exact(list(np.asarray(xi1).tolist()))
    x2 = all_exact(list(np.asarray(xi2).tolist()))
    terms = algebra.exact_terms
    if x1 is not None and x2 is not None and terms is not None and force.exact_omega is not None:
        br = [Fraction(0)] * algebra.dim
        for (i, j, k), c in terms.items():
            br[k] += c * (x1[i] * x2[j] - x1[j] * x2[i])
        om = sum(
            (x1[i] * force.exact_omega[i][j] * x2[j] for i in range(algebra.dim) for j in range(algebra.dim)),
            Fraction(0),
        )
        return all(v == 0 for v in br) and om == 0
    x1 = np.asarray(xi1, float)
    x2 = np.asarray(xi2, float)
    br = algebra.bracket(x1, x2)
    om = force.two_form(x1, x2)
    return bool(np.max(np.abs(br)) <= 1e-12 and abs(om) <= 1e-12)


def killing_bracket_closed_form(xi1, xi2, W, V, force: LorentzForce):
    """``{I_xi1, I_xi2}^F`` predicted as ``I_[xi1,xi2] + omega(xi1, xi2)``."""
    algebra = force.algebra
    br = algebra.bracket(np.asarray(xi1, float), np.asarray(xi2, float))
    return MagneticKillingIntegral(br, force)(W, V) + force.two_form(xi1, xi2)


def involution_matrix(integrals, W, V, force: LorentzForce, tol: float = INVOLUTION_TOL, method="auto") -> dict:
    """Max sampled ``|{h_i, h_j}|`` for every pair."""
    integrals = list(integrals)
    if len(integrals) < 2:
        raise InvalidInputError("need at least two integrals")
    algebra = force.algebra
    W, V = _states(W, V, algebra.dim)
    om = twisted_form(W, V, force)
    diffs = [frame_differential(h, W, V, algebra, method).stacked() for h in integrals]
    fields = [_solve_field(om, d) for d in diffs]
    m = len(integrals)
    mat = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            val = float(np.max(np.abs(np.einsum("...i,...i->...", diffs[i], fields[j]))))
            mat[i, j] = mat[j, i] = val
    names = [h.name for h in integrals]
    return {"names": names, "matrix": mat, "max": float(mat.max()), "passes": bool(mat.max() <= tol)}


def independence_rank(integrals, W, V, algebra, cut: float = RANK_CUT, fraction: float = RANK_FRACTION,
                      method="auto") -> dict:
    """Numerical rank of the stacked frame differentials at each state."""
    integrals = list(integrals)
    W, V = _states(W, V, algebra.dim)
    stack = np.stack([frame_differential(h, W, V, algebra, method).stacked() for h in integrals], axis=-2)
    sv = np.linalg.svd(stack, compute_uv=False)
    smax = sv[..., :1]
    ranks = np.sum(sv > cut * np.maximum(smax, np.finfo(float).tiny), axis=-1)
    ranks = np.atleast_1d(ranks)
    full = float(np.mean(ranks == len(integrals)))
    hist = {int(r): int(c) for r, c in zip(*np.unique(ranks, return_counts=True))}
    return {
        "names": [h.name for h in integrals],
        "ranks": ranks,
        "histogram": hist,
        "full_rank_fraction": full,
        "passes": bool(full >= fraction),
    }


def projected_field(h: FirstIntegral, W, V, force: LorentzForce, method: str = "auto") -> np.ndarray:
    """``pi_* X_h`` in left trivialisation (the horizontal components)."""
    return hamiltonian_field(h, W, V, force, method)[0]
