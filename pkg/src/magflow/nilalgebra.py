"""Metric 2-step nilpotent Lie algebras and their simply connected groups.

Group elements are handled in global exponential coordinates: a point ``p``
is the algebra vector ``W`` with ``p = exp(W)``.  Vectors are plain numpy
arrays of basis coefficients; every operation broadcasts over leading axes.
"""

from __future__ import annotations

from fractions import Fraction
from functools import cached_property
from itertools import product

import numpy as np

from ._exact import all_exact
from .errors import InvalidInputError

CENTER_RANK_CUT = 1e-10
STRUCTURE_TOL = 1e-12


def _orthonormalize(basis: np.ndarray, gram: np.ndarray) -> np.ndarray:
    """Columns of ``basis`` made orthonormal for ``gram`` (same span)."""
    if basis.shape[1] == 0:
        return basis
    inner = basis.T @ gram @ basis
    chol = np.linalg.cholesky(inner)
    return basis @ np.linalg.inv(chol).T


def _null_space(mat: np.ndarray, n: int) -> np.ndarray:
    if mat.size == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(mat)
    smax = s[0] if s.size else 0.0
    if smax == 0.0:
        return np.eye(n)
    rank = int(np.sum(s > CENTER_RANK_CUT * smax))
    return vt[rank:].T.copy()


class MetricNilpotentAlgebra:
    """A 2-step nilpotent Lie algebra with an inner product.

    Parameters
    ----------
    dim:
        Dimension ``n``.
    brackets:
        Iterable of ``(i, j, k, c)`` with 0-based indices meaning that
        ``[e_i, e_j]`` has coefficient ``c`` on ``e_k``.  Only ``i != j`` is
        allowed; ``i > j`` entries are flipped so the stored table is the
        ``i < j`` half and antisymmetry holds by construction.
    gram:
        Symmetric positive-definite ``n x n`` inner product matrix
        (identity when omitted).
    """

    def __init__(self, dim, brackets=(), gram=None, name=None, params=None):
        if int(dim) != dim or dim < 1:
            raise InvalidInputError(f"dimension must be a positive integer, got {dim!r}")
        n = int(dim)
        self.dim = n
        self.name = name or "custom"
        self.params = dict(params or {})

        terms: dict[tuple[int, int, int], object] = {}
        for entry in brackets:
            if len(entry) != 4:
                raise InvalidInputError(f"bracket entry must be (i, j, k, c), got {entry!r}")
            i, j, k, c = entry
            i, j, k = int(i), int(j), int(k)
            if not all(0 <= idx < n for idx in (i, j, k)):
                raise InvalidInputError(f"bracket index out of range in {entry!r}")
            if i == j:
                raise InvalidInputError(f"[e_{i}, e_{i}] must vanish; got coefficient {c!r}")
            if i > j:
                i, j = j, i
                c = -c
            key = (i, j, k)
            terms[key] = terms[key] + c if key in terms else c
        self._terms = {key: c for key, c in terms.items() if c != 0}

        structure = np.zeros((n, n, n))
        for (i, j, k), c in self._terms.items():
            structure[i, j, k] = float(c)
            structure[j, i, k] = -float(c)
        structure.setflags(write=False)
        self.structure = structure

        if gram is None:
            gram = np.eye(n)
        gram = np.array(gram, dtype=float)
        if gram.shape != (n, n):
            raise InvalidInputError(f"gram must be {n}x{n}, got shape {gram.shape}")
        if not np.allclose(gram, gram.T, rtol=0, atol=1e-14):
            raise InvalidInputError("gram matrix is not symmetric")
        if np.min(np.linalg.eigvalsh(gram)) <= 0:
            raise InvalidInputError("gram matrix is not positive definite")
        gram.setflags(write=False)
        self.gram = gram
        gram_inv = np.linalg.inv(gram)
        gram_inv.setflags(write=False)
        self.gram_inv = gram_inv

        cert = self.two_step_certificate()
        if not cert["holds"]:
            raise InvalidInputError(
                f"algebra is not 2-step nilpotent (max |[x,[y,z]]| = {cert['max_residual']})"
            )

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_config(cls, cfg: dict) -> "MetricNilpotentAlgebra":
        """Build from ``{"dim": n, "brackets": [[i, j, k, c], ...], "gram": [...]}`` (1-based)."""
        try:
            n = cfg["dim"]
        except (KeyError, TypeError):
            raise InvalidInputError("algebra config needs a 'dim' field") from None
        brackets = [(i - 1, j - 1, k - 1, c) for i, j, k, c in cfg.get("brackets", [])]
        gram = cfg.get("gram")
        if gram is not None:
            gram = np.asarray(gram, dtype=float).reshape(n, n)
        return cls(n, brackets, gram=gram)

    def __repr__(self):
        return f"MetricNilpotentAlgebra(name={self.name!r}, dim={self.dim})"

    @property
    def bracket_terms(self) -> dict:
        """The ``i < j`` structure table ``{(i, j, k): c}`` as supplied."""
        return dict(self._terms)

    @cached_property
    def exact_terms(self):
        """Structure table as Fractions, or None if some coefficient is not rational."""
        keys = list(self._terms)
        vals = all_exact(self._terms[k] for k in keys)
        if vals is None:
            return None
        return dict(zip(keys, vals))

    @property
    def is_identity_gram(self) -> bool:
        return bool(np.array_equal(self.gram, np.eye(self.dim)))

    # -- linear algebra primitives ----------------------------------------------

    def _check(self, *vecs):
        for v in vecs:
            if np.shape(v)[-1:] != (self.dim,):
                raise InvalidInputError(
                    f"expected vectors of dimension {self.dim}, got shape {np.shape(v)}"
                )

    def inner(self, x, y):
        """``<x, y>`` for the algebra's inner product."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        self._check(x, y)
        return np.einsum("...i,ij,...j->...", x, self.gram, y)

    def lower(self, x):
        """Metric dual coefficients ``G x``."""
        return np.asarray(x, dtype=float) @ self.gram

    @cached_property
    def _bracket_flat(self) -> np.ndarray:
        # row (i, j) -> coefficients of [e_i, e_j]
        return self.structure.reshape(self.dim * self.dim, self.dim).copy()

    @cached_property
    def _adt_flat(self) -> np.ndarray:
        # row (i, k) -> G^{-1}-raised c[i, :, k]
        n = self.dim
        return self.structure.transpose(0, 2, 1).reshape(n * n, n) @ self.gram_inv

    def bracket(self, x, y):
        """Lie bracket ``[x, y]``."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        self._check(x, y)
        x, y = np.broadcast_arrays(x, y)
        outer = (x[..., :, None] * y[..., None, :]).reshape(x.shape[:-1] + (self.dim**2,))
        return outer @ self._bracket_flat

    def ad_matrix(self, x):
        """Matrix of ``ad_x = [x, .]`` acting on coefficient columns."""
        x = np.asarray(x, dtype=float)
        self._check(x)
        return np.einsum("...i,ijk->...kj", x, self.structure)

    def ad_transpose(self, x, y):
        """The unique ``z`` with ``<z, w> = <y, [x, w]>`` for all ``w``."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        self._check(x, y)
        x, gy = np.broadcast_arrays(x, y @ self.gram)
        outer = (x[..., :, None] * gy[..., None, :]).reshape(x.shape[:-1] + (self.dim**2,))
        return outer @ self._adt_flat

    # -- center and complement -----------------------------------------------

    @cached_property
    def center_basis(self) -> np.ndarray:
        """Columns: an orthonormal basis of the center."""
        n = self.dim
        # rows of block i: z -> [z, e_i]
        stacked = np.concatenate([self.structure[:, i, :].T for i in range(n)], axis=0)
        basis = _orthonormalize(_null_space(stacked, n), self.gram)
        basis.setflags(write=False)
        return basis

    @cached_property
    def complement_basis(self) -> np.ndarray:
        """Columns: an orthonormal basis of the orthogonal complement of the center."""
        z = self.center_basis
        if z.shape[1] == 0:
            basis = _orthonormalize(np.eye(self.dim), self.gram)
        else:
            basis = _orthonormalize(_null_space(z.T @ self.gram, self.dim), self.gram)
        basis.setflags(write=False)
        return basis

    @cached_property
    def complement_projector(self) -> np.ndarray:
        """Orthogonal projector onto the complement of the center (acts on columns)."""
        v = self.complement_basis
        proj = v @ v.T @ self.gram
        proj.setflags(write=False)
        return proj

    def project_complement(self, x):
        return np.asarray(x, dtype=float) @ self.complement_projector.T

    def is_central(self, z, tol: float = 1e-10) -> bool:
        z = np.asarray(z, dtype=float)
        self._check(z)
        scale = max(1.0, float(np.max(np.abs(z))))
        return bool(np.max(np.abs(self.ad_matrix(z)), initial=0.0) <= tol * scale)

    def j_map(self, z):
        """The skew operator ``j(z)`` on the complement, as an ``n x n`` matrix.

        It satisfies ``<j(z) U, W> = <z, [U, W]>`` for ``U, W`` in the
        complement and vanishes on the center.
        """
        z = np.asarray(z, dtype=float)
        self._check(z)
        if z.ndim != 1:
            raise InvalidInputError("j_map takes a single central vector")
        if not self.is_central(z):
            raise InvalidInputError("j_map argument is not central")
        cols = self.ad_transpose(np.eye(self.dim), z)  # row u -> ad_transpose(e_u, z)
        return cols.T @ self.complement_projector

    # -- group law -------------------------------------------------------------

    def bch_multiply(self, w1, w2):
        """Exponential coordinates of ``exp(w1) exp(w2)``."""
        w1 = np.asarray(w1, dtype=float)
        w2 = np.asarray(w2, dtype=float)
        return w1 + w2 + 0.5 * self.bracket(w1, w2)

    def adjoint_action(self, w, y):
        """``Ad(exp w) y = y + [w, y]``."""
        y = np.asarray(y, dtype=float)
        return y + self.bracket(w, y)

    # -- structural certificates -------------------------------------------

    def _exact_bracket_basis(self):
        terms = self.exact_terms
        n = self.dim
        table = {}
        for (i, j, k), c in terms.items():
            table.setdefault((i, j), {})[k] = c
            table.setdefault((j, i), {})[k] = -c
        return table, n

    def two_step_certificate(self) -> dict:
        """Check ``[e_a, [e_b, e_c]] = 0`` for every basis triple.

        Uses exact rational arithmetic when all structure constants are rational.
        """
        if self.exact_terms is not None:
            table, n = self._exact_bracket_basis()
            worst = Fraction(0)
            for a, b, c in product(range(n), repeat=3):
                inner = table.get((b, c), {})
                acc: dict[int, Fraction] = {}
                for k, ck in inner.items():
                    for m, cm in table.get((a, k), {}).items():
                        acc[m] = acc.get(m, Fraction(0)) + ck * cm
                for v in acc.values():
                    worst = max(worst, abs(v))
            return {"holds": worst == 0, "max_residual": float(worst), "exact": True}
        c = self.structure
        nested = np.einsum("bcm,amk->abck", c, c)
        worst = float(np.max(np.abs(nested), initial=0.0))
        return {"holds": worst <= STRUCTURE_TOL, "max_residual": worst, "exact": False}

    def jacobi_certificate(self) -> dict:
        """Jacobi identity residual over all basis triples (exact when rational)."""
        n = self.dim
        if self.exact_terms is not None:
            table, _ = self._exact_bracket_basis()

            def br(x, y):
                out: dict[int, Fraction] = {}
                for i, xi in x.items():
                    for j, yj in y.items():
                        for k, c in table.get((i, j), {}).items():
                            out[k] = out.get(k, Fraction(0)) + xi * yj * c
                return out

            worst = Fraction(0)
            basis = [{i: Fraction(1)} for i in range(n)]
            for a, b, c in product(range(n), repeat=3):
                total: dict[int, Fraction] = {}
                for x, y, z in ((a, b, c), (b, c, a), (c, a, b)):
                    for k, v in br(basis[x], br(basis[y], basis[z])).items():
                        total[k] = total.get(k, Fraction(0)) + v
                for v in total.values():
                    worst = max(worst, abs(v))
            return {"holds": worst == 0, "max_residual": float(worst), "exact": True}
        c = self.structure
        nested = np.einsum("bcm,amk->abck", c, c)
        jac = nested + nested.transpose(1, 2, 0, 3) + nested.transpose(2, 0, 1, 3)
        worst = float(np.max(np.abs(jac), initial=0.0))
        return {"holds": worst <= STRUCTURE_TOL, "max_residual": worst, "exact": False}


def preset(name: str, **params) -> MetricNilpotentAlgebra:
    """Orthonormal-basis model algebras.

    ``h3r``
        Heisenberg algebra times a line: ``[e1, e2] = e3``, dimension 4.
    ``heisenberg`` (``n``, ``k``)
        ``h_{2n+1} + R^k`` with ``[e_{2i-1}, e_{2i}] = e_{2n+1}``.
    ``abelian`` (``n``)
        All brackets zero.
    """
    if name == "h3r":
        return MetricNilpotentAlgebra(4, [(0, 1, 2, 1)], name="h3r")
    if name == "heisenberg":
        n = params.get("n", 1)
        k = params.get("k", 0)
        if int(n) != n or int(k) != k or n < 1 or k < 0:
            raise InvalidInputError(f"heisenberg preset needs n >= 1 and k >= 0, got n={n}, k={k}")
        n, k = int(n), int(k)
        brackets = [(2 * i, 2 * i + 1, 2 * n, 1) for i in range(n)]
        return MetricNilpotentAlgebra(
            2 * n + 1 + k, brackets, name="heisenberg", params={"n": n, "k": k}
        )
    if name == "abelian":
        n = params.get("n", 4)
        if int(n) != n or n < 1:
            raise InvalidInputError(f"abelian preset needs n >= 1, got {n}")
        return MetricNilpotentAlgebra(int(n), [], name="abelian", params={"n": int(n)})
    raise InvalidInputError(f"unknown algebra preset {name!r}")
