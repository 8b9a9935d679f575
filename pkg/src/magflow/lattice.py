"""Lattices ``exp(Lambda)`` in 2-step nilpotent groups and invariance under them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import sympy

from ._exact import all_exact, to_fraction
from .errors import InvalidInputError
from .magnetic import LorentzForce
from .nilalgebra import MetricNilpotentAlgebra

INTEGRALITY_TOL = 1e-9
INVARIANCE_TOL = 1e-9


class LogLattice:
    """A full-rank set of generators ``lambda_1..lambda_n`` in the algebra."""

    def __init__(self, generators, algebra: MetricNilpotentAlgebra, name: str = "custom"):
        rows = [list(g) for g in generators]
        n = algebra.dim
        if len(rows) != n or any(len(r) != n for r in rows):
            raise InvalidInputError(f"need {n} generators of dimension {n}")
        self.algebra = algebra
        self.name = name
        self.exact = None
        flat = all_exact(v for r in rows for v in r)
        if flat is not None:
            self.exact = sympy.Matrix(n, n, [sympy.Rational(f.numerator, f.denominator) for f in flat])
            if self.exact.rank() < n:
                raise InvalidInputError("lattice generators are linearly dependent")
        gens = np.array([[float(v) for v in r] for r in rows])
        if flat is None and np.linalg.matrix_rank(gens) < n:
            raise InvalidInputError("lattice generators are linearly dependent")
        gens.setflags(write=False)
        self.generators = gens

    def __repr__(self):
        return f"LogLattice({self.name!r}, dim={self.algebra.dim})"

    def coordinates(self, x) -> np.ndarray:
        """Coefficients of ``x`` in the generator basis."""
        return np.linalg.solve(self.generators.T, np.asarray(x, dtype=float))


def _exact_bracket(algebra, x, y):
    out = [sympy.Integer(0)] * algebra.dim
    terms = algebra.exact_terms
    for (i, j, k), c in terms.items():
        out[k] += sympy.Rational(c.numerator, c.denominator) * (x[i] * y[j] - x[j] * y[i])
    return out


def is_lattice(lattice: LogLattice) -> dict:
    """Closure test: ``[lambda_i, lambda_j] / 2`` in the integer span for all ``i < j``.

    Exact (rational solve) when generators and structure constants are
    rational, otherwise a float solve with integrality tolerance 1e-9.
    Returns ``{"holds", "exact", "witness"}``; ``witness`` is the first
    failing 0-based pair or None.
    """
    algebra = lattice.algebra
    n = algebra.dim
    exact = lattice.exact is not None and algebra.exact_terms is not None
    for i in range(n):
        for j in range(i + 1, n):
            if exact:
                li = list(lattice.exact.row(i))
                lj = list(lattice.exact.row(j))
                half = sympy.Matrix([v / 2 for v in _exact_bracket(algebra, li, lj)])
                coeffs = lattice.exact.T.LUsolve(half)
                ok = all(c.is_integer for c in coeffs)
            else:
                half = 0.5 * algebra.bracket(lattice.generators[i], lattice.generators[j])
                coeffs = lattice.coordinates(half)
                ok = bool(np.all(np.abs(coeffs - np.round(coeffs)) <= INTEGRALITY_TOL))
            if not ok:
                return {"holds": False, "exact": exact, "witness": (i, j)}
    return {"holds": True, "exact": exact, "witness": None}


def gamma_action(lam, W, V, algebra: MetricNilpotentAlgebra):
    """Left translation by ``exp(lam)``: ``(W, V) -> (bch(lam, W), V)``."""
    W = np.asarray(W, dtype=float)
    return algebra.bch_multiply(np.broadcast_to(lam, W.shape), W), np.asarray(V, dtype=float)


@dataclass(frozen=True)
class AffineFunction:
    """``W -> <coef, W> + const`` on exponential coordinates."""

    coef: np.ndarray
    const: float
    algebra: MetricNilpotentAlgebra

    def __call__(self, W):
        return self.algebra.inner(self.coef, W) + self.const


def f_X(X, algebra) -> AffineFunction:
    """The linear function ``exp(W) -> <X, W>``."""
    return AffineFunction(np.asarray(X, dtype=float), 0.0, algebra)


def pullback_f_X(X, lam, algebra: MetricNilpotentAlgebra) -> AffineFunction:
    """``gamma^* f_X = f_X + <X, lam> + (1/2) sum_i <X, z_i> f_{j(z_i) lam}``."""
    X = np.asarray(X, dtype=float)
    lam = np.asarray(lam, dtype=float)
    coef = X.copy()
    for z in algebra.center_basis.T:
        coef = coef + 0.5 * algebra.inner(X, z) * (algebra.j_map(z) @ lam)
    return AffineFunction(coef, float(algebra.inner(X, lam)), algebra)


def pullback_integral(xi, lam, force: LorentzForce) -> tuple:
    """``gamma^* I_xi = I_{xi'} + const`` with ``xi' = xi - [lam, xi]``.

    ``const = <F xi - F[lam, xi] / 2, lam>``.
    """
    algebra = force.algebra
    xi = np.asarray(xi, dtype=float)
    lam = np.asarray(lam, dtype=float)
    br = algebra.bracket(lam, xi)
    const = float(algebra.inner(force.apply(xi) - 0.5 * force.apply(br), lam))
    return xi - br, const


def word_elements(lattice: LogLattice, rng: np.random.Generator, length: int = 3) -> tuple:
    """A random word ``g_1^{+-1} ... g_length^{+-1}`` in the generators, with its label."""
    algebra = lattice.algebra
    n = algebra.dim
    w = np.zeros(n)
    label = []
    for _ in range(length):
        i = int(rng.integers(n))
        s = int(rng.choice([-1, 1]))
        w = algebra.bch_multiply(w, s * lattice.generators[i])
        label.append(f"g{i + 1}" + ("" if s > 0 else "^-1"))
    return w, "*".join(label)


def invariance_suite(integrals, lattice: LogLattice, W, V, rng: np.random.Generator,
                     tol: float = INVARIANCE_TOL) -> dict:
    """``max |Psi(gamma . s) - Psi(s)|`` over generators, inverses and one length-3 word."""
    algebra = lattice.algebra
    elements = []
    for i, g in enumerate(lattice.generators):
        elements.append((f"g{i + 1}", g))
        elements.append((f"g{i + 1}^-1", -g))
    word, label = word_elements(lattice, rng)
    elements.append((label, word))
    residuals = {}
    for h in integrals:
        base = np.asarray(h(W, V), dtype=float)
        worst = 0.0
        for _, lam in elements:
            Wg, Vg = gamma_action(lam, W, V, algebra)
            worst = max(worst, float(np.max(np.abs(np.asarray(h(Wg, Vg)) - base), initial=0.0)))
        residuals[h.name] = worst
    return {
        "elements": [name for name, _ in elements],
        "residuals": residuals,
        "passes": all(r <= tol for r in residuals.values()),
    }


def _number(x):
    fr = to_fraction(x)
    return fr if fr is not None else float(x)


def lattice_preset(name: str, algebra: MetricNilpotentAlgebra, **params) -> LogLattice:
    """Lattices for the preset scenarios.

    ``kt_b0``: ``Span(2e1, e2, e3, e4)``.
    ``kt_c0`` (``a``, ``b``): ``Span(2/a e1, 1/b e2, 1/(ab) e3, e4)`` or, for
    ``a = 0``, ``Span(2e1, e2/b, e3/b, e4)``.
    ``heisenberg``: ``2 Z^{2n+1} + Z^k``.
    """
    if name == "kt_b0":
        gens = [[2, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
    elif name == "kt_c0":
        a, b = _number(params.get("a", 0)), _number(params.get("b", 0))
        if b == 0:
            raise InvalidInputError("kt_c0 lattice needs b != 0")
        if a == 0:
            gens = [[2, 0, 0, 0], [0, 1 / b, 0, 0], [0, 0, 1 / b, 0], [0, 0, 0, 1]]
        else:
            gens = [[2 / a, 0, 0, 0], [0, 1 / b, 0, 0], [0, 0, 1 / (a * b), 0], [0, 0, 0, 1]]
    elif name == "heisenberg":
        if algebra.name != "heisenberg":
            raise InvalidInputError("heisenberg lattice needs a heisenberg algebra")
        n, k = algebra.params["n"], algebra.params["k"]
        diag = [2] * (2 * n + 1) + [1] * k
        gens = [[diag[i] if i == j else 0 for j in range(algebra.dim)] for i in range(algebra.dim)]
    else:
        raise InvalidInputError(f"unknown lattice preset {name!r}")
    return LogLattice(gens, algebra, name=name)
