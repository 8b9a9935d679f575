"""Independent symbolic reference computations (sympy, coordinates only).

Nothing here imports the package: these are the oracles the numerical code is
checked against.
"""

import numpy as np
import sympy as sp

W = sp.symbols("W1:5", real=True)
V = sp.symbols("V1:5", real=True)
a, b, c, rho = sp.symbols("a b c rho", real=True)


def h3r_bracket(x, y):
    """[e1, e2] = e3 on h3 + R, written out by hand."""
    return [0, 0, x[0] * y[1] - x[1] * y[0], 0]


def h3r_ad_transpose(x, y):
    """Solve <z, w> = <y, [x, w]> for z over the standard basis."""
    z = sp.symbols("z1:5")
    eqs = []
    for i in range(4):
        w = [1 if k == i else 0 for k in range(4)]
        eqs.append(sp.Eq(z[i], sum(yk * bk for yk, bk in zip(y, h3r_bracket(x, w)))))
    sol = sp.solve(eqs, z, dict=True)[0]
    return [sp.simplify(sol[zi]) for zi in z]


def kt_force_matrix(a_, b_, c_, rho_):
    """F with <F e_i, e_j> = omega(e_i, e_j) for omega = a e13 + b e23 + c e14 + rho e12."""
    om = sp.zeros(4, 4)
    for (i, j), v in {(0, 2): a_, (1, 2): b_, (0, 3): c_, (0, 1): rho_}.items():
        om[i, j] = v
        om[j, i] = -v
    return om.T, om


def killing_integral_by_path(xi, F):
    """I_xi = <V, xi - [W, xi]> + f(W) where f is the line integral of (F xi_bar)^flat
    along t -> exp(tW), whose left-trivialised velocity is the constant W."""
    t = sp.symbols("t")
    tw = [t * w for w in W]
    br = h3r_bracket(tw, xi)
    xibar = sp.Matrix([x - y for x, y in zip(xi, br)])
    integrand = (F * xibar).dot(sp.Matrix(W))
    f = sp.integrate(sp.expand(integrand), (t, 0, 1))
    br0 = h3r_bracket(W, xi)
    return sum(v * (x - y) for v, x, y in zip(V, xi, br0)) + f


def lambdify_state(expr, subs=None):
    expr = expr.subs(subs or {})
    fn = sp.lambdify([W, V], expr, "numpy")

    def call(w, v):
        w = np.asarray(w, float)
        v = np.asarray(v, float)
        out = fn([w[..., i] for i in range(4)], [v[..., i] for i in range(4)])
        return np.broadcast_to(np.asarray(out, float), w.shape[:-1])

    return call


def h3r_geodesic_rhs_symbolic():
    """Left-trivialised V' = ad^T_V V for F = 0 from the hand-derived adjoint."""
    return h3r_ad_transpose(list(V), list(V))
