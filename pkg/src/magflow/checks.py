"""Check suites shared by the command line and the acceptance tests.

Each suite returns a plain dict with a boolean ``passes`` and the numbers
behind the verdict.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from . import flow
from .invariants import MagneticKillingIntegral
from .lattice import LogLattice, invariance_suite, is_lattice
from .magnetic import LorentzForce, is_closed, is_derivation, rank_two_check
from .symplectic import commutation_criterion, independence_rank, involution_matrix, poisson_bracket
from .tensors import SymTensor, check_magnetic_killing, phi_of_tensor

KILLING_PAIR_TOL = 1e-8


def structural_suite(force: LorentzForce) -> dict:
    algebra = force.algebra
    closed = is_closed(force, algebra)
    out = {
        "two_step": algebra.two_step_certificate()["holds"],
        "jacobi": algebra.jacobi_certificate()["holds"],
        "skew_residual": force.skew_residual(),
        "closed": closed["closed"],
        "closed_exact": closed["exact"],
    }
    if algebra.dim == 4:
        out["rank_two"] = rank_two_check(force, algebra)
    out["derivation"] = is_derivation(force, algebra)
    out["passes"] = bool(out["two_step"] and out["jacobi"] and out["closed"] and out["skew_residual"] <= 1e-12)
    return out


def conservation_suite(force: LorentzForce, integrals, W0, V0, t_end, step, tol=1e-8,
                       record_every=10) -> dict:
    """Integrate every initial state and report the worst relative drift per integral."""
    W0 = np.atleast_2d(np.asarray(W0, float))
    V0 = np.atleast_2d(np.asarray(V0, float))
    for h in integrals:
        h.check_force(force)
    nsteps = flow._step_count(t_end, step)
    rec = max(1, min(int(record_every), nsteps))
    F = np.broadcast_to(force.matrix, W0.shape[:-1] + force.matrix.shape)
    _, Ws, Vs = flow.rk4_batch(W0, V0, F, force.algebra, t_end, step, record_every=rec)
    drift = {h.name: float(flow.relative_drift(h(Ws, Vs)).max()) for h in integrals}
    return {"drift": drift, "worst": max(drift.values(), default=0.0),
            "passes": all(d <= tol for d in drift.values())}


def killing_pairs(integrals):
    return [(a, b) for a, b in combinations(integrals, 2)
            if isinstance(a, MagneticKillingIntegral) and isinstance(b, MagneticKillingIntegral)]


def involution_suite(force: LorentzForce, integrals, W, V, tol=1e-6) -> dict:
    """Pairwise sampled brackets plus agreement of the commutation criterion."""
    mat = involution_matrix(integrals, W, V, force, tol=tol)
    agreement = []
    for a, b in killing_pairs(integrals):
        predicted = commutation_criterion(a.xi, b.xi, force)
        sampled = float(np.max(np.abs(poisson_bracket(a, b, W, V, force))))
        agreement.append({"pair": [a.name, b.name], "criterion": predicted, "max_bracket": sampled,
                          "agrees": predicted == (sampled <= KILLING_PAIR_TOL)})
    return {
        "names": mat["names"],
        "matrix": mat["matrix"].tolist(),
        "max": mat["max"],
        "commutation": agreement,
        "passes": bool(mat["passes"] and all(x["agrees"] for x in agreement)),
    }


def rank_suite(algebra, integrals, W, V, cut=1e-8, fraction=0.95) -> dict:
    res = independence_rank(integrals, W, V, algebra, cut=cut, fraction=fraction)
    return {
        "names": res["names"],
        "size": len(res["names"]),
        "histogram": res["histogram"],
        "full_rank_fraction": res["full_rank_fraction"],
        "passes": res["passes"],
    }


def lattice_suite(lattice: LogLattice, integrals, W, V, rng, tol=1e-9) -> dict:
    verdict = is_lattice(lattice)
    out = {
        "is_lattice": verdict["holds"],
        "exact": verdict["exact"],
        "witness": None if verdict["witness"] is None else [i + 1 for i in verdict["witness"]],
    }
    if not verdict["holds"]:
        out["passes"] = False
        return out
    inv = invariance_suite(integrals, lattice, W, V, rng, tol=tol)
    out.update({"elements": inv["elements"], "residuals": inv["residuals"], "passes": inv["passes"]})
    return out


def default_killing_candidate(algebra):
    """``(0, 0, g)``: the energy as a magnetic Killing tensor."""
    return [SymTensor.scalar(algebra), SymTensor.zero(algebra, 1), SymTensor.metric(algebra)]


def killing_suite(force: LorentzForce, components, W0, V0, t_end, step, tol=1e-10, drift_tol=1e-8) -> dict:
    """Magnetic Killing system plus a conservation cross-check of its function."""
    res = check_magnetic_killing(components, force, tol=tol)
    out = {"system_passes": res["passes"],
           "residuals": {str(k): v for k, v in sorted(res["residuals"].items())}}

    class _Phi:
        name = "phi_K"

        def __call__(self, W, V):
            return sum(phi_of_tensor(c, V) for c in components)

        def check_force(self, f):
            return None

    cons = conservation_suite(force, [_Phi()], W0, V0, t_end, step, tol=drift_tol)
    out["drift"] = cons["worst"]
    out["conserved"] = cons["passes"]
    # a passing system must give a conserved function
    out["passes"] = bool(res["passes"] and cons["passes"])
    return out
